#include "irmesh/basis.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>

namespace irmesh {

namespace {

constexpr double kNodeHitTol = 1e-14;

// Legendre P_n(x) and P_n'(x) via the three-term recurrence.
void legendre(int n, double x, double& p, double& dp) {
  double p0 = 1.0, p1 = x;
  if (n == 0) {
    p = 1.0;
    dp = 0.0;
    return;
  }
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  p = p1;
  dp = n * (x * p1 - p0) / (x * x - 1.0);
}

Eigen::VectorXd chebyshev_lobatto_nodes(int degree) {
  Eigen::VectorXd nodes(degree + 1);
  for (int p = 0; p <= degree; ++p) nodes[p] = std::cos(M_PI * double(degree - p) / degree);
  return nodes;
}

// Interior Legendre-Gauss-Lobatto nodes are the roots of P_d'(x). Newton
// from Chebyshev guesses; P_d'' comes from the Legendre ODE.
Eigen::VectorXd legendre_lobatto_nodes(int degree) {
  Eigen::VectorXd nodes(degree + 1);
  for (int j = 1; j < degree; ++j) {
    double x = std::cos(M_PI * double(degree - j) / degree);
    for (int it = 0; it < 100; ++it) {
      double p, dp;
      legendre(degree, x, p, dp);
      const double ddp = (2.0 * x * dp - degree * (degree + 1.0) * p) / (1.0 - x * x);
      const double step = dp / ddp;
      x -= step;
      if (std::abs(step) < 1e-15) break;
    }
    nodes[j] = x;
  }
  nodes[0] = -1.0;
  nodes[degree] = 1.0;
  return nodes;
}

void symmetrize(Eigen::VectorXd& nodes) {
  const int n = static_cast<int>(nodes.size());
  for (int i = 0; i < n / 2; ++i) {
    const double v = 0.5 * (nodes[n - 1 - i] - nodes[i]);
    nodes[i] = -v;
    nodes[n - 1 - i] = v;
  }
  if (n % 2 == 1) nodes[n / 2] = 0.0;
}

int node_hit(const InterpolationBasis& basis, double tau) {
  for (int p = 0; p < basis.node_count(); ++p) {
    if (tau == basis.nodes[p] || std::abs(tau - basis.nodes[p]) < kNodeHitTol) return p;
  }
  return -1;
}

}  // namespace

NodeFamily parse_node_family(std::string_view name) {
  if (name == "chebyshev-lobatto") return NodeFamily::chebyshev_lobatto;
  if (name == "legendre-lobatto") return NodeFamily::legendre_lobatto;
  if (name == "uniform") return NodeFamily::uniform;
  throw std::invalid_argument("unknown node family: " + std::string(name));
}

std::string to_string(NodeFamily family) {
  switch (family) {
    case NodeFamily::chebyshev_lobatto: return "chebyshev-lobatto";
    case NodeFamily::legendre_lobatto: return "legendre-lobatto";
    case NodeFamily::uniform: return "uniform";
  }
  return "?";
}

InterpolationBasis make_basis(int degree, NodeFamily family) {
  if (degree < 1) throw std::invalid_argument("basis degree must be >= 1");

  InterpolationBasis basis;
  basis.family = family;
  basis.degree = degree;
  switch (family) {
    case NodeFamily::chebyshev_lobatto: basis.nodes = chebyshev_lobatto_nodes(degree); break;
    case NodeFamily::legendre_lobatto: basis.nodes = legendre_lobatto_nodes(degree); break;
    case NodeFamily::uniform:
      basis.nodes = Eigen::VectorXd::LinSpaced(degree + 1, -1.0, 1.0);
      break;
  }
  symmetrize(basis.nodes);
  basis.nodes[0] = -1.0;
  basis.nodes[degree] = 1.0;

  basis.bary_weights.resize(degree + 1);
  for (int p = 0; p <= degree; ++p) {
    double prod = 1.0;
    for (int k = 0; k <= degree; ++k) {
      if (k != p) prod *= basis.nodes[p] - basis.nodes[k];
    }
    basis.bary_weights[p] = 1.0 / prod;
  }
  // Common scale is arbitrary; normalizing keeps high degrees away from
  // overflow/underflow.
  basis.bary_weights /= basis.bary_weights.cwiseAbs().maxCoeff();
  return basis;
}

QuadratureRule make_quadrature(int n_points) {
  if (n_points < 1) throw std::invalid_argument("quadrature degree must be >= 1");

  // Golub-Welsch: eigenvalues of the symmetric tridiagonal Jacobi matrix are
  // the nodes; weights come from the first eigenvector components.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n_points, n_points);
  for (int k = 1; k < n_points; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  QuadratureRule rule;
  rule.degree = n_points;
  rule.nodes = es.eigenvalues();
  rule.weights.resize(n_points);
  for (int i = 0; i < n_points; ++i) {
    const double v0 = es.eigenvectors()(0, i);
    rule.weights[i] = 2.0 * v0 * v0;
  }

  symmetrize(rule.nodes);
  for (int i = 0; i < n_points / 2; ++i) {
    const double w = 0.5 * (rule.weights[i] + rule.weights[n_points - 1 - i]);
    rule.weights[i] = w;
    rule.weights[n_points - 1 - i] = w;
  }
  return rule;
}

double eval_interpolant(const InterpolationBasis& basis, Eigen::Ref<const Eigen::VectorXd> coeffs,
                        double tau) {
  const int hit = node_hit(basis, tau);
  if (hit >= 0) return coeffs[hit];

  double num = 0.0, den = 0.0;
  for (int p = 0; p < basis.node_count(); ++p) {
    const double g = basis.bary_weights[p] / (tau - basis.nodes[p]);
    num += g * coeffs[p];
    den += g;
  }
  return num / den;
}

double eval_interpolant_derivative(const InterpolationBasis& basis,
                                   Eigen::Ref<const Eigen::VectorXd> coeffs, double tau) {
  const int n = basis.node_count();
  const int hit = node_hit(basis, tau);
  if (hit >= 0) {
    // Differentiation-matrix row at a node: sum_k D_jk (f_k - f_j).
    double dp = 0.0;
    for (int k = 0; k < n; ++k) {
      if (k == hit) continue;
      const double djk = (basis.bary_weights[k] / basis.bary_weights[hit]) /
                         (basis.nodes[hit] - basis.nodes[k]);
      dp += djk * (coeffs[k] - coeffs[hit]);
    }
    return dp;
  }

  // p'(tau) = [ sum_k g_k (p(tau) - f_k) / (tau - tau_k) ] / sum_k g_k
  double num = 0.0, den = 0.0;
  for (int p = 0; p < n; ++p) {
    const double g = basis.bary_weights[p] / (tau - basis.nodes[p]);
    num += g * coeffs[p];
    den += g;
  }
  const double value = num / den;
  double dnum = 0.0;
  for (int p = 0; p < n; ++p) {
    const double g = basis.bary_weights[p] / (tau - basis.nodes[p]);
    dnum += g * (value - coeffs[p]) / (tau - basis.nodes[p]);
  }
  return dnum / den;
}

BasisTensors make_tensors(const InterpolationBasis& basis, const QuadratureRule& rule) {
  const int n = basis.node_count();
  BasisTensors tensors;
  tensors.eval.resize(rule.degree, n);
  tensors.diff.resize(rule.degree, n);

  Eigen::VectorXd unit = Eigen::VectorXd::Zero(n);
  for (int p = 0; p < n; ++p) {
    unit[p] = 1.0;
    for (int q = 0; q < rule.degree; ++q) {
      tensors.eval(q, p) = eval_interpolant(basis, unit, rule.nodes[q]);
      tensors.diff(q, p) = eval_interpolant_derivative(basis, unit, rule.nodes[q]);
    }
    unit[p] = 0.0;
  }
  return tensors;
}

namespace {

std::mutex cache_mutex;

std::shared_ptr<const InterpolationBasis> basis_cache_lookup(int degree, NodeFamily family) {
  static std::map<std::pair<int, int>, std::shared_ptr<const InterpolationBasis>> cache;
  std::lock_guard<std::mutex> lock(cache_mutex);
  auto key = std::make_pair(static_cast<int>(family), degree);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto basis = std::make_shared<const InterpolationBasis>(make_basis(degree, family));
  cache[key] = basis;
  return basis;
}

std::shared_ptr<const QuadratureRule> quadrature_cache_lookup(int n_points) {
  static std::map<int, std::shared_ptr<const QuadratureRule>> cache;
  std::lock_guard<std::mutex> lock(cache_mutex);
  auto it = cache.find(n_points);
  if (it != cache.end()) return it->second;
  auto rule = std::make_shared<const QuadratureRule>(make_quadrature(n_points));
  cache[n_points] = rule;
  return rule;
}

std::shared_ptr<const BasisTensors> tensor_cache_lookup(const InterpolationBasis& basis,
                                                        const QuadratureRule& rule) {
  static std::map<std::tuple<int, int, int>, std::shared_ptr<const BasisTensors>> cache;
  std::lock_guard<std::mutex> lock(cache_mutex);
  auto key = std::make_tuple(static_cast<int>(basis.family), basis.degree, rule.degree);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto tensors = std::make_shared<const BasisTensors>(make_tensors(basis, rule));
  cache[key] = tensors;
  return tensors;
}

}  // namespace

std::shared_ptr<const InterpolationBasis> cached_basis(int degree, NodeFamily family) {
  return basis_cache_lookup(degree, family);
}

std::shared_ptr<const QuadratureRule> cached_quadrature(int n_points) {
  return quadrature_cache_lookup(n_points);
}

std::shared_ptr<const BasisTensors> cached_tensors(const InterpolationBasis& basis,
                                                   const QuadratureRule& rule) {
  return tensor_cache_lookup(basis, rule);
}

}  // namespace irmesh
