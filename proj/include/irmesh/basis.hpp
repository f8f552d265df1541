#pragma once

#include <Eigen/Dense>

#include <memory>
#include <string>
#include <string_view>

namespace irmesh {

enum class NodeFamily { chebyshev_lobatto, legendre_lobatto, uniform };

NodeFamily parse_node_family(std::string_view name);  // throws std::invalid_argument
std::string to_string(NodeFamily family);

/// Lagrange interpolation basis on [-1, 1] with both endpoints included
/// (endpoint inclusion is what makes interval-boundary continuity linking
/// possible) and precomputed barycentric weights.
struct InterpolationBasis {
  NodeFamily family{NodeFamily::chebyshev_lobatto};
  int degree{1};
  Eigen::VectorXd nodes;         // strictly increasing, nodes[0] = -1, nodes[degree] = +1
  Eigen::VectorXd bary_weights;  // 1 / prod(tau_p - tau_k), rescaled to max |w| = 1

  int node_count() const { return degree + 1; }
};

/// Gauss-Legendre rule: n interior nodes, positive weights summing to 2,
/// exact for polynomials of degree <= 2n - 1.
struct QuadratureRule {
  int degree{1};  // number of points
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

/// Basis values and tau-derivatives tabulated at the quadrature nodes:
/// eval(q, p) = l_p(tau_q), diff(q, p) = l_p'(tau_q).
struct BasisTensors {
  Eigen::MatrixXd eval;
  Eigen::MatrixXd diff;
};

InterpolationBasis make_basis(int degree, NodeFamily family);

QuadratureRule make_quadrature(int n_points);

/// Barycentric evaluation. When tau lands on a node (exact hit or within
/// 1e-14) the nodal coefficient is returned directly; the barycentric
/// formula is 0/0 there.
double eval_interpolant(const InterpolationBasis& basis, Eigen::Ref<const Eigen::VectorXd> coeffs,
                        double tau);

/// Tau-derivative of the interpolant; exact for polynomial data up to the
/// basis degree.
double eval_interpolant_derivative(const InterpolationBasis& basis,
                                   Eigen::Ref<const Eigen::VectorXd> coeffs, double tau);

BasisTensors make_tensors(const InterpolationBasis& basis, const QuadratureRule& rule);

// Process-wide caches keyed by (family, degree) / point count. First access
// may race from several threads; fills are idempotent and mutex-guarded.
std::shared_ptr<const InterpolationBasis> cached_basis(int degree, NodeFamily family);
std::shared_ptr<const QuadratureRule> cached_quadrature(int n_points);
std::shared_ptr<const BasisTensors> cached_tensors(const InterpolationBasis& basis,
                                                   const QuadratureRule& rule);

}  // namespace irmesh
