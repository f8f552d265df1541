#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "irmesh/basis.hpp"

#include <cmath>
#include <random>

using namespace irmesh;

namespace {

// Horner evaluation, the oracle for polynomial reproduction checks.
double poly_eval(const Eigen::VectorXd& coeffs, double x) {
  double v = 0.0;
  for (int k = static_cast<int>(coeffs.size()) - 1; k >= 0; --k) v = v * x + coeffs[k];
  return v;
}

double poly_deriv_eval(const Eigen::VectorXd& coeffs, double x) {
  double v = 0.0;
  for (int k = static_cast<int>(coeffs.size()) - 1; k >= 1; --k) v = v * x + k * coeffs[k];
  return v;
}

// Analytic integral of a monomial expansion over [-1, 1].
double poly_integral(const Eigen::VectorXd& coeffs) {
  double v = 0.0;
  for (int k = 0; k < coeffs.size(); ++k)
    if (k % 2 == 0) v += coeffs[k] * 2.0 / (k + 1);
  return v;
}

}  // namespace

TEST_CASE("gauss-legendre small rules match published values") {
  const QuadratureRule one = make_quadrature(1);
  CHECK(one.nodes[0] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(one.weights[0] == doctest::Approx(2.0).epsilon(1e-14));

  const QuadratureRule two = make_quadrature(2);
  CHECK(two.nodes[0] == doctest::Approx(-1.0 / std::sqrt(3.0)).epsilon(1e-14));
  CHECK(two.nodes[1] == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-14));
  CHECK(two.weights[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(two.weights[1] == doctest::Approx(1.0).epsilon(1e-14));

  // integral of tau^2 over [-1,1] = 2/3, exact for a 2-point rule
  double acc = 0.0;
  for (int q = 0; q < 2; ++q) acc += two.weights[q] * two.nodes[q] * two.nodes[q];
  CHECK(acc == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("gauss-legendre invariants: positive weights summing to 2") {
  for (int n = 1; n <= 20; ++n) {
    const QuadratureRule rule = make_quadrature(n);
    REQUIRE(rule.nodes.size() == n);
    CHECK(std::abs(rule.weights.sum() - 2.0) <= 1e-12 * 2.0);
    for (int q = 0; q < n; ++q) {
      CHECK(rule.weights[q] > 0.0);
      CHECK(rule.nodes[q] > -1.0);
      CHECK(rule.nodes[q] < 1.0);
      if (q > 0) CHECK(rule.nodes[q] > rule.nodes[q - 1]);
    }
  }
}

TEST_CASE("gauss-legendre exactness through degree 2n-1") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int n = 1; n <= 10; ++n) {
    const QuadratureRule rule = make_quadrature(n);
    for (int trial = 0; trial < 100; ++trial) {
      Eigen::VectorXd coeffs(2 * n);  // degree 2n-1
      for (int k = 0; k < coeffs.size(); ++k) coeffs[k] = dist(rng);
      double numeric = 0.0;
      for (int q = 0; q < n; ++q) numeric += rule.weights[q] * poly_eval(coeffs, rule.nodes[q]);
      const double exact = poly_integral(coeffs);
      const double scale = std::max(1.0, coeffs.cwiseAbs().sum());
      CHECK(std::abs(numeric - exact) <= 1e-12 * scale);
    }
  }
}

TEST_CASE("basis nodes: forced linear case and chebyshev closed form") {
  for (NodeFamily family :
       {NodeFamily::chebyshev_lobatto, NodeFamily::legendre_lobatto, NodeFamily::uniform}) {
    const InterpolationBasis basis = make_basis(1, family);
    CHECK(basis.nodes[0] == -1.0);
    CHECK(basis.nodes[1] == 1.0);
    // weights proportional to {-1, 1}
    CHECK(basis.bary_weights[0] == doctest::Approx(-basis.bary_weights[1]).epsilon(1e-14));
  }

  const InterpolationBasis cheb2 = make_basis(2, NodeFamily::chebyshev_lobatto);
  CHECK(cheb2.nodes[0] == -1.0);
  CHECK(cheb2.nodes[1] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(cheb2.nodes[2] == 1.0);
  // weights proportional to {0.5, -1, 0.5}
  const double scale = cheb2.bary_weights[1] / -1.0;
  CHECK(cheb2.bary_weights[0] == doctest::Approx(0.5 * scale).epsilon(1e-13));
  CHECK(cheb2.bary_weights[2] == doctest::Approx(0.5 * scale).epsilon(1e-13));

  for (int d : {3, 5, 8, 13}) {
    const InterpolationBasis basis = make_basis(d, NodeFamily::chebyshev_lobatto);
    for (int p = 0; p <= d; ++p)
      CHECK(basis.nodes[p] == doctest::Approx(std::cos(M_PI * (d - p) / d)).epsilon(1e-14));
  }
}

TEST_CASE("basis invariants across families and degrees") {
  for (NodeFamily family :
       {NodeFamily::chebyshev_lobatto, NodeFamily::legendre_lobatto, NodeFamily::uniform}) {
    for (int d = 1; d <= 12; ++d) {
      const InterpolationBasis basis = make_basis(d, family);
      REQUIRE(basis.nodes.size() == d + 1);
      CHECK(basis.nodes[0] == -1.0);
      CHECK(basis.nodes[d] == 1.0);
      for (int p = 1; p <= d; ++p) CHECK(basis.nodes[p] > basis.nodes[p - 1]);
      // w_p proportional to 1/prod(tau_p - tau_k)
      for (int p = 0; p <= d; ++p) {
        double prod = 1.0;
        for (int k = 0; k <= d; ++k)
          if (k != p) prod *= basis.nodes[p] - basis.nodes[k];
        const double ratio = basis.bary_weights[p] * prod;
        CHECK(ratio == doctest::Approx(basis.bary_weights[0] *
                                       [&] {
                                         double pr = 1.0;
                                         for (int k = 1; k <= d; ++k)
                                           pr *= basis.nodes[0] - basis.nodes[k];
                                         return pr;
                                       }())
                           .epsilon(1e-10));
      }
    }
  }
  CHECK_THROWS_AS(make_basis(0, NodeFamily::uniform), std::invalid_argument);
  CHECK_THROWS_AS(make_quadrature(0), std::invalid_argument);
  CHECK_THROWS_AS(parse_node_family("hermite"), std::invalid_argument);
}

TEST_CASE("interpolation: node hits, partition of unity, quadratic example") {
  const InterpolationBasis basis = make_basis(2, NodeFamily::chebyshev_lobatto);
  Eigen::VectorXd coeffs(3);
  // f(tau) = tau^2 sampled at {-1, 0, 1}
  coeffs << 1.0, 0.0, 1.0;
  CHECK(eval_interpolant(basis, coeffs, 0.5) == doctest::Approx(0.25).epsilon(1e-14));
  for (int p = 0; p < 3; ++p) CHECK(eval_interpolant(basis, coeffs, basis.nodes[p]) == coeffs[p]);

  Eigen::VectorXd constant = Eigen::VectorXd::Constant(3, 3.25);
  for (double tau : {-0.9, -0.3, 0.123, 0.77, 1.0})
    CHECK(eval_interpolant(basis, constant, tau) == doctest::Approx(3.25).epsilon(1e-14));

  // derivative of tau^2 at 0.3 is 0.6; derivative of constants is 0
  CHECK(eval_interpolant_derivative(basis, coeffs, 0.3) == doctest::Approx(0.6).epsilon(1e-13));
  CHECK(eval_interpolant_derivative(basis, constant, 0.4) == doctest::Approx(0.0).epsilon(1e-13));

  // linear reproduction: slope 1 everywhere, any degree >= 1
  const InterpolationBasis lin = make_basis(3, NodeFamily::chebyshev_lobatto);
  Eigen::VectorXd line(4);
  for (int p = 0; p < 4; ++p) line[p] = lin.nodes[p];
  for (double tau : {-1.0, -0.5, 0.0, 0.31, 1.0})
    CHECK(eval_interpolant_derivative(lin, line, tau) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("polynomial reproduction: values and derivatives at random points") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (NodeFamily family :
       {NodeFamily::chebyshev_lobatto, NodeFamily::legendre_lobatto, NodeFamily::uniform}) {
    for (int d = 1; d <= 10; ++d) {
      const InterpolationBasis basis = make_basis(d, family);
      Eigen::VectorXd poly(d + 1);
      for (int k = 0; k <= d; ++k) poly[k] = dist(rng);
      Eigen::VectorXd coeffs(d + 1);
      for (int p = 0; p <= d; ++p) coeffs[p] = poly_eval(poly, basis.nodes[p]);
      for (int trial = 0; trial < 100; ++trial) {
        const double tau = dist(rng);
        const double v = eval_interpolant(basis, coeffs, tau);
        const double dv = eval_interpolant_derivative(basis, coeffs, tau);
        const double v_exact = poly_eval(poly, tau);
        const double dv_exact = poly_deriv_eval(poly, tau);
        CHECK(std::abs(v - v_exact) <= 1e-11 * std::max(1.0, std::abs(v_exact)));
        CHECK(std::abs(dv - dv_exact) <= 1e-11 * std::max(10.0, std::abs(dv_exact)));
      }
    }
  }
}

TEST_CASE("high-degree chebyshev interpolation of exp stays accurate") {
  const InterpolationBasis basis = make_basis(20, NodeFamily::chebyshev_lobatto);
  Eigen::VectorXd coeffs(21);
  for (int p = 0; p <= 20; ++p) coeffs[p] = std::exp(basis.nodes[p]);
  double max_err = 0.0;
  for (int j = 0; j < 1000; ++j) {
    const double tau = -1.0 + 2.0 * j / 999.0;
    max_err = std::max(max_err, std::abs(eval_interpolant(basis, coeffs, tau) - std::exp(tau)));
  }
  // best approximation decays far below this; the bound only guards
  // against runaway growth
  CHECK(max_err < 1e-13);
}

TEST_CASE("tensors: hand values, unity rows, linear slope") {
  const InterpolationBasis lin = make_basis(1, NodeFamily::chebyshev_lobatto);
  const QuadratureRule mid = make_quadrature(1);
  const BasisTensors t = make_tensors(lin, mid);
  CHECK(t.eval(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(t.eval(0, 1) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(t.diff(0, 0) == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(t.diff(0, 1) == doctest::Approx(0.5).epsilon(1e-14));

  for (int d : {1, 2, 3, 5}) {
    for (int nq : {1, 2, 4, 7}) {
      const InterpolationBasis basis = make_basis(d, NodeFamily::chebyshev_lobatto);
      const QuadratureRule rule = make_quadrature(nq);
      const BasisTensors tensors = make_tensors(basis, rule);
      for (int q = 0; q < nq; ++q) {
        CHECK(tensors.eval.row(q).sum() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(tensors.diff.row(q).sum()) <= 1e-10);
      }
      // eval rows agree with direct barycentric evaluation
      Eigen::VectorXd coeffs(d + 1);
      std::mt19937_64 rng(99 + d + nq);
      std::uniform_real_distribution<double> dist(-2.0, 2.0);
      for (int p = 0; p <= d; ++p) coeffs[p] = dist(rng);
      for (int q = 0; q < nq; ++q) {
        const double via_tensor = tensors.eval.row(q).dot(coeffs);
        const double direct = eval_interpolant(basis, coeffs, rule.nodes[q]);
        CHECK(via_tensor == doctest::Approx(direct).epsilon(1e-12));
      }
      // D applied to linear data gives the constant slope (b - a) / 2
      Eigen::VectorXd ab(d + 1);
      for (int p = 0; p <= d; ++p) ab[p] = 1.0 + 0.5 * (basis.nodes[p] + 1.0);  // a=1, b=2
      for (int q = 0; q < nq; ++q)
        CHECK(tensors.diff.row(q).dot(ab) == doctest::Approx(0.5).epsilon(1e-11));
    }
  }
}

TEST_CASE("caches hand out identical shared objects") {
  auto a = cached_basis(4, NodeFamily::chebyshev_lobatto);
  auto b = cached_basis(4, NodeFamily::chebyshev_lobatto);
  CHECK(a.get() == b.get());
  auto q1 = cached_quadrature(6);
  auto q2 = cached_quadrature(6);
  CHECK(q1.get() == q2.get());
  auto t1 = cached_tensors(*a, *q1);
  auto t2 = cached_tensors(*b, *q2);
  CHECK(t1.get() == t2.get());
}
