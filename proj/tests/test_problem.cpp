#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "irmesh/models.hpp"
#include "irmesh/problem.hpp"

#include <random>

using namespace irmesh;

namespace {

// r = xdot - A x with a fixed 2x2 matrix; linear, so finite differences
// are exact up to roundoff.
ResidualSystem linear_system() {
  ResidualSystem sys;
  sys.n_x = 2;
  sys.n_u = 0;
  sys.n_r = 2;
  sys.eval = [](Eigen::Ref<const Eigen::VectorXd> xdot, Eigen::Ref<const Eigen::VectorXd> x,
                Eigen::Ref<const Eigen::VectorXd>, Eigen::Ref<Eigen::VectorXd> r) {
    r[0] = xdot[0] - (0.5 * x[0] - 1.5 * x[1]);
    r[1] = xdot[1] - (2.0 * x[0] + 0.25 * x[1]);
  };
  sys.jacobian = [](Eigen::Ref<const Eigen::VectorXd>, Eigen::Ref<const Eigen::VectorXd>,
                    Eigen::Ref<const Eigen::VectorXd>, Eigen::Ref<Eigen::MatrixXd> d_xdot,
                    Eigen::Ref<Eigen::MatrixXd> d_x, Eigen::Ref<Eigen::MatrixXd> d_u) {
    d_xdot.setIdentity();
    d_x << -0.5, 1.5, -2.0, -0.25;
    d_u.setZero();
  };
  return sys;
}

std::vector<JacobianSample> random_samples(int n_x, int n_u, int count, unsigned seed,
                                           double span) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-span, span);
  std::vector<JacobianSample> samples(count);
  for (auto& s : samples) {
    s.xdot.resize(n_x);
    s.x.resize(n_x);
    s.u.resize(n_u);
    for (int c = 0; c < n_x; ++c) {
      s.xdot[c] = dist(rng);
      s.x[c] = dist(rng);
    }
    for (int c = 0; c < n_u; ++c) s.u[c] = dist(rng);
  }
  return samples;
}

}  // namespace

TEST_CASE("validate accepts the cart-pole problem") {
  const auto report = validate(cartpole_problem());
  CHECK(report.ok());
  CHECK(report.violations.empty());
}

TEST_CASE("validate flags a degenerate time domain") {
  auto problem = cartpole_problem();
  problem.domain.tf = problem.domain.t0;
  const auto report = validate(problem);
  CHECK_FALSE(report.ok());
  bool found = false;
  for (const auto& v : report.violations)
    if (v.find("degenerate time domain") != std::string::npos) found = true;
  CHECK(found);
}

TEST_CASE("validate flags a boundary set outside X") {
  auto problem = cartpole_problem();
  problem.x_bounds.lower[0] = 0.0;  // X0 pins q1(0) = 0, but push its lower edge out
  problem.initial.lower[0] = -2.0;
  problem.initial.upper[0] = -2.0;
  const auto report = validate(problem);
  CHECK_FALSE(report.ok());
  bool found = false;
  for (const auto& v : report.violations)
    if (v.find("outside X") != std::string::npos) found = true;
  CHECK(found);
}

TEST_CASE("validate flags dimension mismatches and inverted bounds") {
  auto problem = cartpole_problem();
  problem.u_bounds = BoxBounds::unbounded(3);
  CHECK_FALSE(validate(problem).ok());

  auto problem2 = cartpole_problem();
  problem2.x_bounds.lower[1] = 2.0;
  problem2.x_bounds.upper[1] = -2.0;
  CHECK_FALSE(validate(problem2).ok());
}

TEST_CASE("validate is idempotent and side-effect free") {
  const auto problem = cartpole_problem();
  const auto first = validate(problem);
  const auto second = validate(problem);
  CHECK(first.violations == second.violations);
}

TEST_CASE("check_jacobian is exact on a linear system") {
  const auto sys = linear_system();
  const auto result = check_jacobian(sys, random_samples(2, 0, 10, 123, 3.0), 1e-9);
  CHECK(result.passed);
  CHECK(result.max_rel_error < 1e-9);
}

TEST_CASE("check_jacobian passes the cart-pole model at 1e-6 on 100 points") {
  const auto problem = cartpole_problem();
  const auto result = check_jacobian(problem.system, random_samples(4, 1, 100, 77, 5.0), 1e-6);
  CHECK(result.passed);

  // the specific state called out as a spot check
  JacobianSample pt;
  pt.xdot = Eigen::VectorXd::Zero(4);
  pt.x.resize(4);
  pt.x << 0.3, 0.1, 0.5, -0.2;
  pt.u = Eigen::VectorXd::Constant(1, 0.7);
  CHECK(check_jacobian(problem.system, {pt}, 1e-6).passed);
}

TEST_CASE("check_jacobian catches a perturbed entry") {
  auto sys = linear_system();
  auto good = sys.jacobian;
  sys.jacobian = [good](Eigen::Ref<const Eigen::VectorXd> xdot,
                        Eigen::Ref<const Eigen::VectorXd> x, Eigen::Ref<const Eigen::VectorXd> u,
                        Eigen::Ref<Eigen::MatrixXd> d_xdot, Eigen::Ref<Eigen::MatrixXd> d_x,
                        Eigen::Ref<Eigen::MatrixXd> d_u) {
    good(xdot, x, u, d_xdot, d_x, d_u);
    d_x(1, 0) += 0.1;
  };
  const auto result = check_jacobian(sys, random_samples(2, 0, 5, 5, 2.0), 1e-6);
  CHECK_FALSE(result.passed);
  CHECK(result.max_rel_error > 1e-3);
}
