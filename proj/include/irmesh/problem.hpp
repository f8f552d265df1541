#pragma once

#include <Eigen/Dense>

#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace irmesh {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Continuous time horizon [t0, tf].
struct TimeDomain {
  double t0{0.0};
  double tf{1.0};

  double length() const { return tf - t0; }
};

/// Implicit DAE residual r(xdot, x, u) with hand-coded Jacobians.
///
/// Both callables must be deterministic, total on finite inputs and
/// reentrant: evaluations may run concurrently from several threads.
struct ResidualSystem {
  int n_x{0};  // differential variables
  int n_u{0};  // algebraic variables
  int n_r{0};  // residual equations

  using EvalFn = std::function<void(Eigen::Ref<const Eigen::VectorXd> xdot,
                                    Eigen::Ref<const Eigen::VectorXd> x,
                                    Eigen::Ref<const Eigen::VectorXd> u,
                                    Eigen::Ref<Eigen::VectorXd> r)>;

  // Jacobian blocks: d_xdot, d_x are n_r x n_x, d_u is n_r x n_u.
  using JacobianFn = std::function<void(Eigen::Ref<const Eigen::VectorXd> xdot,
                                        Eigen::Ref<const Eigen::VectorXd> x,
                                        Eigen::Ref<const Eigen::VectorXd> u,
                                        Eigen::Ref<Eigen::MatrixXd> d_xdot,
                                        Eigen::Ref<Eigen::MatrixXd> d_x,
                                        Eigen::Ref<Eigen::MatrixXd> d_u)>;

  EvalFn eval;
  JacobianFn jacobian;
};

/// Componentwise box; entries may be -inf/+inf.
struct BoxBounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  static BoxBounds unbounded(int n) {
    BoxBounds b;
    b.lower = Eigen::VectorXd::Constant(n, -kInf);
    b.upper = Eigen::VectorXd::Constant(n, kInf);
    return b;
  }

  int size() const { return static_cast<int>(lower.size()); }
};

/// Interval conditions on x at one end of the horizon; equality conditions
/// are degenerate intervals (lower == upper).
struct BoundarySet {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  static BoundarySet equality(const Eigen::VectorXd& value) { return {value, value}; }

  static BoundarySet unconstrained(int n) {
    return {Eigen::VectorXd::Constant(n, -kInf), Eigen::VectorXd::Constant(n, kInf)};
  }

  int size() const { return static_cast<int>(lower.size()); }
};

/// find x(.), u(.)  s.t.  r(xdot, x, u) = 0 a.e. on [t0, tf],
///                        x in X, u in U, x(t0) in X0, x(tf) in Xf.
struct DynamicFeasibilityProblem {
  TimeDomain domain;
  ResidualSystem system;
  BoxBounds x_bounds;
  BoxBounds u_bounds;
  BoundarySet initial;
  BoundarySet terminal;
};

struct ValidationReport {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

/// Report-style well-formedness check; empty report iff the problem is usable.
ValidationReport validate(const DynamicFeasibilityProblem& problem);

struct JacobianSample {
  Eigen::VectorXd xdot;
  Eigen::VectorXd x;
  Eigen::VectorXd u;
};

struct JacobianCheckResult {
  bool passed{false};
  double max_rel_error{0.0};
  int worst_sample{-1};
  std::string worst_entry;  // e.g. "d_x(2,3)"
};

/// Compares the analytic Jacobian against central finite differences
/// (step 1e-6 * (1 + |value|)) at each sample point.
JacobianCheckResult check_jacobian(const ResidualSystem& system,
                                   const std::vector<JacobianSample>& samples,
                                   double tolerance);

/// Non-finite residual output during transcription evaluation; carries the
/// (interval, quadrature node) location it was detected at.
class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(const std::string& what, int interval, int quad_node)
      : std::runtime_error(what), interval_(interval), quad_node_(quad_node) {}

  int interval() const { return interval_; }
  int quad_node() const { return quad_node_; }

 private:
  int interval_;
  int quad_node_;
};

}  // namespace irmesh
