#pragma once

#include "irmesh/problem.hpp"

#include <functional>
#include <optional>
#include <string>

namespace irmesh {

/// Which angular-acceleration equation the cart-pole model uses. `printed`
/// follows the source equations as written (with the angular-rate-squared
/// reading of the centrifugal term); `literature` uses the standard
/// textbook form (negated numerator, pendulum-length-scaled denominator).
enum class CartPoleDynamicsForm { printed, literature };

CartPoleDynamicsForm parse_dynamics_form(std::string_view name);
std::string to_string(CartPoleDynamicsForm form);

struct CartPoleParams {
  double m1 = 1.0;    // cart mass (kg)
  double m2 = 0.3;    // pendulum mass (kg)
  double ell = 0.5;   // pendulum length (m)
  double g = 9.81;    // gravity (m/s^2)
  double t0 = 0.0;
  double tf = 2.0;
  double target_position = 1.0;  // cart displacement at tf; pendulum ends upright
};

/// Cart-pole swing-up as a dynamic feasibility problem: states
/// (q1, q1dot, q2, q2dot), one control, four first-order residuals, exact
/// equality boundary conditions at both ends. Control is unbounded unless
/// control_bound is given (then |u| <= control_bound).
DynamicFeasibilityProblem cartpole_problem(
    const CartPoleParams& params = {}, std::optional<double> control_bound = std::nullopt,
    CartPoleDynamicsForm form = CartPoleDynamicsForm::printed);

enum class TestProblemKind { constant_rate, exponential, polynomial };

TestProblemKind parse_test_problem_kind(std::string_view name);

/// A bundled problem together with its closed-form solution (for oracle
/// comparisons). exact_u is empty for problems without algebraic variables.
struct TestProblem {
  DynamicFeasibilityProblem problem;
  std::function<Eigen::VectorXd(double t)> exact_x;
  std::function<Eigen::VectorXd(double t)> exact_u;
  std::string name;
};

/// Synthetic problems with known solutions:
///   constant-rate: xdot = 1 on [0,1], x(0) = 0        -> x(t) = t
///   exponential:   xdot = -x on [0,1], x(0) = 1       -> x(t) = exp(-t)
///   polynomial:    xdot1 = 3 t^2 via a clock state    -> x1(t) = t^3
TestProblem linear_test_problem(TestProblemKind kind);

/// CLI-addressable models: "cartpole", "constant-rate", "exponential",
/// "polynomial". Throws std::invalid_argument for unknown names.
struct NamedModel {
  DynamicFeasibilityProblem problem;
  std::function<Eigen::VectorXd(double t)> exact_x;  // may be empty
  std::string name;
};

NamedModel make_named_model(const std::string& name,
                            CartPoleDynamicsForm form = CartPoleDynamicsForm::printed,
                            std::optional<double> control_bound = std::nullopt);

}  // namespace irmesh
