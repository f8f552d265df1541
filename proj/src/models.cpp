#include "irmesh/models.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace irmesh {

CartPoleDynamicsForm parse_dynamics_form(std::string_view name) {
  if (name == "printed") return CartPoleDynamicsForm::printed;
  if (name == "literature") return CartPoleDynamicsForm::literature;
  throw std::invalid_argument("unknown dynamics form: " + std::string(name));
}

std::string to_string(CartPoleDynamicsForm form) {
  return form == CartPoleDynamicsForm::printed ? "printed" : "literature";
}

DynamicFeasibilityProblem cartpole_problem(const CartPoleParams& params,
                                           std::optional<double> control_bound,
                                           CartPoleDynamicsForm form) {
  if (!(params.m1 > 0.0) || !(params.m2 > 0.0) || !(params.ell > 0.0))
    throw std::invalid_argument("cart-pole masses and length must be positive");

  const double m1 = params.m1;
  const double m2 = params.m2;
  const double ell = params.ell;
  const double g = params.g;

  DynamicFeasibilityProblem dfp;
  dfp.domain = {params.t0, params.tf};
  dfp.system.n_x = 4;
  dfp.system.n_u = 1;
  dfp.system.n_r = 4;

  // States: x1 = q1 (cart position), x2 = q1dot, x3 = q2 (angle), x4 = q2dot.
  // r1 = x1dot - x2, r2 = x2dot - f1, r3 = x3dot - x4, r4 = x4dot - f2.
  dfp.system.eval = [m1, m2, ell, g, form](Eigen::Ref<const Eigen::VectorXd> xdot,
                                           Eigen::Ref<const Eigen::VectorXd> x,
                                           Eigen::Ref<const Eigen::VectorXd> u,
                                           Eigen::Ref<Eigen::VectorXd> r) {
    const double sin_q2 = std::sin(x[2]);
    const double cos_q2 = std::cos(x[2]);
    const double w = x[3];
    const double den = m1 + m2 * sin_q2 * sin_q2;
    assert(den >= m1);  // no singularity anywhere on the state space

    const double f1 = (u[0] + m2 * ell * sin_q2 * w * w + m2 * g * cos_q2 * sin_q2) / den;
    const double num2 = u[0] * cos_q2 + m2 * ell * cos_q2 * sin_q2 * w * w + (m1 + m2) * g * sin_q2;
    const double f2 =
        (form == CartPoleDynamicsForm::printed) ? num2 / den : -num2 / (ell * den);

    r[0] = xdot[0] - x[1];
    r[1] = xdot[1] - f1;
    r[2] = xdot[2] - w;
    r[3] = xdot[3] - f2;
  };

  dfp.system.jacobian = [m1, m2, ell, g, form](Eigen::Ref<const Eigen::VectorXd> /*xdot*/,
                                               Eigen::Ref<const Eigen::VectorXd> x,
                                               Eigen::Ref<const Eigen::VectorXd> u,
                                               Eigen::Ref<Eigen::MatrixXd> d_xdot,
                                               Eigen::Ref<Eigen::MatrixXd> d_x,
                                               Eigen::Ref<Eigen::MatrixXd> d_u) {
    const double sin_q2 = std::sin(x[2]);
    const double cos_q2 = std::cos(x[2]);
    const double w = x[3];
    const double den = m1 + m2 * sin_q2 * sin_q2;
    const double dden = m2 * std::sin(2.0 * x[2]);  // d(den)/dq2

    const double num1 = u[0] + m2 * ell * sin_q2 * w * w + m2 * g * cos_q2 * sin_q2;
    const double dnum1_dq2 = m2 * ell * cos_q2 * w * w + m2 * g * std::cos(2.0 * x[2]);
    const double df1_dq2 = (dnum1_dq2 * den - num1 * dden) / (den * den);
    const double df1_dw = 2.0 * m2 * ell * sin_q2 * w / den;
    const double df1_du = 1.0 / den;

    const double num2 = u[0] * cos_q2 + m2 * ell * cos_q2 * sin_q2 * w * w + (m1 + m2) * g * sin_q2;
    const double dnum2_dq2 =
        -u[0] * sin_q2 + m2 * ell * std::cos(2.0 * x[2]) * w * w + (m1 + m2) * g * cos_q2;
    double df2_dq2 = (dnum2_dq2 * den - num2 * dden) / (den * den);
    double df2_dw = 2.0 * m2 * ell * cos_q2 * sin_q2 * w / den;
    double df2_du = cos_q2 / den;
    if (form == CartPoleDynamicsForm::literature) {
      df2_dq2 = -df2_dq2 / ell;
      df2_dw = -df2_dw / ell;
      df2_du = -df2_du / ell;
    }

    d_xdot.setIdentity();
    d_x.setZero();
    d_x(0, 1) = -1.0;
    d_x(1, 2) = -df1_dq2;
    d_x(1, 3) = -df1_dw;
    d_x(2, 3) = -1.0;
    d_x(3, 2) = -df2_dq2;
    d_x(3, 3) = -df2_dw;
    d_u.setZero();
    d_u(1, 0) = -df1_du;
    d_u(3, 0) = -df2_du;
  };

  dfp.x_bounds = BoxBounds::unbounded(4);
  dfp.u_bounds = BoxBounds::unbounded(1);
  if (control_bound) {
    dfp.u_bounds.lower[0] = -*control_bound;
    dfp.u_bounds.upper[0] = *control_bound;
  }

  Eigen::VectorXd x0(4), xf(4);
  x0 << 0.0, 0.0, 0.0, 0.0;
  xf << params.target_position, 0.0, M_PI, 0.0;
  dfp.initial = BoundarySet::equality(x0);
  dfp.terminal = BoundarySet::equality(xf);
  return dfp;
}

TestProblemKind parse_test_problem_kind(std::string_view name) {
  if (name == "constant-rate") return TestProblemKind::constant_rate;
  if (name == "exponential") return TestProblemKind::exponential;
  if (name == "polynomial") return TestProblemKind::polynomial;
  throw std::invalid_argument("unknown test problem: " + std::string(name));
}

TestProblem linear_test_problem(TestProblemKind kind) {
  TestProblem tp;
  tp.problem.domain = {0.0, 1.0};

  switch (kind) {
    case TestProblemKind::constant_rate: {
      tp.name = "constant-rate";
      tp.problem.system.n_x = 1;
      tp.problem.system.n_u = 0;
      tp.problem.system.n_r = 1;
      tp.problem.system.eval = [](Eigen::Ref<const Eigen::VectorXd> xdot,
                                  Eigen::Ref<const Eigen::VectorXd>,
                                  Eigen::Ref<const Eigen::VectorXd>,
                                  Eigen::Ref<Eigen::VectorXd> r) { r[0] = xdot[0] - 1.0; };
      tp.problem.system.jacobian =
          [](Eigen::Ref<const Eigen::VectorXd>, Eigen::Ref<const Eigen::VectorXd>,
             Eigen::Ref<const Eigen::VectorXd>, Eigen::Ref<Eigen::MatrixXd> d_xdot,
             Eigen::Ref<Eigen::MatrixXd> d_x, Eigen::Ref<Eigen::MatrixXd> d_u) {
            d_xdot.setIdentity();
            d_x.setZero();
            d_u.setZero();
          };
      tp.problem.x_bounds = BoxBounds::unbounded(1);
      tp.problem.u_bounds = BoxBounds::unbounded(0);
      tp.problem.initial = BoundarySet::equality(Eigen::VectorXd::Zero(1));
      tp.problem.terminal = BoundarySet::equality(Eigen::VectorXd::Ones(1));
      tp.exact_x = [](double t) { return Eigen::VectorXd::Constant(1, t); };
      break;
    }
    case TestProblemKind::exponential: {
      tp.name = "exponential";
      tp.problem.system.n_x = 1;
      tp.problem.system.n_u = 0;
      tp.problem.system.n_r = 1;
      tp.problem.system.eval = [](Eigen::Ref<const Eigen::VectorXd> xdot,
                                  Eigen::Ref<const Eigen::VectorXd> x,
                                  Eigen::Ref<const Eigen::VectorXd>,
                                  Eigen::Ref<Eigen::VectorXd> r) { r[0] = xdot[0] + x[0]; };
      tp.problem.system.jacobian =
          [](Eigen::Ref<const Eigen::VectorXd>, Eigen::Ref<const Eigen::VectorXd>,
             Eigen::Ref<const Eigen::VectorXd>, Eigen::Ref<Eigen::MatrixXd> d_xdot,
             Eigen::Ref<Eigen::MatrixXd> d_x, Eigen::Ref<Eigen::MatrixXd> d_u) {
            d_xdot.setIdentity();
            d_x.setIdentity();
            d_u.setZero();
          };
      tp.problem.x_bounds = BoxBounds::unbounded(1);
      tp.problem.u_bounds = BoxBounds::unbounded(0);
      tp.problem.initial = BoundarySet::equality(Eigen::VectorXd::Ones(1));
      tp.problem.terminal = BoundarySet::unconstrained(1);
      tp.exact_x = [](double t) { return Eigen::VectorXd::Constant(1, std::exp(-t)); };
      break;
    }
    case TestProblemKind::polynomial: {
      tp.name = "polynomial";
      // x1dot = 3 t^2 with an explicit clock state x2 (x2dot = 1), so the
      // residual stays autonomous.
      tp.problem.system.n_x = 2;
      tp.problem.system.n_u = 0;
      tp.problem.system.n_r = 2;
      tp.problem.system.eval = [](Eigen::Ref<const Eigen::VectorXd> xdot,
                                  Eigen::Ref<const Eigen::VectorXd> x,
                                  Eigen::Ref<const Eigen::VectorXd>,
                                  Eigen::Ref<Eigen::VectorXd> r) {
        r[0] = xdot[0] - 3.0 * x[1] * x[1];
        r[1] = xdot[1] - 1.0;
      };
      tp.problem.system.jacobian =
          [](Eigen::Ref<const Eigen::VectorXd>, Eigen::Ref<const Eigen::VectorXd> x,
             Eigen::Ref<const Eigen::VectorXd>, Eigen::Ref<Eigen::MatrixXd> d_xdot,
             Eigen::Ref<Eigen::MatrixXd> d_x, Eigen::Ref<Eigen::MatrixXd> d_u) {
            d_xdot.setIdentity();
            d_x.setZero();
            d_x(0, 1) = -6.0 * x[1];
            d_u.setZero();
          };
      tp.problem.x_bounds = BoxBounds::unbounded(2);
      tp.problem.u_bounds = BoxBounds::unbounded(0);
      tp.problem.initial = BoundarySet::equality(Eigen::VectorXd::Zero(2));
      Eigen::VectorXd xf(2);
      xf << 1.0, 1.0;
      tp.problem.terminal = BoundarySet::equality(xf);
      tp.exact_x = [](double t) {
        Eigen::VectorXd x(2);
        x << t * t * t, t;
        return x;
      };
      break;
    }
  }
  return tp;
}

NamedModel make_named_model(const std::string& name, CartPoleDynamicsForm form,
                            std::optional<double> control_bound) {
  NamedModel model;
  model.name = name;
  if (name == "cartpole") {
    model.problem = cartpole_problem(CartPoleParams{}, control_bound, form);
    return model;
  }
  TestProblem tp = linear_test_problem(parse_test_problem_kind(name));
  model.problem = std::move(tp.problem);
  model.exact_x = std::move(tp.exact_x);
  return model;
}

}  // namespace irmesh
