#include "irmesh/problem.hpp"

#include <cmath>
#include <sstream>

namespace irmesh {

namespace {

bool contains(const BoxBounds& box, const BoundarySet& set) {
  // Interval containment: [set.lower, set.upper] must fit inside the box
  // componentwise. Infinite box entries contain everything.
  for (int j = 0; j < set.size(); ++j) {
    if (set.lower[j] < box.lower[j] || set.upper[j] > box.upper[j]) return false;
  }
  return true;
}

bool ordered(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
  for (int j = 0; j < lower.size(); ++j) {
    if (!(lower[j] <= upper[j])) return false;
  }
  return true;
}

}  // namespace

ValidationReport validate(const DynamicFeasibilityProblem& problem) {
  ValidationReport report;
  auto flag = [&report](const std::string& msg) { report.violations.push_back(msg); };

  const auto& sys = problem.system;
  if (sys.n_x < 1) flag("system must have at least one differential variable");
  if (sys.n_u < 0) flag("negative algebraic variable count");
  if (sys.n_r < 1) flag("system must have at least one residual equation");
  if (!sys.eval) flag("residual eval callable missing");
  if (!sys.jacobian) flag("residual jacobian callable missing");

  if (!(problem.domain.tf > problem.domain.t0)) flag("degenerate time domain (tf <= t0)");

  if (problem.x_bounds.size() != sys.n_x) flag("x_bounds dimension mismatch");
  if (problem.u_bounds.size() != sys.n_u) flag("u_bounds dimension mismatch");
  if (problem.initial.size() != sys.n_x) flag("initial boundary set dimension mismatch");
  if (problem.terminal.size() != sys.n_x) flag("terminal boundary set dimension mismatch");

  if (problem.x_bounds.size() == sys.n_x && !ordered(problem.x_bounds.lower, problem.x_bounds.upper))
    flag("inverted x bounds (lower > upper)");
  if (problem.u_bounds.size() == sys.n_u && !ordered(problem.u_bounds.lower, problem.u_bounds.upper))
    flag("inverted u bounds (lower > upper)");
  if (problem.initial.size() == sys.n_x && !ordered(problem.initial.lower, problem.initial.upper))
    flag("inverted initial boundary set");
  if (problem.terminal.size() == sys.n_x && !ordered(problem.terminal.lower, problem.terminal.upper))
    flag("inverted terminal boundary set");

  if (problem.initial.size() == sys.n_x && problem.x_bounds.size() == sys.n_x &&
      !contains(problem.x_bounds, problem.initial))
    flag("initial boundary set outside X");
  if (problem.terminal.size() == sys.n_x && problem.x_bounds.size() == sys.n_x &&
      !contains(problem.x_bounds, problem.terminal))
    flag("terminal boundary set outside X");

  return report;
}

JacobianCheckResult check_jacobian(const ResidualSystem& system,
                                   const std::vector<JacobianSample>& samples,
                                   double tolerance) {
  JacobianCheckResult result;
  const int n_r = system.n_r;
  const int n_x = system.n_x;
  const int n_u = system.n_u;

  Eigen::MatrixXd d_xdot(n_r, n_x), d_x(n_r, n_x), d_u(n_r, n_u);
  Eigen::VectorXd r_plus(n_r), r_minus(n_r);

  // Scaled relative error; the 1 + |a| denominator keeps near-zero entries
  // from blowing up the ratio.
  auto update = [&result](double analytic, double numeric, int sample, const char* block, int row,
                          int col) {
    const double err = std::abs(analytic - numeric) / (1.0 + std::abs(analytic));
    if (err > result.max_rel_error) {
      result.max_rel_error = err;
      result.worst_sample = sample;
      std::ostringstream os;
      os << block << "(" << row << "," << col << ")";
      result.worst_entry = os.str();
    }
  };

  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto& pt = samples[s];
    system.jacobian(pt.xdot, pt.x, pt.u, d_xdot, d_x, d_u);

    auto central = [&](Eigen::VectorXd v, int j, auto&& call) {
      const double h = 1e-6 * (1.0 + std::abs(v[j]));
      const double v0 = v[j];
      v[j] = v0 + h;
      call(v, r_plus);
      v[j] = v0 - h;
      call(v, r_minus);
      return Eigen::VectorXd(((r_plus - r_minus) / (2.0 * h)).eval());
    };

    for (int j = 0; j < n_x; ++j) {
      Eigen::VectorXd col = central(pt.xdot, j, [&](const Eigen::VectorXd& v, Eigen::VectorXd& r) {
        system.eval(v, pt.x, pt.u, r);
      });
      for (int i = 0; i < n_r; ++i) update(d_xdot(i, j), col[i], static_cast<int>(s), "d_xdot", i, j);
    }
    for (int j = 0; j < n_x; ++j) {
      Eigen::VectorXd col = central(pt.x, j, [&](const Eigen::VectorXd& v, Eigen::VectorXd& r) {
        system.eval(pt.xdot, v, pt.u, r);
      });
      for (int i = 0; i < n_r; ++i) update(d_x(i, j), col[i], static_cast<int>(s), "d_x", i, j);
    }
    for (int j = 0; j < n_u; ++j) {
      Eigen::VectorXd col = central(pt.u, j, [&](const Eigen::VectorXd& v, Eigen::VectorXd& r) {
        system.eval(pt.xdot, pt.x, v, r);
      });
      for (int i = 0; i < n_r; ++i) update(d_u(i, j), col[i], static_cast<int>(s), "d_u", i, j);
    }
  }

  result.passed = result.max_rel_error <= tolerance;
  return result;
}

}  // namespace irmesh
