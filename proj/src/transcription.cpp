#include "irmesh/transcription.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace irmesh {

namespace {

// Below this many quadrature points per evaluation the OpenMP fork/join
// overhead outweighs the loop body.
constexpr int kParallelThreshold = 256;

bool resolve_parallel(ExecMode mode, int work_items) {
#ifdef _OPENMP
  switch (mode) {
    case ExecMode::serial: return false;
    case ExecMode::parallel: return true;
    case ExecMode::automatic: return work_items >= kParallelThreshold;
  }
  return false;
#else
  (void)mode;
  (void)work_items;
  return false;
#endif
}

[[noreturn]] void throw_nonfinite(int interval, int quad_node) {
  std::ostringstream os;
  os << "non-finite residual at interval " << interval << ", quadrature node " << quad_node;
  throw EvaluationError(os.str(), interval, quad_node);
}

}  // namespace

TranscribedProblem::TranscribedProblem(DynamicFeasibilityProblem problem, Mesh mesh, ExecMode mode)
    : problem_(std::move(problem)), mesh_(std::move(mesh)) {
  const ValidationReport report = validate(problem_);
  if (!report.ok()) {
    std::string msg = "cannot transcribe ill-formed problem:";
    for (const auto& v : report.violations) msg += "\n  - " + v;
    throw std::invalid_argument(msg);
  }

  n_x_ = problem_.system.n_x;
  n_u_ = problem_.system.n_u;
  n_r_ = problem_.system.n_r;

  rule_ = cached_quadrature(mesh_.quadrature_degree);
  rule_elevated_ = cached_quadrature(mesh_.quadrature_degree + 2);
  x_tensors_ = cached_tensors(*mesh_.x_basis, *rule_);
  u_tensors_ = cached_tensors(*mesh_.u_basis, *rule_);
  x_tensors_elevated_ = cached_tensors(*mesh_.x_basis, *rule_elevated_);
  u_tensors_elevated_ = cached_tensors(*mesh_.u_basis, *rule_elevated_);

  // The objective normalization relies on the rule integrating the measure
  // of [-1, 1] exactly.
  if (std::abs(rule_->weights.sum() - 2.0) > 1e-12)
    throw std::logic_error("quadrature weights must sum to 2");

  const int n_h = mesh_.interval_count();
  const int d_x = mesh_.degree_x();
  const int d_u = mesh_.degree_u();
  x_size_ = (n_h * d_x + 1) * n_x_;
  dof_ = x_size_ + n_h * (d_u + 1) * n_u_;

  flat_lower_.resize(dof_);
  flat_upper_.resize(dof_);
  const int x_rows = n_h * d_x + 1;
  for (int g = 0; g < x_rows; ++g) {
    for (int c = 0; c < n_x_; ++c) {
      double lo = problem_.x_bounds.lower[c];
      double hi = problem_.x_bounds.upper[c];
      if (g == 0) {
        lo = std::max(lo, problem_.initial.lower[c]);
        hi = std::min(hi, problem_.initial.upper[c]);
      }
      if (g == x_rows - 1) {
        lo = std::max(lo, problem_.terminal.lower[c]);
        hi = std::min(hi, problem_.terminal.upper[c]);
      }
      if (lo > hi) {
        std::ostringstream os;
        os << "infeasible bound intersection at x node " << g << ", channel " << c;
        throw std::invalid_argument(os.str());
      }
      flat_lower_[g * n_x_ + c] = lo;
      flat_upper_[g * n_x_ + c] = hi;
    }
  }
  for (int i = 0; i < n_h; ++i) {
    for (int p = 0; p <= d_u; ++p) {
      for (int c = 0; c < n_u_; ++c) {
        flat_lower_[u_index(i, p, c)] = problem_.u_bounds.lower[c];
        flat_upper_[u_index(i, p, c)] = problem_.u_bounds.upper[c];
      }
    }
  }

  parallel_ = resolve_parallel(mode, n_h * mesh_.quadrature_degree);
}

Eigen::VectorXd TranscribedProblem::flatten(const MeshedTrajectory& traj) const {
  Eigen::VectorXd z(dof_);
  const int x_rows = static_cast<int>(traj.x_nodes.rows());
  for (int g = 0; g < x_rows; ++g)
    for (int c = 0; c < n_x_; ++c) z[g * n_x_ + c] = traj.x_nodes(g, c);
  const int u_rows = static_cast<int>(traj.u_nodes.rows());
  for (int g = 0; g < u_rows; ++g)
    for (int c = 0; c < n_u_; ++c) z[x_size_ + g * n_u_ + c] = traj.u_nodes(g, c);
  return z;
}

MeshedTrajectory TranscribedProblem::unflatten(Eigen::Ref<const Eigen::VectorXd> z) const {
  MeshedTrajectory traj = MeshedTrajectory::zeros(mesh_, n_x_, n_u_);
  const int x_rows = static_cast<int>(traj.x_nodes.rows());
  for (int g = 0; g < x_rows; ++g)
    for (int c = 0; c < n_x_; ++c) traj.x_nodes(g, c) = z[g * n_x_ + c];
  const int u_rows = static_cast<int>(traj.u_nodes.rows());
  for (int g = 0; g < u_rows; ++g)
    for (int c = 0; c < n_u_; ++c) traj.u_nodes(g, c) = z[x_size_ + g * n_u_ + c];
  return traj;
}

Eigen::VectorXd TranscribedProblem::eval_intervals(Eigen::Ref<const Eigen::VectorXd> z,
                                                   const BasisTensors& tx, const BasisTensors& tu,
                                                   const QuadratureRule& rule) const {
  const int n_h = mesh_.interval_count();
  const int n_q = rule.degree;
  const int d_x = mesh_.degree_x();
  const int d_u = mesh_.degree_u();
  const double horizon = problem_.domain.length();

  Eigen::VectorXd per_interval(n_h);
  std::atomic<long> first_bad{-1};
  std::exception_ptr user_error;
  std::mutex error_mutex;

  auto body = [&](int i) {
    const double h = mesh_.interval_lengths[i];
    // Nodal coefficients of this interval, channels as rows so that the
    // per-quadrature-point slices below are contiguous columns.
    Eigen::MatrixXd xiT(n_x_, d_x + 1);
    for (int p = 0; p <= d_x; ++p)
      for (int c = 0; c < n_x_; ++c) xiT(c, p) = z[x_index(i, p, c)];
    Eigen::MatrixXd uiT(n_u_, d_u + 1);
    for (int p = 0; p <= d_u; ++p)
      for (int c = 0; c < n_u_; ++c) uiT(c, p) = z[u_index(i, p, c)];

    const Eigen::MatrixXd vx = xiT * tx.eval.transpose();                 // n_x x n_Q
    const Eigen::MatrixXd vdx =
        (2.0 / (h * horizon)) * (xiT * tx.diff.transpose());              // scaled d/dt
    const Eigen::MatrixXd vu = uiT * tu.eval.transpose();                 // n_u x n_Q

    Eigen::VectorXd r(n_r_);
    double acc = 0.0;
    for (int q = 0; q < n_q; ++q) {
      problem_.system.eval(vdx.col(q), vx.col(q), vu.col(q), r);
      const double sq = r.squaredNorm();
      if (!std::isfinite(sq)) {
        long bad = static_cast<long>(i) * n_q + q;
        long expected = -1;
        first_bad.compare_exchange_strong(expected, bad);
        // keep the smallest location for a deterministic error message
        while (expected != -1 && bad < expected &&
               !first_bad.compare_exchange_weak(expected, bad)) {
        }
        return;
      }
      acc += rule.weights[q] * sq;
    }
    per_interval[i] = h / (2.0 * n_r_) * acc;
  };

  if (parallel_) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n_h; ++i) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!user_error) user_error = std::current_exception();
      }
    }
#endif
  } else {
    for (int i = 0; i < n_h; ++i) body(i);
  }

  if (user_error) std::rethrow_exception(user_error);
  const long bad = first_bad.load();
  if (bad >= 0) throw_nonfinite(static_cast<int>(bad / n_q), static_cast<int>(bad % n_q));
  return per_interval;
}

double TranscribedProblem::objective(Eigen::Ref<const Eigen::VectorXd> z,
                                     EvalCounter& counter) const {
  const Eigen::VectorXd per_interval = eval_intervals(z, *x_tensors_, *u_tensors_, *rule_);
  counter.add_residuals(static_cast<std::int64_t>(mesh_.interval_count()) * rule_->degree);
  return per_interval.sum();
}

Eigen::VectorXd TranscribedProblem::objective_per_interval(Eigen::Ref<const Eigen::VectorXd> z,
                                                           EvalCounter& counter) const {
  Eigen::VectorXd per_interval = eval_intervals(z, *x_tensors_, *u_tensors_, *rule_);
  counter.add_residuals(static_cast<std::int64_t>(mesh_.interval_count()) * rule_->degree);
  return per_interval;
}

double TranscribedProblem::objective_elevated(Eigen::Ref<const Eigen::VectorXd> z,
                                              EvalCounter& counter) const {
  const Eigen::VectorXd per_interval =
      eval_intervals(z, *x_tensors_elevated_, *u_tensors_elevated_, *rule_elevated_);
  counter.add_residuals(static_cast<std::int64_t>(mesh_.interval_count()) * rule_elevated_->degree);
  return per_interval.sum();
}

Eigen::VectorXd TranscribedProblem::gradient(Eigen::Ref<const Eigen::VectorXd> z,
                                             EvalCounter& counter,
                                             Eigen::VectorXd* gn_diag) const {
  const int n_h = mesh_.interval_count();
  const int n_q = rule_->degree;
  const int d_x = mesh_.degree_x();
  const int d_u = mesh_.degree_u();
  const double horizon = problem_.domain.length();
  const BasisTensors& tx = *x_tensors_;
  const BasisTensors& tu = *u_tensors_;
  const bool want_diag = gn_diag != nullptr;

  // Per-interval local gradients, scattered serially afterwards so shared
  // boundary nodes accumulate in a fixed order.
  Eigen::MatrixXd gxT_all(n_x_, n_h * (d_x + 1));
  Eigen::MatrixXd guT_all(std::max(n_u_, 1), n_h * (d_u + 1));
  Eigen::MatrixXd hxT_all, huT_all;
  if (want_diag) {
    hxT_all.resize(n_x_, n_h * (d_x + 1));
    huT_all.resize(std::max(n_u_, 1), n_h * (d_u + 1));
  }
  std::atomic<long> first_bad{-1};
  std::exception_ptr user_error;
  std::mutex error_mutex;

  auto body = [&](int i) {
    const double h = mesh_.interval_lengths[i];
    Eigen::MatrixXd xiT(n_x_, d_x + 1);
    for (int p = 0; p <= d_x; ++p)
      for (int c = 0; c < n_x_; ++c) xiT(c, p) = z[x_index(i, p, c)];
    Eigen::MatrixXd uiT(n_u_, d_u + 1);
    for (int p = 0; p <= d_u; ++p)
      for (int c = 0; c < n_u_; ++c) uiT(c, p) = z[u_index(i, p, c)];

    const double dt_scale = 2.0 / (h * horizon);
    const Eigen::MatrixXd vx = xiT * tx.eval.transpose();
    const Eigen::MatrixXd vdx = dt_scale * (xiT * tx.diff.transpose());
    const Eigen::MatrixXd vu = uiT * tu.eval.transpose();

    Eigen::VectorXd r(n_r_);
    Eigen::MatrixXd jxdot(n_r_, n_x_), jx(n_r_, n_x_), ju(n_r_, n_u_);
    Eigen::MatrixXd a(n_x_, n_q), b(n_x_, n_q), cu(n_u_, n_q);
    Eigen::MatrixXd hx = want_diag ? Eigen::MatrixXd::Zero(n_x_, d_x + 1) : Eigen::MatrixXd();
    Eigen::MatrixXd hu =
        want_diag ? Eigen::MatrixXd::Zero(std::max(n_u_, 1), d_u + 1) : Eigen::MatrixXd();
    for (int q = 0; q < n_q; ++q) {
      problem_.system.eval(vdx.col(q), vx.col(q), vu.col(q), r);
      const double sq = r.squaredNorm();
      if (!std::isfinite(sq)) {
        long bad = static_cast<long>(i) * n_q + q;
        long expected = -1;
        first_bad.compare_exchange_strong(expected, bad);
        while (expected != -1 && bad < expected &&
               !first_bad.compare_exchange_weak(expected, bad)) {
        }
        return;
      }
      problem_.system.jacobian(vdx.col(q), vx.col(q), vu.col(q), jxdot, jx, ju);
      const double wq = rule_->weights[q];
      a.col(q) = (wq * h / n_r_ * dt_scale) * (jxdot.transpose() * r);
      b.col(q) = (wq * h / n_r_) * (jx.transpose() * r);
      if (n_u_ > 0) cu.col(q) = (wq * h / n_r_) * (ju.transpose() * r);

      if (want_diag) {
        // Gauss-Newton diagonal: per decision coordinate, the w-weighted
        // squared norm of the corresponding residual-Jacobian column.
        const double wh = wq * h / n_r_;
        for (int p = 0; p <= d_x; ++p) {
          const double cd = dt_scale * tx.diff(q, p);
          const double cl = tx.eval(q, p);
          for (int c = 0; c < n_x_; ++c)
            hx(c, p) += wh * (cd * jxdot.col(c) + cl * jx.col(c)).squaredNorm();
        }
        for (int p = 0; p <= d_u; ++p) {
          const double cl2 = tu.eval(q, p) * tu.eval(q, p);
          for (int c = 0; c < n_u_; ++c) hu(c, p) += wh * cl2 * ju.col(c).squaredNorm();
        }
      }
    }

    gxT_all.middleCols(i * (d_x + 1), d_x + 1) = a * tx.diff + b * tx.eval;
    if (n_u_ > 0) guT_all.middleCols(i * (d_u + 1), d_u + 1) = cu * tu.eval;
    if (want_diag) {
      hxT_all.middleCols(i * (d_x + 1), d_x + 1) = hx;
      if (n_u_ > 0) huT_all.middleCols(i * (d_u + 1), d_u + 1) = hu;
    }
  };

  if (parallel_) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n_h; ++i) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!user_error) user_error = std::current_exception();
      }
    }
#endif
  } else {
    for (int i = 0; i < n_h; ++i) body(i);
  }

  if (user_error) std::rethrow_exception(user_error);
  const long bad = first_bad.load();
  if (bad >= 0) throw_nonfinite(static_cast<int>(bad / n_q), static_cast<int>(bad % n_q));

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(dof_);
  if (want_diag) gn_diag->setZero(dof_);
  for (int i = 0; i < n_h; ++i) {
    for (int p = 0; p <= d_x; ++p)
      for (int c = 0; c < n_x_; ++c) grad[x_index(i, p, c)] += gxT_all(c, i * (d_x + 1) + p);
    for (int p = 0; p <= d_u; ++p)
      for (int c = 0; c < n_u_; ++c) grad[u_index(i, p, c)] += guT_all(c, i * (d_u + 1) + p);
    if (want_diag) {
      for (int p = 0; p <= d_x; ++p)
        for (int c = 0; c < n_x_; ++c)
          (*gn_diag)[x_index(i, p, c)] += hxT_all(c, i * (d_x + 1) + p);
      for (int p = 0; p <= d_u; ++p)
        for (int c = 0; c < n_u_; ++c)
          (*gn_diag)[u_index(i, p, c)] += huT_all(c, i * (d_u + 1) + p);
    }
  }

  counter.add_jacobians(static_cast<std::int64_t>(n_h) * n_q);
  counter.add_residuals(static_cast<std::int64_t>(n_h) * n_q);
  return grad;
}

double optimality_measure(Eigen::Ref<const Eigen::VectorXd> z,
                          Eigen::Ref<const Eigen::VectorXd> grad,
                          Eigen::Ref<const Eigen::VectorXd> lower,
                          Eigen::Ref<const Eigen::VectorXd> upper) {
  double theta = 0.0;
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    const double delta = std::clamp(z[j] - grad[j], lower[j], upper[j]) - z[j];
    theta += grad[j] * delta + 0.5 * delta * delta;
  }
  return theta;
}

double optimality_measure(const TranscribedProblem& tp, Eigen::Ref<const Eigen::VectorXd> z,
                          Eigen::Ref<const Eigen::VectorXd> grad) {
  return optimality_measure(z, grad, tp.flat_lower(), tp.flat_upper());
}

}  // namespace irmesh
