#pragma once

#include "irmesh/mesh.hpp"
#include "irmesh/problem.hpp"

#include <Eigen/Dense>

#include <atomic>
#include <cstdint>
#include <memory>

namespace irmesh {

/// Evaluation tallies. Increments are bulk (one per objective/gradient
/// call) and relaxed-atomic, so totals stay exact under concurrent use.
struct EvalCounter {
  std::atomic<std::int64_t> residual_evals{0};
  std::atomic<std::int64_t> jacobian_evals{0};

  std::int64_t residuals() const { return residual_evals.load(std::memory_order_relaxed); }
  std::int64_t jacobians() const { return jacobian_evals.load(std::memory_order_relaxed); }

  void add_residuals(std::int64_t n) { residual_evals.fetch_add(n, std::memory_order_relaxed); }
  void add_jacobians(std::int64_t n) { jacobian_evals.fetch_add(n, std::memory_order_relaxed); }
};

/// Interval loop execution. Results are bitwise identical in both modes:
/// per-interval partials are always reduced serially in interval order.
enum class ExecMode { serial, parallel, automatic };

/// The finite-dimensional problem for one mesh: flattened decision vector
/// with interval-boundary x nodes stored once, box bounds with the boundary
/// sets intersected in, and precomputed basis/quadrature tensors.
///
/// Decision vector layout: x block first, (global node, channel) row-major,
/// then u block, (interval node, channel) row-major.
class TranscribedProblem {
 public:
  TranscribedProblem(DynamicFeasibilityProblem problem, Mesh mesh,
                     ExecMode mode = ExecMode::automatic);

  int dof() const { return dof_; }
  const Eigen::VectorXd& flat_lower() const { return flat_lower_; }
  const Eigen::VectorXd& flat_upper() const { return flat_upper_; }
  const Mesh& mesh() const { return mesh_; }
  const DynamicFeasibilityProblem& problem() const { return problem_; }
  bool runs_parallel() const { return parallel_; }

  int x_index(int interval, int node, int channel) const {
    return (interval * mesh_.degree_x() + node) * n_x_ + channel;
  }
  int u_index(int interval, int node, int channel) const {
    return x_size_ + (interval * (mesh_.degree_u() + 1) + node) * n_u_ + channel;
  }

  Eigen::VectorXd flatten(const MeshedTrajectory& traj) const;
  MeshedTrajectory unflatten(Eigen::Ref<const Eigen::VectorXd> z) const;

  /// f_M(z) = sum_i h_i/(2 n_r) sum_q w_q ||r(. , . , .)||^2. Adds
  /// n_H * n_Q residual evaluations to the counter.
  double objective(Eigen::Ref<const Eigen::VectorXd> z, EvalCounter& counter) const;

  /// The i-th summand of the objective; components sum to objective(z).
  Eigen::VectorXd objective_per_interval(Eigen::Ref<const Eigen::VectorXd> z,
                                         EvalCounter& counter) const;

  /// Exact chain-rule gradient. Recomputes residuals alongside Jacobians,
  /// so one call adds n_H * n_Q to both tallies. When gn_diag is non-null
  /// it receives the Gauss-Newton Hessian diagonal, assembled from the same
  /// Jacobian evaluations (no extra counter cost).
  Eigen::VectorXd gradient(Eigen::Ref<const Eigen::VectorXd> z, EvalCounter& counter,
                           Eigen::VectorXd* gn_diag = nullptr) const;

  /// Objective under the elevated rule (n_Q + 2), used for the quadrature
  /// error estimate. Pass a separate counter to keep it out of the headline
  /// totals.
  double objective_elevated(Eigen::Ref<const Eigen::VectorXd> z, EvalCounter& counter) const;

 private:
  Eigen::VectorXd eval_intervals(Eigen::Ref<const Eigen::VectorXd> z, const BasisTensors& tx,
                                 const BasisTensors& tu, const QuadratureRule& rule) const;

  DynamicFeasibilityProblem problem_;
  Mesh mesh_;
  std::shared_ptr<const QuadratureRule> rule_;
  std::shared_ptr<const QuadratureRule> rule_elevated_;
  std::shared_ptr<const BasisTensors> x_tensors_;
  std::shared_ptr<const BasisTensors> u_tensors_;
  std::shared_ptr<const BasisTensors> x_tensors_elevated_;
  std::shared_ptr<const BasisTensors> u_tensors_elevated_;
  Eigen::VectorXd flat_lower_;
  Eigen::VectorXd flat_upper_;
  int n_x_{0}, n_u_{0}, n_r_{0};
  int x_size_{0}, dof_{0};
  bool parallel_{false};
};

/// First-order quadratic optimality function
///   theta(z) = min_{z' in box} <g, z' - z> + 1/2 ||z' - z||^2,
/// solved in closed form per coordinate. Always <= 0; zero exactly at
/// first-order stationary points.
double optimality_measure(Eigen::Ref<const Eigen::VectorXd> z,
                          Eigen::Ref<const Eigen::VectorXd> grad,
                          Eigen::Ref<const Eigen::VectorXd> lower,
                          Eigen::Ref<const Eigen::VectorXd> upper);

double optimality_measure(const TranscribedProblem& tp, Eigen::Ref<const Eigen::VectorXd> z,
                          Eigen::Ref<const Eigen::VectorXd> grad);

}  // namespace irmesh
