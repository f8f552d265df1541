#pragma once

#include "irmesh/mesh.hpp"
#include "irmesh/optimizer.hpp"
#include "irmesh/transcription.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace irmesh {

enum class Strategy { fixed, progressive, predictive };

Strategy parse_strategy(std::string_view name);
std::string to_string(Strategy strategy);

struct StrategyConfig {
  Strategy strategy = Strategy::progressive;
  double eps_f = 1.15e-1;     // integrated-residual tolerance
  double eps_rho = 0.999;     // convergence-rate threshold (progressive)
  double eps_theta = 2e-4;    // optimality threshold (predictive)
  double eps_q = 1e-1;        // quadrature-error tolerance
  int p_max = 4;              // partition cap (predictive)
  int error_model_degree = 0; // 0 -> use the x-basis degree
  int max_outer_iterations = 20000;
  int max_mesh_intervals = 1024;

  std::vector<std::string> validate() const;
};

enum class RunStatus { success, stalled, outer_iteration_cap, mesh_interval_cap };
std::string to_string(RunStatus status);

enum class TraceEvent { optimize, refine_h, refine_q, terminate };
std::string to_string(TraceEvent event);

/// One trace row per accepted inner step (event=optimize), per refinement,
/// and one final terminate row. NaN marks not-applicable numeric fields.
struct TraceRow {
  long iteration{0};
  int block{0};  // outer iteration index; 0 = initial evaluation
  TraceEvent event{TraceEvent::optimize};
  double f{0.0};
  double theta{0.0};
  double rho{0.0};    // set on block-end rows
  double alpha{0.0};  // accepted step length
  int n_h{0};
  int n_q{0};
  int n_dof{0};
  std::int64_t jacobian_evals{0};           // cumulative
  std::int64_t residual_evals{0};           // cumulative
  std::int64_t overhead_residual_evals{0};  // cumulative, quadrature-error estimation
  double bound_violation{0.0};
};

struct RunTrace {
  std::vector<TraceRow> rows;
  RunStatus status{RunStatus::success};
  double wall_time_s{0.0};
  double final_f{0.0};
  double final_theta{0.0};
  int blocks{0};
  int refinements_h{0};
  int refinements_q{0};
  std::int64_t total_jacobian_evals{0};
  std::int64_t total_residual_evals{0};
  std::int64_t overhead_residual_evals{0};
};

struct SolveResult {
  MeshedTrajectory trajectory;
  RunTrace trace;

  bool success() const { return trace.status == RunStatus::success; }
};

/// Adapts a transcription + counter pair to the inner solver's interface.
class TranscriptionObjective : public BoxObjective {
 public:
  TranscriptionObjective(const TranscribedProblem& tp, EvalCounter& counter)
      : tp_(tp), counter_(counter) {}

  double value(const Eigen::VectorXd& z) override { return tp_.objective(z, counter_); }
  Eigen::VectorXd gradient(const Eigen::VectorXd& z) override { return tp_.gradient(z, counter_); }
  Eigen::VectorXd gradient_with_metric(const Eigen::VectorXd& z,
                                       Eigen::VectorXd& curvature_diag) override {
    return tp_.gradient(z, counter_, &curvature_diag);
  }
  const Eigen::VectorXd& lower() const override { return tp_.flat_lower(); }
  const Eigen::VectorXd& upper() const override { return tp_.flat_upper(); }

 private:
  const TranscribedProblem& tp_;
  EvalCounter& counter_;
};

/// Baseline: repeated inner blocks on one fixed transcription until
/// f_M <= eps_f. Only eps_f and the safety caps are read from the config.
SolveResult solve_fixed(const DynamicFeasibilityProblem& problem, const Mesh& mesh,
                        const MeshedTrajectory& initial, const StrategyConfig& config,
                        const OptimizerConfig& optimizer_config,
                        ExecMode exec = ExecMode::automatic);

/// Early-terminating strategy: refine as soon as the per-block convergence
/// ratio rho_k = f(z_{k+1}) / f(z_k) reaches eps_rho (or the block stalls).
SolveResult solve_progressive(const DynamicFeasibilityProblem& problem, const Mesh& mesh0,
                              const MeshedTrajectory& initial, const StrategyConfig& config,
                              const OptimizerConfig& optimizer_config,
                              ExecMode exec = ExecMode::automatic);

/// Conventional strategy: optimize each transcription until the optimality
/// measure is within eps_theta of stationary, then refine predictively.
SolveResult solve_predictive(const DynamicFeasibilityProblem& problem, const Mesh& mesh0,
                             const MeshedTrajectory& initial, const StrategyConfig& config,
                             const OptimizerConfig& optimizer_config,
                             ExecMode exec = ExecMode::automatic);

/// Dispatch on config.strategy.
SolveResult solve(const DynamicFeasibilityProblem& problem, const Mesh& mesh0,
                  const MeshedTrajectory& initial, const StrategyConfig& config,
                  const OptimizerConfig& optimizer_config, ExecMode exec = ExecMode::automatic);

/// Refinement decisions, split out from the loop for unit testing.
struct RefineDecision {
  bool increase_quadrature{false};
  std::vector<int> pieces;  // per interval, 1 = keep

  bool changes_mesh() const;
};

/// min{ceil((e_i/eps_f)^(1/(p+1))), p_max}, clamped to at least 2 so a
/// selected interval is actually split.
int predicted_pieces(double e_i, double eps_f, int p, int p_max);

RefineDecision decide_progressive(const Eigen::VectorXd& per_interval_f, const Eigen::VectorXd& h,
                                  double f_value, double f_elevated, double eps_q, double eps_f);

RefineDecision decide_predictive(const Eigen::VectorXd& per_interval_f, const Eigen::VectorXd& h,
                                 double f_value, double f_elevated, double eps_q, double eps_f,
                                 int p, int p_max);

/// Straight line between the boundary equality values for x (non-equality
/// channels hold the initial-side value), zero u; clamped into bounds.
MeshedTrajectory linear_initial_guess(const DynamicFeasibilityProblem& problem, const Mesh& mesh);

/// Same, plus uniform jitter of the given amplitude on every non-pinned
/// node (deterministic in the seed).
MeshedTrajectory jittered_initial_guess(const DynamicFeasibilityProblem& problem, const Mesh& mesh,
                                        std::uint64_t seed, double amplitude);

}  // namespace irmesh
