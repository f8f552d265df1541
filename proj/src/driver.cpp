#include "irmesh/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace irmesh {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double pick_boundary_value(const BoundarySet& set, const BoxBounds& box, int channel) {
  const double lo = std::max(set.lower[channel], box.lower[channel]);
  const double hi = std::min(set.upper[channel], box.upper[channel]);
  if (lo == hi) return lo;
  if (std::isfinite(lo) && std::isfinite(hi)) return 0.5 * (lo + hi);
  if (std::isfinite(lo)) return lo;
  if (std::isfinite(hi)) return hi;
  return 0.0;
}

}  // namespace

Strategy parse_strategy(std::string_view name) {
  if (name == "fixed") return Strategy::fixed;
  if (name == "progressive") return Strategy::progressive;
  if (name == "predictive") return Strategy::predictive;
  throw std::invalid_argument("unknown strategy: " + std::string(name));
}

std::string to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::fixed: return "fixed";
    case Strategy::progressive: return "progressive";
    case Strategy::predictive: return "predictive";
  }
  return "?";
}

std::string to_string(RunStatus status) {
  switch (status) {
    case RunStatus::success: return "success";
    case RunStatus::stalled: return "stalled";
    case RunStatus::outer_iteration_cap: return "outer-iteration-cap";
    case RunStatus::mesh_interval_cap: return "mesh-interval-cap";
  }
  return "?";
}

std::string to_string(TraceEvent event) {
  switch (event) {
    case TraceEvent::optimize: return "optimize";
    case TraceEvent::refine_h: return "refine-h";
    case TraceEvent::refine_q: return "refine-q";
    case TraceEvent::terminate: return "terminate";
  }
  return "?";
}

std::vector<std::string> StrategyConfig::validate() const {
  std::vector<std::string> errors;
  if (!(eps_f > 0.0)) errors.push_back("eps_f must be > 0");
  if (!(eps_rho > 0.0 && eps_rho < 1.0)) errors.push_back("eps_rho must be in (0, 1)");
  if (!(eps_theta > 0.0)) errors.push_back("eps_theta must be > 0");
  if (!(eps_q > 0.0)) errors.push_back("eps_q must be > 0");
  if (p_max < 2) errors.push_back("p_max must be >= 2");
  if (max_outer_iterations < 1) errors.push_back("max_outer_iterations must be >= 1");
  if (max_mesh_intervals < 1) errors.push_back("max_mesh_intervals must be >= 1");
  return errors;
}

bool RefineDecision::changes_mesh() const {
  if (increase_quadrature) return true;
  for (int c : pieces)
    if (c > 1) return true;
  return false;
}

int predicted_pieces(double e_i, double eps_f, int p, int p_max) {
  const double ratio = e_i / eps_f;
  int pieces = static_cast<int>(std::ceil(std::pow(ratio, 1.0 / (p + 1))));
  pieces = std::max(pieces, 2);
  return std::min(pieces, p_max);
}

namespace {

double quadrature_error(double f_value, double f_elevated) {
  return std::abs(f_value - f_elevated) / (1.0 + f_elevated);
}

// Shared fallback: when no interval crosses the threshold but the run is
// not finished, split the worst one so refinement always makes progress.
void ensure_nonempty(RefineDecision& decision, const Eigen::VectorXd& per_interval_f,
                     const Eigen::VectorXd& h) {
  if (decision.changes_mesh()) return;
  int worst = 0;
  double worst_density = -1.0;
  for (int i = 0; i < per_interval_f.size(); ++i) {
    const double density = per_interval_f[i] / h[i];
    if (density > worst_density) {
      worst_density = density;
      worst = i;
    }
  }
  decision.pieces[worst] = 2;
}

}  // namespace

RefineDecision decide_progressive(const Eigen::VectorXd& per_interval_f, const Eigen::VectorXd& h,
                                  double f_value, double f_elevated, double eps_q, double eps_f) {
  RefineDecision decision;
  decision.pieces.assign(per_interval_f.size(), 1);
  if (quadrature_error(f_value, f_elevated) > eps_q) {
    decision.increase_quadrature = true;
    return decision;
  }
  for (int i = 0; i < per_interval_f.size(); ++i) {
    if (per_interval_f[i] / h[i] >= eps_f) decision.pieces[i] = 2;
  }
  ensure_nonempty(decision, per_interval_f, h);
  return decision;
}

RefineDecision decide_predictive(const Eigen::VectorXd& per_interval_f, const Eigen::VectorXd& h,
                                 double f_value, double f_elevated, double eps_q, double eps_f,
                                 int p, int p_max) {
  RefineDecision decision;
  decision.pieces.assign(per_interval_f.size(), 1);
  if (quadrature_error(f_value, f_elevated) > eps_q) {
    decision.increase_quadrature = true;
    return decision;
  }
  for (int i = 0; i < per_interval_f.size(); ++i) {
    const double e_i = per_interval_f[i] / h[i];
    if (e_i >= eps_f) decision.pieces[i] = predicted_pieces(e_i, eps_f, p, p_max);
  }
  ensure_nonempty(decision, per_interval_f, h);
  return decision;
}

MeshedTrajectory linear_initial_guess(const DynamicFeasibilityProblem& problem, const Mesh& mesh) {
  const int n_x = problem.system.n_x;
  const int n_u = problem.system.n_u;
  MeshedTrajectory traj = MeshedTrajectory::zeros(mesh, n_x, n_u);

  Eigen::VectorXd a0(n_x), af(n_x);
  for (int c = 0; c < n_x; ++c) {
    a0[c] = pick_boundary_value(problem.initial, problem.x_bounds, c);
    const bool terminal_pinned = problem.terminal.lower[c] == problem.terminal.upper[c];
    af[c] = terminal_pinned ? problem.terminal.lower[c] : a0[c];
  }

  const Eigen::VectorXd b = mesh.boundaries();
  const int d_x = mesh.degree_x();
  for (int i = 0; i < mesh.interval_count(); ++i) {
    for (int p = (i == 0) ? 0 : 1; p <= d_x; ++p) {
      const double s = b[i] + 0.5 * (mesh.x_basis->nodes[p] + 1.0) * mesh.interval_lengths[i];
      for (int c = 0; c < n_x; ++c) {
        const double v = a0[c] + (af[c] - a0[c]) * s;
        traj.x_nodes(i * d_x + p, c) =
            std::clamp(v, problem.x_bounds.lower[c], problem.x_bounds.upper[c]);
      }
    }
  }
  for (int c = 0; c < n_u; ++c) {
    const double v = std::clamp(0.0, problem.u_bounds.lower[c], problem.u_bounds.upper[c]);
    traj.u_nodes.col(c).setConstant(v);
  }
  return traj;
}

MeshedTrajectory jittered_initial_guess(const DynamicFeasibilityProblem& problem, const Mesh& mesh,
                                        std::uint64_t seed, double amplitude) {
  MeshedTrajectory traj = linear_initial_guess(problem, mesh);
  if (amplitude <= 0.0) return traj;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(-amplitude, amplitude);
  const int last = static_cast<int>(traj.x_nodes.rows()) - 1;
  for (int g = 1; g < last; ++g)
    for (int c = 0; c < traj.n_x(); ++c)
      traj.x_nodes(g, c) = std::clamp(traj.x_nodes(g, c) + noise(rng),
                                      problem.x_bounds.lower[c], problem.x_bounds.upper[c]);
  for (int g = 0; g < traj.u_nodes.rows(); ++g)
    for (int c = 0; c < traj.n_u(); ++c)
      traj.u_nodes(g, c) = std::clamp(traj.u_nodes(g, c) + noise(rng),
                                      problem.u_bounds.lower[c], problem.u_bounds.upper[c]);
  return traj;
}

namespace {

class StrategyLoop {
 public:
  StrategyLoop(const DynamicFeasibilityProblem& problem, const Mesh& mesh0,
               const MeshedTrajectory& initial, const StrategyConfig& config,
               const OptimizerConfig& optimizer_config, ExecMode exec)
      : problem_(problem), config_(config), exec_(exec), inner_(optimizer_config), mesh_(mesh0) {
    const auto errors = config.validate();
    if (!errors.empty()) {
      std::string msg = "invalid strategy config:";
      for (const auto& e : errors) msg += "\n  - " + e;
      throw std::invalid_argument(msg);
    }
    tp_ = std::make_unique<TranscribedProblem>(problem_, mesh_, exec_);
    z_ = project(tp_->flatten(initial), tp_->flat_lower(), tp_->flat_upper());
    f_ = tp_->objective(z_, main_);
    warmth_.valid = true;
    warmth_.f = f_;
    log_row(0, TraceEvent::optimize, f_, kNaN, kNaN, kNaN, 0.0);
  }

  SolveResult run() {
    const auto start = std::chrono::steady_clock::now();
    RunStatus status = RunStatus::success;

    while (true) {
      if (f_ <= config_.eps_f) {
        status = RunStatus::success;
        break;
      }
      if (trace_.blocks >= config_.max_outer_iterations) {
        status = RunStatus::outer_iteration_cap;
        break;
      }

      const int block = ++trace_.blocks;
      TranscriptionObjective objective(*tp_, main_);
      const double f_before = f_;
      const BlockResult result = inner_.run_block(
          objective, z_, &warmth_,
          [&](int /*m*/, double f, double theta, double alpha, double violation) {
            log_row(block, TraceEvent::optimize, f, theta, kNaN, alpha, violation);
          });
      z_ = result.z;
      f_ = result.f;
      last_theta_ = result.theta;
      const double rho = f_ / f_before;  // f_before > eps_f > 0 here
      if (!trace_.rows.empty() && trace_.rows.back().block == block)
        trace_.rows.back().rho = rho;

      if (f_ <= config_.eps_f) {
        status = RunStatus::success;
        break;
      }

      const bool exhausted =
          result.status == BlockStatus::stalled || result.status == BlockStatus::stationary;
      bool refine = false;
      switch (config_.strategy) {
        case Strategy::fixed:
          if (exhausted) {
            status = RunStatus::stalled;
          }
          break;
        case Strategy::progressive:
          refine = exhausted || rho >= config_.eps_rho;
          break;
        case Strategy::predictive:
          refine = exhausted || std::abs(result.theta) < config_.eps_theta;
          break;
      }
      if (config_.strategy == Strategy::fixed && status == RunStatus::stalled) break;
      if (!refine) continue;

      if (!apply_refinement(status)) break;
    }

    trace_.status = status;
    trace_.final_f = f_;
    trace_.final_theta = last_theta_;
    trace_.total_jacobian_evals = main_.jacobians();
    trace_.total_residual_evals = main_.residuals();
    trace_.overhead_residual_evals = overhead_.residuals();
    trace_.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    log_row(trace_.blocks, TraceEvent::terminate, f_, last_theta_, kNaN, kNaN, 0.0);

    SolveResult out{tp_->unflatten(z_), std::move(trace_)};
    return out;
  }

 private:
  // Returns false when a safety cap turns the refinement into a failure.
  bool apply_refinement(RunStatus& status) {
    const Eigen::VectorXd per_f = tp_->objective_per_interval(z_, overhead_);
    const double f_plain = per_f.sum();
    const double f_elevated = tp_->objective_elevated(z_, overhead_);

    RefineDecision decision;
    if (config_.strategy == Strategy::predictive) {
      const int p = config_.error_model_degree > 0 ? config_.error_model_degree : mesh_.degree_x();
      decision = decide_predictive(per_f, mesh_.interval_lengths, f_plain, f_elevated,
                                   config_.eps_q, config_.eps_f, p, config_.p_max);
    } else {
      decision = decide_progressive(per_f, mesh_.interval_lengths, f_plain, f_elevated,
                                    config_.eps_q, config_.eps_f);
    }

    TraceEvent event;
    Mesh new_mesh;
    if (decision.increase_quadrature) {
      new_mesh = with_quadrature(mesh_, mesh_.quadrature_degree + 1);
      event = TraceEvent::refine_q;
      ++trace_.refinements_q;
    } else {
      int total = 0;
      for (int c : decision.pieces) total += c;
      if (total > config_.max_mesh_intervals) {
        status = RunStatus::mesh_interval_cap;
        return false;
      }
      new_mesh = refine_intervals(mesh_, decision.pieces);
      event = TraceEvent::refine_h;
      ++trace_.refinements_h;
    }

    const MeshedTrajectory transferred = transfer(tp_->unflatten(z_), new_mesh, &problem_);
    mesh_ = std::move(new_mesh);
    tp_ = std::make_unique<TranscribedProblem>(problem_, mesh_, exec_);
    z_ = project(tp_->flatten(transferred), tp_->flat_lower(), tp_->flat_upper());
    inner_.reset();  // decision-vector dimension or objective changed
    f_ = tp_->objective(z_, main_);
    warmth_ = InnerSolver::Warmth{};
    warmth_.valid = true;
    warmth_.f = f_;
    last_theta_ = kNaN;
    log_row(trace_.blocks, event, f_, kNaN, kNaN, kNaN, 0.0);
    return true;
  }

  void log_row(int block, TraceEvent event, double f, double theta, double rho, double alpha,
               double violation) {
    TraceRow row;
    row.iteration = static_cast<long>(trace_.rows.size());
    row.block = block;
    row.event = event;
    row.f = f;
    row.theta = theta;
    row.rho = rho;
    row.alpha = alpha;
    row.n_h = mesh_.interval_count();
    row.n_q = mesh_.quadrature_degree;
    row.n_dof = tp_->dof();
    row.jacobian_evals = main_.jacobians();
    row.residual_evals = main_.residuals();
    row.overhead_residual_evals = overhead_.residuals();
    row.bound_violation = violation;
    trace_.rows.push_back(row);
  }

  const DynamicFeasibilityProblem& problem_;
  StrategyConfig config_;
  ExecMode exec_;
  EvalCounter main_;
  EvalCounter overhead_;
  InnerSolver inner_;
  InnerSolver::Warmth warmth_;
  Mesh mesh_;
  std::unique_ptr<TranscribedProblem> tp_;
  Eigen::VectorXd z_;
  double f_{0.0};
  double last_theta_{kNaN};
  RunTrace trace_;
};

}  // namespace

SolveResult solve_fixed(const DynamicFeasibilityProblem& problem, const Mesh& mesh,
                        const MeshedTrajectory& initial, const StrategyConfig& config,
                        const OptimizerConfig& optimizer_config, ExecMode exec) {
  StrategyConfig cfg = config;
  cfg.strategy = Strategy::fixed;
  return StrategyLoop(problem, mesh, initial, cfg, optimizer_config, exec).run();
}

SolveResult solve_progressive(const DynamicFeasibilityProblem& problem, const Mesh& mesh0,
                              const MeshedTrajectory& initial, const StrategyConfig& config,
                              const OptimizerConfig& optimizer_config, ExecMode exec) {
  StrategyConfig cfg = config;
  cfg.strategy = Strategy::progressive;
  return StrategyLoop(problem, mesh0, initial, cfg, optimizer_config, exec).run();
}

SolveResult solve_predictive(const DynamicFeasibilityProblem& problem, const Mesh& mesh0,
                             const MeshedTrajectory& initial, const StrategyConfig& config,
                             const OptimizerConfig& optimizer_config, ExecMode exec) {
  StrategyConfig cfg = config;
  cfg.strategy = Strategy::predictive;
  return StrategyLoop(problem, mesh0, initial, cfg, optimizer_config, exec).run();
}

SolveResult solve(const DynamicFeasibilityProblem& problem, const Mesh& mesh0,
                  const MeshedTrajectory& initial, const StrategyConfig& config,
                  const OptimizerConfig& optimizer_config, ExecMode exec) {
  return StrategyLoop(problem, mesh0, initial, config, optimizer_config, exec).run();
}

}  // namespace irmesh
