#pragma once

#include "irmesh/driver.hpp"
#include "irmesh/models.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace irmesh {

enum ExitCode : int {
  exit_ok = 0,
  exit_config_error = 2,
  exit_solve_failure = 3,
  exit_io_error = 4,
};

/// Everything a single run needs, fully defaulted to the reference
/// experiment settings. n_h = 0 picks the strategy default (fixed: 20,
/// refinement strategies: 2).
struct RunConfig {
  std::string problem = "cartpole";
  std::string strategy = "progressive";
  int n_h = 0;
  int degree_x = 3;
  int degree_u = 3;
  int n_q = 4;
  std::string family = "chebyshev-lobatto";

  double eps_f = 1.15e-1;
  double eps_rho = 0.999;
  double eps_theta = 2e-4;
  double eps_q = 1e-1;
  int p_max = 4;
  int error_model_degree = 0;
  int max_outer_iterations = 20000;
  int max_mesh_intervals = 1024;

  double eps_z = 1e-6;
  double armijo_sigma = 1e-4;
  double backtrack_factor = 0.5;
  double alpha_init = 1.0;
  int max_backtracks = 40;
  int max_inner_iterations = 10000;
  std::string direction = "projected-conjugate-gradient";
  std::string preconditioner = "gauss-newton-diagonal";

  std::string dynamics_form = "printed";
  std::optional<double> control_bound;

  std::uint64_t seed = 0;
  double jitter = 0.0;  // initial-guess jitter amplitude; 0 disables

  std::string exec = "auto";  // auto | serial | parallel
  std::string out_dir = "out";

  std::vector<std::string> validate() const;
  int resolved_n_h() const;
  StrategyConfig strategy_config() const;
  OptimizerConfig optimizer_config() const;
  ExecMode exec_mode() const;
};

/// Apply `key = value` lines from a config file ('#' starts a comment;
/// hyphens and underscores in keys are interchangeable). Returns error
/// messages, empty on success.
std::vector<std::string> apply_config_file(RunConfig& config, const std::string& path);
std::vector<std::string> apply_key_value(RunConfig& config, const std::string& key,
                                         const std::string& value);

/// Solve per config and write summary.json, iterations.csv, trajectory.csv,
/// mesh.json and manifest.json into config.out_dir.
int run(const RunConfig& config);

/// As run(), but also hands back the in-memory result (may be null).
int run_with_result(const RunConfig& config, SolveResult* out, bool write_files = true);

/// Run several configs over the same problem; writes comparison.csv and
/// convergence.csv into out_dir plus one artifact directory per run. Wall
/// times are the minimum over `trials` solves; evaluation counts come from
/// the first (they are deterministic).
int compare(const std::vector<RunConfig>& configs, const std::string& out_dir, int trials,
            bool parallel_runs = false);

/// Read iterations.csv from a run directory and emit plot-ready data plus
/// SVG renderings: per-iteration Jacobian evaluations and the log-log
/// objective convergence with refinement events marked.
int emit_plots(const std::string& run_dir);

/// `check` verb: validate a named model and test its Jacobian against
/// finite differences on 100 random points.
int check_model(const std::string& problem, const std::string& dynamics_form = "printed");

/// Serialization helpers shared by run/compare (exposed for tests).
std::string format_csv_double(double v);
void write_iterations_csv(const RunTrace& trace, const std::string& path);
void write_trajectory_csv(const MeshedTrajectory& traj, const TimeDomain& domain,
                          const std::string& path, int samples = 1000);

}  // namespace irmesh
