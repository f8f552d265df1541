#include "irmesh/runio.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

// The config file acts as defaults, explicit flags override it; so it is
// applied before CLI11 writes any bound variable.
std::string prescan_config_path(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) return argv[i + 1];
    if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
  }
  return "";
}

void add_run_options(CLI::App* cmd, irmesh::RunConfig& cfg, std::string& config_path,
                     bool with_strategy) {
  cmd->add_option("--config", config_path, "key = value config file (flags override it)");
  cmd->add_option("--problem", cfg.problem,
                  "model name: cartpole, constant-rate, exponential, polynomial");
  if (with_strategy)
    cmd->add_option("--strategy", cfg.strategy, "fixed, progressive or predictive");
  cmd->add_option("--n-h,--n_h", cfg.n_h, "initial interval count (0 = strategy default)");
  cmd->add_option("--degree-x,--degree_x", cfg.degree_x, "x interpolation degree");
  cmd->add_option("--degree-u,--degree_u", cfg.degree_u, "u interpolation degree");
  cmd->add_option("--n-q,--n_q", cfg.n_q, "initial quadrature degree");
  cmd->add_option("--family", cfg.family,
                  "node family: chebyshev-lobatto, legendre-lobatto, uniform");
  cmd->add_option("--eps-f,--eps_f", cfg.eps_f, "integrated-residual tolerance");
  cmd->add_option("--eps-rho,--eps_rho", cfg.eps_rho, "convergence-rate threshold");
  cmd->add_option("--eps-theta,--eps_theta", cfg.eps_theta, "optimality threshold");
  cmd->add_option("--eps-q,--eps_q", cfg.eps_q, "quadrature-error tolerance");
  cmd->add_option("--p-max,--p_max", cfg.p_max, "predictive partition cap");
  cmd->add_option("--error-model-degree,--error_model_degree", cfg.error_model_degree,
                  "error-model polynomial degree (0 = x degree)");
  cmd->add_option("--max-outer-iterations,--max_outer_iterations", cfg.max_outer_iterations);
  cmd->add_option("--max-mesh-intervals,--max_mesh_intervals", cfg.max_mesh_intervals);
  cmd->add_option("--eps-z,--eps_z", cfg.eps_z, "binding tolerance cap");
  cmd->add_option("--armijo-sigma,--armijo_sigma", cfg.armijo_sigma);
  cmd->add_option("--backtrack-factor,--backtrack_factor", cfg.backtrack_factor);
  cmd->add_option("--alpha-init,--alpha_init", cfg.alpha_init);
  cmd->add_option("--max-backtracks,--max_backtracks", cfg.max_backtracks);
  cmd->add_option("--max-inner-iterations,--max_inner_iterations", cfg.max_inner_iterations);
  cmd->add_option("--direction", cfg.direction,
                  "projected-conjugate-gradient or projected-steepest-descent");
  cmd->add_option("--preconditioner", cfg.preconditioner,
                  "free-coordinate metric: gauss-newton-diagonal or none");
  cmd->add_option("--dynamics-form,--dynamics_form", cfg.dynamics_form,
                  "cart-pole equations: printed or literature");
  cmd->add_option_function<double>(
      "--control-bound,--control_bound",
      [&cfg](const double& v) { cfg.control_bound = v; }, "symmetric bound on u");
  cmd->add_option("--seed", cfg.seed, "initial-guess jitter seed");
  cmd->add_option("--jitter", cfg.jitter, "initial-guess jitter amplitude (0 disables)");
  cmd->add_option("--exec", cfg.exec, "interval loop execution: auto, serial, parallel");
  cmd->add_option("--out,--out-dir,--out_dir", cfg.out_dir, "output directory");
}

int apply_config_file_or_fail(irmesh::RunConfig& cfg, const std::string& path) {
  if (path.empty()) return irmesh::exit_ok;
  const auto errors = irmesh::apply_config_file(cfg, path);
  for (const auto& e : errors) std::cerr << "config error: " << e << "\n";
  return errors.empty() ? irmesh::exit_ok : irmesh::exit_config_error;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Integrated-residual mesh refinement solver for dynamic feasibility problems"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "irmesh 0.1.0");

  irmesh::RunConfig cfg;
  const std::string config_path = prescan_config_path(argc, argv);
  if (!config_path.empty()) {
    const int rc = apply_config_file_or_fail(cfg, config_path);
    if (rc != irmesh::exit_ok) return rc;
  }
  std::string config_path_sink;

  auto* solve_cmd = app.add_subcommand("solve", "solve one problem with one strategy");
  add_run_options(solve_cmd, cfg, config_path_sink, true);

  auto* compare_cmd =
      app.add_subcommand("compare", "run several strategies on one problem and tabulate");
  std::string strategies = "fixed,predictive,progressive";
  int trials = 10;
  bool parallel_runs = false;
  add_run_options(compare_cmd, cfg, config_path_sink, false);
  compare_cmd->add_option("--strategies", strategies, "comma-separated strategy list");
  compare_cmd->add_option("--trials", trials, "solve repetitions for the wall-time minimum");
  compare_cmd->add_flag("--parallel", parallel_runs, "run the strategies concurrently");

  auto* plot_cmd = app.add_subcommand("plot", "emit plot data and SVG charts for a run");
  std::string run_dir;
  plot_cmd->add_option("dir", run_dir, "run output directory")->required();

  auto* check_cmd = app.add_subcommand("check", "validate a model and its Jacobian");
  std::string check_problem = "cartpole";
  std::string check_form = "printed";
  check_cmd->add_option("--problem", check_problem, "model name");
  check_cmd->add_option("--dynamics-form,--dynamics_form", check_form);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : irmesh::exit_config_error;
  }

  if (solve_cmd->parsed()) return irmesh::run(cfg);

  if (compare_cmd->parsed()) {
    std::vector<irmesh::RunConfig> configs;
    std::stringstream ss(strategies);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) continue;
      irmesh::RunConfig c = cfg;
      c.strategy = item;
      configs.push_back(std::move(c));
    }
    return irmesh::compare(configs, cfg.out_dir, trials, parallel_runs);
  }

  if (plot_cmd->parsed()) return irmesh::emit_plots(run_dir);
  if (check_cmd->parsed()) return irmesh::check_model(check_problem, check_form);
  return irmesh::exit_config_error;
}
