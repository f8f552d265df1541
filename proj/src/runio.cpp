#include "irmesh/runio.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace irmesh {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_csv_double(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string normalize_key(std::string key) {
  std::replace(key.begin(), key.end(), '-', '_');
  return key;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

bool parse_double(const std::string& s, double& out) {
  try {
    std::size_t pos = 0;
    out = std::stod(s, &pos);
    return pos == s.size();
  } catch (...) {
    return false;
  }
}

bool parse_int(const std::string& s, int& out) {
  try {
    std::size_t pos = 0;
    out = std::stoi(s, &pos);
    return pos == s.size();
  } catch (...) {
    return false;
  }
}

bool parse_u64(const std::string& s, std::uint64_t& out) {
  try {
    std::size_t pos = 0;
    out = std::stoull(s, &pos);
    return pos == s.size();
  } catch (...) {
    return false;
  }
}

}  // namespace

std::vector<std::string> RunConfig::validate() const {
  std::vector<std::string> errors;
  for (const auto& e : strategy_config().validate()) errors.push_back(e);
  try {
    parse_strategy(strategy);
  } catch (const std::exception& e) {
    errors.push_back(e.what());
  }
  try {
    parse_node_family(family);
  } catch (const std::exception& e) {
    errors.push_back(e.what());
  }
  try {
    parse_dynamics_form(dynamics_form);
  } catch (const std::exception& e) {
    errors.push_back(e.what());
  }
  if (n_h < 0) errors.push_back("n_h must be >= 1 (or 0 for the strategy default)");
  if (degree_x < 1 || degree_u < 1) errors.push_back("basis degrees must be >= 1");
  if (n_q < 1) errors.push_back("n_q must be >= 1");
  if (!(armijo_sigma > 0.0 && armijo_sigma < 1.0)) errors.push_back("armijo_sigma must be in (0, 1)");
  if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0))
    errors.push_back("backtrack_factor must be in (0, 1)");
  if (!(alpha_init > 0.0)) errors.push_back("alpha_init must be > 0");
  if (max_backtracks < 1) errors.push_back("max_backtracks must be >= 1");
  if (max_inner_iterations < 1) errors.push_back("max_inner_iterations must be >= 1");
  if (!(eps_z > 0.0)) errors.push_back("eps_z must be > 0");
  if (jitter < 0.0) errors.push_back("jitter must be >= 0");
  if (direction != "projected-conjugate-gradient" && direction != "projected-steepest-descent")
    errors.push_back("unknown direction: " + direction);
  if (preconditioner != "none" && preconditioner != "gauss-newton-diagonal")
    errors.push_back("unknown preconditioner: " + preconditioner);
  if (exec != "auto" && exec != "serial" && exec != "parallel")
    errors.push_back("exec must be auto, serial or parallel");
  if (control_bound && !(*control_bound > 0.0)) errors.push_back("control_bound must be > 0");
  return errors;
}

int RunConfig::resolved_n_h() const {
  if (n_h > 0) return n_h;
  return strategy == "fixed" ? 20 : 2;
}

StrategyConfig RunConfig::strategy_config() const {
  StrategyConfig cfg;
  try {
    cfg.strategy = parse_strategy(strategy);
  } catch (...) {
    cfg.strategy = Strategy::progressive;  // validate() reports the bad name
  }
  cfg.eps_f = eps_f;
  cfg.eps_rho = eps_rho;
  cfg.eps_theta = eps_theta;
  cfg.eps_q = eps_q;
  cfg.p_max = p_max;
  cfg.error_model_degree = error_model_degree;
  cfg.max_outer_iterations = max_outer_iterations;
  cfg.max_mesh_intervals = max_mesh_intervals;
  return cfg;
}

OptimizerConfig RunConfig::optimizer_config() const {
  OptimizerConfig cfg;
  cfg.eps_z = eps_z;
  cfg.armijo_sigma = armijo_sigma;
  cfg.backtrack_factor = backtrack_factor;
  cfg.alpha_init = alpha_init;
  cfg.max_backtracks = max_backtracks;
  cfg.max_inner_iterations = max_inner_iterations;
  cfg.direction = direction == "projected-steepest-descent"
                      ? OptimizerConfig::Direction::projected_steepest_descent
                      : OptimizerConfig::Direction::projected_conjugate_gradient;
  cfg.preconditioner = preconditioner == "none"
                           ? OptimizerConfig::Preconditioner::none
                           : OptimizerConfig::Preconditioner::gauss_newton_diagonal;
  return cfg;
}

ExecMode RunConfig::exec_mode() const {
  if (exec == "serial") return ExecMode::serial;
  if (exec == "parallel") return ExecMode::parallel;
  return ExecMode::automatic;
}

std::vector<std::string> apply_key_value(RunConfig& config, const std::string& raw_key,
                                         const std::string& value) {
  const std::string key = normalize_key(trim(raw_key));
  const std::string v = trim(value);
  std::vector<std::string> errors;
  auto bad = [&](const char* what) {
    errors.push_back("bad value for " + key + ": '" + v + "' (" + what + ")");
  };

  auto set_d = [&](double& field) {
    double parsed;
    parse_double(v, parsed) ? void(field = parsed) : bad("number expected");
  };
  auto set_i = [&](int& field) {
    int parsed;
    parse_int(v, parsed) ? void(field = parsed) : bad("integer expected");
  };

  if (key == "problem") config.problem = v;
  else if (key == "strategy") config.strategy = v;
  else if (key == "n_h") set_i(config.n_h);
  else if (key == "degree_x") set_i(config.degree_x);
  else if (key == "degree_u") set_i(config.degree_u);
  else if (key == "n_q") set_i(config.n_q);
  else if (key == "family") config.family = v;
  else if (key == "eps_f") set_d(config.eps_f);
  else if (key == "eps_rho") set_d(config.eps_rho);
  else if (key == "eps_theta") set_d(config.eps_theta);
  else if (key == "eps_q") set_d(config.eps_q);
  else if (key == "p_max") set_i(config.p_max);
  else if (key == "error_model_degree") set_i(config.error_model_degree);
  else if (key == "max_outer_iterations") set_i(config.max_outer_iterations);
  else if (key == "max_mesh_intervals") set_i(config.max_mesh_intervals);
  else if (key == "eps_z") set_d(config.eps_z);
  else if (key == "armijo_sigma") set_d(config.armijo_sigma);
  else if (key == "backtrack_factor") set_d(config.backtrack_factor);
  else if (key == "alpha_init") set_d(config.alpha_init);
  else if (key == "max_backtracks") set_i(config.max_backtracks);
  else if (key == "max_inner_iterations") set_i(config.max_inner_iterations);
  else if (key == "direction") config.direction = v;
  else if (key == "preconditioner") config.preconditioner = v;
  else if (key == "dynamics_form") config.dynamics_form = v;
  else if (key == "control_bound") {
    double parsed;
    parse_double(v, parsed) ? void(config.control_bound = parsed) : bad("number expected");
  } else if (key == "seed") {
    std::uint64_t parsed;
    parse_u64(v, parsed) ? void(config.seed = parsed) : bad("unsigned integer expected");
  } else if (key == "jitter") set_d(config.jitter);
  else if (key == "exec") config.exec = v;
  else if (key == "out_dir" || key == "out") config.out_dir = v;
  else errors.push_back("unknown config key: " + key);
  return errors;
}

std::vector<std::string> apply_config_file(RunConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) return {"cannot open config file: " + path};
  std::vector<std::string> errors;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      errors.push_back(path + ":" + std::to_string(line_no) + ": expected key = value");
      continue;
    }
    for (auto& e : apply_key_value(config, stripped.substr(0, eq), stripped.substr(eq + 1)))
      errors.push_back(path + ":" + std::to_string(line_no) + ": " + e);
  }
  return errors;
}

namespace {

const char* kIterationsHeader =
    "iteration,block,event,f,theta,rho,alpha,n_h,n_q,n_dof,"
    "jacobian_evals,residual_evals,overhead_residual_evals,bound_violation";

json config_to_json(const RunConfig& c) {
  json j;
  j["problem"] = c.problem;
  j["strategy"] = c.strategy;
  j["n_h"] = c.resolved_n_h();
  j["degree_x"] = c.degree_x;
  j["degree_u"] = c.degree_u;
  j["n_q"] = c.n_q;
  j["family"] = c.family;
  j["eps_f"] = c.eps_f;
  j["eps_rho"] = c.eps_rho;
  j["eps_theta"] = c.eps_theta;
  j["eps_q"] = c.eps_q;
  j["p_max"] = c.p_max;
  j["error_model_degree"] = c.error_model_degree;
  j["max_outer_iterations"] = c.max_outer_iterations;
  j["max_mesh_intervals"] = c.max_mesh_intervals;
  j["eps_z"] = c.eps_z;
  j["armijo_sigma"] = c.armijo_sigma;
  j["backtrack_factor"] = c.backtrack_factor;
  j["alpha_init"] = c.alpha_init;
  j["max_backtracks"] = c.max_backtracks;
  j["max_inner_iterations"] = c.max_inner_iterations;
  j["direction"] = c.direction;
  j["preconditioner"] = c.preconditioner;
  j["dynamics_form"] = c.dynamics_form;
  if (c.control_bound) j["control_bound"] = *c.control_bound;
  j["seed"] = c.seed;
  j["jitter"] = c.jitter;
  j["exec"] = c.exec;
  return j;
}

bool write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return false;
  out << content;
  return static_cast<bool>(out);
}

json mesh_to_json(const Mesh& mesh, const TimeDomain& domain) {
  json j;
  j["t0"] = domain.t0;
  j["tf"] = domain.tf;
  j["n_h"] = mesh.interval_count();
  j["n_q"] = mesh.quadrature_degree;
  j["degree_x"] = mesh.degree_x();
  j["degree_u"] = mesh.degree_u();
  j["family"] = to_string(mesh.x_basis->family);
  j["h"] = std::vector<double>(mesh.interval_lengths.data(),
                               mesh.interval_lengths.data() + mesh.interval_count());
  return j;
}

}  // namespace

void write_iterations_csv(const RunTrace& trace, const std::string& path) {
  std::ostringstream out;
  out << kIterationsHeader << "\n";
  for (const auto& row : trace.rows) {
    out << row.iteration << ',' << row.block << ',' << to_string(row.event) << ','
        << format_csv_double(row.f) << ',' << format_csv_double(row.theta) << ','
        << format_csv_double(row.rho) << ',' << format_csv_double(row.alpha) << ',' << row.n_h
        << ',' << row.n_q << ',' << row.n_dof << ',' << row.jacobian_evals << ','
        << row.residual_evals << ',' << row.overhead_residual_evals << ','
        << format_csv_double(row.bound_violation) << "\n";
  }
  if (!write_text(path, out.str())) throw std::runtime_error("cannot write " + path);
}

void write_trajectory_csv(const MeshedTrajectory& traj, const TimeDomain& domain,
                          const std::string& path, int samples) {
  std::ostringstream out;
  out << "t,kind";
  for (int c = 0; c < traj.n_x(); ++c) out << ",x" << (c + 1);
  for (int c = 0; c < traj.n_u(); ++c) out << ",u" << (c + 1);
  out << "\n";

  auto emit = [&](double s, const char* kind) {
    const double t = domain.t0 + s * domain.length();
    const Eigen::VectorXd x = traj.x_at(s);
    const Eigen::VectorXd u = traj.u_at(s);
    out << format_csv_double(t) << ',' << kind;
    for (int c = 0; c < x.size(); ++c) out << ',' << format_csv_double(x[c]);
    for (int c = 0; c < u.size(); ++c) out << ',' << format_csv_double(u[c]);
    out << "\n";
  };

  for (int j = 0; j < samples; ++j) emit(double(j) / (samples - 1), "sample");

  std::set<double> node_times;
  const Eigen::VectorXd b = traj.mesh.boundaries();
  for (int i = 0; i < traj.mesh.interval_count(); ++i) {
    for (int p = 0; p <= traj.mesh.degree_x(); ++p)
      node_times.insert(b[i] + 0.5 * (traj.mesh.x_basis->nodes[p] + 1.0) *
                                   traj.mesh.interval_lengths[i]);
    for (int p = 0; p <= traj.mesh.degree_u(); ++p)
      node_times.insert(b[i] + 0.5 * (traj.mesh.u_basis->nodes[p] + 1.0) *
                                   traj.mesh.interval_lengths[i]);
  }
  for (double s : node_times) emit(s, "node");

  if (!write_text(path, out.str())) throw std::runtime_error("cannot write " + path);
}

namespace {

json make_summary(const RunConfig& config, const SolveResult& result) {
  const RunTrace& trace = result.trace;
  json j;
  j["schema_version"] = 1;
  j["problem"] = config.problem;
  j["strategy"] = config.strategy;
  j["status"] = to_string(trace.status);
  j["success"] = trace.status == RunStatus::success;
  j["final_f"] = trace.final_f;
  j["final_theta"] = std::isnan(trace.final_theta) ? json() : json(trace.final_theta);
  j["total_jacobian_evals"] = trace.total_jacobian_evals;
  j["total_residual_evals"] = trace.total_residual_evals;
  j["overhead_residual_evals"] = trace.overhead_residual_evals;
  j["blocks"] = trace.blocks;
  j["refinements_h"] = trace.refinements_h;
  j["refinements_q"] = trace.refinements_q;
  j["iterations"] = trace.rows.size();
  j["wall_time_s"] = trace.wall_time_s;
  j["final_mesh"] = mesh_to_json(result.trajectory.mesh, TimeDomain{});  // t-range filled by caller
  j["initial_guess"] =
      config.jitter > 0.0 ? "linear-boundary-interpolation+jitter" : "linear-boundary-interpolation";
  j["config"] = config_to_json(config);
  return j;
}

int solve_config(const RunConfig& config, SolveResult& result, std::string& error) {
  NamedModel model;
  try {
    model = make_named_model(config.problem, parse_dynamics_form(config.dynamics_form),
                             config.control_bound);
  } catch (const std::exception& e) {
    error = e.what();
    return exit_config_error;
  }

  try {
    const Mesh mesh = uniform_mesh(config.resolved_n_h(), config.degree_x, config.degree_u,
                                   config.n_q, parse_node_family(config.family));
    const MeshedTrajectory guess =
        config.jitter > 0.0
            ? jittered_initial_guess(model.problem, mesh, config.seed, config.jitter)
            : linear_initial_guess(model.problem, mesh);
    result = solve(model.problem, mesh, guess, config.strategy_config(),
                   config.optimizer_config(), config.exec_mode());
  } catch (const std::exception& e) {
    error = e.what();
    return exit_solve_failure;
  }
  return exit_ok;
}

int write_run_artifacts(const RunConfig& config, const SolveResult& result) {
  const fs::path dir(config.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    std::cerr << "cannot create output directory " << dir << ": " << ec.message() << "\n";
    return exit_io_error;
  }
  try {
    write_iterations_csv(result.trace, (dir / "iterations.csv").string());

    const auto& model = make_named_model(config.problem,
                                         parse_dynamics_form(config.dynamics_form),
                                         config.control_bound);
    write_trajectory_csv(result.trajectory, model.problem.domain,
                         (dir / "trajectory.csv").string());

    json summary = make_summary(config, result);
    summary["final_mesh"] = mesh_to_json(result.trajectory.mesh, model.problem.domain);
    if (!write_text(dir / "summary.json", summary.dump(2) + "\n"))
      throw std::runtime_error("cannot write summary.json");

    if (!write_text(dir / "mesh.json",
                    mesh_to_json(result.trajectory.mesh, model.problem.domain).dump(2) + "\n"))
      throw std::runtime_error("cannot write mesh.json");

    json manifest;
    manifest["files"] = {"summary.json", "iterations.csv", "trajectory.csv", "mesh.json"};
    manifest["schema_versions"] = {{"iterations.csv", 1},
                                   {"trajectory.csv", 1},
                                   {"summary.json", 1},
                                   {"mesh.json", 1},
                                   {"comparison.csv", 1},
                                   {"convergence.csv", 1}};
    if (!write_text(dir / "manifest.json", manifest.dump(2) + "\n"))
      throw std::runtime_error("cannot write manifest.json");
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return exit_io_error;
  }
  return exit_ok;
}

}  // namespace

int run_with_result(const RunConfig& config, SolveResult* out, bool write_files) {
  const auto errors = config.validate();
  if (!errors.empty()) {
    for (const auto& e : errors) std::cerr << "config error: " << e << "\n";
    return exit_config_error;
  }

  SolveResult result;
  std::string error;
  const int rc = solve_config(config, result, error);
  if (rc != exit_ok) {
    std::cerr << "error: " << error << "\n";
    return rc;
  }

  if (write_files) {
    const int io_rc = write_run_artifacts(config, result);
    if (io_rc != exit_ok) return io_rc;
  }
  if (out) *out = std::move(result);
  return exit_ok;
}

int run(const RunConfig& config) {
  SolveResult result;
  const int rc = run_with_result(config, &result, true);
  if (rc != exit_ok) return rc;
  std::cout << "status=" << to_string(result.trace.status)
            << " f=" << format_csv_double(result.trace.final_f)
            << " jacobian_evals=" << result.trace.total_jacobian_evals
            << " n_h=" << result.trajectory.mesh.interval_count()
            << " n_q=" << result.trajectory.mesh.quadrature_degree
            << " wall_time_s=" << format_csv_double(result.trace.wall_time_s) << "\n";
  return result.success() ? exit_ok : exit_solve_failure;
}

int compare(const std::vector<RunConfig>& configs, const std::string& out_dir, int trials,
            bool parallel_runs) {
  if (configs.size() < 2) {
    std::cerr << "config error: compare needs at least two configurations\n";
    return exit_config_error;
  }
  for (const auto& c : configs) {
    if (c.problem != configs.front().problem) {
      std::cerr << "config error: compare requires a single common problem\n";
      return exit_config_error;
    }
    const auto errors = c.validate();
    if (!errors.empty()) {
      for (const auto& e : errors) std::cerr << "config error: " << e << "\n";
      return exit_config_error;
    }
  }
  if (trials < 1) {
    std::cerr << "config error: trials must be >= 1\n";
    return exit_config_error;
  }

  const fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    std::cerr << "cannot create output directory " << dir << ": " << ec.message() << "\n";
    return exit_io_error;
  }

  // Artifact runs (deterministic counts) first, optionally concurrent.
  std::vector<RunConfig> local = configs;
  std::vector<SolveResult> results(local.size());
  std::vector<int> codes(local.size(), exit_ok);
  for (std::size_t i = 0; i < local.size(); ++i) {
    local[i].out_dir =
        (dir / ("run" + std::to_string(i) + "_" + local[i].strategy)).string();
  }
  if (parallel_runs) {
    std::vector<std::future<int>> futures;
    futures.reserve(local.size());
    for (std::size_t i = 0; i < local.size(); ++i) {
      futures.push_back(std::async(std::launch::async, [&, i] {
        return run_with_result(local[i], &results[i], true);
      }));
    }
    for (std::size_t i = 0; i < local.size(); ++i) codes[i] = futures[i].get();
  } else {
    for (std::size_t i = 0; i < local.size(); ++i)
      codes[i] = run_with_result(local[i], &results[i], true);
  }

  // Timing: minimum wall time over `trials` solves per config, sequential
  // to keep measurements clean. Trial 1 is the artifact run above.
  std::vector<double> best_time(local.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < local.size(); ++i) {
    if (codes[i] != exit_ok) continue;
    best_time[i] = results[i].trace.wall_time_s;
    for (int t = 1; t < trials; ++t) {
      SolveResult repeat;
      if (run_with_result(local[i], &repeat, false) == exit_ok)
        best_time[i] = std::min(best_time[i], repeat.trace.wall_time_s);
    }
  }

  try {
    std::ostringstream cmp;
    cmp << "strategy,status,total_jacobian_evals,total_residual_evals,overhead_residual_evals,"
           "wall_time_s,final_f,n_h_final,n_q_final\n";
    for (std::size_t i = 0; i < local.size(); ++i) {
      if (codes[i] != exit_ok) {
        cmp << local[i].strategy << ",failed,,,,,,,\n";
        continue;
      }
      const auto& trace = results[i].trace;
      cmp << local[i].strategy << ',' << to_string(trace.status) << ','
          << trace.total_jacobian_evals << ',' << trace.total_residual_evals << ','
          << trace.overhead_residual_evals << ',' << format_csv_double(best_time[i]) << ','
          << format_csv_double(trace.final_f) << ','
          << results[i].trajectory.mesh.interval_count() << ','
          << results[i].trajectory.mesh.quadrature_degree << "\n";
    }
    if (!write_text(dir / "comparison.csv", cmp.str()))
      throw std::runtime_error("cannot write comparison.csv");

    std::ostringstream conv;
    conv << "run,strategy,iteration,block,event,jacobian_evals,f\n";
    for (std::size_t i = 0; i < local.size(); ++i) {
      if (codes[i] != exit_ok) continue;
      for (const auto& row : results[i].trace.rows) {
        conv << i << ',' << local[i].strategy << ',' << row.iteration << ',' << row.block << ','
             << to_string(row.event) << ',' << row.jacobian_evals << ','
             << format_csv_double(row.f) << "\n";
      }
    }
    if (!write_text(dir / "convergence.csv", conv.str()))
      throw std::runtime_error("cannot write convergence.csv");
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return exit_io_error;
  }

  for (std::size_t i = 0; i < local.size(); ++i) {
    if (codes[i] != exit_ok) return exit_solve_failure;
    if (!results[i].success()) return exit_solve_failure;
  }
  std::cout << "comparison written to " << dir.string() << "\n";
  return exit_ok;
}

namespace {

struct ParsedTrace {
  std::vector<std::map<std::string, std::string>> rows;
};

bool read_csv(const fs::path& path, ParsedTrace& out) {
  std::ifstream in(path);
  if (!in) return false;
  std::string line;
  if (!std::getline(in, line)) return false;
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) header.push_back(field);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    fields.resize(header.size());
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < header.size(); ++i) row[header[i]] = fields[i];
    out.rows.push_back(std::move(row));
  }
  return true;
}

struct SvgSeries {
  std::vector<double> x, y;
};

// Minimal vector rendering: one polyline, optional vertical event markers.
std::string svg_chart(const std::string& title, const std::string& x_label,
                      const std::string& y_label, const SvgSeries& series,
                      const std::vector<double>& marker_x, bool log_x, bool log_y) {
  const double width = 800, height = 500;
  const double ml = 70, mr = 20, mt = 40, mb = 50;

  auto tx = [&](double v) { return log_x ? std::log10(std::max(v, 1e-300)) : v; };
  auto ty = [&](double v) { return log_y ? std::log10(std::max(v, 1e-300)) : v; };

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (std::size_t i = 0; i < series.x.size(); ++i) {
    xmin = std::min(xmin, tx(series.x[i]));
    xmax = std::max(xmax, tx(series.x[i]));
    ymin = std::min(ymin, ty(series.y[i]));
    ymax = std::max(ymax, ty(series.y[i]));
  }
  if (xmax <= xmin) xmax = xmin + 1.0;
  if (ymax <= ymin) ymax = ymin + 1.0;

  auto px = [&](double v) { return ml + (tx(v) - xmin) / (xmax - xmin) * (width - ml - mr); };
  auto py = [&](double v) { return height - mb - (ty(v) - ymin) / (ymax - ymin) * (height - mt - mb); };

  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
      << "' viewBox='0 0 " << width << " " << height << "'>\n";
  svg << "<rect width='100%' height='100%' fill='white'/>\n";
  svg << "<text x='" << width / 2 << "' y='24' text-anchor='middle' font-size='16'>" << title
      << "</text>\n";
  svg << "<line x1='" << ml << "' y1='" << height - mb << "' x2='" << width - mr << "' y2='"
      << height - mb << "' stroke='black'/>\n";
  svg << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << height - mb
      << "' stroke='black'/>\n";
  svg << "<text x='" << width / 2 << "' y='" << height - 12
      << "' text-anchor='middle' font-size='12'>" << x_label << "</text>\n";
  svg << "<text x='16' y='" << height / 2 << "' text-anchor='middle' font-size='12' transform='rotate(-90 16 "
      << height / 2 << ")'>" << y_label << "</text>\n";

  char buf[64];
  auto label = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return std::string(buf);
  };
  svg << "<text x='" << ml << "' y='" << height - mb + 16 << "' font-size='10'>"
      << label(log_x ? std::pow(10, xmin) : xmin) << "</text>\n";
  svg << "<text x='" << width - mr << "' y='" << height - mb + 16
      << "' text-anchor='end' font-size='10'>" << label(log_x ? std::pow(10, xmax) : xmax)
      << "</text>\n";
  svg << "<text x='" << ml - 4 << "' y='" << height - mb << "' text-anchor='end' font-size='10'>"
      << label(log_y ? std::pow(10, ymin) : ymin) << "</text>\n";
  svg << "<text x='" << ml - 4 << "' y='" << mt + 10 << "' text-anchor='end' font-size='10'>"
      << label(log_y ? std::pow(10, ymax) : ymax) << "</text>\n";

  for (double mx : marker_x) {
    svg << "<line x1='" << px(mx) << "' y1='" << mt << "' x2='" << px(mx) << "' y2='"
        << height - mb << "' stroke='#cc3333' stroke-dasharray='4 3'/>\n";
  }

  svg << "<polyline fill='none' stroke='#2255aa' stroke-width='1.5' points='";
  for (std::size_t i = 0; i < series.x.size(); ++i)
    svg << px(series.x[i]) << "," << py(series.y[i]) << " ";
  svg << "'/>\n</svg>\n";
  return svg.str();
}

}  // namespace

int emit_plots(const std::string& run_dir) {
  const fs::path dir(run_dir);
  ParsedTrace trace;
  if (!read_csv(dir / "iterations.csv", trace)) {
    std::cerr << "cannot read " << (dir / "iterations.csv").string() << "\n";
    return exit_io_error;
  }
  if (trace.rows.empty()) {
    std::cerr << "empty trace in " << run_dir << "\n";
    return exit_io_error;
  }

  SvgSeries evals, convergence;
  std::vector<double> refine_marks;
  std::ostringstream evals_csv, conv_csv;
  evals_csv << "iteration,jacobian_evals_step,n_dof,event\n";
  conv_csv << "iteration,f,n_h,n_q,event\n";

  std::int64_t prev_jac = 0;
  for (const auto& row : trace.rows) {
    const double iter = std::stod(row.at("iteration"));
    const std::string& event = row.at("event");
    const std::int64_t jac = std::stoll(row.at("jacobian_evals"));
    const double f = row.at("f").empty() ? std::numeric_limits<double>::quiet_NaN()
                                         : std::stod(row.at("f"));

    evals_csv << row.at("iteration") << ',' << (jac - prev_jac) << ',' << row.at("n_dof") << ','
              << event << "\n";
    evals.x.push_back(iter + 1.0);
    evals.y.push_back(static_cast<double>(jac - prev_jac));
    prev_jac = jac;

    if (!std::isnan(f)) {
      conv_csv << row.at("iteration") << ',' << row.at("f") << ',' << row.at("n_h") << ','
               << row.at("n_q") << ',' << event << "\n";
      convergence.x.push_back(iter + 1.0);
      convergence.y.push_back(f);
    }
    if (event == "refine-h" || event == "refine-q") refine_marks.push_back(iter + 1.0);
  }

  try {
    if (!write_text(dir / "plot_evals.csv", evals_csv.str()) ||
        !write_text(dir / "plot_convergence.csv", conv_csv.str()))
      throw std::runtime_error("cannot write plot data files");
    if (!write_text(dir / "evals.svg",
                    svg_chart("Jacobian evaluations per iteration", "iteration",
                              "evaluations / iteration", evals, refine_marks, false, false)))
      throw std::runtime_error("cannot write evals.svg");
    if (!write_text(dir / "convergence.svg",
                    svg_chart("Objective convergence (refinements dashed)", "iteration",
                              "integrated residual f", convergence, refine_marks, true, true)))
      throw std::runtime_error("cannot write convergence.svg");
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return exit_io_error;
  }
  return exit_ok;
}

int check_model(const std::string& problem, const std::string& dynamics_form) {
  NamedModel model;
  try {
    model = make_named_model(problem, parse_dynamics_form(dynamics_form));
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return exit_config_error;
  }

  const ValidationReport report = validate(model.problem);
  for (const auto& v : report.violations) std::cout << "violation: " << v << "\n";
  std::cout << "validate: " << (report.ok() ? "ok" : "failed") << "\n";

  std::mt19937_64 rng(12345);
  auto sample_range = [&rng](double lo, double hi, double fallback) {
    const double a = std::isfinite(lo) ? lo : -fallback;
    const double b = std::isfinite(hi) ? hi : fallback;
    std::uniform_real_distribution<double> dist(a, b);
    return dist(rng);
  };

  std::vector<JacobianSample> samples;
  const auto& sys = model.problem.system;
  for (int s = 0; s < 100; ++s) {
    JacobianSample sample;
    sample.xdot.resize(sys.n_x);
    sample.x.resize(sys.n_x);
    sample.u.resize(sys.n_u);
    for (int c = 0; c < sys.n_x; ++c) {
      sample.xdot[c] = sample_range(-10.0, 10.0, 10.0);
      sample.x[c] = sample_range(model.problem.x_bounds.lower[c],
                                 model.problem.x_bounds.upper[c], 5.0);
    }
    for (int c = 0; c < sys.n_u; ++c)
      sample.u[c] = sample_range(model.problem.u_bounds.lower[c],
                                 model.problem.u_bounds.upper[c], 20.0);
    samples.push_back(std::move(sample));
  }

  const JacobianCheckResult check = check_jacobian(sys, samples, 1e-6);
  std::cout << "jacobian check: " << (check.passed ? "pass" : "FAIL")
            << " max_rel_error=" << format_csv_double(check.max_rel_error) << "\n";

  return (report.ok() && check.passed) ? exit_ok : exit_solve_failure;
}

}  // namespace irmesh
