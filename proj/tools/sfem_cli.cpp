// Command-line front end: mesh export, state and control-problem solves,
// convergence studies and the self-test suite.
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sfem/harness.hpp"
#include "sfem/state_solver.hpp"

namespace {

using nlohmann::ordered_json;

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path);
  if (!out) throw sfem::Error("cannot open output file " + path);
  out << content;
  if (!out) throw sfem::Error("write failed for " + path);
}

ordered_json trajectory_json(const sfem::StateTrajectory& traj,
                             const std::string& mode) {
  ordered_json j;
  if (mode == "none") return j;
  auto vec = [](const Eigen::VectorXd& v) {
    ordered_json a = ordered_json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
  };
  if (mode == "final") {
    j["final"] = vec(traj.Y.back());
  } else {
    j["initial"] = vec(traj.Y0);
    j["steps"] = ordered_json::array();
    for (const auto& y : traj.Y) j["steps"].push_back(vec(y));
  }
  return j;
}

int run_mesh(int level, const std::string& out) {
  const sfem::ReferenceMesh mesh = sfem::build_icosphere(level);
  write_output(out, mesh.to_json() + "\n");
  return 0;
}

int run_solve_state(const sfem::ExperimentConfig& cfg, const std::string& out) {
  const sfem::ReferenceMesh mesh = sfem::build_icosphere(cfg.mesh_level);
  const sfem::TimeGrid grid = sfem::TimeGrid::uniform(cfg.grid_steps, cfg.T);
  const sfem::MotionSpec motion = cfg.make_motion(cfg.T);
  sfem::OperatorCache ops(mesh, motion, grid, sfem::CachePolicy::Streaming);
  const Eigen::VectorXd y0 =
      sfem::project_initial(ops, sfem::make_spatial_function(cfg.y0));
  const sfem::StateTrajectory traj = sfem::solve_state(ops, y0);

  ordered_json j;
  j["mesh"] = {{"level", cfg.mesh_level}, {"h", mesh.h}, {"gamma_h", mesh.gamma_h}};
  j["grid"] = {{"N", grid.num_steps()}, {"T", grid.final_time()}};
  const ordered_json t = trajectory_json(traj, cfg.trajectory_output);
  if (!t.is_null() && !t.empty()) j["trajectory"] = t;
  double ymin = traj.Y0.minCoeff();
  for (const auto& y : traj.Y) ymin = std::min(ymin, y.minCoeff());
  j["min_nodal_value"] = ymin;
  write_output(out, j.dump(2) + "\n");
  return 0;
}

int run_solve_ocp(const sfem::ExperimentConfig& cfg, const std::string& out) {
  const sfem::ReferenceMesh mesh = sfem::build_icosphere(cfg.mesh_level);
  const sfem::TimeGrid grid = sfem::TimeGrid::uniform(cfg.grid_steps, cfg.T);
  const sfem::OcpProblem problem = cfg.make_ocp_problem(mesh, grid);
  sfem::OcpOptions options;
  options.tol = cfg.tol;
  options.max_pdas_iters = cfg.max_pdas_iters;
  options.pdas_rho = cfg.pdas_rho;
  const sfem::OcpSolution sol = sfem::solve_ocp(problem, options);

  ordered_json j;
  j["u"] = ordered_json::array();
  for (int n = 0; n < sol.u.num_steps(); ++n) {
    ordered_json row = ordered_json::array();
    for (int i = 0; i < sol.u.num_controls(); ++i) row.push_back(sol.u.u(n, i));
    j["u"].push_back(row);
  }
  j["residuals"] = {{"stationarity", sol.residuals.stationarity},
                    {"feasibility", sol.residuals.feasibility},
                    {"sign", sol.residuals.sign},
                    {"complementarity", sol.residuals.complementarity}};
  j["iterations"] = sol.iterations;
  j["cost"] = sol.cost;
  j["multiplier_mass"] = sfem::multiplier_mass(sol.mu);
  j["multipliers"] = ordered_json::array();
  for (const auto& [key, value] : sol.mu.entries)
    j["multipliers"].push_back({{"n", key.first}, {"j", key.second}, {"mu", value}});
  const ordered_json t = trajectory_json(sol.Y, cfg.trajectory_output);
  if (!t.is_null() && !t.empty()) j["trajectory"] = t;
  write_output(out, j.dump(2) + "\n");
  const bool certified = sol.residuals.max() <= cfg.tol;
  return certified ? 0 : 1;
}

int run_convergence(const sfem::ExperimentConfig& cfg, const std::string& out,
                    const std::string& format, bool ocp, double min_eoc) {
  const sfem::RateTable table =
      ocp ? sfem::run_ocp_convergence(cfg) : sfem::run_state_convergence(cfg);
  const sfem::ReportFormat fmt =
      format == "csv" ? sfem::ReportFormat::Csv : sfem::ReportFormat::Json;
  write_output(out, sfem::emit_report(table, fmt));
  if (min_eoc <= 0.0) return 0;
  const std::string metric = ocp ? "control_err_sq" : "max_nodal_linf";
  bool pass = true;
  for (const auto& row : table.rows)
    if (row.metric == metric && row.eoc) pass = pass && *row.eoc >= min_eoc;
  return pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Surface finite elements and state-constrained optimal control "
               "on an evolving sphere"};
  app.require_subcommand(1);

  std::string config_path, out_path, format = "json";
  int mesh_level = 2;
  int threads = 1;
  std::uint64_t seed = 20240811ull;
  double min_eoc = 0.0;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    if (needs_config)
      cmd->add_option("--config", config_path, "experiment config (JSON)")->required();
    cmd->add_option("--out", out_path, "output path ('-' for stdout)");
    cmd->add_option("--threads", threads, "worker threads (1 = deterministic)");
  };

  CLI::App* mesh_cmd = app.add_subcommand("mesh", "export an icosphere mesh as JSON");
  mesh_cmd->add_option("--level", mesh_level, "subdivision level")->required();
  mesh_cmd->add_option("--out", out_path, "output path ('-' for stdout)");

  CLI::App* state_cmd =
      app.add_subcommand("solve-state", "run one homogeneous state solve");
  add_common(state_cmd, true);

  CLI::App* ocp_cmd =
      app.add_subcommand("solve-ocp", "solve the state-constrained control problem");
  add_common(ocp_cmd, true);

  CLI::App* conv_state = app.add_subcommand(
      "convergence-state", "manufactured-solution study for the state solver");
  add_common(conv_state, true);
  conv_state->add_option("--format", format, "csv|json");
  conv_state->add_option("--min-eoc", min_eoc,
                         "nonzero: exit 1 if any L-infinity EOC falls below");

  CLI::App* conv_ocp = app.add_subcommand(
      "convergence-ocp", "fine-grid-reference study for the control problem");
  add_common(conv_ocp, true);
  conv_ocp->add_option("--format", format, "csv|json");
  conv_ocp->add_option("--min-eoc", min_eoc,
                       "nonzero: exit 1 if any control EOC falls below");

  CLI::App* selftest_cmd = app.add_subcommand("selftest", "run the invariant suite");
  selftest_cmd->add_option("--out", out_path, "report path ('-' for stdout)");
  selftest_cmd->add_option("--seed", seed, "seed for randomized test functions");
  selftest_cmd->add_option("--threads", threads, "worker threads (1 = deterministic)");

  CLI11_PARSE(app, argc, argv);
  if (threads != 1) {
    std::cerr << "note: only --threads 1 is implemented; running sequentially\n";
  }

  try {
    if (app.got_subcommand(mesh_cmd)) return run_mesh(mesh_level, out_path);
    if (app.got_subcommand(selftest_cmd)) {
      std::ostringstream report;
      const int failures = sfem::run_selftest(report, seed);
      report << (failures == 0 ? "OK" : "FAILURES: " + std::to_string(failures)) << "\n";
      write_output(out_path, report.str());
      return failures == 0 ? 0 : 1;
    }
    const sfem::ExperimentConfig cfg = sfem::ExperimentConfig::from_file(config_path);
    if (app.got_subcommand(state_cmd)) return run_solve_state(cfg, out_path);
    if (app.got_subcommand(ocp_cmd)) return run_solve_ocp(cfg, out_path);
    if (app.got_subcommand(conv_state))
      return run_convergence(cfg, out_path, format, false, min_eoc);
    if (app.got_subcommand(conv_ocp))
      return run_convergence(cfg, out_path, format, true, min_eoc);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
