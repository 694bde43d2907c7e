#include "sfem/config.hpp"

#include <fstream>

#include "sfem/state_solver.hpp"

namespace sfem {

using nlohmann::json;

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  if (j.contains("mesh")) c.mesh_level = j["mesh"].value("level", c.mesh_level);
  if (j.contains("motion")) c.motion = j["motion"];
  if (j.contains("grid")) {
    c.grid_steps = j["grid"].value("N", c.grid_steps);
    c.T = j["grid"].value("T", c.T);
  }
  c.alpha = j.value("alpha", c.alpha);
  if (j.contains("control_basis")) c.control_basis = j["control_basis"];
  if (j.contains("y0")) c.y0 = j["y0"];
  if (j.contains("y_g")) c.y_g = j["y_g"];
  if (j.contains("tolerances")) {
    c.tol = j["tolerances"].value("kkt", c.tol);
    c.max_pdas_iters = j["tolerances"].value("max_pdas_iters", c.max_pdas_iters);
    c.pdas_rho = j["tolerances"].value("pdas_rho", c.pdas_rho);
  }
  if (j.contains("output"))
    c.trajectory_output = j["output"].value("trajectory", c.trajectory_output);
  if (j.contains("study")) {
    const auto& s = j["study"];
    c.study.type = s.value("type", std::string());
    if (s.contains("levels")) c.study.levels = s["levels"].get<std::vector<int>>();
    c.study.tau_coeff = s.value("tau_coeff", c.study.tau_coeff);
    c.study.tau_power = s.value("tau_power", c.study.tau_power);
    c.study.reference_level = s.value("reference_level", c.study.reference_level);
  }
  if (c.trajectory_output != "none" && c.trajectory_output != "final" &&
      c.trajectory_output != "full")
    throw InputError("config: output.trajectory must be none|final|full");
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("config: cannot open " + path);
  json j;
  in >> j;
  return from_json(j);
}

nlohmann::ordered_json ExperimentConfig::to_json() const {
  nlohmann::ordered_json j;
  j["mesh"] = {{"level", mesh_level}};
  j["motion"] = motion;
  j["grid"] = {{"N", grid_steps}, {"T", T}};
  j["alpha"] = alpha;
  j["control_basis"] = control_basis;
  j["y0"] = y0;
  j["y_g"] = y_g;
  j["tolerances"] = {{"kkt", tol},
                     {"max_pdas_iters", max_pdas_iters},
                     {"pdas_rho", pdas_rho}};
  j["output"] = {{"trajectory", trajectory_output}};
  if (!study.type.empty()) {
    j["study"] = {{"type", study.type},
                  {"levels", study.levels},
                  {"tau_coeff", study.tau_coeff},
                  {"tau_power", study.tau_power},
                  {"reference_level", study.reference_level}};
  }
  return j;
}

std::uint64_t ExperimentConfig::hash() const {
  const std::string s = to_json().dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

MotionSpec ExperimentConfig::make_motion(double final_time) const {
  const std::string kind = motion.value("kind", std::string("stationary"));
  if (kind == "stationary") return MotionSpec::stationary(final_time);
  if (kind == "dilation") {
    const std::string profile = motion.value("profile", std::string("affine"));
    if (profile == "affine")
      return MotionSpec::dilation_affine(motion.value("slope", 0.5), final_time);
    if (profile == "one_plus_a_sin")
      return MotionSpec::dilation_sin(motion.value("a", 0.25),
                                      motion.value("omega", 1.0), final_time);
    throw InputError("config: unknown dilation profile '" + profile + "'");
  }
  if (kind == "linear_deformation") {
    const std::string profile = motion.value("profile", std::string("axis_stretch_sin"));
    if (profile == "axis_stretch_sin")
      return MotionSpec::axis_stretch_sin(motion.value("a", 0.1),
                                          motion.value("omega", 1.0), final_time);
    throw InputError("config: unknown deformation profile '" + profile + "'");
  }
  throw InputError("config: unknown motion kind '" + kind + "'");
}

std::vector<SpatialFn> ExperimentConfig::make_control_basis() const {
  std::vector<SpatialFn> basis;
  for (const auto& spec : control_basis) basis.push_back(make_spatial_function(spec));
  if (basis.empty()) throw InputError("config: empty control basis");
  return basis;
}

OcpProblem ExperimentConfig::make_ocp_problem(const ReferenceMesh& mesh,
                                              const TimeGrid& grid) const {
  OcpProblem p;
  p.mesh = &mesh;
  p.grid = grid;
  p.motion = make_motion(grid.final_time());
  p.alpha = alpha;
  p.control_basis = make_control_basis();
  p.y0 = make_spatial_function(y0);
  const bool zero_control_target =
      y_g.is_object() && y_g.value("name", std::string()) == "zero_control_trajectory";
  if (zero_control_target) {
    OperatorCache ops(mesh, p.motion, grid, CachePolicy::Streaming);
    const StateTrajectory homogeneous =
        solve_state(ops, project_initial(ops, p.y0));
    p.y_g_series = homogeneous.Y;
  } else {
    p.y_g = make_space_time_function(y_g);
  }
  return p;
}

} // namespace sfem
