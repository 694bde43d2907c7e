// Declarative experiment configuration (JSON) for the CLI and the
// convergence studies.
#ifndef SFEM_CONFIG_HPP
#define SFEM_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sfem/ocp_solver.hpp"

namespace sfem {

struct StudySettings {
  std::string type;           // state_mms | state_dilation | ocp_reference
  std::vector<int> levels;
  double tau_coeff = 1.0;     // tau = coeff * h^power, capped by T
  double tau_power = 2.0;
  int reference_level = -1;   // ocp_reference only
};

struct ExperimentConfig {
  int mesh_level = 2;
  nlohmann::json motion = {{"kind", "stationary"}};
  int grid_steps = 8;
  double T = 1.0;
  double alpha = 1e-2;
  nlohmann::json control_basis = nlohmann::json::array({{{"name", "constant"}, {"value", 1.0}}});
  nlohmann::json y0 = {{"name", "affine_x3"}, {"c0", 2.0}, {"c1", 1.0}};
  nlohmann::json y_g = {{"name", "constant"}, {"value", 0.0}};
  double tol = 1e-9;
  int max_pdas_iters = 50;
  double pdas_rho = 1.0;
  std::string trajectory_output = "none"; // none | final | full
  StudySettings study;

  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig from_file(const std::string& path);

  nlohmann::ordered_json to_json() const;
  // FNV-1a of the canonical serialization; ties reports to their config.
  std::uint64_t hash() const;

  MotionSpec make_motion(double final_time) const;
  std::vector<SpatialFn> make_control_basis() const;

  // Binds functions and, for y_g = {"name": "zero_control_trajectory"},
  // precomputes the desired state from the homogeneous solve.
  OcpProblem make_ocp_problem(const ReferenceMesh& mesh, const TimeGrid& grid) const;
};

} // namespace sfem

#endif
