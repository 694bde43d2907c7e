// Named analytic functions on the reference sphere, used for initial data,
// desired states and control basis functions. Everything is referenced by
// name + parameters so experiment configs stay declarative.
#ifndef SFEM_FUNCTIONS_HPP
#define SFEM_FUNCTIONS_HPP

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "sfem/surface_mesh.hpp"

namespace sfem {

using SpatialFn = std::function<double(const Vec3&)>;
using SpaceTimeFn = std::function<double(const Vec3&, double)>;

// Supported names:
//   constant   {"value": v}
//   x3
//   affine_x3  {"c0": a, "c1": b}        a + b * x3
//   bump_north                           max(0, x3)^2
//   bump_south                           max(0, -x3)^2
SpatialFn make_spatial_function(const nlohmann::json& spec);

// Spatial names above (time-independent) plus
//   decay_x3   {"rate": r}               exp(-r t) * x3
SpaceTimeFn make_space_time_function(const nlohmann::json& spec);

Eigen::VectorXd nodal_values(const ReferenceMesh& mesh, const SpatialFn& f);
Eigen::VectorXd nodal_values(const ReferenceMesh& mesh, const SpaceTimeFn& f, double t);

} // namespace sfem

#endif
