#include "sfem/functions.hpp"

#include <cmath>

#include "sfem/errors.hpp"

namespace sfem {

namespace {

double require_number(const nlohmann::json& j, const std::string& key) {
  if (!j.contains(key) || !j[key].is_number())
    throw InputError("function spec: missing numeric parameter '" + key + "'");
  return j[key].get<double>();
}

} // namespace

SpatialFn make_spatial_function(const nlohmann::json& spec) {
  if (spec.is_number()) {
    const double v = spec.get<double>();
    return [v](const Vec3&) { return v; };
  }
  if (!spec.is_object() || !spec.contains("name"))
    throw InputError("function spec: expected {\"name\": ...}");
  const std::string name = spec["name"].get<std::string>();
  if (name == "constant") {
    const double v = require_number(spec, "value");
    return [v](const Vec3&) { return v; };
  }
  if (name == "x3") return [](const Vec3& x) { return x.z(); };
  if (name == "affine_x3") {
    const double c0 = require_number(spec, "c0");
    const double c1 = require_number(spec, "c1");
    return [c0, c1](const Vec3& x) { return c0 + c1 * x.z(); };
  }
  if (name == "bump_north")
    return [](const Vec3& x) { double v = std::max(0.0, x.z()); return v * v; };
  if (name == "bump_south")
    return [](const Vec3& x) { double v = std::max(0.0, -x.z()); return v * v; };
  throw InputError("function spec: unknown spatial function '" + name + "'");
}

SpaceTimeFn make_space_time_function(const nlohmann::json& spec) {
  if (spec.is_object() && spec.contains("name") &&
      spec["name"].get<std::string>() == "decay_x3") {
    const double rate = require_number(spec, "rate");
    return [rate](const Vec3& x, double t) { return std::exp(-rate * t) * x.z(); };
  }
  SpatialFn f = make_spatial_function(spec);
  return [f](const Vec3& x, double) { return f(x); };
}

Eigen::VectorXd nodal_values(const ReferenceMesh& mesh, const SpatialFn& f) {
  Eigen::VectorXd v(mesh.num_nodes());
  for (int j = 0; j < mesh.num_nodes(); ++j) v[j] = f(mesh.nodes[j]);
  return v;
}

Eigen::VectorXd nodal_values(const ReferenceMesh& mesh, const SpaceTimeFn& f, double t) {
  Eigen::VectorXd v(mesh.num_nodes());
  for (int j = 0; j < mesh.num_nodes(); ++j) v[j] = f(mesh.nodes[j], t);
  return v;
}

} // namespace sfem
