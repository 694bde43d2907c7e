// Space-time objects of the dG(0) discretization: one nodal coefficient
// vector per time interval.
#ifndef SFEM_TRAJECTORY_HPP
#define SFEM_TRAJECTORY_HPP

#include <map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sfem/errors.hpp"

namespace sfem {

struct StateTrajectory {
  std::vector<Eigen::VectorXd> Y; // Y^1 .. Y^N (values on the intervals)
  Eigen::VectorXd Y0;             // initial projection

  int num_steps() const { return static_cast<int>(Y.size()); }

  bool finite() const {
    if (!Y0.allFinite()) return false;
    for (const auto& y : Y)
      if (!y.allFinite()) return false;
    return true;
  }
};

struct AdjointTrajectory {
  std::vector<Eigen::VectorXd> P; // P^1 .. P^N
  int num_steps() const { return static_cast<int>(P.size()); }
};

// Piecewise-constant controls: row n holds the value on (t_n, t_{n+1}).
struct ControlTrajectory {
  Eigen::MatrixXd u; // N x m

  int num_steps() const { return static_cast<int>(u.rows()); }
  int num_controls() const { return static_cast<int>(u.cols()); }

  static ControlTrajectory zero(int n_steps, int m) {
    return {Eigen::MatrixXd::Zero(n_steps, m)};
  }
};

// Sparse multiplier coefficients mu^n_j of the discrete measure, keyed by
// (interval n in 1..N, node j). Deterministically ordered.
struct MultiplierField {
  std::map<std::pair<int, int>, double> entries;

  double total_variation() const {
    double s = 0.0;
    for (const auto& [k, v] : entries) {
      (void)k;
      s += std::abs(v);
    }
    return s;
  }
  double max_value() const {
    double m = 0.0;
    for (const auto& [k, v] : entries) {
      (void)k;
      m = std::max(m, v);
    }
    return m;
  }
};

inline double multiplier_mass(const MultiplierField& mu) { return mu.total_variation(); }

} // namespace sfem

#endif
