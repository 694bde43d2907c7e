#ifndef SFEM_TIME_GRID_HPP
#define SFEM_TIME_GRID_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "sfem/errors.hpp"

namespace sfem {

// Partition 0 = t_0 < t_1 < ... < t_N = T with step sizes tau_n = t_n - t_{n-1}.
struct TimeGrid {
  std::vector<double> t;   // N+1 times
  std::vector<double> tau; // N steps
  double tau_max = 0.0;

  int num_steps() const { return static_cast<int>(tau.size()); }
  double final_time() const { return t.empty() ? 0.0 : t.back(); }

  static TimeGrid uniform(int n_steps, double final_time) {
    if (n_steps < 1 || !(final_time > 0.0))
      throw InputError("TimeGrid::uniform: need n_steps >= 1 and T > 0");
    TimeGrid g;
    g.t.resize(n_steps + 1);
    g.tau.resize(n_steps);
    for (int n = 0; n <= n_steps; ++n)
      g.t[n] = final_time * static_cast<double>(n) / n_steps;
    g.t[n_steps] = final_time;
    for (int n = 0; n < n_steps; ++n) g.tau[n] = g.t[n + 1] - g.t[n];
    g.tau_max = *std::max_element(g.tau.begin(), g.tau.end());
    g.validate();
    return g;
  }

  // Uniform grid with step size close to tau_target = C * h^p, capped by T.
  static TimeGrid from_step_rule(double final_time, double h, double coeff = 1.0,
                                 double power = 2.0) {
    double target = coeff * std::pow(h, power);
    int n = std::max(1, static_cast<int>(std::ceil(final_time / target - 1e-12)));
    return uniform(n, final_time);
  }

  void validate() const {
    if (t.size() != tau.size() + 1 || tau.empty())
      throw InputError("TimeGrid: inconsistent sizes");
    if (t.front() != 0.0) throw InputError("TimeGrid: t_0 must be 0");
    for (std::size_t n = 0; n < tau.size(); ++n) {
      if (!(tau[n] > 0.0) || std::abs(t[n + 1] - t[n] - tau[n]) > 1e-14 * t.back())
        throw InputError("TimeGrid: steps must be positive and consistent");
    }
  }
};

} // namespace sfem

#endif
