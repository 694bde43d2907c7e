#include "sfem/reference_solutions.hpp"

#include <cmath>

#include "sfem/errors.hpp"

namespace sfem {

namespace {

double rk4_integrate(const MotionSpec& motion, double t_final, int n_steps) {
  auto rate = [&motion](double t) {
    const double r = motion.radius(t);
    return -(2.0 / (r * r) + 2.0 * motion.radius_dot(t) / r);
  };
  double phi = 1.0;
  const double h = t_final / n_steps;
  for (int i = 0; i < n_steps; ++i) {
    const double t = i * h;
    const double k1 = rate(t) * phi;
    const double k2 = rate(t + 0.5 * h) * (phi + 0.5 * h * k1);
    const double k3 = rate(t + 0.5 * h) * (phi + 0.5 * h * k2);
    const double k4 = rate(t + h) * (phi + h * k3);
    phi += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return phi;
}

} // namespace

double dilation_decay_factor(const MotionSpec& motion, double t, double tol) {
  if (motion.kind != MotionKind::Dilation)
    throw InputError("dilation_decay_factor: motion must be a dilation");
  if (t == 0.0) return 1.0;
  int n = 64;
  double coarse = rk4_integrate(motion, t, n);
  for (int k = 0; k < 16; ++k) {
    n *= 2;
    const double fine = rk4_integrate(motion, t, n);
    if (std::abs(fine - coarse) <= tol) return fine;
    coarse = fine;
  }
  throw ConvergenceError("dilation_decay_factor: RK4 halving did not reach tolerance");
}

} // namespace sfem
