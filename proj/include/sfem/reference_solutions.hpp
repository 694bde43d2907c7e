// Closed-form and ODE-based reference solutions used by the convergence
// studies. For initial value x3 the pulled-back solution stays proportional
// to x3; the amplitude obeys a scalar ODE that is integrated independently
// of the finite element pipeline.
#ifndef SFEM_REFERENCE_SOLUTIONS_HPP
#define SFEM_REFERENCE_SOLUTIONS_HPP

#include "sfem/motion.hpp"

namespace sfem {

// Stationary sphere: y(x, t) = exp(-2 t) x3.
inline double stationary_decay_factor(double t) { return std::exp(-2.0 * t); }

// Dilation with radius r(t): amplitude phi(t) of y = phi(t) x3 with
//   phi' = -(2 / r^2 + 2 r'/ r) phi,   phi(0) = 1,
// integrated by step-halved classical RK4 until successive refinements
// agree to `tol`.
double dilation_decay_factor(const MotionSpec& motion, double t, double tol = 1e-12);

} // namespace sfem

#endif
