// Smooth motions of the reference sphere and the coefficients of the
// pulled-back parabolic equation: diffusion tensor a, advection b, reaction
// c (the tangential divergence of the surface velocity) and the area-element
// weight beta = (det g(t)/det g(0))^{1/4}.
#ifndef SFEM_MOTION_HPP
#define SFEM_MOTION_HPP

#include <string>

#include <Eigen/Dense>

#include "sfem/errors.hpp"
#include "sfem/surface_mesh.hpp"

namespace sfem {

enum class MotionKind { Stationary, Dilation, LinearDeformation };

enum class RadiusProfile { Affine, OnePlusASin };

// Psi(x,t) for the supported analytic families:
//   stationary          Psi = x
//   dilation            Psi = r(t) x,  r(0) = 1
//   linear_deformation  Psi = A(t) x,  A(t) = diag(1, 1, 1 + a sin(omega t))
struct MotionSpec {
  MotionKind kind = MotionKind::Stationary;
  RadiusProfile profile = RadiusProfile::Affine;
  double a = 0.0;       // amplitude (sin profiles)
  double omega = 1.0;   // frequency (sin profiles)
  double slope = 0.0;   // affine radius slope
  double T = 1.0;       // final time

  static MotionSpec stationary(double T = 1.0);
  static MotionSpec dilation_affine(double slope, double T);
  static MotionSpec dilation_sin(double a, double omega, double T);
  static MotionSpec axis_stretch_sin(double a, double omega, double T);

  // Checks Psi(.,0) = id and the embedding guards (r >= 1/2, det A >= 1/2
  // on [0,T]) for the shipped profiles.
  void validate() const;

  double radius(double t) const;
  double radius_dot(double t) const;
  Eigen::Matrix3d deformation(double t) const;
  Eigen::Matrix3d deformation_dot(double t) const;

  Vec3 map(const Vec3& x, double t) const;      // Psi(x, t)
  Vec3 velocity(const Vec3& x, double t) const; // dPsi/dt (x, t)

  bool has_analytic_coefficients() const {
    return kind == MotionKind::Stationary || kind == MotionKind::Dilation;
  }
  bool is_time_independent() const { return kind == MotionKind::Stationary; }

  std::string kind_name() const;
};

// Coefficients of the reformulated equation at one quadrature point,
// expressed in an orthonormal tangent frame.
struct CoefficientSample {
  Eigen::Matrix2d a;   // symmetric positive definite
  Eigen::Vector2d b;
  double c = 0.0;
  double beta = 1.0;
};

// Closed forms; requires kind in {stationary, dilation}.
CoefficientSample coefficients_analytic(const MotionSpec& motion, const Vec3& point,
                                        const Vec3& e1, const Vec3& e2, double t);

// Finite differences in a local closest-point chart spanned by (e1, e2).
// Components are returned w.r.t. the polar orthonormalization of the chart
// basis, which coincides with (e1, e2) up to the O(h^2) lift distortion.
CoefficientSample coefficients_numeric(const MotionSpec& motion, const Vec3& point,
                                       const Vec3& e1, const Vec3& e2, double t,
                                       double delta);

// Default central-difference step, balancing truncation and cancellation.
inline double default_chart_step(double t) { return 1e-4 * (1.0 + std::abs(t)); }

// Analytic route when available, numeric otherwise.
CoefficientSample coefficients(const MotionSpec& motion, const Vec3& point,
                               const Vec3& e1, const Vec3& e2, double t);

} // namespace sfem

#endif
