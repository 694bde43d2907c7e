#include "sfem/motion.hpp"

#include <cmath>

namespace sfem {

MotionSpec MotionSpec::stationary(double T) {
  MotionSpec m;
  m.kind = MotionKind::Stationary;
  m.T = T;
  m.validate();
  return m;
}

MotionSpec MotionSpec::dilation_affine(double slope, double T) {
  MotionSpec m;
  m.kind = MotionKind::Dilation;
  m.profile = RadiusProfile::Affine;
  m.slope = slope;
  m.T = T;
  m.validate();
  return m;
}

MotionSpec MotionSpec::dilation_sin(double a, double omega, double T) {
  MotionSpec m;
  m.kind = MotionKind::Dilation;
  m.profile = RadiusProfile::OnePlusASin;
  m.a = a;
  m.omega = omega;
  m.T = T;
  m.validate();
  return m;
}

MotionSpec MotionSpec::axis_stretch_sin(double a, double omega, double T) {
  MotionSpec m;
  m.kind = MotionKind::LinearDeformation;
  m.a = a;
  m.omega = omega;
  m.T = T;
  m.validate();
  return m;
}

double MotionSpec::radius(double t) const {
  switch (profile) {
    case RadiusProfile::Affine: return 1.0 + slope * t;
    case RadiusProfile::OnePlusASin: return 1.0 + a * std::sin(omega * t);
  }
  return 1.0;
}

double MotionSpec::radius_dot(double t) const {
  switch (profile) {
    case RadiusProfile::Affine: return slope;
    case RadiusProfile::OnePlusASin: return a * omega * std::cos(omega * t);
  }
  return 0.0;
}

Eigen::Matrix3d MotionSpec::deformation(double t) const {
  Eigen::Matrix3d A = Eigen::Matrix3d::Identity();
  A(2, 2) = 1.0 + a * std::sin(omega * t);
  return A;
}

Eigen::Matrix3d MotionSpec::deformation_dot(double t) const {
  Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
  A(2, 2) = a * omega * std::cos(omega * t);
  return A;
}

Vec3 MotionSpec::map(const Vec3& x, double t) const {
  switch (kind) {
    case MotionKind::Stationary: return x;
    case MotionKind::Dilation: return radius(t) * x;
    case MotionKind::LinearDeformation: return deformation(t) * x;
  }
  return x;
}

Vec3 MotionSpec::velocity(const Vec3& x, double t) const {
  switch (kind) {
    case MotionKind::Stationary: return Vec3::Zero();
    case MotionKind::Dilation: return radius_dot(t) * x;
    case MotionKind::LinearDeformation: return deformation_dot(t) * x;
  }
  return Vec3::Zero();
}

void MotionSpec::validate() const {
  if (!(T > 0.0)) throw InputError("MotionSpec: final time must be positive");
  if (kind == MotionKind::Stationary) return;
  const int samples = 512;
  if (kind == MotionKind::Dilation) {
    if (std::abs(radius(0.0) - 1.0) > 1e-14)
      throw InputError("MotionSpec: dilation requires r(0) = 1");
    for (int i = 0; i <= samples; ++i)
      if (radius(T * i / samples) < 0.5)
        throw InputError("MotionSpec: radius drops below 1/2 on [0,T]");
  } else {
    if ((deformation(0.0) - Eigen::Matrix3d::Identity()).norm() > 1e-14)
      throw InputError("MotionSpec: linear_deformation requires A(0) = I");
    for (int i = 0; i <= samples; ++i)
      if (deformation(T * i / samples).determinant() < 0.5)
        throw InputError("MotionSpec: det A drops below 1/2 on [0,T]");
  }
}

std::string MotionSpec::kind_name() const {
  switch (kind) {
    case MotionKind::Stationary: return "stationary";
    case MotionKind::Dilation: return "dilation";
    case MotionKind::LinearDeformation: return "linear_deformation";
  }
  return "?";
}

CoefficientSample coefficients_analytic(const MotionSpec& motion, const Vec3& /*point*/,
                                        const Vec3& /*e1*/, const Vec3& /*e2*/, double t) {
  if (!motion.has_analytic_coefficients())
    throw InputError("coefficients_analytic: kind has no closed form, use "
                     "coefficients_numeric");
  CoefficientSample s;
  if (motion.kind == MotionKind::Stationary) {
    s.a = Eigen::Matrix2d::Identity();
    s.b.setZero();
    s.c = 0.0;
    s.beta = 1.0;
    return s;
  }
  // Dilation: the metric scales by r(t)^2, so g^{ij} = r^{-2} delta^{ij} in
  // an orthonormal reference frame, the Christoffel difference and the
  // covariant divergence of g^{-1}(t) vanish, the velocity is purely normal
  // with tangential divergence 2 r'/r, and det g scales by r^4.
  const double r = motion.radius(t);
  const double rdot = motion.radius_dot(t);
  s.a = Eigen::Matrix2d::Identity() / (r * r);
  s.b.setZero();
  s.c = 2.0 * rdot / r;
  s.beta = r;
  return s;
}

namespace {

using Eigen::Matrix2d;
using Eigen::Vector2d;

struct Chart {
  const MotionSpec& motion;
  Vec3 p, e1, e2;

  Vec3 base(double s1, double s2) const {
    return closest_point_lift(p + s1 * e1 + s2 * e2);
  }
  Vec3 mapped(double s1, double s2, double t) const {
    return motion.map(base(s1, s2), t);
  }

  // Tangent vectors d/ds_i of s -> Psi(x(s), t) by central differences.
  std::array<Vec3, 2> tangents(double s1, double s2, double t, double d) const {
    return {(mapped(s1 + d, s2, t) - mapped(s1 - d, s2, t)) / (2.0 * d),
            (mapped(s1, s2 + d, t) - mapped(s1, s2 - d, t)) / (2.0 * d)};
  }

  Matrix2d metric(double s1, double s2, double t, double d) const {
    const auto tau = tangents(s1, s2, t, d);
    Matrix2d g;
    g(0, 0) = tau[0].dot(tau[0]);
    g(0, 1) = g(1, 0) = tau[0].dot(tau[1]);
    g(1, 1) = tau[1].dot(tau[1]);
    return g;
  }
};

// Christoffel symbols Gamma^k_{ij} from the metric and its chart derivatives.
std::array<Matrix2d, 2> christoffel(const Matrix2d& g_inv,
                                    const std::array<Matrix2d, 2>& dg) {
  std::array<Matrix2d, 2> gamma;
  for (int k = 0; k < 2; ++k) {
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        double sum = 0.0;
        for (int l = 0; l < 2; ++l)
          sum += g_inv(k, l) * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
        gamma[k](i, j) = 0.5 * sum;
      }
  }
  return gamma;
}

Matrix2d sqrt_spd(const Matrix2d& m) {
  Eigen::SelfAdjointEigenSolver<Matrix2d> es(m);
  return es.operatorSqrt();
}

} // namespace

CoefficientSample coefficients_numeric(const MotionSpec& motion, const Vec3& point,
                                       const Vec3& e1, const Vec3& e2, double t,
                                       double delta) {
  if (delta < 1e-6 || delta > 1e-2)
    throw InputError("coefficients_numeric: delta outside [1e-6, 1e-2]");
  Chart chart{motion, point, e1, e2};
  const double d = delta;

  auto metric_and_derivs = [&](double time, Matrix2d& g, std::array<Matrix2d, 2>& dg) {
    g = chart.metric(0, 0, time, d);
    dg[0] = (chart.metric(d, 0, time, d) - chart.metric(-d, 0, time, d)) / (2.0 * d);
    dg[1] = (chart.metric(0, d, time, d) - chart.metric(0, -d, time, d)) / (2.0 * d);
  };

  Matrix2d g0, gt;
  std::array<Matrix2d, 2> dg0, dgt;
  metric_and_derivs(0.0, g0, dg0);
  metric_and_derivs(t, gt, dgt);

  Eigen::SelfAdjointEigenSolver<Matrix2d> es0(g0);
  const double cond = es0.eigenvalues()(1) / std::max(es0.eigenvalues()(0), 0.0);
  if (!(cond < 1e8))
    throw ChartError("coefficients_numeric: chart metric is degenerate");

  const Matrix2d g0_inv = g0.inverse();
  const Matrix2d gt_inv = gt.inverse();
  const auto gamma0 = christoffel(g0_inv, dg0);
  const auto gammat = christoffel(gt_inv, dgt);

  // d_j g^{kj}(t) from d_j g(t) via d(g^{-1}) = -g^{-1} (dg) g^{-1}.
  std::array<Matrix2d, 2> dgt_inv;
  for (int j = 0; j < 2; ++j) dgt_inv[j] = -gt_inv * dgt[j] * gt_inv;

  // Covariant divergence with the reference (t = 0) Levi-Civita connection:
  // nabla_j g^{kj}(t) = d_j g^{kj} + Gamma(0)^k_{jl} g^{lj} + Gamma(0)^j_{jl} g^{kl}.
  Vector2d div_gt;
  for (int k = 0; k < 2; ++k) {
    double sum = 0.0;
    for (int j = 0; j < 2; ++j) {
      sum += dgt_inv[j](k, j);
      for (int l = 0; l < 2; ++l)
        sum += gamma0[k](j, l) * gt_inv(l, j) + gamma0[j](j, l) * gt_inv(k, l);
    }
    div_gt(k) = sum;
  }

  Vector2d b_chart;
  for (int k = 0; k < 2; ++k) {
    double sum = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        sum += gt_inv(i, j) * (gammat[k](i, j) - gamma0[k](i, j));
    b_chart(k) = sum + div_gt(k);
  }

  // Tangential divergence of the velocity on Gamma(t).
  const auto tau = chart.tangents(0, 0, t, d);
  auto vel = [&](double s1, double s2) {
    return motion.velocity(chart.base(s1, s2), t);
  };
  const std::array<Vec3, 2> dv = {(vel(d, 0) - vel(-d, 0)) / (2.0 * d),
                                  (vel(0, d) - vel(0, -d)) / (2.0 * d)};
  double c = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) c += gt_inv(i, j) * dv[i].dot(tau[j]);

  // Change of basis to the polar orthonormalization of the chart basis;
  // contravariant components pick up a factor g0^{1/2} per slot.
  const Matrix2d s0 = sqrt_spd(g0);

  CoefficientSample out;
  out.a = s0 * gt_inv * s0;
  out.a = 0.5 * (out.a + out.a.transpose().eval());
  out.b = s0 * b_chart;
  out.c = c;
  out.beta = std::pow(gt.determinant() / g0.determinant(), 0.25);
  return out;
}

CoefficientSample coefficients(const MotionSpec& motion, const Vec3& point,
                               const Vec3& e1, const Vec3& e2, double t) {
  if (motion.has_analytic_coefficients())
    return coefficients_analytic(motion, point, e1, e2, t);
  return coefficients_numeric(motion, point, e1, e2, t, default_chart_step(t));
}

} // namespace sfem
