#include "sfem/assembly.hpp"

#include <cmath>
#include <fstream>

namespace sfem {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

struct FramePair {
  Vec3 e1, e2;
};

FramePair effective_frame(const TriangleFrame& f, const AssemblyOptions& opts) {
  if (!opts.frame_rotation) return {f.e1, f.e2};
  const double th = (*opts.frame_rotation)[f.index];
  const double c = std::cos(th), s = std::sin(th);
  return {c * f.e1 + s * f.e2, -s * f.e1 + c * f.e2};
}

CoefficientSample sample_coefficients(const MotionSpec& motion, const Vec3& point,
                                      const FramePair& fr, double t,
                                      const AssemblyOptions& opts) {
  if (opts.force_numeric || !motion.has_analytic_coefficients()) {
    const double d = opts.numeric_delta > 0.0 ? opts.numeric_delta : default_chart_step(t);
    return coefficients_numeric(motion, point, fr.e1, fr.e2, t, d);
  }
  return coefficients_analytic(motion, point, fr.e1, fr.e2, t);
}

SpMat from_triplets(int n, const Triplets& trip) {
  SpMat m(n, n);
  m.setFromTriplets(trip.begin(), trip.end());
  m.makeCompressed();
  return m;
}

} // namespace

SpMat assemble_mass(const ReferenceMesh& mesh) {
  Triplets trip;
  trip.reserve(9 * mesh.num_triangles());
  for (int ti = 0; ti < mesh.num_triangles(); ++ti) {
    const auto& t = mesh.triangles[ti];
    const Vec3& v0 = mesh.nodes[t[0]];
    const double area =
        0.5 * (mesh.nodes[t[1]] - v0).cross(mesh.nodes[t[2]] - v0).norm();
    const double diag = area / 6.0, off = area / 12.0;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        trip.emplace_back(t[r], t[c], r == c ? diag : off);
  }
  return from_triplets(mesh.num_nodes(), trip);
}

SpMat assemble_stiffness(const ReferenceMesh& mesh, const MotionSpec& motion,
                         double t, const AssemblyOptions& opts) {
  Triplets trip;
  trip.reserve(9 * mesh.num_triangles());
  for (int ti = 0; ti < mesh.num_triangles(); ++ti) {
    const TriangleFrame f = triangle_frame(mesh, ti);
    const FramePair fr = effective_frame(f, opts);
    // Frame components of the (constant) P1 gradients.
    Eigen::Matrix<double, 2, 3> grad;
    for (int i = 0; i < 3; ++i) {
      grad(0, i) = f.p1_basis_gradients[i].dot(fr.e1);
      grad(1, i) = f.p1_basis_gradients[i].dot(fr.e2);
    }
    Eigen::Matrix2d a_mean = Eigen::Matrix2d::Zero();
    for (int k = 0; k < 3; ++k)
      a_mean += sample_coefficients(motion, f.lifted_midpoints[k], fr, t, opts).a;
    a_mean /= 3.0;
    const Eigen::Matrix3d ke = f.area * grad.transpose() * a_mean * grad;
    const auto& tri = mesh.triangles[ti];
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) trip.emplace_back(tri[r], tri[c], ke(r, c));
  }
  return from_triplets(mesh.num_nodes(), trip);
}

std::pair<SpMat, SpMat> assemble_lower_order(const ReferenceMesh& mesh,
                                             const MotionSpec& motion, double t,
                                             const AssemblyOptions& opts) {
  Triplets adv_trip, reac_trip;
  adv_trip.reserve(9 * mesh.num_triangles());
  reac_trip.reserve(9 * mesh.num_triangles());
  for (int ti = 0; ti < mesh.num_triangles(); ++ti) {
    const TriangleFrame f = triangle_frame(mesh, ti);
    const FramePair fr = effective_frame(f, opts);
    Eigen::Matrix<double, 2, 3> grad;
    for (int i = 0; i < 3; ++i) {
      grad(0, i) = f.p1_basis_gradients[i].dot(fr.e1);
      grad(1, i) = f.p1_basis_gradients[i].dot(fr.e2);
    }
    const double w = f.area / 3.0;
    const auto& tri = mesh.triangles[ti];
    for (int k = 0; k < 3; ++k) {
      const CoefficientSample s =
          sample_coefficients(motion, f.lifted_midpoints[k], fr, t, opts);
      for (int r = 0; r < 3; ++r) {
        const double phi_r = TriangleFrame::basis_at_midpoint(r, k);
        if (phi_r == 0.0) continue;
        for (int c = 0; c < 3; ++c) {
          const double bdg = s.b.dot(grad.col(c));
          if (bdg != 0.0) adv_trip.emplace_back(tri[r], tri[c], w * phi_r * bdg);
          const double phi_c = TriangleFrame::basis_at_midpoint(c, k);
          if (phi_c != 0.0 && s.c != 0.0)
            reac_trip.emplace_back(tri[r], tri[c], w * phi_r * s.c * phi_c);
        }
      }
    }
  }
  return {from_triplets(mesh.num_nodes(), adv_trip),
          from_triplets(mesh.num_nodes(), reac_trip)};
}

SpMat assemble_weighted_mass(const ReferenceMesh& mesh, const MotionSpec& motion,
                             double t, const AssemblyOptions& opts) {
  Triplets trip;
  trip.reserve(9 * mesh.num_triangles());
  for (int ti = 0; ti < mesh.num_triangles(); ++ti) {
    const TriangleFrame f = triangle_frame(mesh, ti);
    const FramePair fr = effective_frame(f, opts);
    const double w = f.area / 3.0;
    const auto& tri = mesh.triangles[ti];
    for (int k = 0; k < 3; ++k) {
      const CoefficientSample s =
          sample_coefficients(motion, f.lifted_midpoints[k], fr, t, opts);
      const double b2 = s.beta * s.beta;
      for (int r = 0; r < 3; ++r) {
        const double phi_r = TriangleFrame::basis_at_midpoint(r, k);
        if (phi_r == 0.0) continue;
        for (int c = 0; c < 3; ++c) {
          const double phi_c = TriangleFrame::basis_at_midpoint(c, k);
          if (phi_c != 0.0) trip.emplace_back(tri[r], tri[c], w * b2 * phi_r * phi_c);
        }
      }
    }
  }
  return from_triplets(mesh.num_nodes(), trip);
}

std::vector<Eigen::VectorXd> control_load(const ReferenceMesh& mesh,
                                          const std::vector<SpatialFn>& basis) {
  const SpMat m = assemble_mass(mesh);
  std::vector<Eigen::VectorXd> loads;
  loads.reserve(basis.size());
  for (const auto& f : basis) loads.push_back(m * nodal_values(mesh, f));
  return loads;
}

void write_matrix_market(const SpMat& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("write_matrix_market: cannot open " + path);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.rows() << " " << m.cols() << " " << m.nonZeros() << "\n";
  out.precision(17);
  for (int k = 0; k < m.outerSize(); ++k)
    for (SpMat::InnerIterator it(m, k); it; ++it)
      out << it.row() + 1 << " " << it.col() + 1 << " " << it.value() << "\n";
  if (!out) throw Error("write_matrix_market: write failed for " + path);
}

} // namespace sfem
