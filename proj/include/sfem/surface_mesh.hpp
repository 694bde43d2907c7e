// Triangulated approximations S_h of the unit sphere: construction,
// closest-point lift, per-triangle geometry and mesh-quality parameters.
#ifndef SFEM_SURFACE_MESH_HPP
#define SFEM_SURFACE_MESH_HPP

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sfem/errors.hpp"

namespace sfem {

using Vec3 = Eigen::Vector3d;

// Flat-triangle approximation of the reference surface (unit sphere),
// nodes lying exactly on the sphere.
struct ReferenceMesh {
  std::vector<Vec3> nodes;
  std::vector<std::array<int, 3>> triangles; // consistent outward orientation
  int level = 0;                             // subdivision depth
  double h = 0.0;                            // max containing-disc diameter
  double gamma_h = 0.0;                      // min inscribed-disc diameter / h

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }
  int num_edges() const;

  double total_area() const;

  // Checks all structural invariants; throws GeometryError on violation.
  void validate() const;

  std::string to_json() const;
};

// Per-triangle quantities needed by the quadrature rule: exact area,
// P1 basis gradients, edge midpoints with their lifts to the sphere and
// an orthonormal tangent frame of the flat triangle.
struct TriangleFrame {
  int index = -1;
  double area = 0.0;
  std::array<Vec3, 3> p1_basis_gradients; // in the triangle plane
  std::array<Vec3, 3> edge_midpoints;     // midpoint k of edge (k, k+1 mod 3)
  std::array<Vec3, 3> lifted_midpoints;   // closest points on the sphere
  Vec3 e1, e2;                            // orthonormal tangent pair
  Vec3 normal;

  // Value of the P1 basis function of local vertex i at edge midpoint k.
  static double basis_at_midpoint(int i, int k) {
    return (i == k || i == (k + 1) % 3) ? 0.5 : 0.0;
  }
};

// Regular icosahedron subdivided `level` times, new vertices projected
// radially to the unit sphere. Node ordering is deterministic: parent
// vertices first, then one vertex per parent edge in lexicographic edge
// order, so level-L node indices are a prefix of level-(L+1) indices.
ReferenceMesh build_icosphere(int level);

// Closest point on the unit sphere; requires |x| >= 1/2.
Vec3 closest_point_lift(const Vec3& x);

// (h, gamma_h): h is the max over triangles of the smallest-containing-disc
// diameter (circumdiameter for acute triangles, longest edge otherwise);
// gamma_h the min over triangles of inscribed-disc diameter / h.
std::pair<double, double> mesh_parameters(const ReferenceMesh& mesh);

TriangleFrame triangle_frame(const ReferenceMesh& mesh, int tri_index);

// Smallest-containing-disc diameter of a single triangle.
double containing_disc_diameter(const Vec3& a, const Vec3& b, const Vec3& c);
// Largest-inscribed-disc diameter.
double inscribed_disc_diameter(const Vec3& a, const Vec3& b, const Vec3& c);

} // namespace sfem

#endif
