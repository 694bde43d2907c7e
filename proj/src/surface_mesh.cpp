#include "sfem/surface_mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace sfem {

namespace {

constexpr int kMaxLevel = 8; // memory guard

std::vector<Vec3> icosahedron_vertices() {
  const double phi = 0.5 * (1.0 + std::sqrt(5.0));
  std::vector<Vec3> v = {
      {-1, phi, 0}, {1, phi, 0},  {-1, -phi, 0}, {1, -phi, 0},
      {0, -1, phi}, {0, 1, phi},  {0, -1, -phi}, {0, 1, -phi},
      {phi, 0, -1}, {phi, 0, 1},  {-phi, 0, -1}, {-phi, 0, 1}};
  for (auto& p : v) p.normalize();
  return v;
}

std::vector<std::array<int, 3>> icosahedron_faces() {
  return {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
          {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
          {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
          {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
}

void orient_outward(const std::vector<Vec3>& nodes,
                    std::vector<std::array<int, 3>>& tris) {
  for (auto& t : tris) {
    const Vec3 n = (nodes[t[1]] - nodes[t[0]]).cross(nodes[t[2]] - nodes[t[0]]);
    const Vec3 centroid = (nodes[t[0]] + nodes[t[1]] + nodes[t[2]]) / 3.0;
    if (n.dot(centroid) < 0.0) std::swap(t[1], t[2]);
  }
}

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

} // namespace

Vec3 closest_point_lift(const Vec3& x) {
  const double r = x.norm();
  if (r < 0.5)
    throw GeometryError("closest_point_lift: point outside the tubular "
                        "neighborhood of the unit sphere (|x| < 1/2)");
  return x / r;
}

double containing_disc_diameter(const Vec3& a, const Vec3& b, const Vec3& c) {
  const double la = (b - c).norm();
  const double lb = (c - a).norm();
  const double lc = (a - b).norm();
  const double area = triangle_area(a, b, c);
  if (area <= 0.0) throw GeometryError("containing_disc_diameter: degenerate triangle");
  const double longest = std::max({la, lb, lc});
  const double s = la * la + lb * lb + lc * lc;
  // Obtuse (or right) iff the largest squared edge is at least the sum of
  // the other two; then the smallest containing disc is spanned by the
  // longest edge, otherwise it is the circumdisc.
  if (longest * longest * 2.0 >= s) return longest;
  return la * lb * lc / (2.0 * area);
}

double inscribed_disc_diameter(const Vec3& a, const Vec3& b, const Vec3& c) {
  const double la = (b - c).norm();
  const double lb = (c - a).norm();
  const double lc = (a - b).norm();
  return 4.0 * triangle_area(a, b, c) / (la + lb + lc);
}

std::pair<double, double> mesh_parameters(const ReferenceMesh& mesh) {
  double h = 0.0;
  for (const auto& t : mesh.triangles)
    h = std::max(h, containing_disc_diameter(mesh.nodes[t[0]], mesh.nodes[t[1]],
                                             mesh.nodes[t[2]]));
  double gamma = std::numeric_limits<double>::max();
  for (const auto& t : mesh.triangles)
    gamma = std::min(gamma, inscribed_disc_diameter(mesh.nodes[t[0]],
                                                    mesh.nodes[t[1]],
                                                    mesh.nodes[t[2]]) / h);
  return {h, gamma};
}

ReferenceMesh build_icosphere(int level) {
  if (level < 0) throw InputError("build_icosphere: level must be nonnegative");
  if (level > kMaxLevel)
    throw ResourceLimitError("build_icosphere: level exceeds guard (8)");

  ReferenceMesh mesh;
  mesh.nodes = icosahedron_vertices();
  mesh.triangles = icosahedron_faces();
  orient_outward(mesh.nodes, mesh.triangles);

  for (int l = 0; l < level; ++l) {
    // One new vertex per edge, numbered in lexicographic edge order so the
    // node ordering is deterministic and parent indices are preserved.
    std::map<std::pair<int, int>, int> midpoint_index;
    for (const auto& t : mesh.triangles) {
      for (int k = 0; k < 3; ++k) {
        int i = t[k], j = t[(k + 1) % 3];
        if (i > j) std::swap(i, j);
        midpoint_index.emplace(std::make_pair(i, j), -1);
      }
    }
    int next = mesh.num_nodes();
    for (auto& [edge, idx] : midpoint_index) {
      idx = next++;
      mesh.nodes.push_back(
          closest_point_lift(0.5 * (mesh.nodes[edge.first] + mesh.nodes[edge.second])));
    }
    auto mid = [&](int i, int j) {
      if (i > j) std::swap(i, j);
      return midpoint_index.at({i, j});
    };
    std::vector<std::array<int, 3>> refined;
    refined.reserve(4 * mesh.triangles.size());
    for (const auto& t : mesh.triangles) {
      const int a = t[0], b = t[1], c = t[2];
      const int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
      refined.push_back({a, ab, ca});
      refined.push_back({ab, b, bc});
      refined.push_back({ca, bc, c});
      refined.push_back({ab, bc, ca});
    }
    mesh.triangles = std::move(refined);
  }

  mesh.level = level;
  std::tie(mesh.h, mesh.gamma_h) = mesh_parameters(mesh);
  mesh.validate();
  return mesh;
}

int ReferenceMesh::num_edges() const {
  std::set<std::pair<int, int>> edges;
  for (const auto& t : triangles)
    for (int k = 0; k < 3; ++k) {
      int i = t[k], j = t[(k + 1) % 3];
      if (i > j) std::swap(i, j);
      edges.insert({i, j});
    }
  return static_cast<int>(edges.size());
}

double ReferenceMesh::total_area() const {
  double area = 0.0;
  for (const auto& t : triangles)
    area += triangle_area(nodes[t[0]], nodes[t[1]], nodes[t[2]]);
  return area;
}

void ReferenceMesh::validate() const {
  for (const auto& p : nodes)
    if (std::abs(p.norm() - 1.0) > 1e-12)
      throw GeometryError("ReferenceMesh: node not on the unit sphere");

  // Closed orientable 2-manifold: each undirected edge in exactly two
  // triangles, and in opposite directions.
  std::map<std::pair<int, int>, int> directed;
  for (const auto& t : triangles) {
    for (int k = 0; k < 3; ++k) {
      const int i = t[k], j = t[(k + 1) % 3];
      if (i == j || i < 0 || j < 0 || i >= num_nodes() || j >= num_nodes())
        throw GeometryError("ReferenceMesh: invalid triangle indices");
      if (!directed.emplace(std::make_pair(i, j), 1).second)
        throw GeometryError("ReferenceMesh: duplicated directed edge");
    }
  }
  for (const auto& [e, cnt] : directed) {
    (void)cnt;
    if (directed.find({e.second, e.first}) == directed.end())
      throw GeometryError("ReferenceMesh: edge without opposite orientation");
  }
  const int V = num_nodes(), E = num_edges(), F = num_triangles();
  if (V - E + F != 2) throw GeometryError("ReferenceMesh: Euler characteristic != 2");

  for (const auto& t : triangles)
    if (!(triangle_area(nodes[t[0]], nodes[t[1]], nodes[t[2]]) > 0.0))
      throw GeometryError("ReferenceMesh: non-positive triangle area");
}

TriangleFrame triangle_frame(const ReferenceMesh& mesh, int tri_index) {
  if (tri_index < 0 || tri_index >= mesh.num_triangles())
    throw InputError("triangle_frame: index out of range");
  const auto& t = mesh.triangles[tri_index];
  const Vec3 v0 = mesh.nodes[t[0]], v1 = mesh.nodes[t[1]], v2 = mesh.nodes[t[2]];

  TriangleFrame f;
  f.index = tri_index;
  const Vec3 cross = (v1 - v0).cross(v2 - v0);
  f.area = 0.5 * cross.norm();
  if (f.area < 1e-14) throw GeometryError("triangle_frame: degenerate triangle");
  f.normal = cross / (2.0 * f.area);
  f.e1 = (v1 - v0).normalized();
  f.e2 = f.normal.cross(f.e1);

  const std::array<Vec3, 3> v = {v0, v1, v2};
  for (int i = 0; i < 3; ++i) {
    // Gradient of the barycentric coordinate of vertex i: perpendicular to
    // the opposite edge, magnitude 1/height.
    f.p1_basis_gradients[i] = f.normal.cross(v[(i + 2) % 3] - v[(i + 1) % 3]) / (2.0 * f.area);
    f.edge_midpoints[i] = 0.5 * (v[i] + v[(i + 1) % 3]);
    f.lifted_midpoints[i] = closest_point_lift(f.edge_midpoints[i]);
  }
  return f;
}

std::string ReferenceMesh::to_json() const {
  nlohmann::ordered_json j;
  j["nodes"] = nlohmann::ordered_json::array();
  for (const auto& p : nodes) j["nodes"].push_back({p.x(), p.y(), p.z()});
  j["triangles"] = nlohmann::ordered_json::array();
  for (const auto& t : triangles) j["triangles"].push_back({t[0], t[1], t[2]});
  j["level"] = level;
  j["h"] = h;
  j["gamma_h"] = gamma_h;
  return j.dump(2);
}

} // namespace sfem
