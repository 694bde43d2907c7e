// Assembly of the P1 matrices on S_h: exact mass, and the quadrature-based
// stiffness, advection, reaction and weighted-mass matrices with motion
// coefficients sampled at lifted edge midpoints.
#ifndef SFEM_ASSEMBLY_HPP
#define SFEM_ASSEMBLY_HPP

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Sparse>

#include "sfem/functions.hpp"
#include "sfem/motion.hpp"
#include "sfem/surface_mesh.hpp"

namespace sfem {

using SpMat = Eigen::SparseMatrix<double>;

struct AssemblyOptions {
  // Rotate each triangle's orthonormal frame by the given angle (radians);
  // the assembled matrices must be invariant under this.
  const std::vector<double>* frame_rotation = nullptr;
  // Force the finite-difference coefficient pipeline even when a closed
  // form exists.
  bool force_numeric = false;
  double numeric_delta = 0.0; // 0 = default_chart_step(t)
};

// Exact integration of P1 products per flat triangle.
SpMat assemble_mass(const ReferenceMesh& mesh);

// Three-edge-midpoint rule with the diffusion tensor at lifted midpoints;
// symmetric, constants in the kernel.
SpMat assemble_stiffness(const ReferenceMesh& mesh, const MotionSpec& motion,
                         double t, const AssemblyOptions& opts = {});

// (advection, reaction) matrices by the same order-2 midpoint rule.
std::pair<SpMat, SpMat> assemble_lower_order(const ReferenceMesh& mesh,
                                             const MotionSpec& motion, double t,
                                             const AssemblyOptions& opts = {});

// beta(t)^2-weighted mass matrix (midpoint rule), used by the tracking term.
SpMat assemble_weighted_mass(const ReferenceMesh& mesh, const MotionSpec& motion,
                             double t, const AssemblyOptions& opts = {});

// Load vectors (f_i, phi_j)_h via nodal interpolation followed by exact mass
// application.
std::vector<Eigen::VectorXd> control_load(const ReferenceMesh& mesh,
                                          const std::vector<SpatialFn>& basis);

// Debug dump in MatrixMarket coordinate format.
void write_matrix_market(const SpMat& m, const std::string& path);

} // namespace sfem

#endif
