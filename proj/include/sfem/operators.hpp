// Per-time-step operator bundles (stiffness, lower-order terms, weighted
// mass, system matrix) with direct sparse factorizations, shared between the
// state solver, the adjoint solver and the active-set loop.
#ifndef SFEM_OPERATORS_HPP
#define SFEM_OPERATORS_HPP

#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "sfem/assembly.hpp"
#include "sfem/time_grid.hpp"

namespace sfem {

// Direct sparse factorization with transpose solves. Uses a Cholesky-type
// factorization for symmetric matrices and LU otherwise.
class DirectSolver {
 public:
  void factorize(const SpMat& a, bool symmetric);
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  Eigen::VectorXd solve_transpose(const Eigen::VectorXd& b) const;

 private:
  bool symmetric_ = true;
  Eigen::SimplicialLDLT<SpMat> ldlt_;
  // transpose() is non-const in Eigen even though the solve does not mutate.
  mutable Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu_;
};

struct StepOperators {
  SpMat stiffness;
  SpMat advection;
  SpMat reaction;
  SpMat weighted_mass; // beta^2-weighted
  SpMat system;        // M + tau_n (K + Adv + Reac)
  bool symmetric = true;
  DirectSolver solver;
};

enum class CachePolicy {
  CacheAll,  // keep every factorization (re-used across active-set iterations)
  Streaming, // keep only the step most recently requested
};

class OperatorCache {
 public:
  OperatorCache(const ReferenceMesh& mesh, const MotionSpec& motion,
                const TimeGrid& grid, CachePolicy policy = CachePolicy::CacheAll,
                const AssemblyOptions& opts = {});

  const ReferenceMesh& mesh() const { return mesh_; }
  const MotionSpec& motion() const { return motion_; }
  const TimeGrid& grid() const { return grid_; }
  int num_nodes() const { return mesh_.num_nodes(); }

  const SpMat& mass() const { return mass_; }
  const DirectSolver& mass_solver();

  // Operators for interval n (1-based, matching t_n = grid.t[n]).
  const StepOperators& step(int n);

 private:
  std::shared_ptr<StepOperators> build_step(int n) const;

  const ReferenceMesh& mesh_;
  MotionSpec motion_;
  TimeGrid grid_;
  CachePolicy policy_;
  AssemblyOptions opts_;
  SpMat mass_;
  std::optional<DirectSolver> mass_solver_;
  bool shared_steps_; // motion and step size time-independent
  std::vector<std::shared_ptr<StepOperators>> cache_;
  int scratch_index_ = -1;
  std::shared_ptr<StepOperators> scratch_;
};

} // namespace sfem

#endif
