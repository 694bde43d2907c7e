#include "sfem/operators.hpp"

#include <cmath>

#include "sfem/errors.hpp"

namespace sfem {

void DirectSolver::factorize(const SpMat& a, bool symmetric) {
  symmetric_ = symmetric;
  if (symmetric_) {
    ldlt_.compute(a);
    if (ldlt_.info() != Eigen::Success)
      throw SolverError("DirectSolver: LDLT factorization failed");
  } else {
    lu_.compute(a);
    if (lu_.info() != Eigen::Success)
      throw SolverError("DirectSolver: LU factorization failed");
  }
}

Eigen::VectorXd DirectSolver::solve(const Eigen::VectorXd& b) const {
  return symmetric_ ? ldlt_.solve(b).eval() : lu_.solve(b).eval();
}

Eigen::VectorXd DirectSolver::solve_transpose(const Eigen::VectorXd& b) const {
  return symmetric_ ? ldlt_.solve(b).eval() : lu_.transpose().solve(b).eval();
}

OperatorCache::OperatorCache(const ReferenceMesh& mesh, const MotionSpec& motion,
                             const TimeGrid& grid, CachePolicy policy,
                             const AssemblyOptions& opts)
    : mesh_(mesh), motion_(motion), grid_(grid), policy_(policy), opts_(opts) {
  mass_ = assemble_mass(mesh_);
  const double tau0 = grid_.tau.front();
  bool uniform = true;
  for (double tau : grid_.tau)
    if (std::abs(tau - tau0) > 1e-14 * grid_.final_time()) uniform = false;
  shared_steps_ = motion_.is_time_independent() && uniform && !opts_.force_numeric;
  if (policy_ == CachePolicy::CacheAll)
    cache_.assign(shared_steps_ ? 1 : grid_.num_steps(), nullptr);
}

const DirectSolver& OperatorCache::mass_solver() {
  if (!mass_solver_) {
    mass_solver_.emplace();
    mass_solver_->factorize(mass_, true);
  }
  return *mass_solver_;
}

std::shared_ptr<StepOperators> OperatorCache::build_step(int n) const {
  const double t = grid_.t[n];
  const double tau = grid_.tau[n - 1];
  auto ops = std::make_shared<StepOperators>();
  ops->stiffness = assemble_stiffness(mesh_, motion_, t, opts_);
  std::tie(ops->advection, ops->reaction) = assemble_lower_order(mesh_, motion_, t, opts_);
  ops->weighted_mass = assemble_weighted_mass(mesh_, motion_, t, opts_);
  ops->symmetric = ops->advection.nonZeros() == 0;
  ops->system = mass_ + tau * (ops->stiffness + ops->advection + ops->reaction);
  ops->system.makeCompressed();
  ops->solver.factorize(ops->system, ops->symmetric);
  return ops;
}

const StepOperators& OperatorCache::step(int n) {
  if (n < 1 || n > grid_.num_steps())
    throw InputError("OperatorCache::step: interval index out of range");
  if (policy_ == CachePolicy::CacheAll) {
    const int slot = shared_steps_ ? 0 : n - 1;
    if (!cache_[slot]) cache_[slot] = build_step(n);
    return *cache_[slot];
  }
  const int key = shared_steps_ ? 0 : n;
  if (scratch_index_ != key) {
    scratch_ = build_step(n);
    scratch_index_ = key;
  }
  return *scratch_;
}

} // namespace sfem
