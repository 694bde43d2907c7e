#include "sfem/state_solver.hpp"

#include <string>

namespace sfem {

Eigen::VectorXd project_initial(OperatorCache& ops, const SpatialFn& y0) {
  const Eigen::VectorXd load = ops.mass() * nodal_values(ops.mesh(), y0);
  Eigen::VectorXd v = ops.mass_solver().solve(load);
  if (!v.allFinite()) throw SolverError("project_initial: non-finite projection");
  return v;
}

StateTrajectory solve_state(OperatorCache& ops, const ControlTrajectory& u,
                            const std::vector<Eigen::VectorXd>& loads,
                            const Eigen::VectorXd& Y0) {
  const int n_steps = ops.grid().num_steps();
  const int m = static_cast<int>(loads.size());
  if (u.u.size() > 0 && (u.num_steps() != n_steps || u.num_controls() != m))
    throw InputError("solve_state: control dimensions do not match grid/basis");
  if (Y0.size() != ops.num_nodes())
    throw InputError("solve_state: initial vector has wrong dimension");

  StateTrajectory traj;
  traj.Y0 = Y0;
  traj.Y.reserve(n_steps);
  Eigen::VectorXd prev = Y0;
  for (int n = 1; n <= n_steps; ++n) {
    const double tau = ops.grid().tau[n - 1];
    Eigen::VectorXd rhs = ops.mass() * prev;
    if (u.u.size() > 0)
      for (int i = 0; i < m; ++i) rhs += tau * u.u(n - 1, i) * loads[i];
    Eigen::VectorXd y = ops.step(n).solver.solve(rhs);
    if (!y.allFinite())
      throw SolverError("solve_state: non-finite solution at step " + std::to_string(n));
    traj.Y.push_back(y);
    prev = std::move(y);
  }
  return traj;
}

StateTrajectory solve_state(OperatorCache& ops, const Eigen::VectorXd& Y0) {
  return solve_state(ops, ControlTrajectory{}, {}, Y0);
}

std::pair<StateTrajectory, StateTrajectory> solve_state_split(
    OperatorCache& ops, const ControlTrajectory& u,
    const std::vector<Eigen::VectorXd>& loads, const Eigen::VectorXd& Y0) {
  StateTrajectory homogeneous = solve_state(ops, Y0);
  StateTrajectory forced =
      solve_state(ops, u, loads, Eigen::VectorXd::Zero(ops.num_nodes()));
  return {std::move(homogeneous), std::move(forced)};
}

double state_residual(OperatorCache& ops, const StateTrajectory& traj,
                      const ControlTrajectory& u,
                      const std::vector<Eigen::VectorXd>& loads) {
  double worst = 0.0;
  Eigen::VectorXd prev = traj.Y0;
  for (int n = 1; n <= traj.num_steps(); ++n) {
    const double tau = ops.grid().tau[n - 1];
    Eigen::VectorXd rhs = ops.mass() * prev;
    if (u.u.size() > 0)
      for (int i = 0; i < u.num_controls(); ++i) rhs += tau * u.u(n - 1, i) * loads[i];
    const Eigen::VectorXd res = ops.step(n).system * traj.Y[n - 1] - rhs;
    worst = std::max(worst, res.norm() / std::max(1.0, rhs.norm()));
    prev = traj.Y[n - 1];
  }
  return worst;
}

} // namespace sfem
