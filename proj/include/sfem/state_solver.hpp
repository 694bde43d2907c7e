// Forward dG(0) sweep for the discrete state equation
//   (M + tau_n (K_n + Adv_n + Reac_n)) Y^n = M Y^{n-1} + tau_n sum_i u_i^n load_i
// with Y^0 the L2 projection of the initial value.
#ifndef SFEM_STATE_SOLVER_HPP
#define SFEM_STATE_SOLVER_HPP

#include "sfem/operators.hpp"
#include "sfem/trajectory.hpp"

namespace sfem {

// P_h: solves M Y0 = load(y0) with the load built by nodal interpolation
// followed by mass application, so P_h I_h = I_h on X_h.
Eigen::VectorXd project_initial(OperatorCache& ops, const SpatialFn& y0);

StateTrajectory solve_state(OperatorCache& ops, const ControlTrajectory& u,
                            const std::vector<Eigen::VectorXd>& loads,
                            const Eigen::VectorXd& Y0);

// Convenience overload: u = 0.
StateTrajectory solve_state(OperatorCache& ops, const Eigen::VectorXd& Y0);

// Splitting into the homogeneous part (u = 0) and the zero-initial-data part;
// their sum is the full solution by linearity.
std::pair<StateTrajectory, StateTrajectory> solve_state_split(
    OperatorCache& ops, const ControlTrajectory& u,
    const std::vector<Eigen::VectorXd>& loads, const Eigen::VectorXd& Y0);

// Max relative step residual of the recursion; vanishes for a valid sweep.
double state_residual(OperatorCache& ops, const StateTrajectory& traj,
                      const ControlTrajectory& u,
                      const std::vector<Eigen::VectorXd>& loads);

} // namespace sfem

#endif
