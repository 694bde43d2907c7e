// Backward sweep for the discrete adjoint equation
//   (M + tau_n (K_n + Adv_n + Reac_n))^T P^n
//     = M P^{n+1} + tau_n W_n (Y^n - g^n) + pointload(mu^n),   P^{N+1} = 0,
// which is the unique solution of
//   A(Phi, P) = sum_n tau_n (Y^n - g^n, Phi^n beta(t_n)^2)_h
//             + sum_n sum_j Phi^n(x_j) mu^n_j     for all Phi in W_{h,tau}.
#ifndef SFEM_ADJOINT_SOLVER_HPP
#define SFEM_ADJOINT_SOLVER_HPP

#include "sfem/operators.hpp"
#include "sfem/trajectory.hpp"

namespace sfem {

AdjointTrajectory solve_adjoint(OperatorCache& ops, const StateTrajectory& Y,
                                const std::vector<Eigen::VectorXd>& y_g,
                                const MultiplierField& mu);

// The space-time bilinear form A(Phi, P): stiffness/advection/reaction act on
// the first argument, jumps are tested against the second.
double space_time_form(OperatorCache& ops, const std::vector<Eigen::VectorXd>& phi,
                       const std::vector<Eigen::VectorXd>& p);

// Right-hand side functional of the adjoint identity evaluated at Phi.
double adjoint_rhs_functional(OperatorCache& ops,
                              const std::vector<Eigen::VectorXd>& phi,
                              const StateTrajectory& Y,
                              const std::vector<Eigen::VectorXd>& y_g,
                              const MultiplierField& mu);

// g^n_i = alpha * u^n_i + (P^n)^T load_i; vanishes at an optimal control.
Eigen::MatrixXd reduced_gradient(const AdjointTrajectory& P,
                                 const std::vector<Eigen::VectorXd>& loads,
                                 const ControlTrajectory& u, double alpha);

} // namespace sfem

#endif
