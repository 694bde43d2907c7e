// Primal-dual active-set solver for the state-constrained discrete
// linear-quadratic problem
//   min_u  1/2 sum_n tau_n || beta(t_n)(Y^n - g^n) ||_h^2
//        + alpha/2 sum_n tau_n |u^n|^2
//   s.t.   Y = G_{h,tau}(B u),   Y^n(x_j) >= 0 for all (n, j),
// returning control, state, adjoint and multipliers with certified
// KKT residuals.
#ifndef SFEM_OCP_SOLVER_HPP
#define SFEM_OCP_SOLVER_HPP

#include <optional>

#include "sfem/adjoint_solver.hpp"
#include "sfem/state_solver.hpp"

namespace sfem {

struct OcpProblem {
  const ReferenceMesh* mesh = nullptr;
  MotionSpec motion;
  TimeGrid grid;
  double alpha = 1e-2;
  std::vector<SpatialFn> control_basis;
  SpatialFn y0;
  SpaceTimeFn y_g;                          // ignored when y_g_series is set
  std::vector<Eigen::VectorXd> y_g_series;  // optional nodal data per step

  void validate() const;
  std::vector<Eigen::VectorXd> sample_desired_state() const;
  // Residual tolerances are measured relative to this.
  double data_scale(const std::vector<Eigen::VectorXd>& g) const;
};

struct KktResiduals {
  double stationarity = 0.0;
  double feasibility = 0.0;
  double sign = 0.0;
  double complementarity = 0.0;

  double max() const {
    return std::max(std::max(stationarity, feasibility),
                    std::max(sign, complementarity));
  }
};

enum class PdasStart { Empty, AllActive };

struct OcpOptions {
  double tol = 1e-9;        // on data-scaled residuals
  int max_pdas_iters = 50;
  double pdas_rho = 1.0;    // active-set indicator weight
  PdasStart start = PdasStart::Empty;
};

struct OcpSolution {
  ControlTrajectory u;
  StateTrajectory Y;
  AdjointTrajectory P;
  MultiplierField mu;
  KktResiduals residuals;
  int iterations = 0;
  double cost = 0.0;
  double rho_used = 0.0;
  bool restarted = false;
};

OcpSolution solve_ocp(const OcpProblem& problem, const OcpOptions& options = {});

double evaluate_cost(const OcpProblem& problem, const ControlTrajectory& u);

// Recomputes the four residuals from scratch (fresh state solve, no reuse of
// active-set internals), scaled by the problem data norms.
KktResiduals kkt_residuals(const OcpProblem& problem, const OcpSolution& solution);

} // namespace sfem

#endif
