#include "sfem/adjoint_solver.hpp"

#include <string>

namespace sfem {

namespace {

// Point masses load the nodal evaluation functionals directly: entry j of
// the step-n right-hand side gets mu^n_j, without mass weighting.
Eigen::VectorXd point_load(const MultiplierField& mu, int n, int num_nodes,
                           int num_steps) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(num_nodes);
  auto it = mu.entries.lower_bound({n, 0});
  for (; it != mu.entries.end() && it->first.first == n; ++it) {
    const int j = it->first.second;
    if (j < 0 || j >= num_nodes || n < 1 || n > num_steps)
      throw InputError("solve_adjoint: multiplier index out of range");
    v[j] += it->second;
  }
  return v;
}

} // namespace

AdjointTrajectory solve_adjoint(OperatorCache& ops, const StateTrajectory& Y,
                                const std::vector<Eigen::VectorXd>& y_g,
                                const MultiplierField& mu) {
  const int n_steps = ops.grid().num_steps();
  const int J = ops.num_nodes();
  if (Y.num_steps() != n_steps || static_cast<int>(y_g.size()) != n_steps)
    throw InputError("solve_adjoint: trajectory/data sizes do not match grid");
  for (const auto& [key, val] : mu.entries) {
    (void)val;
    if (key.first < 1 || key.first > n_steps || key.second < 0 || key.second >= J)
      throw InputError("solve_adjoint: multiplier index out of range");
  }

  AdjointTrajectory adj;
  adj.P.assign(n_steps, Eigen::VectorXd());
  Eigen::VectorXd next = Eigen::VectorXd::Zero(J);
  for (int n = n_steps; n >= 1; --n) {
    const double tau = ops.grid().tau[n - 1];
    const StepOperators& step = ops.step(n);
    Eigen::VectorXd rhs = ops.mass() * next;
    rhs += tau * (step.weighted_mass * (Y.Y[n - 1] - y_g[n - 1]));
    rhs += point_load(mu, n, J, n_steps);
    Eigen::VectorXd p = step.solver.solve_transpose(rhs);
    if (!p.allFinite())
      throw SolverError("solve_adjoint: non-finite solution at step " + std::to_string(n));
    adj.P[n - 1] = p;
    next = std::move(p);
  }
  return adj;
}

double space_time_form(OperatorCache& ops, const std::vector<Eigen::VectorXd>& phi,
                       const std::vector<Eigen::VectorXd>& p) {
  const int n_steps = ops.grid().num_steps();
  if (static_cast<int>(phi.size()) != n_steps || static_cast<int>(p.size()) != n_steps)
    throw InputError("space_time_form: size mismatch");
  double value = 0.0;
  for (int n = 1; n <= n_steps; ++n) {
    const double tau = ops.grid().tau[n - 1];
    const StepOperators& step = ops.step(n);
    value += tau * p[n - 1].dot(step.stiffness * phi[n - 1]);
    value += tau * p[n - 1].dot(step.advection * phi[n - 1]);
    value += tau * p[n - 1].dot(step.reaction * phi[n - 1]);
    const Eigen::VectorXd jump =
        n == 1 ? phi[0] : Eigen::VectorXd(phi[n - 1] - phi[n - 2]);
    value += p[n - 1].dot(ops.mass() * jump);
  }
  return value;
}

double adjoint_rhs_functional(OperatorCache& ops,
                              const std::vector<Eigen::VectorXd>& phi,
                              const StateTrajectory& Y,
                              const std::vector<Eigen::VectorXd>& y_g,
                              const MultiplierField& mu) {
  const int n_steps = ops.grid().num_steps();
  double value = 0.0;
  for (int n = 1; n <= n_steps; ++n) {
    const double tau = ops.grid().tau[n - 1];
    value += tau * phi[n - 1].dot(ops.step(n).weighted_mass * (Y.Y[n - 1] - y_g[n - 1]));
  }
  for (const auto& [key, m] : mu.entries) value += phi[key.first - 1][key.second] * m;
  return value;
}

Eigen::MatrixXd reduced_gradient(const AdjointTrajectory& P,
                                 const std::vector<Eigen::VectorXd>& loads,
                                 const ControlTrajectory& u, double alpha) {
  const int n_steps = P.num_steps();
  const int m = static_cast<int>(loads.size());
  if (u.num_steps() != n_steps || u.num_controls() != m)
    throw InputError("reduced_gradient: control dimensions do not match");
  Eigen::MatrixXd g(n_steps, m);
  for (int n = 0; n < n_steps; ++n)
    for (int i = 0; i < m; ++i) g(n, i) = alpha * u.u(n, i) + P.P[n].dot(loads[i]);
  return g;
}

} // namespace sfem
