#include "sfem/ocp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <Eigen/SVD>

namespace sfem {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

using ActiveSet = std::vector<std::pair<int, int>>; // (interval n, node j), sorted

// The sensitivity block structure: column a = (k-1)*m + i is the state
// response to a unit control on interval k in basis direction i. Responses
// are advanced step by step; storing the full space-time matrix is avoided.
struct ReducedQuadratic {
  MatrixXd hessian;   // S^T W S + alpha diag(tau)
  VectorXd linear;    // -S^T W (ycheck - g)
  Eigen::LLT<MatrixXd> hessian_llt;
};

class PdasWorkspace {
 public:
  PdasWorkspace(const OcpProblem& problem)
      : problem_(problem),
        ops_(*problem.mesh, problem.motion, problem.grid, CachePolicy::CacheAll),
        n_steps_(problem.grid.num_steps()),
        m_(static_cast<int>(problem.control_basis.size())),
        J_(problem.mesh->num_nodes()) {
    loads_ = control_load(*problem_.mesh, problem_.control_basis);
    Y0_ = project_initial(ops_, problem_.y0);
    g_ = problem_.sample_desired_state();
    scale_ = problem_.data_scale(g_);
    ycheck_ = solve_state(ops_, Y0_);
    build_reduced_quadratic();
    u_unc_ = red_.hessian_llt.solve(red_.linear);
    y_unc_ = solve_state(ops_, control_from_vector(u_unc_), loads_, Y0_);
  }

  OperatorCache& ops() { return ops_; }
  int n_steps() const { return n_steps_; }
  int num_controls() const { return m_; }
  int num_nodes() const { return J_; }
  double scale() const { return scale_; }
  const std::vector<VectorXd>& desired_state() const { return g_; }
  const std::vector<VectorXd>& loads() const { return loads_; }
  const StateTrajectory& unconstrained_state() const { return y_unc_; }

  ControlTrajectory control_from_vector(const VectorXd& u_flat) const {
    ControlTrajectory u;
    u.u.resize(n_steps_, m_);
    for (int k = 0; k < n_steps_; ++k)
      for (int i = 0; i < m_; ++i) u.u(k, i) = u_flat[k * m_ + i];
    return u;
  }

  // Solves the equality-constrained subproblem for a fixed active set:
  // minimize the reduced quadratic subject to Y(u)|_A = 0 with a minimum-norm
  // multiplier when the active constraints are linearly dependent (which is
  // unavoidable: any spatially symmetric instance produces dependent rows).
  void solve_subproblem(const ActiveSet& active, VectorXd& u_flat,
                        StateTrajectory& y, MultiplierField& mu) {
    mu.entries.clear();
    if (active.empty()) {
      u_flat = u_unc_;
      y = y_unc_;
      return;
    }
    const MatrixXd constraint_rows = harvest_sensitivity_rows(active);
    // G = C L^{-T}, so that C H^{-1} C^T = G G^T.
    const MatrixXd l = red_.hessian_llt.matrixL();
    MatrixXd g_t = constraint_rows.transpose();
    l.triangularView<Eigen::Lower>().solveInPlace(g_t); // g_t = L^{-1} C^T
    VectorXd rhs(active.size());
    for (std::size_t r = 0; r < active.size(); ++r)
      rhs[r] = y_unc_.Y[active[r].first - 1][active[r].second];

    Eigen::BDCSVD<MatrixXd> svd(g_t.transpose(), Eigen::ComputeThinU);
    const VectorXd& sv = svd.singularValues();
    const double cutoff = sv.size() > 0 ? sv[0] * 1e-12 : 0.0;
    VectorXd z = svd.matrixU().transpose() * rhs;
    VectorXd z_scaled = VectorXd::Zero(z.size());
    int rank = 0;
    for (int i = 0; i < z.size(); ++i)
      if (sv[i] > cutoff && sv[i] > 0.0) {
        z_scaled[i] = z[i] / (sv[i] * sv[i]);
        ++rank;
      }
    // Consistency of the rank-deficient system: the residual must vanish,
    // otherwise the active constraints cannot be met by any control.
    VectorXd reachable = VectorXd::Zero(rhs.size());
    for (int i = 0; i < rank; ++i)
      reachable += svd.matrixU().col(i) * z[i];
    const double infeas = (rhs - reachable).lpNorm<Eigen::Infinity>();
    if (infeas > 1e-8 * std::max(1.0, rhs.lpNorm<Eigen::Infinity>())) {
      std::ostringstream msg;
      msg << "solve_ocp: active-set subproblem infeasible (|A| = " << active.size()
          << ", rank = " << rank << ", residual = " << infeas << ")";
      throw DegenerateProblemError(msg.str());
    }
    const VectorXd mu_vec = svd.matrixU() * z_scaled;

    VectorXd w = g_t * mu_vec; // G^T mu = L^{-1} C^T mu
    l.transpose().triangularView<Eigen::Upper>().solveInPlace(w);
    u_flat = u_unc_ - w;
    y = solve_state(ops_, control_from_vector(u_flat), loads_, Y0_);
    for (std::size_t r = 0; r < active.size(); ++r)
      mu.entries[active[r]] = mu_vec[r];
  }

  ActiveSet update_active_set(const StateTrajectory& y, const MultiplierField& mu,
                              double rho) const {
    ActiveSet next;
    for (int n = 1; n <= n_steps_; ++n) {
      const VectorXd& yn = y.Y[n - 1];
      auto it = mu.entries.lower_bound({n, 0});
      for (int j = 0; j < J_; ++j) {
        double mu_nj = 0.0;
        while (it != mu.entries.end() && it->first.first == n && it->first.second < j)
          ++it;
        if (it != mu.entries.end() && it->first == std::make_pair(n, j))
          mu_nj = it->second;
        if (-mu_nj - rho * yn[j] > 0.0) next.emplace_back(n, j);
      }
    }
    return next;
  }

  KktResiduals residuals_with_cache(const ControlTrajectory& u,
                                    const AdjointTrajectory& p,
                                    const MultiplierField& mu) {
    return compute_kkt_residuals(ops_, problem_, loads_, Y0_, scale_, u, p, mu);
  }

  const VectorXd& initial_value() const { return Y0_; }

  static KktResiduals compute_kkt_residuals(
      OperatorCache& ops, const OcpProblem& problem,
      const std::vector<VectorXd>& loads, const VectorXd& Y0, double scale,
      const ControlTrajectory& u, const AdjointTrajectory& p,
      const MultiplierField& mu) {
    const StateTrajectory y = solve_state(ops, u, loads, Y0);
    KktResiduals res;
    for (int n = 0; n < u.num_steps(); ++n)
      for (int i = 0; i < u.num_controls(); ++i)
        res.stationarity = std::max(
            res.stationarity,
            std::abs(problem.alpha * u.u(n, i) + p.P[n].dot(loads[i])));
    double ymin = 0.0;
    for (const auto& yn : y.Y) ymin = std::min(ymin, yn.minCoeff());
    res.feasibility = -ymin;
    res.sign = std::max(0.0, mu.max_value());
    double comp = 0.0;
    for (const auto& [key, value] : mu.entries)
      comp += y.Y[key.first - 1][key.second] * value;
    res.complementarity = std::abs(comp);
    res.stationarity /= scale;
    res.feasibility /= scale;
    res.sign /= scale;
    res.complementarity /= scale;
    return res;
  }

 private:
  void build_reduced_quadratic() {
    const int dim = n_steps_ * m_;
    red_.hessian = MatrixXd::Zero(dim, dim);
    red_.linear = VectorXd::Zero(dim);
    // Simultaneous forward sweep of all unit-control responses; response to
    // a control on interval k starts at step k, so the block of live columns
    // grows with n.
    MatrixXd live(J_, dim);
    for (int n = 1; n <= n_steps_; ++n) {
      const double tau = ops_.grid().tau[n - 1];
      const StepOperators& step = ops_.step(n);
      const int cols = n * m_;
      MatrixXd rhs(J_, cols);
      if (n > 1) rhs.leftCols((n - 1) * m_) = ops_.mass() * live.leftCols((n - 1) * m_);
      for (int i = 0; i < m_; ++i) rhs.col((n - 1) * m_ + i) = tau * loads_[i];
      for (int c = 0; c < cols; ++c) live.col(c) = step.solver.solve(rhs.col(c));
      const MatrixXd weighted = step.weighted_mass * live.leftCols(cols);
      red_.hessian.topLeftCorner(cols, cols).noalias() +=
          tau * live.leftCols(cols).transpose() * weighted;
      red_.linear.head(cols).noalias() -=
          tau * weighted.transpose() * (ycheck_.Y[n - 1] - g_[n - 1]);
    }
    for (int k = 0; k < n_steps_; ++k)
      for (int i = 0; i < m_; ++i)
        red_.hessian(k * m_ + i, k * m_ + i) += problem_.alpha * ops_.grid().tau[k];
    red_.hessian_llt.compute(red_.hessian);
    if (red_.hessian_llt.info() != Eigen::Success)
      throw DegenerateProblemError("solve_ocp: reduced Hessian is not SPD");
  }

  // Rows of the control-to-state map at the active space-time nodes,
  // recomputed by one simultaneous forward sweep.
  MatrixXd harvest_sensitivity_rows(const ActiveSet& active) {
    const int dim = n_steps_ * m_;
    MatrixXd rows = MatrixXd::Zero(static_cast<int>(active.size()), dim);
    MatrixXd live(J_, dim);
    std::size_t cursor = 0;
    for (int n = 1; n <= n_steps_ && cursor < active.size(); ++n) {
      const double tau = ops_.grid().tau[n - 1];
      const StepOperators& step = ops_.step(n);
      const int cols = n * m_;
      MatrixXd rhs(J_, cols);
      if (n > 1) rhs.leftCols((n - 1) * m_) = ops_.mass() * live.leftCols((n - 1) * m_);
      for (int i = 0; i < m_; ++i) rhs.col((n - 1) * m_ + i) = tau * loads_[i];
      for (int c = 0; c < cols; ++c) live.col(c) = step.solver.solve(rhs.col(c));
      while (cursor < active.size() && active[cursor].first == n) {
        rows.row(static_cast<int>(cursor)).head(cols) = live.row(active[cursor].second).head(cols);
        ++cursor;
      }
    }
    return rows;
  }

  const OcpProblem& problem_;
  OperatorCache ops_;
  int n_steps_, m_, J_;
  std::vector<VectorXd> loads_;
  VectorXd Y0_;
  std::vector<VectorXd> g_;
  double scale_ = 1.0;
  StateTrajectory ycheck_;
  ReducedQuadratic red_;
  VectorXd u_unc_;
  StateTrajectory y_unc_;
};

double cost_of(const OcpProblem& problem, OperatorCache& ops,
               const std::vector<VectorXd>& g, const ControlTrajectory& u,
               const StateTrajectory& y) {
  double j = 0.0;
  for (int n = 1; n <= ops.grid().num_steps(); ++n) {
    const double tau = ops.grid().tau[n - 1];
    const VectorXd d = y.Y[n - 1] - g[n - 1];
    j += 0.5 * tau * d.dot(ops.step(n).weighted_mass * d);
    if (u.u.size() > 0) j += 0.5 * problem.alpha * tau * u.u.row(n - 1).squaredNorm();
  }
  return j;
}

} // namespace

void OcpProblem::validate() const {
  if (!mesh) throw InputError("OcpProblem: mesh is required");
  if (!(alpha > 0.0)) throw InputError("OcpProblem: alpha must be positive");
  if (control_basis.empty()) throw InputError("OcpProblem: empty control basis");
  if (!y0) throw InputError("OcpProblem: initial value is required");
  for (const auto& node : mesh->nodes)
    if (!(y0(node) > 0.0))
      throw InputError("OcpProblem: min nodal y0 must be positive");
  if (!y_g_series.empty() &&
      static_cast<int>(y_g_series.size()) != grid.num_steps())
    throw InputError("OcpProblem: y_g_series length does not match grid");
  grid.validate();
}

std::vector<VectorXd> OcpProblem::sample_desired_state() const {
  if (!y_g_series.empty()) return y_g_series;
  if (!y_g) throw InputError("OcpProblem: desired state is required");
  std::vector<VectorXd> g;
  g.reserve(grid.num_steps());
  for (int n = 1; n <= grid.num_steps(); ++n)
    g.push_back(nodal_values(*mesh, y_g, grid.t[n]));
  return g;
}

double OcpProblem::data_scale(const std::vector<VectorXd>& g) const {
  double s = 1.0;
  for (const auto& gn : g) s = std::max(s, gn.lpNorm<Eigen::Infinity>());
  for (const auto& node : mesh->nodes) s = std::max(s, std::abs(y0(node)));
  return s;
}

OcpSolution solve_ocp(const OcpProblem& problem, const OcpOptions& options) {
  problem.validate();
  PdasWorkspace w(problem);
  const int n_steps = w.n_steps();
  const int J = w.num_nodes();

  ActiveSet active;
  if (options.start == PdasStart::AllActive) {
    active.reserve(static_cast<std::size_t>(n_steps) * J);
    for (int n = 1; n <= n_steps; ++n)
      for (int j = 0; j < J; ++j) active.emplace_back(n, j);
  }

  double rho = options.pdas_rho;
  if (!(rho > 0.0)) throw InputError("solve_ocp: pdas_rho must be positive");
  if (options.max_pdas_iters < 1)
    throw InputError("solve_ocp: max_pdas_iters must be at least 1");
  bool restarted = false;
  std::set<ActiveSet> visited;

  VectorXd u_flat;
  StateTrajectory y;
  MultiplierField mu;
  int iterations = 0;
  while (iterations < options.max_pdas_iters) {
    ++iterations;
    visited.insert(active);
    w.solve_subproblem(active, u_flat, y, mu);
    ActiveSet next = w.update_active_set(y, mu, rho);
    if (next == active) break;
    if (visited.count(next)) {
      if (restarted) {
        throw ConvergenceError("solve_ocp: active set cycling persists after "
                               "rho restart");
      }
      restarted = true;
      rho *= 10.0;
      visited.clear();
    }
    active = std::move(next);
    if (iterations == options.max_pdas_iters) {
      const ControlTrajectory u = w.control_from_vector(u_flat);
      const AdjointTrajectory p = solve_adjoint(w.ops(), y, w.desired_state(), mu);
      const KktResiduals res = w.residuals_with_cache(u, p, mu);
      std::ostringstream msg;
      msg << "solve_ocp: no convergence in " << options.max_pdas_iters
          << " iterations; residuals (stat, feas, sign, comp) = ("
          << res.stationarity << ", " << res.feasibility << ", " << res.sign
          << ", " << res.complementarity << ")";
      throw ConvergenceError(msg.str());
    }
  }

  OcpSolution sol;
  sol.u = w.control_from_vector(u_flat);
  sol.Y = std::move(y);
  sol.mu = std::move(mu);
  sol.P = solve_adjoint(w.ops(), sol.Y, w.desired_state(), sol.mu);
  sol.iterations = iterations;
  sol.rho_used = rho;
  sol.restarted = restarted;
  sol.residuals = w.residuals_with_cache(sol.u, sol.P, sol.mu);
  sol.cost = cost_of(problem, w.ops(), w.desired_state(), sol.u, sol.Y);
  return sol;
}

double evaluate_cost(const OcpProblem& problem, const ControlTrajectory& u) {
  problem.validate();
  OperatorCache ops(*problem.mesh, problem.motion, problem.grid,
                    CachePolicy::Streaming);
  const auto loads = control_load(*problem.mesh, problem.control_basis);
  const VectorXd Y0 = project_initial(ops, problem.y0);
  const auto g = problem.sample_desired_state();
  const StateTrajectory y = solve_state(ops, u, loads, Y0);
  return cost_of(problem, ops, g, u, y);
}

KktResiduals kkt_residuals(const OcpProblem& problem, const OcpSolution& solution) {
  problem.validate();
  OperatorCache ops(*problem.mesh, problem.motion, problem.grid,
                    CachePolicy::Streaming);
  const auto loads = control_load(*problem.mesh, problem.control_basis);
  const VectorXd Y0 = project_initial(ops, problem.y0);
  const auto g = problem.sample_desired_state();
  const double scale = problem.data_scale(g);
  return PdasWorkspace::compute_kkt_residuals(ops, problem, loads, Y0, scale,
                                              solution.u, solution.P, solution.mu);
}

} // namespace sfem
