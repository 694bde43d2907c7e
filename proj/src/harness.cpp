#include "sfem/harness.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "sfem/reference_solutions.hpp"

namespace sfem {

namespace {

std::string hash_hex(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex << std::setfill('0') << std::setw(16) << h;
  return os.str();
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

// Value of a piecewise-constant (dG(0)) trajectory at time t: the value on
// the interval (t_{n-1}, t_n] containing t.
int interval_of(const TimeGrid& grid, double t) {
  const double eps = 1e-12 * grid.final_time();
  for (int n = 1; n <= grid.num_steps(); ++n)
    if (t <= grid.t[n] + eps) return n;
  return grid.num_steps();
}

} // namespace

void RateTable::compute_eoc() {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].eoc.reset();
    for (std::size_t k = i; k-- > 0;) {
      if (rows[k].metric != rows[i].metric) continue;
      const double e0 = rows[k].error, e1 = rows[i].error;
      const double h0 = rows[k].h, h1 = rows[i].h;
      if (e0 > 0.0 && e1 > 0.0 && h0 != h1)
        rows[i].eoc = std::log(e0 / e1) / std::log(h0 / h1);
      break;
    }
  }
}

std::optional<double> RateTable::eoc_for(const std::string& metric, int level) const {
  for (const auto& r : rows)
    if (r.metric == metric && r.level == level) return r.eoc;
  return std::nullopt;
}

std::optional<double> RateTable::error_for(const std::string& metric, int level) const {
  for (const auto& r : rows)
    if (r.metric == metric && r.level == level) return r.error;
  return std::nullopt;
}

RateTable run_state_convergence(const ExperimentConfig& config) {
  const auto& study = config.study;
  if (study.type != "state_mms" && study.type != "state_dilation")
    throw InputError("run_state_convergence: study type must be state_mms or "
                     "state_dilation");
  if (study.levels.empty())
    throw InputError("run_state_convergence: no levels given");

  RateTable table;
  table.config_hash = hash_hex(config.hash());
  const MotionSpec motion = config.make_motion(config.T);
  if (study.type == "state_mms" && motion.kind != MotionKind::Stationary)
    throw InputError("run_state_convergence: state_mms expects stationary motion");
  if (study.type == "state_dilation" && motion.kind != MotionKind::Dilation)
    throw InputError("run_state_convergence: state_dilation expects a dilation");

  for (int level : study.levels) {
    try {
      const ReferenceMesh mesh = build_icosphere(level);
      const TimeGrid grid = TimeGrid::from_step_rule(config.T, mesh.h,
                                                     study.tau_coeff, study.tau_power);
      OperatorCache ops(mesh, motion, grid, CachePolicy::Streaming);
      const Eigen::VectorXd x3 = nodal_values(mesh, [](const Vec3& x) { return x.z(); });
      const StateTrajectory traj = solve_state(ops, x3);

      double linf = 0.0;
      for (int n = 1; n <= grid.num_steps(); ++n) {
        const double amp = motion.kind == MotionKind::Stationary
                               ? stationary_decay_factor(grid.t[n])
                               : dilation_decay_factor(motion, grid.t[n]);
        linf = std::max(linf,
                        (traj.Y[n - 1] - amp * x3).lpNorm<Eigen::Infinity>());
      }
      const double amp_final = motion.kind == MotionKind::Stationary
                                   ? stationary_decay_factor(config.T)
                                   : dilation_decay_factor(motion, config.T);
      const Eigen::VectorXd diff = traj.Y.back() - amp_final * x3;
      const double l2 = std::sqrt(diff.dot(ops.mass() * diff));

      table.rows.push_back({level, mesh.h, grid.tau_max, "max_nodal_linf", linf, {}});
      table.rows.push_back({level, mesh.h, grid.tau_max, "final_l2", l2, {}});
    } catch (const Error& e) {
      throw Error("run_state_convergence: level " + std::to_string(level) + ": " +
                  e.what());
    }
  }
  // Regroup so each metric forms a contiguous block ordered by level.
  std::stable_sort(table.rows.begin(), table.rows.end(),
                   [](const RateRow& a, const RateRow& b) { return a.metric < b.metric; });
  table.compute_eoc();
  return table;
}

RateTable run_ocp_convergence(const ExperimentConfig& config) {
  const auto& study = config.study;
  if (study.type != "ocp_reference")
    throw InputError("run_ocp_convergence: study type must be ocp_reference");
  if (study.levels.empty()) throw InputError("run_ocp_convergence: no levels given");
  const int max_level = *std::max_element(study.levels.begin(), study.levels.end());
  if (study.reference_level < max_level + 2)
    throw InputError("run_ocp_convergence: reference level must exceed the "
                     "largest study level by at least 2");

  RateTable table;
  table.config_hash = hash_hex(config.hash());

  const ReferenceMesh ref_mesh = build_icosphere(study.reference_level);
  const TimeGrid ref_grid = TimeGrid::from_step_rule(config.T, ref_mesh.h,
                                                     study.tau_coeff, study.tau_power);
  const OcpProblem ref_problem = config.make_ocp_problem(ref_mesh, ref_grid);
  OcpOptions options;
  options.tol = config.tol;
  options.max_pdas_iters = config.max_pdas_iters;
  options.pdas_rho = config.pdas_rho;
  const OcpSolution ref = solve_ocp(ref_problem, options);

  for (int level : study.levels) {
    const ReferenceMesh mesh = build_icosphere(level);
    const TimeGrid grid = TimeGrid::from_step_rule(config.T, mesh.h,
                                                   study.tau_coeff, study.tau_power);
    // Coarse node indices must be a prefix of the reference mesh's.
    for (int j = 0; j < mesh.num_nodes(); ++j)
      if ((mesh.nodes[j] - ref_mesh.nodes[j]).norm() > 1e-14)
        throw Error("run_ocp_convergence: node ordering is not nested");
    const OcpProblem problem = config.make_ocp_problem(mesh, grid);
    const OcpSolution sol = solve_ocp(problem, options);

    // Controls are interval-constant; integrate the squared difference on
    // the union of both breakpoint sets.
    std::vector<double> knots = ref_grid.t;
    knots.insert(knots.end(), grid.t.begin(), grid.t.end());
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end(),
                            [&](double a, double b) {
                              return std::abs(a - b) < 1e-12 * config.T;
                            }),
                knots.end());
    double control_sq = 0.0;
    for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
      const double mid = 0.5 * (knots[k] + knots[k + 1]);
      const int nr = interval_of(ref_grid, mid) - 1;
      const int nc = interval_of(grid, mid) - 1;
      control_sq += (knots[k + 1] - knots[k]) *
                    (ref.u.u.row(nr) - sol.u.u.row(nc)).squaredNorm();
    }

    // State discrepancy against the reference trajectory restricted to the
    // coarse nodes (node indices of level L are a prefix of the reference's).
    const SpMat mass = assemble_mass(mesh);
    const int J = mesh.num_nodes();
    double state_sq = 0.0;
    for (int n = 1; n <= grid.num_steps(); ++n) {
      const int nr = interval_of(ref_grid, grid.t[n]);
      const Eigen::VectorXd diff = ref.Y.Y[nr - 1].head(J) - sol.Y.Y[n - 1];
      state_sq += grid.tau[n - 1] * diff.dot(mass * diff);
    }

    table.rows.push_back({level, mesh.h, grid.tau_max, "control_err_sq", control_sq, {}});
    table.rows.push_back({level, mesh.h, grid.tau_max, "state_err_sq", state_sq, {}});
    table.rows.push_back(
        {level, mesh.h, grid.tau_max, "combined_err_sq", control_sq + state_sq, {}});
  }
  std::stable_sort(table.rows.begin(), table.rows.end(),
                   [](const RateRow& a, const RateRow& b) { return a.metric < b.metric; });
  table.compute_eoc();
  return table;
}

std::string emit_report(const RateTable& table, ReportFormat format) {
  if (format == ReportFormat::Csv) {
    std::ostringstream os;
    os << "level,h,tau,metric,error,eoc\n";
    for (const auto& r : table.rows) {
      os << r.level << "," << format_double(r.h) << "," << format_double(r.tau)
         << "," << r.metric << "," << format_double(r.error) << ",";
      if (r.eoc) os << format_double(*r.eoc);
      os << "\n";
    }
    return os.str();
  }
  nlohmann::ordered_json j;
  j["config_hash"] = table.config_hash;
  j["timestamp"] = table.timestamp;
  j["threshold_source"] = "artifact";
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : table.rows) {
    nlohmann::ordered_json row;
    row["level"] = r.level;
    row["h"] = r.h;
    row["tau"] = r.tau;
    row["metric"] = r.metric;
    row["error"] = r.error;
    if (r.eoc)
      row["eoc"] = *r.eoc;
    else
      row["eoc"] = nullptr;
    j["rows"].push_back(row);
  }
  return j.dump(2) + "\n";
}

RateTable parse_report_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  RateTable t;
  t.config_hash = j.value("config_hash", std::string());
  t.timestamp = j.value("timestamp", std::string());
  for (const auto& row : j.at("rows")) {
    RateRow r;
    r.level = row.at("level").get<int>();
    r.h = row.at("h").get<double>();
    r.tau = row.at("tau").get<double>();
    r.metric = row.at("metric").get<std::string>();
    r.error = row.at("error").get<double>();
    if (!row.at("eoc").is_null()) r.eoc = row.at("eoc").get<double>();
    t.rows.push_back(r);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Self-test battery.

namespace {

class SelfTest {
 public:
  SelfTest(std::ostream& out, std::uint64_t seed) : out_(out), rng_(seed) {}

  void check(const std::string& name, const std::function<bool(std::string&)>& fn) {
    std::string detail;
    bool ok = false;
    try {
      ok = fn(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    out_ << (ok ? "PASS " : "FAIL ") << name;
    if (!detail.empty()) out_ << " (" << detail << ")";
    out_ << "\n";
    if (!ok) ++failures_;
  }

  int failures() const { return failures_; }
  std::mt19937_64& rng() { return rng_; }

  Eigen::VectorXd random_vector(int n) {
    std::normal_distribution<double> dist;
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = dist(rng_);
    return v;
  }

  Eigen::MatrixXd random_matrix(int rows, int cols) {
    std::normal_distribution<double> dist;
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = dist(rng_);
    return m;
  }

 private:
  std::ostream& out_;
  std::mt19937_64 rng_;
  int failures_ = 0;
};

std::string approx(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << std::scientific << v;
  return os.str();
}

} // namespace

int run_selftest(std::ostream& out, std::uint64_t seed) {
  SelfTest st(out, seed);
  constexpr double kPi = 3.14159265358979323846;

  st.check("mesh_invariants_levels_0_to_4", [&](std::string& d) {
    const int expected_nodes[] = {12, 42, 162, 642, 2562};
    const int expected_tris[] = {20, 80, 320, 1280, 5120};
    double min_gamma = 1.0;
    for (int l = 0; l <= 4; ++l) {
      const ReferenceMesh m = build_icosphere(l);
      m.validate();
      if (m.num_nodes() != expected_nodes[l] || m.num_triangles() != expected_tris[l]) {
        d = "bad counts at level " + std::to_string(l);
        return false;
      }
      min_gamma = std::min(min_gamma, m.gamma_h);
    }
    d = "min gamma_h = " + approx(min_gamma);
    return min_gamma >= 0.4;
  });

  st.check("lift_idempotent_and_radial", [&](std::string& d) {
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      const Eigen::VectorXd r = st.random_vector(3);
      Vec3 x(r[0], r[1], r[2]);
      if (x.norm() < 0.5) x *= 1.0 / x.norm();
      const Vec3 once = closest_point_lift(x);
      worst = std::max(worst, (closest_point_lift(once) - once).norm());
    }
    const Vec3 axis = closest_point_lift(Vec3(2, 0, 0));
    d = "idempotence defect = " + approx(worst);
    return worst <= 1e-15 && (axis - Vec3(1, 0, 0)).norm() == 0.0;
  });

  st.check("area_deficit_ratio_levels_2_to_4", [&](std::string& d) {
    std::vector<double> deficit;
    for (int l = 2; l <= 4; ++l)
      deficit.push_back(4.0 * kPi - build_icosphere(l).total_area());
    bool ok = true;
    std::string ratios;
    for (std::size_t i = 0; i + 1 < deficit.size(); ++i) {
      const double r = deficit[i] / deficit[i + 1];
      ratios += (i ? ", " : "") + approx(r);
      ok = ok && r >= 3.5 && r <= 4.5;
    }
    d = "ratios = " + ratios;
    return ok;
  });

  st.check("triangle_frame_geometry", [&](std::string& d) {
    const ReferenceMesh m = build_icosphere(2);
    double worst_sum = 0.0, worst_orth = 0.0, worst_lift = 0.0;
    for (int ti = 0; ti < m.num_triangles(); ++ti) {
      const TriangleFrame f = triangle_frame(m, ti);
      Vec3 sum = Vec3::Zero();
      for (const auto& g : f.p1_basis_gradients) sum += g;
      worst_sum = std::max(worst_sum, sum.norm());
      const auto& t = m.triangles[ti];
      for (int i = 0; i < 3; ++i) {
        const Vec3 edge = m.nodes[t[(i + 2) % 3]] - m.nodes[t[(i + 1) % 3]];
        worst_orth =
            std::max(worst_orth, std::abs(f.p1_basis_gradients[i].dot(edge)));
      }
      for (int k = 0; k < 3; ++k)
        worst_lift = std::max(
            worst_lift, (f.edge_midpoints[k] - f.lifted_midpoints[k]).norm());
    }
    d = "grad sum = " + approx(worst_sum) + ", lift dist = " + approx(worst_lift);
    return worst_sum <= 1e-12 && worst_orth <= 1e-12 && worst_lift <= m.h * m.h;
  });

  st.check("mesh_parameters_permutation_invariant", [&](std::string& d) {
    ReferenceMesh m = build_icosphere(2);
    const auto [h0, g0] = mesh_parameters(m);
    std::shuffle(m.triangles.begin(), m.triangles.end(), st.rng());
    const auto [h1, g1] = mesh_parameters(m);
    d = "dh = " + approx(std::abs(h0 - h1)) + ", dgamma = " + approx(std::abs(g0 - g1));
    return std::abs(h0 - h1) <= 1e-12 && std::abs(g0 - g1) <= 1e-12;
  });

  st.check("coefficients_numeric_richardson", [&](std::string& d) {
    const MotionSpec motion = MotionSpec::dilation_affine(0.5, 2.0);
    const Vec3 p = Vec3(0.3, -0.5, 0.8).normalized();
    const Vec3 e1 = Vec3(0.8, 0.3, -(0.8 * p.x() + 0.3 * p.y()) / p.z()).normalized();
    const Vec3 e2 = p.cross(e1).normalized();
    const CoefficientSample exact = coefficients_analytic(motion, p, e1, e2, 1.0);
    auto err = [&](double delta) {
      const CoefficientSample s = coefficients_numeric(motion, p, e1, e2, 1.0, delta);
      return std::max({(s.a - exact.a).norm(), s.b.norm(),
                       std::abs(s.c - exact.c), std::abs(s.beta - exact.beta)});
    };
    const double e1v = err(8e-3), e2v = err(4e-3);
    const double ratio = e1v / e2v;
    d = "error ratio = " + approx(ratio);
    return ratio >= 3.5 && ratio <= 4.5;
  });

  st.check("coefficients_frame_covariance", [&](std::string& d) {
    const Vec3 p = Vec3(0.2, 0.9, 0.4).normalized();
    Vec3 e1 = Vec3(1, 0, 0) - p.x() * p;
    e1.normalize();
    const Vec3 e2 = p.cross(e1);
    const double th = 0.7;
    const Vec3 f1 = std::cos(th) * e1 + std::sin(th) * e2;
    const Vec3 f2 = -std::sin(th) * e1 + std::cos(th) * e2;
    // Analytic dilation: isotropic tensor, exactly invariant.
    const MotionSpec dil = MotionSpec::dilation_sin(0.25, 1.0, 2.0);
    const CoefficientSample a0 = coefficients_analytic(dil, p, e1, e2, 1.3);
    const CoefficientSample a1 = coefficients_analytic(dil, p, f1, f2, 1.3);
    const double exact_defect =
        std::max({(a0.a - a1.a).norm(), (a0.b - a1.b).norm(),
                  std::abs(a0.c - a1.c), std::abs(a0.beta - a1.beta)});
    // Numeric anisotropic motion: scalars invariant, tensor conjugates.
    const MotionSpec def = MotionSpec::axis_stretch_sin(0.3, 1.0, 2.0);
    const CoefficientSample n0 = coefficients_numeric(def, p, e1, e2, 1.0, 1e-5);
    const CoefficientSample n1 = coefficients_numeric(def, p, f1, f2, 1.0, 1e-5);
    Eigen::Matrix2d rot;
    rot << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    const double scalar_defect =
        std::max(std::abs(n0.c - n1.c), std::abs(n0.beta - n1.beta));
    const double tensor_defect =
        (rot.transpose() * n0.a * rot - n1.a).norm() +
        (rot.transpose() * n0.b - n1.b).norm();
    d = "scalar defect = " + approx(scalar_defect) +
        ", tensor defect = " + approx(tensor_defect);
    return exact_defect <= 1e-10 && scalar_defect <= 1e-9 && tensor_defect <= 1e-6;
  });

  st.check("coefficients_beta_consistency", [&](std::string& d) {
    const MotionSpec dil = MotionSpec::dilation_affine(0.5, 2.0);
    double worst_beta = 0.0, spread_c = 0.0;
    double cmin = 1e300, cmax = -1e300;
    for (int k = 0; k < 100; ++k) {
      Vec3 p(st.random_vector(3));
      p.normalize();
      Vec3 e1 = p.cross(std::abs(p.z()) < 0.9 ? Vec3(0, 0, 1) : Vec3(1, 0, 0));
      e1.normalize();
      const Vec3 e2 = p.cross(e1);
      const CoefficientSample s = coefficients_numeric(dil, p, e1, e2, 1.2, 1e-4);
      worst_beta = std::max(worst_beta,
                            std::abs(std::pow(s.beta, 4) - std::pow(dil.radius(1.2), 4)) /
                                std::pow(dil.radius(1.2), 4));
      const CoefficientSample sa = coefficients_analytic(dil, p, e1, e2, 1.2);
      cmin = std::min(cmin, sa.c);
      cmax = std::max(cmax, sa.c);
      spread_c = std::max(spread_c, std::abs(s.c - sa.c));
    }
    d = "beta^4 defect = " + approx(worst_beta) + ", numeric c defect = " + approx(spread_c);
    return worst_beta <= 1e-8 && (cmax - cmin) <= 1e-10 && spread_c <= 1e-6;
  });

  st.check("assembly_bitwise_deterministic", [&](std::string& d) {
    const ReferenceMesh m = build_icosphere(2);
    const MotionSpec dil = MotionSpec::dilation_affine(0.5, 1.0);
    const SpMat k1 = assemble_stiffness(m, dil, 0.7);
    const SpMat k2 = assemble_stiffness(m, dil, 0.7);
    bool identical = k1.nonZeros() == k2.nonZeros();
    if (identical)
      for (int i = 0; i < k1.nonZeros(); ++i)
        identical = identical && k1.valuePtr()[i] == k2.valuePtr()[i];
    d = identical ? "bitwise equal" : "mismatch";
    return identical;
  });

  st.check("mass_and_stiffness_structure", [&](std::string& d) {
    const ReferenceMesh m = build_icosphere(3);
    const SpMat mass = assemble_mass(m);
    const SpMat k = assemble_stiffness(m, MotionSpec::stationary(), 0.0);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(m.num_nodes());
    const double mass_total = ones.dot(mass * ones);
    const double kernel = (k * ones).lpNorm<Eigen::Infinity>();
    Eigen::SimplicialLLT<SpMat> llt(mass);
    d = "1'M1 - area = " + approx(std::abs(mass_total - m.total_area())) +
        ", |K1| = " + approx(kernel);
    return std::abs(mass_total - m.total_area()) <= 1e-10 * m.total_area() &&
           kernel <= 1e-12 && llt.info() == Eigen::Success;
  });

  st.check("dilation_scaling_law", [&](std::string& d) {
    const ReferenceMesh m = build_icosphere(2);
    const MotionSpec dil = MotionSpec::dilation_affine(0.5, 2.0);
    const SpMat k_stat = assemble_stiffness(m, MotionSpec::stationary(2.0), 0.0);
    const SpMat k_t = assemble_stiffness(m, dil, 2.0); // r = 2
    double worst = 0.0;
    for (int i = 0; i < k_t.nonZeros(); ++i)
      worst = std::max(worst,
                       std::abs(k_t.valuePtr()[i] - 0.25 * k_stat.valuePtr()[i]));
    d = "max entry defect = " + approx(worst);
    return worst <= 1e-14;
  });

  st.check("lower_order_terms", [&](std::string& d) {
    const ReferenceMesh m = build_icosphere(2);
    const MotionSpec dil = MotionSpec::dilation_affine(0.5, 1.0);
    const auto [adv, reac] = assemble_lower_order(m, dil, 1.0);
    const SpMat mass = assemble_mass(m);
    const double c = 2.0 * dil.radius_dot(1.0) / dil.radius(1.0);
    const double reac_defect = (reac - c * mass).norm();
    AssemblyOptions numeric;
    numeric.force_numeric = true;
    const auto [adv_num, reac_num] = assemble_lower_order(m, dil, 1.0, numeric);
    double adv_num_max = 0.0;
    for (int i = 0; i < adv_num.nonZeros(); ++i)
      adv_num_max = std::max(adv_num_max, std::abs(adv_num.valuePtr()[i]));
    d = "|Reac - cM| = " + approx(reac_defect) +
        ", numeric |Adv| = " + approx(adv_num_max);
    return adv.nonZeros() == 0 && reac_defect <= 1e-12 && adv_num_max <= 1e-8;
  });

  st.check("stiffness_frame_independence", [&](std::string& d) {
    const ReferenceMesh m = build_icosphere(2);
    const MotionSpec dil = MotionSpec::dilation_affine(0.5, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 2.0 * kPi);
    std::vector<double> angles(m.num_triangles());
    for (auto& a : angles) a = unif(st.rng());
    AssemblyOptions opts;
    opts.frame_rotation = &angles;
    const SpMat k0 = assemble_stiffness(m, dil, 0.9);
    const SpMat k1 = assemble_stiffness(m, dil, 0.9, opts);
    const double defect = (k0 - k1).norm() / k0.norm();
    d = "relative defect = " + approx(defect);
    return defect <= 1e-12;
  });

  st.check("gradient_geometric_consistency", [&](std::string& d) {
    const double exact = 8.0 * kPi / 3.0; // integral of |grad x3|^2 over the sphere
    std::vector<double> deficit;
    for (int l = 3; l <= 4; ++l) {
      const ReferenceMesh m = build_icosphere(l);
      const SpMat k = assemble_stiffness(m, MotionSpec::stationary(), 0.0);
      const Eigen::VectorXd x3 = nodal_values(m, [](const Vec3& x) { return x.z(); });
      deficit.push_back(std::abs(exact - x3.dot(k * x3)));
    }
    const double ratio = deficit[0] / deficit[1];
    d = "deficit ratio 3->4 = " + approx(ratio);
    return ratio >= 3.2 && ratio <= 4.8;
  });

  st.check("eigenfunction_residual_ratio", [&](std::string& d) {
    std::vector<double> residual;
    for (int l = 2; l <= 3; ++l) {
      const ReferenceMesh m = build_icosphere(l);
      const SpMat mass = assemble_mass(m);
      const SpMat k = assemble_stiffness(m, MotionSpec::stationary(), 0.0);
      const Eigen::VectorXd x3 = nodal_values(m, [](const Vec3& x) { return x.z(); });
      const Eigen::VectorXd r = k * x3 - 2.0 * (mass * x3);
      Eigen::SimplicialLLT<SpMat> llt(mass);
      residual.push_back(std::sqrt(r.dot(llt.solve(r))) /
                         std::sqrt(x3.dot(mass * x3)));
    }
    const double ratio = residual[0] / residual[1];
    d = "residual ratio 2->3 = " + approx(ratio);
    return ratio >= 3.2 && ratio <= 4.8;
  });

  st.check("state_constants_preserved", [&](std::string& d) {
    const ReferenceMesh m = build_icosphere(2);
    const TimeGrid grid = TimeGrid::uniform(10, 1.0);
    OperatorCache ops(m, MotionSpec::stationary(), grid);
    const StateTrajectory traj = solve_state(ops, Eigen::VectorXd::Ones(m.num_nodes()));
    double worst = 0.0;
    for (const auto& y : traj.Y)
      worst = std::max(worst, (y.array() - 1.0).abs().maxCoeff());
    d = "max drift = " + approx(worst);
    return worst <= 1e-13;
  });

  st.check("state_linearity_and_split", [&](std::string& d) {
    const ReferenceMesh m = build_icosphere(1);
    const TimeGrid grid = TimeGrid::uniform(4, 0.5);
    OperatorCache ops(m, MotionSpec::dilation_affine(0.5, 0.5), grid);
    const auto loads = control_load(
        m, {[](const Vec3&) { return 1.0; }, [](const Vec3& x) { return x.z(); }});
    ControlTrajectory u1{st.random_matrix(4, 2)};
    ControlTrajectory u2{st.random_matrix(4, 2)};
    const Eigen::VectorXd y1 = st.random_vector(m.num_nodes());
    const Eigen::VectorXd y2 = st.random_vector(m.num_nodes());
    const double a = 0.6, b = -1.7;
    ControlTrajectory mix{a * u1.u + b * u2.u};
    const StateTrajectory sa = solve_state(ops, u1, loads, y1);
    const StateTrajectory sb = solve_state(ops, u2, loads, y2);
    const StateTrajectory sm = solve_state(ops, mix, loads, a * y1 + b * y2);
    double worst = 0.0, norm = 0.0;
    for (int n = 0; n < 4; ++n) {
      worst = std::max(worst,
                       (sm.Y[n] - a * sa.Y[n] - b * sb.Y[n]).lpNorm<Eigen::Infinity>());
      norm = std::max(norm, sm.Y[n].lpNorm<Eigen::Infinity>());
    }
    const auto [hom, forced] = solve_state_split(ops, u1, loads, y1);
    double split_defect = 0.0;
    for (int n = 0; n < 4; ++n)
      split_defect = std::max(split_defect, (hom.Y[n] + forced.Y[n] - sa.Y[n])
                                                .lpNorm<Eigen::Infinity>());
    d = "linearity = " + approx(worst / std::max(1.0, norm)) +
        ", split = " + approx(split_defect);
    return worst <= 1e-11 * std::max(1.0, norm) && split_defect <= 1e-12;
  });

  st.check("state_energy_monotone", [&](std::string& d) {
    const ReferenceMesh m = build_icosphere(2);
    const TimeGrid grid = TimeGrid::uniform(12, 0.6);
    OperatorCache ops(m, MotionSpec::stationary(), grid);
    const Eigen::VectorXd y0 = st.random_vector(m.num_nodes());
    const StateTrajectory traj = solve_state(ops, y0);
    const SpMat& mass = ops.mass();
    double prev = std::sqrt(y0.dot(mass * y0));
    bool monotone = true;
    for (const auto& y : traj.Y) {
      const double cur = std::sqrt(y.dot(mass * y));
      monotone = monotone && cur <= prev * (1.0 + 1e-13);
      prev = cur;
    }
    d = monotone ? "M-norm non-increasing" : "M-norm increased";
    return monotone;
  });

  st.check("state_positivity_floor", [&](std::string& d) {
    double worst = 1e300;
    for (int l = 2; l <= 3; ++l) {
      const ReferenceMesh m = build_icosphere(l);
      const TimeGrid grid = TimeGrid::uniform(16, 1.0);
      for (const MotionSpec& motion :
           {MotionSpec::stationary(), MotionSpec::dilation_affine(0.5, 1.0)}) {
        OperatorCache ops(m, motion, grid, CachePolicy::Streaming);
        const Eigen::VectorXd y0 =
            nodal_values(m, [](const Vec3& x) { return 2.0 + x.z(); });
        const StateTrajectory traj = solve_state(ops, y0);
        for (const auto& y : traj.Y) worst = std::min(worst, y.minCoeff());
      }
    }
    d = "min nodal state = " + approx(worst);
    return worst >= 0.5;
  });

  st.check("state_residual_vanishes", [&](std::string& d) {
    const ReferenceMesh m = build_icosphere(2);
    const TimeGrid grid = TimeGrid::uniform(6, 0.5);
    OperatorCache ops(m, MotionSpec::dilation_affine(0.5, 0.5), grid);
    const auto loads = control_load(m, {[](const Vec3&) { return 1.0; }});
    ControlTrajectory u{st.random_matrix(6, 1)};
    const StateTrajectory traj =
        solve_state(ops, u, loads, st.random_vector(m.num_nodes()));
    const double res = state_residual(ops, traj, u, loads);
    d = "residual = " + approx(res);
    return res <= 1e-10;
  });

  st.check("adjoint_weak_identity", [&](std::string& d) {
    double worst = 0.0;
    for (const MotionSpec& motion :
         {MotionSpec::dilation_affine(0.5, 0.5), MotionSpec::axis_stretch_sin(0.2, 1.0, 0.5)}) {
      const ReferenceMesh m = build_icosphere(motion.kind == MotionKind::Dilation ? 2 : 1);
      const TimeGrid grid = TimeGrid::uniform(5, 0.5);
      OperatorCache ops(m, motion, grid);
      StateTrajectory y;
      y.Y0 = st.random_vector(m.num_nodes());
      std::vector<Eigen::VectorXd> g;
      for (int n = 0; n < 5; ++n) {
        y.Y.push_back(st.random_vector(m.num_nodes()));
        g.push_back(st.random_vector(m.num_nodes()));
      }
      MultiplierField mu;
      std::uniform_int_distribution<int> step(1, 5), node(0, m.num_nodes() - 1);
      std::uniform_real_distribution<double> val(-1.0, 0.0);
      for (int k = 0; k < 7; ++k) mu.entries[{step(st.rng()), node(st.rng())}] = val(st.rng());
      const AdjointTrajectory p = solve_adjoint(ops, y, g, mu);
      for (int k = 0; k < 20; ++k) {
        std::vector<Eigen::VectorXd> phi;
        for (int n = 0; n < 5; ++n) phi.push_back(st.random_vector(m.num_nodes()));
        const double lhs = space_time_form(ops, phi, p.P);
        const double rhs = adjoint_rhs_functional(ops, phi, y, g, mu);
        worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
      }
    }
    d = "worst relative defect = " + approx(worst);
    return worst <= 1e-9;
  });

  st.check("state_adjoint_duality", [&](std::string& d) {
    const ReferenceMesh m = build_icosphere(2);
    const TimeGrid grid = TimeGrid::uniform(6, 0.5);
    OperatorCache ops(m, MotionSpec::axis_stretch_sin(0.2, 1.0, 0.5), grid);
    const auto loads = control_load(
        m, {[](const Vec3&) { return 1.0; }, [](const Vec3& x) { return x.z(); }});
    ControlTrajectory u{st.random_matrix(6, 2)};
    const StateTrajectory y =
        solve_state(ops, u, loads, Eigen::VectorXd::Zero(m.num_nodes()));
    std::vector<Eigen::VectorXd> w;
    for (int n = 0; n < 6; ++n) w.push_back(st.random_vector(m.num_nodes()));
    // Backward sweep with plain data w (no beta weighting, no point masses).
    Eigen::VectorXd next = Eigen::VectorXd::Zero(m.num_nodes());
    double rhs_value = 0.0;
    for (int n = 6; n >= 1; --n) {
      const double tau = grid.tau[n - 1];
      Eigen::VectorXd rhs = ops.mass() * next + tau * w[n - 1];
      next = ops.step(n).solver.solve_transpose(rhs);
      for (int i = 0; i < 2; ++i) rhs_value += tau * u.u(n - 1, i) * loads[i].dot(next);
    }
    double lhs_value = 0.0;
    for (int n = 0; n < 6; ++n) lhs_value += grid.tau[n] * y.Y[n].dot(w[n]);
    const double defect =
        std::abs(lhs_value - rhs_value) / std::max(1.0, std::abs(lhs_value));
    d = "duality defect = " + approx(defect);
    return defect <= 1e-10;
  });

  st.check("reduced_gradient_finite_difference", [&](std::string& d) {
    const ReferenceMesh m = build_icosphere(1);
    const TimeGrid grid = TimeGrid::uniform(4, 0.5);
    OcpProblem problem;
    problem.mesh = &m;
    problem.motion = MotionSpec::dilation_affine(0.5, 0.5);
    problem.grid = grid;
    problem.alpha = 1e-2;
    problem.control_basis = {[](const Vec3&) { return 1.0; },
                             [](const Vec3& x) { return x.z(); }};
    problem.y0 = [](const Vec3& x) { return 2.0 + x.z(); };
    problem.y_g = [](const Vec3&, double) { return 0.5; };
    OperatorCache ops(m, problem.motion, grid);
    const auto loads = control_load(m, problem.control_basis);
    const Eigen::VectorXd y0v = project_initial(ops, problem.y0);
    const auto g = problem.sample_desired_state();
    ControlTrajectory u{st.random_matrix(4, 2)};
    const StateTrajectory y = solve_state(ops, u, loads, y0v);
    const AdjointTrajectory p = solve_adjoint(ops, y, g, MultiplierField{});
    const Eigen::MatrixXd grad = reduced_gradient(p, loads, u, problem.alpha);
    double worst = 0.0;
    const double eps = 1e-4;
    for (int k = 0; k < 5; ++k) {
      Eigen::MatrixXd du = st.random_matrix(4, 2);
      ControlTrajectory up{u.u + eps * du}, um{u.u - eps * du};
      const double fd =
          (evaluate_cost(problem, up) - evaluate_cost(problem, um)) / (2.0 * eps);
      // The directional derivative pairs the per-interval gradient with the
      // control L2 inner product (tau-weighted).
      double pred = 0.0;
      for (int n = 0; n < 4; ++n)
        pred += grid.tau[n] * grad.row(n).dot(du.row(n));
      worst = std::max(worst, std::abs(fd - pred) / std::max(1.0, std::abs(fd)));
    }
    d = "worst relative defect = " + approx(worst);
    return worst <= 1e-6;
  });

  st.check("ocp_trivial_certificate", [&](std::string& d) {
    const ReferenceMesh m = build_icosphere(2);
    ExperimentConfig cfg;
    cfg.motion = {{"kind", "dilation"}, {"profile", "affine"}, {"slope", 0.5}};
    cfg.y_g = {{"name", "zero_control_trajectory"}};
    const TimeGrid grid = TimeGrid::uniform(6, 0.5);
    const OcpProblem problem = cfg.make_ocp_problem(m, grid);
    const OcpSolution sol = solve_ocp(problem);
    const double residual = sol.residuals.max();
    d = "max residual = " + approx(residual) + ", J = " + approx(sol.cost);
    return residual <= 1e-12 && sol.cost <= 1e-12 &&
           sol.u.u.lpNorm<Eigen::Infinity>() <= 1e-12 && sol.mu.entries.empty();
  });

  st.check("ocp_tiny_constrained_instance", [&](std::string& d) {
    const ReferenceMesh m = build_icosphere(0);
    OcpProblem problem;
    problem.mesh = &m;
    problem.motion = MotionSpec::stationary();
    problem.grid = TimeGrid::uniform(2, 1.0);
    problem.alpha = 1e-2;
    problem.control_basis = {[](const Vec3&) { return 1.0; }};
    problem.y0 = [](const Vec3&) { return 0.1; };
    problem.y_g = [](const Vec3&, double) { return -1.0; };
    const OcpSolution sol = solve_ocp(problem);
    OcpOptions all;
    all.start = PdasStart::AllActive;
    const OcpSolution sol2 = solve_ocp(problem, all);
    const double start_gap = (sol.u.u - sol2.u.u).lpNorm<Eigen::Infinity>();
    double comp_pairing = 0.0;
    for (const auto& [key, value] : sol.mu.entries)
      comp_pairing = std::max(
          comp_pairing,
          std::abs(std::min(sol.Y.Y[key.first - 1][key.second], -value)));
    d = "iters = " + std::to_string(sol.iterations) +
        ", residual = " + approx(sol.residuals.max()) +
        ", two-start gap = " + approx(start_gap);
    return sol.iterations <= 50 && sol.residuals.max() <= 1e-9 &&
           !sol.mu.entries.empty() && start_gap <= 1e-7 && comp_pairing <= 1e-9;
  });

  st.check("ocp_alpha_monotonicity", [&](std::string& d) {
    const ReferenceMesh m = build_icosphere(0);
    OcpProblem problem;
    problem.mesh = &m;
    problem.motion = MotionSpec::stationary();
    problem.grid = TimeGrid::uniform(2, 1.0);
    problem.control_basis = {[](const Vec3&) { return 1.0; }};
    problem.y0 = [](const Vec3&) { return 0.1; };
    problem.y_g = [](const Vec3&, double) { return -1.0; };
    double prev = 1e300;
    bool monotone = true;
    std::string norms;
    for (double alpha : {1e-3, 1e-2, 1e-1, 1.0}) {
      problem.alpha = alpha;
      const OcpSolution sol = solve_ocp(problem);
      double norm_sq = 0.0;
      for (int n = 0; n < problem.grid.num_steps(); ++n)
        norm_sq += problem.grid.tau[n] * sol.u.u.row(n).squaredNorm();
      monotone = monotone && norm_sq <= prev * (1.0 + 1e-12);
      prev = norm_sq;
      norms += (norms.empty() ? "" : ", ") + approx(std::sqrt(norm_sq));
    }
    d = "|u| over alpha sweep = " + norms;
    return monotone;
  });

  st.check("ocp_unconstrained_limit", [&](std::string& d) {
    const ReferenceMesh m = build_icosphere(1);
    OcpProblem problem;
    problem.mesh = &m;
    problem.motion = MotionSpec::stationary();
    problem.grid = TimeGrid::uniform(4, 0.5);
    problem.alpha = 1e-1;
    problem.control_basis = {[](const Vec3&) { return 1.0; }};
    problem.y0 = [](const Vec3& x) { return 2.0 + x.z(); };
    problem.y_g = [](const Vec3&, double) { return 3.0; }; // pulls upward only
    const OcpSolution sol = solve_ocp(problem);
    d = "iters = " + std::to_string(sol.iterations) +
        ", residual = " + approx(sol.residuals.max());
    return sol.iterations == 1 && sol.mu.entries.empty() &&
           sol.residuals.max() <= 1e-9;
  });

  st.check("eoc_arithmetic_exact", [&](std::string& d) {
    RateTable t;
    const double q = 1.7, c = 3.3;
    for (int l = 0; l < 5; ++l) {
      const double h = std::pow(0.5, l);
      t.rows.push_back({l, h, h * h, "synthetic", c * std::pow(h, q), {}});
    }
    t.compute_eoc();
    double worst = 0.0;
    for (std::size_t i = 1; i < t.rows.size(); ++i)
      worst = std::max(worst, std::abs(*t.rows[i].eoc - q));
    d = "max |eoc - q| = " + approx(worst);
    return worst <= 1e-12;
  });

  st.check("report_roundtrip_and_determinism", [&](std::string& d) {
    ExperimentConfig cfg;
    cfg.study.type = "state_mms";
    cfg.study.levels = {1, 2};
    cfg.T = 0.25;
    cfg.motion = {{"kind", "stationary"}};
    const RateTable t1 = run_state_convergence(cfg);
    const RateTable t2 = run_state_convergence(cfg);
    const std::string json1 = emit_report(t1, ReportFormat::Json);
    const std::string json2 = emit_report(t2, ReportFormat::Json);
    const std::string csv1 = emit_report(t1, ReportFormat::Csv);
    const std::string csv2 = emit_report(t2, ReportFormat::Csv);
    const bool roundtrip = parse_report_json(json1) == t1;
    d = roundtrip ? "roundtrip ok" : "roundtrip mismatch";
    return roundtrip && json1 == json2 && csv1 == csv2;
  });

  st.check("tau_rule_compliance", [&](std::string& d) {
    // tau * |log h|^2 must decrease along the refinement family for p = 2.
    double prev = 1e300;
    bool decreasing = true;
    for (int l = 1; l <= 5; ++l) {
      const double h = 1.2141 * std::pow(0.5, l);
      const double value = h * h * std::abs(std::log(h));
      decreasing = decreasing && value < prev;
      prev = value;
    }
    d = decreasing ? "tau rho(h)^2 decreasing" : "violated";
    return decreasing;
  });

  st.check("multiplier_mass_basics", [&](std::string& d) {
    MultiplierField empty, single;
    single.entries[{1, 3}] = -0.5;
    d = "mass(single) = " + approx(multiplier_mass(single));
    return multiplier_mass(empty) == 0.0 && multiplier_mass(single) == 0.5;
  });

  return st.failures();
}

} // namespace sfem
