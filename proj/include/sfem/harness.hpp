// Convergence studies, empirical orders of convergence and machine-readable
// reports; also hosts the self-test battery behind the `selftest` CLI
// subcommand.
#ifndef SFEM_HARNESS_HPP
#define SFEM_HARNESS_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sfem/config.hpp"

namespace sfem {

struct RateRow {
  int level = 0;
  double h = 0.0;
  double tau = 0.0;
  std::string metric;
  double error = 0.0;
  std::optional<double> eoc;

  bool operator==(const RateRow& o) const {
    return level == o.level && h == o.h && tau == o.tau && metric == o.metric &&
           error == o.error && eoc == o.eoc;
  }
};

struct RateTable {
  std::vector<RateRow> rows;
  std::string config_hash; // hex
  std::string timestamp;   // empty unless explicitly stamped

  bool operator==(const RateTable& o) const {
    return rows == o.rows && config_hash == o.config_hash && timestamp == o.timestamp;
  }

  // eoc = log(e_prev / e_cur) / log(h_prev / h_cur) per metric, from the
  // second row of that metric onward.
  void compute_eoc();

  std::optional<double> eoc_for(const std::string& metric, int level) const;
  std::optional<double> error_for(const std::string& metric, int level) const;
};

enum class ReportFormat { Csv, Json };

// Manufactured-solution study for the state solver (u = 0, y0 = x3); the
// expected solution comes from the closed form (stationary) or the scalar
// ODE oracle (dilation). Metrics: max_nodal_linf, final_l2.
RateTable run_state_convergence(const ExperimentConfig& config);

// Fine-grid-reference study for the control problem. Metrics:
// control_err_sq, state_err_sq, combined_err_sq (squared quantities).
RateTable run_ocp_convergence(const ExperimentConfig& config);

std::string emit_report(const RateTable& table, ReportFormat format);
RateTable parse_report_json(const std::string& text);

// Runs the invariant suite, printing one PASS/FAIL line per check to `out`
// (byte-deterministic for a fixed seed). Returns the number of failures.
int run_selftest(std::ostream& out, std::uint64_t seed);

} // namespace sfem

#endif
