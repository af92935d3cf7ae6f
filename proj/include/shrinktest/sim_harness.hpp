#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "shrinktest/adaptive_estimation.hpp"

namespace shrinktest {

enum class ExperimentKind { Bayes, Minimax, Adaptive };

enum class SignalRule { Fixed, RhoN };

// One experiment, read from a sectioned key-value file:
//
//   [experiment]  id, kind (bayes|minimax|adaptive), alpha, replicates, seed,
//                 output, slack, threads
//   [prior]       family, tau/rate/shape/scale, optional K, u0, ...
//   [model]       n (comma list sweeps), p or p_rule = sqrt, c_psi
//   [signal]      rule (fixed|rho_n), magnitude, v_n, c1 (number|auto),
//                 scale (comma list of multipliers)
//   [bound]       lambda, c_upper, zeta
//
// Every resolved value, defaults included, is echoed into the CSV header.
struct ExperimentConfig {
  std::string experiment_id = "experiment";
  ExperimentKind kind = ExperimentKind::Bayes;
  PriorSpec prior;
  std::vector<long> n_values{1000};
  std::optional<double> p;  // fixed p_n; otherwise p_n = round(sqrt(n))
  double c_psi = 1.0;
  double alpha = 0.5;
  SignalRule signal_rule = SignalRule::RhoN;
  double magnitude = 0.0;  // for SignalRule::Fixed
  double v_n = 3.0;
  std::optional<double> c1;  // unset: calibrated on the shrinkage curve
  std::vector<double> signal_scales{1.0};
  double lambda = 0.5;
  double c_upper = 2.0;
  double zeta = 0.0;
  long replicates = 1;
  std::optional<std::uint64_t> seed;
  std::string output;
  double slack = 1.05;
  int threads = 1;

  // Throws ValidationError with a "section.key: ..." message.
  void validate() const;
  double p_for(long n) const;
  // Echo of all resolved settings as key=value lines.
  std::vector<std::string> describe() const;
};

ExperimentConfig parse_experiment_config(std::istream& in);
ExperimentConfig load_experiment_config(const std::string& path);

// String-valued table that serializes to CSV with '#' comment lines ahead of
// the mandatory header row.
struct ResultTable {
  std::vector<std::string> comments;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  bool has_column(const std::string& name) const;
  std::size_t column_index(const std::string& name) const;  // throws if absent
  std::string to_csv() const;
  void write_header(std::ostream& out) const;
  static void write_row(std::ostream& out, const std::vector<std::string>& row);
};

ResultTable read_result_table(std::istream& in);

// Runs every parameter point (n values, and signal scales for minimax runs).
// Each point contributes one row per replicate plus an "aggregate" row when
// there is more than one replicate; Bayes runs add an "analytic" row first.
// When `sink` is given, rows are streamed as each point finishes; on failure
// a row with status "failed" is written and the error is rethrown. Output is
// a pure function of the config: thread count does not change a byte.
ResultTable run_experiment(const ExperimentConfig& config, std::ostream* sink = nullptr);

enum class PlotKind { RiskVsSignal, RiskVsN, MxCurve };

PlotKind parse_plot_kind(const std::string& s);

// Self-contained matplotlib script reading `csv_path` (relative paths are
// resolved against the script's directory). Throws ValidationError
// "missing columns: ..." when the table lacks what the plot needs.
std::string emit_plot_script(const ResultTable& table, PlotKind kind,
                             const std::string& csv_path);

// Columns shared by the risk CSV outputs.
const std::vector<std::string>& risk_columns();

}  // namespace shrinktest
