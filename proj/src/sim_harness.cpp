#include "shrinktest/sim_harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "shrinktest/errors.hpp"
#include "shrinktest/text.hpp"

namespace shrinktest {

namespace {

using text::format_double;

const std::vector<std::string> kRiskColumns = {
    "n",       "p",        "alpha",    "x_star",        "type1",  "type2",
    "bayes_risk", "oracle_risk", "bound", "fdr",          "fnr",    "rsup",
    "se_type1", "se_type2", "se_bayes_risk", "se_fdr", "se_fnr", "se_rsup",
    "seed"};

std::vector<std::string> experiment_columns() {
  std::vector<std::string> cols = {"experiment_id", "point", "replicate", "signal"};
  cols.insert(cols.end(), kRiskColumns.begin(), kRiskColumns.end());
  cols.push_back("status");
  return cols;
}

std::string kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Bayes:
      return "bayes";
    case ExperimentKind::Minimax:
      return "minimax";
    case ExperimentKind::Adaptive:
      return "adaptive";
  }
  return "?";
}

}  // namespace

const std::vector<std::string>& risk_columns() { return kRiskColumns; }

// ---------------------------------------------------------------------------
// Config

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& what) {
    throw ValidationError(field + ": " + what);
  };
  if (experiment_id.empty()) fail("experiment.id", "must not be empty");
  if (replicates < 1) fail("experiment.replicates", "must be at least 1");
  if (!seed) fail("experiment.seed", "is required (no wall-clock seeding)");
  if (!(alpha > 0.0 && alpha < 1.0)) fail("experiment.alpha", "must lie in (0, 1)");
  if (!(slack >= 1.0)) fail("experiment.slack", "must be >= 1");
  if (threads < 0) fail("experiment.threads", "must be >= 0");
  if (n_values.empty()) fail("model.n", "needs at least one value");
  for (long n : n_values) {
    if (n < 3) fail("model.n", "values must be at least 3");
    const double p = p_for(n);
    if (!(p >= 1.0 && p < static_cast<double>(n))) fail("model.p", "must lie in [1, n)");
  }
  if (!(c_psi > 0.0)) fail("model.c_psi", "must be positive");
  if (prior.find("family") == prior.end()) fail("prior.family", "is required");
  if (signal_rule == SignalRule::Fixed && !(magnitude > 0.0)) {
    fail("signal.magnitude", "must be positive for rule = fixed");
  }
  if (signal_scales.empty()) fail("signal.scale", "needs at least one value");
  for (double s : signal_scales) {
    if (!(s > 0.0)) fail("signal.scale", "multipliers must be positive");
  }
  if (c1 && !(*c1 >= 0.0)) fail("signal.c1", "must be >= 0 or auto");
  if (!(lambda > 0.0 && lambda < 1.0)) fail("bound.lambda", "must lie in (0, 1)");
  if (!(c_upper > 0.0)) fail("bound.c_upper", "must be positive");
  if (!(zeta >= 0.0)) fail("bound.zeta", "must be >= 0");
  // The prior spec must resolve at every n.
  for (long n : n_values) {
    auto spec = prior;
    spec["n"] = std::to_string(n);
    spec["p"] = format_double(p_for(n));
    try {
      make_prior(spec);
    } catch (const ValidationError& e) {
      fail("prior", e.what());
    }
  }
}

double ExperimentConfig::p_for(long n) const {
  if (p) return *p;
  return std::round(std::sqrt(static_cast<double>(n)));
}

std::vector<std::string> ExperimentConfig::describe() const {
  std::vector<std::string> out;
  out.push_back("experiment.id=" + experiment_id);
  out.push_back("experiment.kind=" + kind_name(kind));
  out.push_back("experiment.alpha=" + format_double(alpha));
  out.push_back("experiment.replicates=" + std::to_string(replicates));
  out.push_back("experiment.seed=" + (seed ? std::to_string(*seed) : std::string("unset")));
  out.push_back("experiment.output=" + output);
  out.push_back("experiment.slack=" + format_double(slack));
  out.push_back("prior=" + format_prior_spec(prior));
  std::string ns;
  for (long n : n_values) ns += (ns.empty() ? "" : ",") + std::to_string(n);
  out.push_back("model.n=" + ns);
  out.push_back("model.p=" + (p ? format_double(*p) : std::string("sqrt(n)")));
  out.push_back("model.c_psi=" + format_double(c_psi));
  out.push_back(std::string("signal.rule=") + (signal_rule == SignalRule::Fixed ? "fixed" : "rho_n"));
  out.push_back("signal.magnitude=" + format_double(magnitude));
  out.push_back("signal.v_n=" + format_double(v_n));
  out.push_back("signal.c1=" + (c1 ? format_double(*c1) : std::string("auto")));
  std::string ss;
  for (double s : signal_scales) ss += (ss.empty() ? "" : ",") + format_double(s);
  out.push_back("signal.scale=" + ss);
  out.push_back("bound.lambda=" + format_double(lambda));
  out.push_back("bound.c_upper=" + format_double(c_upper));
  out.push_back("bound.zeta=" + format_double(zeta));
  return out;
}

ExperimentConfig parse_experiment_config(std::istream& in) {
  namespace pt = boost::property_tree;
  // read_ini only knows full-line comments; drop trailing "; ..." and "# ...".
  std::stringstream cleaned;
  for (std::string line; std::getline(in, line);) {
    for (std::size_t i = 1; i < line.size(); ++i) {
      if ((line[i] == ';' || line[i] == '#') && (line[i - 1] == ' ' || line[i - 1] == '\t')) {
        line.erase(i);
        break;
      }
    }
    cleaned << line << '\n';
  }
  pt::ptree tree;
  try {
    pt::read_ini(cleaned, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError(std::string("config: ") + e.message() + " (line " +
                          std::to_string(e.line()) + ")");
  }

  static const std::map<std::string, std::set<std::string>> allowed = {
      {"experiment", {"id", "kind", "alpha", "replicates", "seed", "output", "slack", "threads"}},
      {"prior", {}},  // validated by make_prior
      {"model", {"n", "p", "p_rule", "c_psi"}},
      {"signal", {"rule", "magnitude", "v_n", "c1", "scale"}},
      {"bound", {"lambda", "c_upper", "zeta"}}};
  for (const auto& [section, body] : tree) {
    const auto it = allowed.find(section);
    if (it == allowed.end() || body.empty()) {
      throw ValidationError("config: unknown section or top-level key '" + section + "'");
    }
    if (section == "prior") continue;
    for (const auto& [key, value] : body) {
      if (!it->second.contains(key)) {
        throw ValidationError(section + "." + key + ": unknown key");
      }
    }
  }

  auto get = [&tree](const std::string& path) -> std::optional<std::string> {
    if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(path, '.'))) {
      return std::string(text::trim(*v));
    }
    return std::nullopt;
  };

  ExperimentConfig c;
  if (auto v = get("experiment.id")) c.experiment_id = *v;
  if (auto v = get("experiment.kind")) {
    if (*v == "bayes") c.kind = ExperimentKind::Bayes;
    else if (*v == "minimax") c.kind = ExperimentKind::Minimax;
    else if (*v == "adaptive") c.kind = ExperimentKind::Adaptive;
    else throw ValidationError("experiment.kind: expected bayes, minimax or adaptive");
  }
  if (auto v = get("experiment.alpha")) c.alpha = text::parse_double(*v, "experiment.alpha");
  if (auto v = get("experiment.replicates")) c.replicates = text::parse_long(*v, "experiment.replicates");
  if (auto v = get("experiment.seed")) {
    const long s = text::parse_long(*v, "experiment.seed");
    if (s < 0) throw ValidationError("experiment.seed: must be nonnegative");
    c.seed = static_cast<std::uint64_t>(s);
  }
  if (auto v = get("experiment.output")) c.output = *v;
  if (auto v = get("experiment.slack")) c.slack = text::parse_double(*v, "experiment.slack");
  if (auto v = get("experiment.threads")) c.threads = static_cast<int>(text::parse_long(*v, "experiment.threads"));

  if (auto sec = tree.get_child_optional("prior")) {
    for (const auto& [key, value] : *sec) {
      c.prior[key] = std::string(text::trim(value.data()));
    }
  }

  if (auto v = get("model.n")) {
    c.n_values.clear();
    for (const auto& item : text::split(*v, ',')) c.n_values.push_back(text::parse_long(item, "model.n"));
  }
  if (auto v = get("model.p")) c.p = text::parse_double(*v, "model.p");
  if (auto v = get("model.p_rule")) {
    if (*v != "sqrt") throw ValidationError("model.p_rule: only 'sqrt' is supported");
    if (c.p) throw ValidationError("model.p_rule: conflicts with model.p");
  }
  if (auto v = get("model.c_psi")) c.c_psi = text::parse_double(*v, "model.c_psi");

  if (auto v = get("signal.rule")) {
    if (*v == "fixed") c.signal_rule = SignalRule::Fixed;
    else if (*v == "rho_n") c.signal_rule = SignalRule::RhoN;
    else throw ValidationError("signal.rule: expected fixed or rho_n");
  }
  if (auto v = get("signal.magnitude")) c.magnitude = text::parse_double(*v, "signal.magnitude");
  if (auto v = get("signal.v_n")) c.v_n = text::parse_double(*v, "signal.v_n");
  if (auto v = get("signal.c1"); v && *v != "auto") c.c1 = text::parse_double(*v, "signal.c1");
  if (auto v = get("signal.scale")) {
    c.signal_scales.clear();
    for (const auto& item : text::split(*v, ',')) c.signal_scales.push_back(text::parse_double(item, "signal.scale"));
  }
  if (auto v = get("bound.lambda")) c.lambda = text::parse_double(*v, "bound.lambda");
  if (auto v = get("bound.c_upper")) c.c_upper = text::parse_double(*v, "bound.c_upper");
  if (auto v = get("bound.zeta")) c.zeta = text::parse_double(*v, "bound.zeta");

  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot open '" + path + "'");
  return parse_experiment_config(in);
}

// ---------------------------------------------------------------------------
// Tables

bool ResultTable::has_column(const std::string& name) const {
  return std::find(columns.begin(), columns.end(), name) != columns.end();
}

std::size_t ResultTable::column_index(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw ValidationError("missing columns: " + name);
  return static_cast<std::size_t>(it - columns.begin());
}

void ResultTable::write_header(std::ostream& out) const {
  for (const auto& c : comments) out << "# " << c << '\n';
  write_row(out, columns);
}

void ResultTable::write_row(std::ostream& out, const std::vector<std::string>& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out << ',';
    out << row[i];
  }
  out << '\n';
}

std::string ResultTable::to_csv() const {
  std::ostringstream out;
  write_header(out);
  for (const auto& r : rows) write_row(out, r);
  return out.str();
}

ResultTable read_result_table(std::istream& in) {
  ResultTable t;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("#", 0) == 0) {
      if (!have_header) t.comments.emplace_back(text::trim(std::string_view(line).substr(1)));
      continue;
    }
    if (!have_header) {
      t.columns = text::split(line, ',');
      have_header = true;
    } else {
      t.rows.push_back(text::split(line, ','));
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// Experiments

namespace {

struct PointSetup {
  long n;
  double p;
  double scale;
  TwoGroupModel model;
  ScaleMixturePrior prior;
};

std::vector<std::string> risk_row(const ExperimentConfig& cfg, const PointSetup& pt,
                                  std::size_t point, const std::string& replicate,
                                  double signal, double x_star, const RiskReport& r,
                                  double oracle, double bound, bool with_se) {
  auto f = format_double;
  std::vector<std::string> row = {cfg.experiment_id, std::to_string(point), replicate, f(signal),
                                  std::to_string(pt.n), f(pt.p), f(cfg.alpha), f(x_star),
                                  f(r.type1), f(r.type2), f(r.bayes_risk), f(oracle), f(bound),
                                  f(r.fdr), f(r.fnr), f(r.rsup)};
  const double nan = NAN;
  for (double se : {r.se.type1, r.se.type2, r.se.bayes_risk, r.se.fdr, r.se.fnr, r.se.rsup}) {
    row.push_back(f(with_se ? se : nan));
  }
  row.push_back(std::to_string(*cfg.seed));
  row.push_back("ok");
  return row;
}

RiskReport single(const ReplicateRisk& rep) {
  RiskReport r;
  r.type1 = rep.type1;
  r.type2 = rep.type2;
  r.bayes_risk = rep.bayes_risk;
  r.fdr = rep.fdr;
  r.fnr = rep.fnr;
  r.rsup = rep.rsup();
  r.n_replicates = 1;
  return r;
}

// Replicate rows followed by the aggregate row; a single replicate is its own
// aggregate, so it gets one row.
void append_mc_rows(std::vector<std::vector<std::string>>& rows, const ExperimentConfig& cfg,
                    const PointSetup& pt, std::size_t point, double signal, double x_star,
                    const RiskReport& mc, double oracle, double bound) {
  for (std::size_t k = 0; k < mc.replicates.size(); ++k) {
    rows.push_back(risk_row(cfg, pt, point, std::to_string(k), signal, x_star,
                            single(mc.replicates[k]), oracle, bound, false));
  }
  if (mc.replicates.size() > 1) {
    rows.push_back(risk_row(cfg, pt, point, "aggregate", signal, x_star, mc, oracle, bound, true));
  }
}

std::vector<std::vector<std::string>> run_point(const ExperimentConfig& cfg,
                                                const PointSetup& pt, std::size_t point) {
  std::vector<std::vector<std::string>> rows;
  const std::uint64_t seed = *cfg.seed + 1000003ULL * point;
  // The oracle risk belongs to the two-group model; minimax rows leave it NaN.
  const double oracle = cfg.kind == ExperimentKind::Minimax ? NAN : oracle_risk(pt.model);

  if (cfg.kind == ExperimentKind::Adaptive) {
    PriorFamily family = prior_family_from_spec(cfg.prior);
    AdaptiveThresholdTester tester(family, cfg.alpha);
    Procedure proc = [&tester](std::span<const double> x) { return tester(x).decisions; };
    const auto mc = bayes_risk_mc(pt.model, proc, cfg.replicates, seed, cfg.threads);
    // Constants must hold for every plug-in level that occurred.
    double C = check_condition3(pt.prior).estimated_constant;
    double c = check_condition2(pt.prior).estimated_constant;
    for (const auto& [n, p_hat] : tester.cached_estimates()) {
      if (p_hat >= static_cast<double>(n) / std::numbers::e) continue;
      const auto member = family.make(n, p_hat);
      C = std::max(C, check_condition3(member).estimated_constant);
      c = std::min(c, check_condition2(member).estimated_constant);
    }
    const double bound =
        theorem3_bound(pt.prior, pt.model, cfg.alpha, C, c, cfg.c_upper, cfg.zeta);
    append_mc_rows(rows, cfg, pt, point, NAN, NAN, mc, oracle, bound);
    return rows;
  }

  const ShrinkageCurve curve(pt.prior);
  const double x_star = curve.decision_threshold(cfg.alpha);
  const double C = check_condition3(pt.prior).estimated_constant;
  const double c = check_condition2(pt.prior).estimated_constant;

  if (cfg.kind == ExperimentKind::Bayes) {
    const double bound = theorem1_bound(pt.prior, pt.model, cfg.alpha, C, c);
    const auto analytic = bayes_risk_analytic(pt.model, x_star);
    rows.push_back(risk_row(cfg, pt, point, "analytic", NAN, x_star, analytic, oracle, bound, true));
    Procedure proc = [&curve, &cfg](std::span<const double> x) {
      return threshold_test(curve, x, cfg.alpha);
    };
    const auto mc = bayes_risk_mc(pt.model, proc, cfg.replicates, seed, cfg.threads);
    append_mc_rows(rows, cfg, pt, point, NAN, x_star, mc, oracle, bound);
    return rows;
  }

  // Minimax: flat signal at scale x (fixed magnitude or rho_n).
  double magnitude = cfg.magnitude;
  if (cfg.signal_rule == SignalRule::RhoN) {
    const double c1 = cfg.c1 ? *cfg.c1 : calibrate_lemma1(curve, cfg.alpha).c1;
    magnitude = separation_rate(pt.prior, pt.p, c1, cfg.v_n);
  }
  magnitude *= pt.scale;
  const auto p_support = static_cast<std::size_t>(std::llround(pt.p));
  const auto signal = SparseSignal::flat(pt.n, p_support, magnitude);
  const double bound = theorem2_bound(cfg.lambda, cfg.alpha, C, c, cfg.v_n);
  const auto mc = fdr_fnr_mc(curve, signal, cfg.alpha, cfg.replicates, seed, cfg.threads);
  append_mc_rows(rows, cfg, pt, point, magnitude, x_star, mc, oracle, bound);
  return rows;
}

}  // namespace

ResultTable run_experiment(const ExperimentConfig& config, std::ostream* sink) {
  config.validate();
  ResultTable table;
  table.comments = config.describe();
  table.columns = experiment_columns();
  if (sink) table.write_header(*sink);

  // Signal scales only matter for minimax experiments.
  const std::vector<double> scales =
      config.kind == ExperimentKind::Minimax ? config.signal_scales : std::vector<double>{1.0};
  std::size_t point = 0;
  for (long n : config.n_values) {
    for (double scale : scales) {
      try {
        const double p = config.p_for(n);
        auto spec = config.prior;
        spec["n"] = std::to_string(n);
        spec["p"] = format_double(p);
        PointSetup pt{n, p, scale, TwoGroupModel::from_c_psi(n, p, config.c_psi),
                      make_prior(spec)};
        auto rows = run_point(config, pt, point);
        for (auto& r : rows) {
          if (sink) ResultTable::write_row(*sink, r);
          table.rows.push_back(std::move(r));
        }
        if (sink) sink->flush();
      } catch (const std::exception& e) {
        std::vector<std::string> marker(table.columns.size(), "nan");
        marker[0] = config.experiment_id;
        marker[1] = std::to_string(point);
        marker[2] = "failed";
        marker.back() = "failed";
        if (sink) {
          ResultTable::write_row(*sink, marker);
          *sink << "# error: " << e.what() << '\n';
          sink->flush();
        }
        table.rows.push_back(std::move(marker));
        throw;
      }
      ++point;
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// Plot scripts

PlotKind parse_plot_kind(const std::string& s) {
  if (s == "risk_vs_signal") return PlotKind::RiskVsSignal;
  if (s == "risk_vs_n") return PlotKind::RiskVsN;
  if (s == "mx_curve") return PlotKind::MxCurve;
  throw ValidationError("plot kind must be risk_vs_signal, risk_vs_n or mx_curve");
}

std::string emit_plot_script(const ResultTable& table, PlotKind kind,
                             const std::string& csv_path) {
  std::vector<std::string> need;
  switch (kind) {
    case PlotKind::RiskVsSignal:
      need = {"signal", "fdr", "fnr", "rsup", "bound"};
      break;
    case PlotKind::RiskVsN:
      need = {"n", "bayes_risk", "oracle_risk", "bound"};
      break;
    case PlotKind::MxCurve:
      need = {"x", "m_x"};
      break;
  }
  std::string missing;
  for (const auto& c : need) {
    if (!table.has_column(c)) missing += (missing.empty() ? "" : ", ") + c;
  }
  if (!missing.empty()) throw ValidationError("missing columns: " + missing);

  std::ostringstream s;
  s << "#!/usr/bin/env python3\n"
       "import csv\n"
       "import math\n"
       "import os\n"
       "import sys\n\n"
       "import matplotlib\n"
       "matplotlib.use(\"Agg\")\n"
       "import matplotlib.pyplot as plt\n\n"
       "HERE = os.path.dirname(os.path.abspath(__file__))\n"
    << "CSV = os.path.join(HERE, \"" << csv_path << "\")\n\n"
    << "def load(path):\n"
       "    with open(path) as fh:\n"
       "        lines = [l for l in fh if l.strip() and not l.startswith(\"#\")]\n"
       "    rows = list(csv.DictReader(lines))\n"
       "    # Keep aggregate rows when replicate rows are present.\n"
       "    if rows and \"replicate\" in rows[0]:\n"
       "        rows = [r for r in rows if r[\"replicate\"] in (\"aggregate\",)]\n"
       "    return rows\n\n"
       "def col(rows, name):\n"
       "    return [float(r[name]) for r in rows]\n\n"
       "rows = load(CSV)\n"
       "fig, ax = plt.subplots(figsize=(6, 4))\n";
  switch (kind) {
    case PlotKind::RiskVsSignal:
      s << "rows.sort(key=lambda r: float(r[\"signal\"]))\n"
           "x = col(rows, \"signal\")\n"
           "ax.plot(x, col(rows, \"rsup\"), \"o-\", label=\"FDR + FNR\")\n"
           "ax.plot(x, col(rows, \"fdr\"), \"s--\", label=\"FDR\")\n"
           "ax.plot(x, col(rows, \"fnr\"), \"^--\", label=\"FNR\")\n"
           "ax.plot(x, col(rows, \"bound\"), \"k-\", label=\"bound\")\n"
           "ax.set_xlabel(\"signal magnitude\")\n"
           "ax.set_ylabel(\"risk\")\n";
      break;
    case PlotKind::RiskVsN:
      s << "rows.sort(key=lambda r: float(r[\"n\"]))\n"
           "x = col(rows, \"n\")\n"
           "ax.plot(x, col(rows, \"bayes_risk\"), \"o-\", label=\"Bayes risk\")\n"
           "ax.plot(x, col(rows, \"oracle_risk\"), \"s--\", label=\"oracle\")\n"
           "ax.plot(x, col(rows, \"bound\"), \"k-\", label=\"bound\")\n"
           "ax.set_xscale(\"log\")\n"
           "ax.set_yscale(\"log\")\n"
           "ax.set_xlabel(\"n\")\n"
           "ax.set_ylabel(\"risk\")\n";
      break;
    case PlotKind::MxCurve:
      s << "x = col(rows, \"x\")\n"
           "ax.plot(x, col(rows, \"m_x\"), \"-\", label=\"m_x\")\n"
           "ax.set_xlabel(\"x\")\n"
           "ax.set_ylabel(\"E(kappa | X = x)\")\n"
           "ax.set_ylim(0, 1)\n";
      break;
  }
  s << "ax.legend()\n"
       "fig.tight_layout()\n"
       "out = sys.argv[1] if len(sys.argv) > 1 else os.path.splitext(CSV)[0] + \".png\"\n"
       "fig.savefig(out, dpi=150)\n";
  return s.str();
}

}  // namespace shrinktest
