// shrinktest: command-line front end for the shrinkage-weight testing library.
//
// Exit codes: 0 success, 2 validation error (including bad flags),
// 3 numeric failure.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "shrinktest/adaptive_estimation.hpp"
#include "shrinktest/errors.hpp"
#include "shrinktest/sim_harness.hpp"
#include "shrinktest/text.hpp"

namespace st = shrinktest;
using st::text::format_double;
using json = nlohmann::json;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out;
};

// Output stream for --out (a file) or stdout.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw st::ValidationError("--out: cannot open '" + path + "'");
    }
  }
  std::ostream& get() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

// "0,0.5,1" or "a:b:step" (inclusive of b up to rounding).
std::vector<double> parse_grid(const std::string& s) {
  if (s.find(':') != std::string::npos) {
    const auto parts = st::text::split(s, ':');
    if (parts.size() != 3) throw st::ValidationError("--x: range must be a:b:step");
    const double a = st::text::parse_double(parts[0], "--x");
    const double b = st::text::parse_double(parts[1], "--x");
    const double h = st::text::parse_double(parts[2], "--x");
    if (!(h > 0.0) || !(b >= a)) throw st::ValidationError("--x: need step > 0 and b >= a");
    const auto count = static_cast<long>(std::floor((b - a) / h + 1e-9)) + 1;
    if (count > 10'000'000) throw st::ValidationError("--x: range too long");
    std::vector<double> out;
    for (long k = 0; k < count; ++k) out.push_back(a + static_cast<double>(k) * h);
    return out;
  }
  std::vector<double> out;
  for (const auto& item : st::text::split(s, ',')) out.push_back(st::text::parse_double(item, "--x"));
  return out;
}

std::vector<double> read_observations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw st::ValidationError("--input: cannot open '" + path + "'");
  std::vector<double> x;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = st::text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    x.push_back(st::text::parse_double(t, "--input line " + std::to_string(lineno)));
  }
  if (x.empty()) throw st::ValidationError("--input: no observations");
  return x;
}

st::ScaleMixturePrior prior_from(const std::string& spec) {
  return st::make_prior(st::parse_prior_spec(spec));
}

void write_decisions(std::ostream& out, std::span<const double> x, const st::DecisionVector& d) {
  out << "index,x,decision\n";
  for (std::size_t i = 0; i < x.size(); ++i) {
    out << i << ',' << format_double(x[i]) << ',' << int(d.decisions[i]) << '\n';
  }
}

std::vector<std::string> risk_header() {
  std::vector<std::string> cols = {"method", "signal"};
  const auto& base = st::risk_columns();
  cols.insert(cols.end(), base.begin(), base.end());
  return cols;
}

std::vector<std::string> risk_row(const std::string& method, double signal, long n, double p,
                                  double alpha, double x_star, const st::RiskReport& r,
                                  double oracle, double bound, std::uint64_t seed) {
  auto f = format_double;
  return {method,        f(signal),      std::to_string(n), f(p),       f(alpha),
          f(x_star),     f(r.type1),     f(r.type2),        f(r.bayes_risk), f(oracle),
          f(bound),      f(r.fdr),       f(r.fnr),          f(r.rsup),  f(r.se.type1),
          f(r.se.type2), f(r.se.bayes_risk), f(r.se.fdr),   f(r.se.fnr), f(r.se.rsup),
          std::to_string(seed)};
}

json frequency_json(const st::FrequencyEstimate& f) {
  return {{"hits", f.hits},           {"trials", f.trials},
          {"frequency", f.frequency}, {"wilson_low", f.wilson_low},
          {"wilson_high", f.wilson_high}, {"target", f.target},
          {"passed", f.passed}};
}

json certificate_json(const st::ConditionCertificate& c) {
  json j = {{"condition", st::to_string(c.condition)},
            {"satisfied", c.satisfied},
            {"constant", c.estimated_constant},
            {"grid", c.grid}};
  if (!c.witness.empty()) j["witness"] = c.witness;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shrinkage-weight thresholding tests under Gaussian scale-mixture priors"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Seed for Monte Carlo work")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (0 = hardware)")->capture_default_str();
  app.add_option("--out", g.out, "Output file (default stdout)");

  std::string prior_spec;
  double alpha = 0.5;

  // mx
  std::string x_list = "0:10:0.5";
  auto* mx = app.add_subcommand("mx", "Shrinkage weight m_x and posterior mean on a grid");
  mx->add_option("--prior", prior_spec, "Prior spec, e.g. family=horseshoe,n=10000,p=100")->required();
  mx->add_option("--x", x_list, "List a,b,c or range a:b:step")->capture_default_str();

  // threshold
  auto* thr = app.add_subcommand("threshold", "Decision threshold x* with m_{x*} = alpha");
  thr->add_option("--prior", prior_spec)->required();
  thr->add_option("--alpha", alpha)->capture_default_str();

  // test
  std::string input;
  std::string procedure = "threshold";
  double c_psi = 1.0;
  auto* tst = app.add_subcommand("test", "Run a multiple test on observations (one per line)");
  tst->add_option("--prior", prior_spec, "Prior spec (threshold and oracle procedures)");
  tst->add_option("--alpha", alpha, "Level alpha, or q for bh")->capture_default_str();
  tst->add_option("--input", input)->required();
  tst->add_option("--procedure", procedure, "threshold | oracle | bh")
      ->check(CLI::IsMember({"threshold", "oracle", "bh"}))
      ->capture_default_str();
  tst->add_option("--c-psi", c_psi, "C_psi of the two-group model (oracle)")->capture_default_str();

  // check-prior
  auto* chk = app.add_subcommand("check-prior", "Certify the prior conditions; JSON lines");
  chk->add_option("--prior", prior_spec)->required();

  // risk-bayes
  long replicates = 0;
  auto* rb = app.add_subcommand("risk-bayes", "Bayes risk of the threshold test in the two-group model");
  rb->add_option("--prior", prior_spec)->required();
  rb->add_option("--alpha", alpha)->capture_default_str();
  rb->add_option("--c-psi", c_psi)->capture_default_str();
  rb->add_option("--replicates", replicates, "Monte Carlo datasets (0 = closed form only)")
      ->capture_default_str();

  // risk-minimax
  std::string c1_text = "auto";
  double v_n = 3.0;
  double lambda = 0.5;
  std::string scales = "1";
  auto* rm = app.add_subcommand("risk-minimax", "FDR + FNR at flat signals of size scale * rho_n");
  rm->add_option("--prior", prior_spec)->required();
  rm->add_option("--alpha", alpha)->capture_default_str();
  rm->add_option("--c1", c1_text, "Constant C1, or auto to calibrate")->capture_default_str();
  rm->add_option("--v-n", v_n)->capture_default_str();
  rm->add_option("--lambda", lambda)->capture_default_str();
  rm->add_option("--scale", scales, "Comma list of multipliers of rho_n")->capture_default_str();
  rm->add_option("--replicates", replicates, "Monte Carlo datasets per scale")->required();

  // adaptive
  std::string estimator = "simple";
  std::string family = "horseshoe";
  bool verify = false;
  long n = 10000;
  double p = 100.0;
  st::Condition4Targets targets;
  auto* ad = app.add_subcommand("adaptive", "Plug-in test with estimated sparsity");
  ad->add_option("--estimator", estimator)->check(CLI::IsMember({"simple"}))->capture_default_str();
  ad->add_option("--prior-family", family, "Family name or full spec without n, p")
      ->capture_default_str();
  ad->add_option("--alpha", alpha)->capture_default_str();
  ad->add_option("--input", input, "Observations; omit with --verify");
  ad->add_flag("--verify", verify, "Check the estimator conditions by simulation (JSON)");
  ad->add_option("--n", n)->capture_default_str();
  ad->add_option("--p", p)->capture_default_str();
  ad->add_option("--c-psi", c_psi)->capture_default_str();
  ad->add_option("--c-upper", targets.c_upper)->capture_default_str();
  ad->add_option("--c-d", targets.c_d)->capture_default_str();
  ad->add_option("--C-d", targets.C_d)->capture_default_str();
  ad->add_option("--zeta", targets.zeta)->capture_default_str();
  ad->add_option("--K", targets.K)->capture_default_str();
  ad->add_option("--replicates", replicates)->capture_default_str();

  // simulate
  std::string config_path;
  std::string plot;
  auto* sim = app.add_subcommand("simulate", "Run an experiment config to CSV");
  sim->add_option("--config", config_path)->required();
  sim->add_option("--plot", plot, "Also write a plot script: risk_vs_signal | risk_vs_n");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (g.threads < 0) throw st::ValidationError("--threads: must be >= 0");

    if (*mx) {
      const st::ShrinkageCurve curve(prior_from(prior_spec));
      Sink sink(g.out);
      auto& out = sink.get();
      out << "x,m_x,posterior_mean\n";
      for (double x : parse_grid(x_list)) {
        const double m = curve.shrinkage_weight(x);
        out << format_double(x) << ',' << format_double(m) << ',' << format_double(m * x) << '\n';
      }
    } else if (*thr) {
      const st::ShrinkageCurve curve(prior_from(prior_spec));
      Sink sink(g.out);
      sink.get() << format_double(curve.decision_threshold(alpha)) << '\n';
    } else if (*tst) {
      const auto x = read_observations(input);
      st::DecisionVector d;
      if (procedure == "bh") {
        d = st::benjamini_hochberg(x, alpha);
      } else {
        if (prior_spec.empty()) throw st::ValidationError("--prior: required for " + procedure);
        const auto prior = prior_from(prior_spec);
        if (static_cast<std::size_t>(prior.sparsity().n) != x.size()) {
          throw st::ValidationError("--prior: n must equal the number of observations");
        }
        if (procedure == "threshold") {
          d = st::threshold_test(st::ShrinkageCurve(prior), x, alpha);
        } else {
          const auto model = st::TwoGroupModel::from_c_psi(prior.sparsity().n, prior.sparsity().p, c_psi);
          d = st::bayes_oracle_test(model, x);
        }
      }
      Sink sink(g.out);
      write_decisions(sink.get(), x, d);
    } else if (*chk) {
      const auto prior = prior_from(prior_spec);
      const auto c1 = st::check_condition1(prior);
      Sink sink(g.out);
      auto& out = sink.get();
      out << certificate_json(c1.regular_variation).dump() << '\n';
      out << certificate_json(c1.lower_bound).dump() << '\n';
      out << certificate_json(st::check_condition2(prior)).dump() << '\n';
      try {
        out << certificate_json(st::check_condition3(prior)).dump() << '\n';
      } catch (const st::ValidationError& e) {
        out << json{{"condition", "C3"}, {"satisfied", false}, {"error", e.what()}}.dump() << '\n';
      }
    } else if (*rb) {
      const auto prior = prior_from(prior_spec);
      const auto& sp = prior.sparsity();
      const auto model = st::TwoGroupModel::from_c_psi(sp.n, sp.p, c_psi);
      const st::ShrinkageCurve curve(prior);
      const double x_star = curve.decision_threshold(alpha);
      const double C = st::check_condition3(prior).estimated_constant;
      const double c = st::check_condition2(prior).estimated_constant;
      const double bound = st::theorem1_bound(prior, model, alpha, C, c);
      const double oracle = st::oracle_risk(model);
      Sink sink(g.out);
      auto& out = sink.get();
      out << "# prior=" << prior_spec << "\n# c_psi=" << format_double(c_psi)
          << "\n# C=" << format_double(C) << "\n# c=" << format_double(c) << '\n';
      st::ResultTable::write_row(out, risk_header());
      st::ResultTable::write_row(out, risk_row("analytic", NAN, sp.n, sp.p, alpha, x_star,
                                               st::bayes_risk_analytic(model, x_star), oracle,
                                               bound, g.seed));
      if (replicates > 0) {
        st::Procedure proc = [&curve, alpha](std::span<const double> x) {
          return st::threshold_test(curve, x, alpha);
        };
        const auto mc = st::bayes_risk_mc(model, proc, replicates, g.seed, g.threads);
        st::ResultTable::write_row(
            out, risk_row("mc", NAN, sp.n, sp.p, alpha, x_star, mc, oracle, bound, g.seed));
      }
    } else if (*rm) {
      const auto prior = prior_from(prior_spec);
      const auto& sp = prior.sparsity();
      const st::ShrinkageCurve curve(prior);
      const double x_star = curve.decision_threshold(alpha);
      const double c1 = c1_text == "auto" ? st::calibrate_lemma1(curve, alpha).c1
                                          : st::text::parse_double(c1_text, "--c1");
      const double rho = st::separation_rate(prior, sp.p, c1, v_n);
      const double C = st::check_condition3(prior).estimated_constant;
      const double c = st::check_condition2(prior).estimated_constant;
      const double bound = st::theorem2_bound(lambda, alpha, C, c, v_n);
      if (replicates < 1) throw st::ValidationError("--replicates: must be at least 1");
      const auto support = static_cast<std::size_t>(std::llround(sp.p));
      Sink sink(g.out);
      auto& out = sink.get();
      out << "# prior=" << prior_spec << "\n# c1=" << format_double(c1)
          << "\n# rho_n=" << format_double(rho) << "\n# v_n=" << format_double(v_n)
          << "\n# lambda=" << format_double(lambda) << '\n';
      st::ResultTable::write_row(out, risk_header());
      for (const auto& item : st::text::split(scales, ',')) {
        const double scale = st::text::parse_double(item, "--scale");
        const auto signal = st::SparseSignal::flat(sp.n, support, scale * rho);
        const auto mc = st::fdr_fnr_mc(curve, signal, alpha, replicates, g.seed, g.threads);
        st::ResultTable::write_row(out, risk_row("mc", scale * rho, sp.n, sp.p, alpha, x_star,
                                                 mc, NAN, bound, g.seed));
      }
    } else if (*ad) {
      const st::PriorFamily fam = family.find('=') == std::string::npos
                                      ? st::prior_family_from_spec({{"family", family}})
                                      : st::prior_family_from_spec(st::parse_prior_spec(family));
      Sink sink(g.out);
      auto& out = sink.get();
      if (verify) {
        const auto model = st::TwoGroupModel::from_c_psi(n, p, c_psi);
        const auto rec = st::verify_condition4(st::simple_count_estimator, model, targets,
                                               replicates, g.seed, g.threads);
        json j = {{"estimator", estimator},
                  {"n", n},
                  {"p", p},
                  {"c_psi", c_psi},
                  {"c_upper", targets.c_upper},
                  {"c_d", targets.c_d},
                  {"C_d", targets.C_d},
                  {"zeta", targets.zeta},
                  {"K", targets.K},
                  {"upper_bound", rec.upper_bound},
                  {"lower_bound", rec.lower_bound},
                  {"upper", frequency_json(rec.upper)},
                  {"lower", frequency_json(rec.lower)},
                  {"passed", rec.passed()},
                  {"seed", rec.seed}};
        out << j.dump(2) << '\n';
      } else {
        if (input.empty()) throw st::ValidationError("--input: required unless --verify");
        const auto x = read_observations(input);
        const auto res = st::adaptive_threshold_test(fam, x, alpha);
        out << "# p_hat=" << format_double(res.estimate.p_hat)
            << "\n# estimator=" << res.estimate.rule_id
            << "\n# x_star=" << format_double(res.x_star) << '\n';
        write_decisions(out, x, res.decisions);
      }
    } else if (*sim) {
      auto config = st::load_experiment_config(config_path);
      if (app.get_option("--threads")->count() > 0) {
        config.threads = g.threads;
      }
      if (app.get_option("--seed")->count() > 0) config.seed = g.seed;
      const std::string out_path = !g.out.empty() ? g.out : config.output;
      std::optional<st::PlotKind> kind;
      if (!plot.empty()) kind = st::parse_plot_kind(plot);
      Sink sink(out_path);
      const auto table = st::run_experiment(config, &sink.get());
      if (kind) {
        if (out_path.empty()) throw st::ValidationError("--plot: needs --out or experiment.output");
        const auto csv = std::filesystem::path(out_path);
        const auto script_path = csv.parent_path() / (csv.stem().string() + "_plot.py");
        std::ofstream script(script_path);
        script << st::emit_plot_script(table, *kind, csv.filename().string());
      }
    }
  } catch (const st::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const st::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
