#include "shrinktest/risk_analysis.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "shrinktest/errors.hpp"
#include "shrinktest/parallel.hpp"
#include "shrinktest/rng.hpp"

namespace shrinktest {

namespace {

constexpr std::uint64_t kStreamTwoGroup = 0;
constexpr std::uint64_t kStreamNoise = 1;

struct MeanSe {
  double mean = NAN;
  double se = 0.0;
};

// Mean and standard error over replicates; NaN fields are skipped. Summation
// order is fixed by the replicate index.
MeanSe summarize(const std::vector<ReplicateRisk>& reps, double ReplicateRisk::*field) {
  std::vector<double> v;
  v.reserve(reps.size());
  for (const auto& r : reps) {
    if (!std::isnan(r.*field)) v.push_back(r.*field);
  }
  MeanSe out;
  if (v.empty()) return out;
  const double k = static_cast<double>(v.size());
  out.mean = pairwise_sum(v) / k;
  if (v.size() > 1) {
    std::vector<double> dev(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) dev[i] = (v[i] - out.mean) * (v[i] - out.mean);
    out.se = std::sqrt(pairwise_sum(dev) / (k - 1.0) / k);
  }
  return out;
}

RiskReport aggregate(std::vector<ReplicateRisk> reps) {
  RiskReport r;
  r.n_replicates = static_cast<long>(reps.size());
  const auto t1 = summarize(reps, &ReplicateRisk::type1);
  const auto t2 = summarize(reps, &ReplicateRisk::type2);
  const auto br = summarize(reps, &ReplicateRisk::bayes_risk);
  const auto fdr = summarize(reps, &ReplicateRisk::fdr);
  const auto fnr = summarize(reps, &ReplicateRisk::fnr);
  r.type1 = t1.mean;
  r.se.type1 = t1.se;
  r.type2 = t2.mean;
  r.se.type2 = t2.se;
  r.bayes_risk = br.mean;
  r.se.bayes_risk = br.se;
  r.fdr = fdr.mean;
  r.se.fdr = fdr.se;
  r.fnr = fnr.mean;
  r.se.fnr = fnr.se;
  if (!std::isnan(r.fdr) && !std::isnan(r.fnr)) {
    r.rsup = r.fdr + r.fnr;
    std::vector<ReplicateRisk> sums = reps;
    for (auto& s : sums) s.fdr = s.rsup();
    r.se.rsup = summarize(sums, &ReplicateRisk::fdr).se;
  }
  r.replicates = std::move(reps);
  return r;
}

void check_replicates(long replicates) {
  if (replicates < 1) {
    throw ValidationError("replicates must be at least 1");
  }
}

}  // namespace

std::vector<double> SparseSignal::dense() const {
  std::vector<double> theta(static_cast<std::size_t>(n), 0.0);
  for (std::size_t k = 0; k < support.size(); ++k) theta[support[k]] = values[k];
  return theta;
}

void SparseSignal::validate() const {
  if (n < 1) throw ValidationError("signal: n must be positive");
  if (support.size() != values.size()) {
    throw ValidationError("signal: support and values differ in length");
  }
  if (support.size() > static_cast<std::size_t>(n)) {
    throw ValidationError("signal: support larger than n");
  }
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(n), 0);
  for (std::size_t k = 0; k < support.size(); ++k) {
    if (support[k] >= static_cast<std::size_t>(n) || seen[support[k]]) {
      throw ValidationError("signal: support indices must be distinct and < n");
    }
    seen[support[k]] = 1;
    if (values[k] == 0.0 || !std::isfinite(values[k])) {
      throw ValidationError("signal: values on the support must be finite and nonzero");
    }
  }
}

SparseSignal SparseSignal::flat(long n, std::size_t p_n, double magnitude) {
  SparseSignal s;
  s.n = n;
  s.support.resize(p_n);
  for (std::size_t k = 0; k < p_n; ++k) s.support[k] = k;
  s.values.assign(p_n, magnitude);
  s.validate();
  return s;
}

RiskReport bayes_risk_analytic(const TwoGroupModel& model, double x_star) {
  model.validate();
  if (!(x_star >= 0.0)) {
    throw ValidationError("bayes_risk_analytic: x* must be nonnegative");
  }
  RiskReport r;
  const double n = static_cast<double>(model.n);
  r.type1 = std::isinf(x_star) ? 0.0 : two_sided_p(x_star);
  const double z = x_star / model.alternative_sd();
  // 2 Phi(z) - 1 = erf(z / sqrt 2)
  r.type2 = std::isinf(z) ? 1.0 : std::erf(z / std::numbers::sqrt2);
  r.bayes_risk = (n - model.p_n) * r.type1 + model.p_n * r.type2;
  return r;
}

double oracle_risk(const TwoGroupModel& model) {
  if (!(model.c_psi > 0.0)) {
    throw ValidationError("oracle_risk: C_psi must be positive");
  }
  return model.p_n * (2.0 * normal_cdf(std::sqrt(model.c_psi)) - 1.0);
}

TwoGroupDraw draw_two_group(const TwoGroupModel& model, std::uint64_t seed, long replicate) {
  CounterRng rng(seed, static_cast<std::uint64_t>(replicate), kStreamTwoGroup);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double w = model.mixture_weight();
  const double sd_alt = model.alternative_sd();
  TwoGroupDraw d;
  d.x.resize(static_cast<std::size_t>(model.n));
  d.signal.resize(static_cast<std::size_t>(model.n));
  for (std::size_t i = 0; i < d.x.size(); ++i) {
    const bool alt = unif(rng) < w;
    d.signal[i] = alt;
    d.x[i] = normal(rng) * (alt ? sd_alt : 1.0);
  }
  return d;
}

RiskReport bayes_risk_mc(const TwoGroupModel& model, const Procedure& procedure,
                         long replicates, std::uint64_t seed, int threads) {
  model.validate();
  check_replicates(replicates);
  auto reps = parallel_map<ReplicateRisk>(
      static_cast<std::size_t>(replicates), threads, [&](std::size_t rep) {
        const auto draw = draw_two_group(model, seed, static_cast<long>(rep));
        const auto dec = procedure(draw.x);
        if (dec.size() != draw.x.size()) {
          throw ValidationError("procedure returned the wrong number of decisions");
        }
        long fp = 0, fn = 0, nulls = 0, alts = 0;
        for (std::size_t i = 0; i < draw.x.size(); ++i) {
          if (draw.signal[i]) {
            ++alts;
            fn += dec.decisions[i] == 0;
          } else {
            ++nulls;
            fp += dec.decisions[i] == 1;
          }
        }
        ReplicateRisk r;
        r.type1 = nulls > 0 ? static_cast<double>(fp) / nulls : NAN;
        r.type2 = alts > 0 ? static_cast<double>(fn) / alts : NAN;
        r.bayes_risk = static_cast<double>(fp + fn);
        return r;
      });
  return aggregate(std::move(reps));
}

RiskReport fdr_fnr_mc(const Procedure& procedure, const SparseSignal& signal, long replicates,
                      std::uint64_t seed, int threads) {
  signal.validate();
  check_replicates(replicates);
  if (signal.p_n() == 0) {
    throw ValidationError("fdr_fnr_mc: FNR is undefined for an empty support (p_n = 0)");
  }
  const auto theta = signal.dense();
  std::vector<std::uint8_t> on_support(theta.size(), 0);
  for (auto i : signal.support) on_support[i] = 1;
  const double p_n = static_cast<double>(signal.p_n());

  auto reps = parallel_map<ReplicateRisk>(
      static_cast<std::size_t>(replicates), threads, [&](std::size_t rep) {
        CounterRng rng(seed, rep, kStreamNoise);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::vector<double> x(theta.size());
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = theta[i] + normal(rng);
        const auto dec = procedure(x);
        long false_rej = 0, rej = 0, missed = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
          rej += dec.decisions[i];
          if (on_support[i]) {
            missed += dec.decisions[i] == 0;
          } else {
            false_rej += dec.decisions[i];
          }
        }
        ReplicateRisk r;
        r.fdr = static_cast<double>(false_rej) / static_cast<double>(std::max(rej, 1L));
        r.fnr = static_cast<double>(missed) / p_n;
        return r;
      });
  return aggregate(std::move(reps));
}

RiskReport fdr_fnr_mc(const ShrinkageCurve& curve, const SparseSignal& signal, double alpha,
                      long replicates, std::uint64_t seed, int threads) {
  // Resolve x* once, before fanning out.
  curve.decision_threshold(alpha);
  Procedure proc = [&curve, alpha](std::span<const double> x) {
    return threshold_test(curve, x, alpha);
  };
  return fdr_fnr_mc(proc, signal, replicates, seed, threads);
}

namespace {

void require_constants(double C, double c, double alpha) {
  if (!(C >= 0.0) || !std::isfinite(C)) {
    throw ValidationError("bound: condition-3 constant C must be finite and >= 0");
  }
  if (!(c > 0.0)) {
    throw ValidationError("bound: condition-2 constant c must be positive");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ValidationError("bound: alpha must lie in (0, 1)");
  }
}

double declared_k(const ScaleMixturePrior& prior) {
  const auto& k = prior.constants().lower_exponent;
  if (!k) {
    throw ValidationError("bound: prior does not declare K");
  }
  return *k;
}

}  // namespace

double theorem1_bound(const ScaleMixturePrior& prior, const TwoGroupModel& model, double alpha,
                      double C, double c) {
  require_constants(C, c, alpha);
  const double k = declared_k(prior);
  const double u0 = prior.constants().rv_onset;
  const double type1_term = 8.0 * std::sqrt(std::numbers::pi) * C / (c * alpha);
  const double type2_term = 2.0 * normal_cdf(std::sqrt(2.0 * k * (u0 + 1.0) * model.c_psi)) - 1.0;
  return model.p_n * (type1_term + type2_term);
}

double separation_rate(const ScaleMixturePrior& prior, double p, double c1, double v_n) {
  const double n = static_cast<double>(prior.sparsity().n);
  if (!(p > 0.0 && p < n)) {
    throw ValidationError("separation_rate: need 0 < p < n");
  }
  const double k = declared_k(prior);
  const double u0 = prior.constants().rv_onset;
  return c1 + std::sqrt(2.0 * k * (u0 + 1.0) * std::log(n / p)) + v_n;
}

double theorem2_bound(double lambda, double alpha, double C, double c, double v_n) {
  if (!(lambda > 0.0 && lambda < 1.0)) {
    throw ValidationError("theorem2_bound: lambda must lie in (0, 1)");
  }
  require_constants(C, c, alpha);
  const double ratio = lambda * alpha * c / (8.0 * C * std::sqrt(std::numbers::pi));
  return 1.0 / (1.0 + ratio) + normal_cdf(-v_n);
}

}  // namespace shrinktest
