#include "shrinktest/adaptive_estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "shrinktest/errors.hpp"
#include "shrinktest/parallel.hpp"
#include "shrinktest/text.hpp"

namespace shrinktest {

SparsityEstimate simple_count_estimator(std::span<const double> data) {
  const std::size_t n = data.size();
  if (n < 2) {
    throw ValidationError("simple_count_estimator: need at least 2 observations");
  }
  const double t = std::sqrt(2.0 * std::log(static_cast<double>(n)));
  const auto count = std::count_if(data.begin(), data.end(),
                                   [t](double x) { return std::abs(x) >= t; });
  return {std::max<double>(1.0, static_cast<double>(count)), "simple", t};
}

PriorFamily horseshoe_family() {
  return {"horseshoe", [](long n, double p) {
            return horseshoe_prior(p / static_cast<double>(n), n, p);
          }};
}

PriorFamily prior_family_from_spec(const PriorSpec& spec) {
  auto base = spec;
  base.erase("n");
  base.erase("p");
  // Validate eagerly so a bad spec fails before any data is touched.
  {
    auto probe = base;
    probe["n"] = "100";
    probe["p"] = "1";
    make_prior(probe);
  }
  const auto fam = base.at("family");
  return {fam, [base](long n, double p) {
            auto s = base;
            s["n"] = std::to_string(n);
            s["p"] = text::format_double(p);
            return make_prior(s);
          }};
}

AdaptiveThresholdTester::AdaptiveThresholdTester(PriorFamily family, double alpha,
                                                 SparsityEstimator estimator)
    : family_(std::move(family)),
      alpha_(alpha),
      estimator_(std::move(estimator)),
      cache_(std::make_shared<Cache>()) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ValidationError("adaptive test: alpha must lie in (0, 1)");
  }
}

std::shared_ptr<const ShrinkageCurve> AdaptiveThresholdTester::curve_for(long n,
                                                                       double p_hat) const {
  const auto key = std::make_pair(n, p_hat);
  {
    std::lock_guard lock(cache_->mutex);
    if (auto it = cache_->curves.find(key); it != cache_->curves.end()) return it->second;
  }
  // The prior needs p < n; an estimate of n (everything flagged) maps to n - 1/2.
  const double p = std::min(p_hat, static_cast<double>(n) - 0.5);
  auto curve = std::make_shared<const ShrinkageCurve>(family_.make(n, p));
  curve->decision_threshold(alpha_);
  std::lock_guard lock(cache_->mutex);
  return cache_->curves.emplace(key, std::move(curve)).first->second;
}

std::vector<std::pair<long, double>> AdaptiveThresholdTester::cached_estimates() const {
  std::lock_guard lock(cache_->mutex);
  std::vector<std::pair<long, double>> out;
  out.reserve(cache_->curves.size());
  for (const auto& [key, curve] : cache_->curves) out.push_back(key);
  return out;
}

AdaptiveDecision AdaptiveThresholdTester::operator()(std::span<const double> data) const {
  AdaptiveDecision out;
  out.estimate = estimator_(data);
  const long n = static_cast<long>(data.size());
  if (!(out.estimate.p_hat >= 1.0 && out.estimate.p_hat <= static_cast<double>(n))) {
    throw ValidationError("sparsity estimate outside [1, n]");
  }
  const auto curve = curve_for(n, out.estimate.p_hat);
  out.decisions = threshold_test(*curve, data, alpha_);
  out.decisions.procedure_id = "adaptive_" + family_.name;
  out.x_star = curve->decision_threshold(alpha_);
  return out;
}

AdaptiveDecision adaptive_threshold_test(const PriorFamily& family, std::span<const double> data,
                                         double alpha, const SparsityEstimator& estimator) {
  return AdaptiveThresholdTester(family, alpha, estimator)(data);
}

FrequencyEstimate wilson_interval(long hits, long trials, double target) {
  FrequencyEstimate f;
  f.hits = hits;
  f.trials = trials;
  f.target = target;
  if (trials <= 0) return f;
  constexpr double z = 1.959963984540054;
  const double k = static_cast<double>(trials);
  const double ph = static_cast<double>(hits) / k;
  const double denom = 1.0 + z * z / k;
  const double center = (ph + z * z / (2.0 * k)) / denom;
  const double half = z * std::sqrt(ph * (1.0 - ph) / k + z * z / (4.0 * k * k)) / denom;
  f.frequency = ph;
  f.wilson_low = std::max(0.0, center - half);
  f.wilson_high = std::min(1.0, center + half);
  f.passed = ph >= target;
  return f;
}

Condition4Record verify_condition4(const SparsityEstimator& estimator, const TwoGroupModel& model,
                                   const Condition4Targets& targets, long replicates,
                                   std::uint64_t seed, int threads) {
  model.validate();
  if (replicates < 100) {
    throw ValidationError("verify_condition4: need at least 100 replicates");
  }
  if (!(targets.c_upper > 0.0 && targets.c_d > 0.0 && targets.C_d >= 0.0 &&
        targets.zeta >= 0.0 && targets.K >= 0.0)) {
    throw ValidationError("verify_condition4: need C^u > 0, c_d > 0, C_d >= 0, zeta >= 0, K >= 0");
  }
  const double n = static_cast<double>(model.n);
  const double p = model.p_n;
  Condition4Record rec;
  rec.seed = seed;
  rec.upper_bound = targets.c_upper * p;
  rec.lower_bound = targets.c_d * p * std::pow(n / p, -targets.zeta) *
                    std::exp(-targets.C_d * std::sqrt(targets.K * std::log(n / p)));

  const auto estimates = parallel_map<double>(
      static_cast<std::size_t>(replicates), threads, [&](std::size_t rep) {
        const auto draw = draw_two_group(model, seed, static_cast<long>(rep));
        return estimator(draw.x).p_hat;
      });
  long upper_hits = 0, lower_hits = 0;
  for (double ph : estimates) {
    upper_hits += ph <= rec.upper_bound;
    lower_hits += ph >= rec.lower_bound;
  }
  rec.upper = wilson_interval(upper_hits, replicates, 1.0 - targets.upper_slack * p / n);
  rec.lower = wilson_interval(lower_hits, replicates, targets.lower_target);
  return rec;
}

double theorem3_bound(const ScaleMixturePrior& prior, const TwoGroupModel& model, double alpha,
                      double C, double c, double c_upper, double zeta) {
  if (!(C >= 0.0) || !std::isfinite(C) || !(c > 0.0) || !(alpha > 0.0 && alpha < 1.0)) {
    throw ValidationError("theorem3_bound: need C >= 0, c > 0, alpha in (0,1)");
  }
  if (!(c_upper > 0.0) || !(zeta >= 0.0)) {
    throw ValidationError("theorem3_bound: need C^u > 0 and zeta >= 0");
  }
  const auto& k = prior.constants().lower_exponent;
  if (!k) throw ValidationError("theorem3_bound: prior does not declare K");
  const double u0 = prior.constants().rv_onset;
  const double type1 = 8.0 * std::sqrt(std::numbers::pi) * C * c_upper / (c * alpha);
  const double type2 =
      2.0 * normal_cdf(std::sqrt(2.0 * *k * (u0 + 1.0) * (1.0 + zeta) * model.c_psi)) - 1.0;
  return model.p_n * (type1 + type2);
}

double adaptive_separation_rate(const ScaleMixturePrior& prior, double gamma_n, double c1,
                                double v_n) {
  const double n = static_cast<double>(prior.sparsity().n);
  if (!(gamma_n >= 1.0 && gamma_n < n)) {
    throw ValidationError("adaptive_separation_rate: need 1 <= gamma_n < n");
  }
  return separation_rate(prior, gamma_n, c1, v_n);
}

double theorem4_bound(double lambda, double alpha, double C, double c, double c_upper,
                      double v_n) {
  if (!(lambda > 0.0 && lambda < normal_cdf(v_n))) {
    throw ValidationError("theorem4_bound: lambda must lie in (0, Phi(v_n))");
  }
  if (!(c_upper > 0.0)) {
    throw ValidationError("theorem4_bound: C^u must be positive");
  }
  // Same form as the non-adaptive bound with C replaced by C^u C.
  if (!(alpha > 0.0 && alpha < 1.0) || !(c > 0.0) || !(C >= 0.0)) {
    throw ValidationError("theorem4_bound: need alpha in (0,1), c > 0, C >= 0");
  }
  const double ratio = lambda * alpha * c / (8.0 * c_upper * C * std::sqrt(std::numbers::pi));
  return 1.0 / (1.0 + ratio) + normal_cdf(-v_n);
}

}  // namespace shrinktest
