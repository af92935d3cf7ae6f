#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "shrinktest/risk_analysis.hpp"

namespace shrinktest {

struct SparsityEstimate {
  double p_hat = 1.0;  // in [1, n]
  std::string rule_id;
  double threshold_used = 0.0;
};

using SparsityEstimator = std::function<SparsityEstimate(std::span<const double>)>;

// p_hat = #{i : |X_i| >= sqrt(2 log n)} v 1. Requires n >= 2.
SparsityEstimate simple_count_estimator(std::span<const double> data);

// A prior family indexed by the sparsity level p (e.g. horseshoe, tau = p/n).
struct PriorFamily {
  std::string name;
  std::function<ScaleMixturePrior(long n, double p)> make;
};

PriorFamily horseshoe_family();
// Family from a key-value prior spec; n and p are filled in per call. For the
// horseshoe, tau follows p/n unless the spec pins it.
PriorFamily prior_family_from_spec(const PriorSpec& spec);

struct AdaptiveDecision {
  DecisionVector decisions;
  SparsityEstimate estimate;
  double x_star = 0.0;
};

// Empirical-Bayes plug-in: estimate p, build the family member with p = p_hat
// and run threshold_test. Curves are cached per p_hat, so repeated calls with
// the same estimate reuse the threshold. Thread safe.
class AdaptiveThresholdTester {
 public:
  AdaptiveThresholdTester(PriorFamily family, double alpha,
                          SparsityEstimator estimator = simple_count_estimator);

  AdaptiveDecision operator()(std::span<const double> data) const;

  // The curve used when the estimate equals p_hat for data of length n.
  std::shared_ptr<const ShrinkageCurve> curve_for(long n, double p_hat) const;

  // Distinct (n, p_hat) pairs seen so far, in increasing order.
  std::vector<std::pair<long, double>> cached_estimates() const;

 private:
  struct Cache {
    std::mutex mutex;
    std::map<std::pair<long, double>, std::shared_ptr<const ShrinkageCurve>> curves;
  };

  PriorFamily family_;
  double alpha_;
  SparsityEstimator estimator_;
  std::shared_ptr<Cache> cache_;
};

AdaptiveDecision adaptive_threshold_test(const PriorFamily& family, std::span<const double> data,
                                         double alpha,
                                         const SparsityEstimator& estimator = simple_count_estimator);

// Targets for the two estimator events of the adaptive Bayes-risk condition:
//   upper: p_hat <= C^u p_n
//   lower: p_hat >= c_d p_n (n/p_n)^{-zeta} exp(-C_d sqrt(K log(n/p_n)))
// The asymptotic "1 - o(p_n/n)" and "1 - o(1)" requirements are replaced by
// finite-n surrogates: upper frequency >= 1 - upper_slack p_n/n and lower
// frequency >= lower_target.
struct Condition4Targets {
  double c_upper = 2.0;  // C^u
  double c_d = 1.0;
  double C_d = 2.0;
  double zeta = 0.0;
  double K = 1.0;
  double upper_slack = 10.0;
  double lower_target = 0.95;
};

struct FrequencyEstimate {
  long hits = 0;
  long trials = 0;
  double frequency = 0.0;
  double wilson_low = 0.0;
  double wilson_high = 1.0;
  double target = 0.0;
  bool passed = false;
};

struct Condition4Record {
  FrequencyEstimate upper;
  FrequencyEstimate lower;
  double upper_bound = 0.0;  // C^u p_n
  double lower_bound = 0.0;  // the lower-event cutoff for p_hat
  std::uint64_t seed = 0;

  bool passed() const { return upper.passed && lower.passed; }
};

// 95% Wilson score interval.
FrequencyEstimate wilson_interval(long hits, long trials, double target);

// Requires replicates >= 100. Datasets come from draw_two_group, so results
// are deterministic in seed for any thread count.
Condition4Record verify_condition4(const SparsityEstimator& estimator, const TwoGroupModel& model,
                                   const Condition4Targets& targets, long replicates,
                                   std::uint64_t seed, int threads = 1);

// p_n (8 sqrt(pi) C C^u/(c alpha) + 2 Phi(sqrt(2 K (u0+1)(1+zeta) C_psi)) - 1).
double theorem3_bound(const ScaleMixturePrior& prior, const TwoGroupModel& model, double alpha,
                      double C, double c, double c_upper, double zeta);

// rho_n = C1 + sqrt(2 K (u0+1) log(n/gamma_n)) + v_n, gamma_n in [1, n).
double adaptive_separation_rate(const ScaleMixturePrior& prior, double gamma_n, double c1,
                                double v_n);

// 1/(1 + lambda alpha c/(8 C^u C sqrt(pi))) + Phi(-v_n), 0 < lambda < Phi(v_n).
double theorem4_bound(double lambda, double alpha, double C, double c, double c_upper,
                      double v_n);

}  // namespace shrinktest
