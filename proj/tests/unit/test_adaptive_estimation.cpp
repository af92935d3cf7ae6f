#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "shrinktest/adaptive_estimation.hpp"
#include "shrinktest/errors.hpp"
#include "shrinktest/rng.hpp"

using namespace shrinktest;
using doctest::Approx;

namespace {

SparsityEstimator constant_estimator(double value) {
  return [value](std::span<const double>) { return SparsityEstimate{value, "constant", 0.0}; };
}

}  // namespace

TEST_CASE("simple count estimator") {
  const std::vector<double> zeros(100, 0.0);
  const auto e = simple_count_estimator(zeros);
  CHECK(e.p_hat == 1.0);
  CHECK(e.rule_id == "simple");
  CHECK(e.threshold_used == Approx(std::sqrt(2.0 * std::log(100.0))));

  for (int k : {1, 3, 17}) {
    std::vector<double> x(100, 0.0);
    for (int i = 0; i < k; ++i) x[i * 5] = 1e7;
    CHECK(simple_count_estimator(x).p_hat == k);
  }
  CHECK_THROWS_AS(simple_count_estimator(std::vector<double>{1.0}), ValidationError);
}

TEST_CASE("simple estimator is sign-flip equivariant and monotone in |x|") {
  CounterRng rng(3, 0, 5);
  std::normal_distribution<double> z(0.0, 2.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(500);
    for (auto& v : x) v = z(rng);
    auto flipped = x;
    auto bigger = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (unit(rng) < 0.5) flipped[i] = -flipped[i];
      bigger[i] *= 1.0 + unit(rng);
    }
    const double base = simple_count_estimator(x).p_hat;
    CHECK(simple_count_estimator(flipped).p_hat == base);
    CHECK(simple_count_estimator(bigger).p_hat >= base);
  }
}

TEST_CASE("verify_condition4 with degenerate estimators") {
  const auto model = TwoGroupModel::from_c_psi(10000, 100, 1.0);
  Condition4Targets targets;

  const auto all = verify_condition4(constant_estimator(10000.0), model, targets, 100, 1);
  CHECK(all.lower.passed);
  CHECK(all.lower.frequency == 1.0);
  CHECK_FALSE(all.upper.passed);
  CHECK(all.upper.frequency == 0.0);

  const auto one = verify_condition4(constant_estimator(1.0), model, targets, 100, 1);
  CHECK(one.upper.passed);
  CHECK(one.lower.passed == (one.lower_bound <= 1.0));
  // Push the lower cutoff above one.
  targets.C_d = 0.0;
  const auto strict = verify_condition4(constant_estimator(1.0), model, targets, 100, 1);
  CHECK(strict.lower_bound == Approx(100.0));
  CHECK_FALSE(strict.lower.passed);

  CHECK_THROWS_AS(verify_condition4(simple_count_estimator, model, {}, 99, 1), ValidationError);
}

TEST_CASE("simple estimator satisfies the estimator condition at n = 10^4, p = 100") {
  const auto model = TwoGroupModel::from_c_psi(10000, 100, 1.0);
  Condition4Targets targets;  // C^u = 2, zeta = 0
  const auto rec = verify_condition4(simple_count_estimator, model, targets, 1000, 77, 0);
  CHECK(rec.passed());
  CHECK(rec.upper.target == Approx(0.9));
  CHECK(rec.upper.wilson_low <= rec.upper.frequency);
  CHECK(rec.upper.frequency <= rec.upper.wilson_high);

  const auto again = verify_condition4(simple_count_estimator, model, targets, 1000, 77, 1);
  CHECK(again.upper.hits == rec.upper.hits);
  CHECK(again.lower.hits == rec.lower.hits);
}

TEST_CASE("Wilson interval") {
  const auto f = wilson_interval(50, 100, 0.4);
  CHECK(f.frequency == 0.5);
  CHECK(f.wilson_low == Approx(0.4038).epsilon(1e-3));
  CHECK(f.wilson_high == Approx(0.5962).epsilon(1e-3));
  CHECK(f.passed);
  const auto all = wilson_interval(100, 100, 0.99);
  CHECK(all.wilson_high == 1.0);
  CHECK(all.wilson_low < 1.0);
}

TEST_CASE("adaptive threshold test") {
  const auto family = horseshoe_family();
  SUBCASE("zero data") {
    const std::vector<double> zeros(1000, 0.0);
    const auto r = adaptive_threshold_test(family, zeros, 0.5);
    CHECK(r.estimate.p_hat == 1.0);
    CHECK(r.decisions.rejections() == 0);
  }
  SUBCASE("forcing p_hat = p_n reproduces the fixed-p pipeline") {
    CounterRng rng(8, 0, 2);
    std::normal_distribution<double> z(0.0, 2.5);
    std::vector<double> x(10000);
    for (auto& v : x) v = z(rng);
    const auto r = adaptive_threshold_test(family, x, 0.5, constant_estimator(100.0));
    const auto fixed = threshold_test(ShrinkageCurve(horseshoe_prior(0.01, 10000, 100)), x, 0.5);
    CHECK(r.decisions.decisions == fixed.decisions);
    CHECK(r.x_star == ShrinkageCurve(horseshoe_prior(0.01, 10000, 100)).decision_threshold(0.5));
  }
  SUBCASE("an estimate of n is clamped rather than rejected") {
    const std::vector<double> big(10, 50.0);
    const auto r = adaptive_threshold_test(family, big, 0.5);
    CHECK(r.estimate.p_hat == 10.0);
    CHECK(r.decisions.rejections() == 10);
  }
  SUBCASE("the tester caches one curve per estimate") {
    AdaptiveThresholdTester tester(family, 0.5);
    std::vector<double> x(100, 0.0);
    tester(x);
    x[0] = 1e3;
    tester(x);
    tester(x);
    CHECK(tester.cached_estimates().size() == 1);  // p_hat = 1 both times
    x[1] = 1e3;
    tester(x);
    CHECK(tester.cached_estimates().size() == 2);
  }
  SUBCASE("families from specs") {
    const auto exp_family = prior_family_from_spec({{"family", "exponential"}, {"rate", "2"}});
    CHECK(exp_family.make(100, 5).family() == "exponential");
    CHECK_THROWS_AS(prior_family_from_spec({{"family", "nope"}}), ValidationError);
    CHECK_THROWS_AS(AdaptiveThresholdTester(family, 1.5), ValidationError);
  }
}

TEST_CASE("adaptive bounds reduce to the fixed-p bounds") {
  const auto prior = horseshoe_prior(0.01, 10000, 100);
  const auto model = TwoGroupModel::from_c_psi(10000, 100, 1.0);
  CHECK(theorem3_bound(prior, model, 0.5, 0.4, 0.9, 1.0, 0.0) ==
        Approx(theorem1_bound(prior, model, 0.5, 0.4, 0.9)).epsilon(1e-14));
  CHECK(theorem3_bound(prior, model, 0.5, 0.4, 0.9, 2.0, 0.5) >
        theorem1_bound(prior, model, 0.5, 0.4, 0.9));
  CHECK(adaptive_separation_rate(prior, 100, 0.5, 3.0) == separation_rate(prior, 100, 0.5, 3.0));
  CHECK(adaptive_separation_rate(prior, 1, 0.0, 0.0) ==
        Approx(std::sqrt(4.0 * std::log(10000.0))));
  CHECK_THROWS_AS(adaptive_separation_rate(prior, 0.5, 0.0, 0.0), ValidationError);
  CHECK(theorem4_bound(0.5, 0.5, 1e-3, 0.5, 1.0, 3.0) ==
        Approx(theorem2_bound(0.5, 0.5, 1e-3, 0.5, 3.0)).epsilon(1e-14));
  // lambda may exceed 1/2 but not Phi(v_n).
  CHECK_NOTHROW(theorem4_bound(0.99, 0.5, 1e-3, 0.5, 2.0, 3.0));
  CHECK_THROWS_AS(theorem4_bound(0.999, 0.5, 1e-3, 0.5, 2.0, 3.0), ValidationError);
  CHECK_THROWS_AS(theorem3_bound(prior, model, 0.5, 0.4, 0.9, 0.0, 0.0), ValidationError);
}
