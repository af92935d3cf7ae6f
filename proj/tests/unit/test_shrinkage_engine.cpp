#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <thread>
#include <vector>

#include "oracles.hpp"
#include "shrinktest/errors.hpp"
#include "shrinktest/shrinkage_engine.hpp"

using namespace shrinktest;
using doctest::Approx;

namespace {

// Bisection on the oracle curve, used to pin x*.
double oracle_threshold(const oracle::ShrinkageOracle& m, double alpha) {
  double lo = 0.0, hi = 1.0;
  while (m(hi) < alpha) hi *= 2.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (m(mid) < alpha ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("horseshoe tau = 0.05 matches the brute-force oracle") {
  const ShrinkageCurve curve(horseshoe_prior(0.05, 100, 5));
  const oracle::ShrinkageOracle ref(
      [](oracle::real u) { return oracle::horseshoe_density(u, 0.05L); });
  for (int x = 0; x <= 10; ++x) {
    CHECK(std::abs(curve.shrinkage_weight(x) - ref(x)) <= 1e-6);
  }
  // Large signals are barely shrunk.
  const double m8 = ref(8.0);
  CHECK(m8 >= 7.0 / 8.0);
  CHECK(std::abs(curve.posterior_mean(8.0) - 8.0) <= 1.0);
  CHECK(curve.posterior_mean(8.0) == Approx(8.0 * m8).epsilon(1e-6));
}

TEST_CASE("no overflow for large |x|") {
  const ShrinkageCurve curve(horseshoe_prior(0.05, 100, 5));
  // 1 - m_x decays like 2/x^2, so m_40 is still just below 0.999.
  CHECK(curve.shrinkage_weight(40.0) > 0.998);
  for (double x : {100.0, 300.0, -300.0, 1e3}) {
    const double m = curve.shrinkage_weight(x);
    CHECK(std::isfinite(m));
    CHECK(m > 0.999);
    CHECK(m <= 1.0);
  }
}

TEST_CASE("curve properties on a 1000-point grid") {
  for (const auto& prior :
       {horseshoe_prior(0.01, 10000, 100), horseshoe_prior(1e-6, 1000000, 1),
        exponential_prior(1.0, 100, 10), inverse_gamma_prior(1.0, 1.0, 100, 10)}) {
    const ShrinkageCurve curve(prior);
    double previous = -1.0;
    for (int k = 0; k < 1000; ++k) {
      const double x = 25.0 * k / 999.0;
      const double m = curve.shrinkage_weight(x);
      CHECK(m >= 0.0);
      CHECK(m <= 1.0);
      CHECK(m == curve.shrinkage_weight(-x));
      CHECK(m >= previous - 1e-12);
      CHECK(curve.posterior_mean(-x) == -curve.posterior_mean(x));
      CHECK(std::abs(curve.posterior_mean(x)) <= std::abs(x));
      previous = m;
    }
  }
  CHECK(ShrinkageCurve(horseshoe_prior(1.0, 100, 1)).posterior_mean(0.0) == 0.0);
}

TEST_CASE("m_50 is near one for every tau down to 1e-6") {
  for (double tau : {1.0, 0.1, 1e-2, 1e-4, 1e-6}) {
    CHECK(ShrinkageCurve(horseshoe_prior(tau, 1000000, 1)).shrinkage_weight(50.0) >= 0.999);
  }
}

TEST_CASE("decision threshold") {
  const ShrinkageCurve curve(horseshoe_prior(0.01, 10000, 100));

  SUBCASE("round trip") {
    for (double alpha : {0.1, 0.25, 0.5, 0.75, 0.9}) {
      const double x = curve.decision_threshold(alpha);
      CHECK(std::abs(curve.shrinkage_weight(x) - alpha) <= 1e-9);
    }
  }
  SUBCASE("monotone in alpha") {
    double previous = 0.0;
    for (double alpha : {0.05, 0.1, 0.3, 0.5, 0.7, 0.9, 0.95}) {
      const double x = curve.decision_threshold(alpha);
      CHECK(x >= previous);
      previous = x;
    }
  }
  SUBCASE("n = 200, p = 10 against oracle bisection") {
    const double tau = 10.0 / 200.0;
    const ShrinkageCurve c(horseshoe_prior(tau, 200, 10));
    const oracle::ShrinkageOracle ref(
        [tau](oracle::real u) { return oracle::horseshoe_density(u, tau); });
    const double x = c.decision_threshold(0.5);
    CHECK(x == Approx(oracle_threshold(ref, 0.5)).epsilon(1e-6));
    CHECK(x >= std::sqrt(2.0 * std::log(20.0)) - 2.0);
    CHECK(x <= std::sqrt(2.0 * std::log(200.0)) + 2.0);
    // Below x* nothing is rejected, above it everything is.
    CHECK(ref(x - 1e-3) < 0.5);
    CHECK(ref(x + 1e-3) > 0.5);
  }
  SUBCASE("cached value is reused and stable") {
    const double a = curve.decision_threshold(0.5);
    const ShrinkageCurve copy = curve;
    CHECK(copy.decision_threshold(0.5) == a);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(curve.decision_threshold(0.0), ValidationError);
    CHECK_THROWS_AS(curve.decision_threshold(1.0), ValidationError);
    // m_0 is about 0.0063 here, so alpha below it rejects everything.
    CHECK_THROWS_AS(curve.decision_threshold(1e-4), AlwaysRejectError);
    // tau = 1 puts m_0 near 1/3.
    CHECK_THROWS_AS(ShrinkageCurve(horseshoe_prior(1.0, 100, 10)).decision_threshold(0.2),
                    AlwaysRejectError);
    CHECK_THROWS_AS(curve.decision_threshold(1.0 - 1e-15), NoCrossingError);
  }
}

TEST_CASE("threshold queries are safe across threads") {
  const ShrinkageCurve curve(horseshoe_prior(0.01, 10000, 100));
  std::vector<double> got(8);
  {
    std::vector<std::jthread> pool;
    for (int t = 0; t < 8; ++t) {
      pool.emplace_back([&, t] { got[t] = curve.decision_threshold(0.5); });
    }
  }
  for (double g : got) CHECK(g == got[0]);
}

TEST_CASE("lemma 1 threshold") {
  const auto prior = horseshoe_prior(0.01, 10000, 100);
  CHECK(lemma1_threshold(prior, 100, 0.0) == Approx(std::sqrt(4.0 * std::log(100.0))));
  CHECK(lemma1_threshold(prior, 100, 0.0) == Approx(4.2919).epsilon(1e-4));
  CHECK(lemma1_threshold(prior, 100, 1.5) == Approx(1.5 + std::sqrt(4.0 * std::log(100.0))));
  CHECK(lemma1_threshold(inverse_gamma_prior(1.0, 1.0, 10000, 100), 100, 0.7) == 0.7);  // K = 0
  CHECK_THROWS_AS(lemma1_threshold(prior, 10000, 0.0), ValidationError);
}

TEST_CASE("lemma 1 calibration on the horseshoe") {
  const ShrinkageCurve curve(horseshoe_prior(0.01, 10000, 100));
  const auto cal = calibrate_lemma1(curve, 0.5);
  CHECK(cal.c1 >= 0.0);
  CHECK(cal.threshold == Approx(lemma1_threshold(curve.prior(), 100, cal.c1)));
  // Independent recheck with the brute-force oracle on a coarser grid.
  const oracle::ShrinkageOracle ref(
      [](oracle::real u) { return oracle::horseshoe_density(u, 0.01L); }, 200000);
  for (double x = std::ceil(cal.threshold * 10) / 10; x <= 50.0; x += 0.1) {
    CHECK(ref(x) >= 0.5 - 1e-9);
  }
  // The threshold can never sit below x*.
  CHECK(cal.threshold >= curve.decision_threshold(0.5) - 0.01);
}
