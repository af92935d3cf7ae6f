#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "shrinktest/errors.hpp"
#include "shrinktest/prior_models.hpp"

using namespace shrinktest;
using doctest::Approx;

TEST_CASE("built-in densities at reference points") {
  CHECK(horseshoe_prior(1.0, 100, 10).density(1.0) == Approx(1.0 / (2.0 * std::numbers::pi)));
  CHECK(exponential_prior(1.0, 100, 10).density(0.0) == Approx(1.0));
  CHECK(inverse_gamma_prior(1.0, 1.0, 100, 10).density(1.0) == Approx(std::exp(-1.0)));
  for (double u : {1e-6, 0.3, 7.0, 1e4}) {
    CHECK(horseshoe_prior(0.05, 100, 5).density(u) ==
          Approx(double(oracle::horseshoe_density(u, 0.05))).epsilon(1e-13));
    CHECK(inverse_gamma_prior(2.5, 0.7, 100, 5).density(u) ==
          Approx(double(oracle::inverse_gamma_density(u, 2.5, 0.7))).epsilon(1e-12));
  }
}

TEST_CASE("every built-in prior has unit mass") {
  for (double tau : {1.0, 0.1, 0.01, 1e-6}) {
    CHECK(std::abs(total_mass(horseshoe_prior(tau, 100, 1)) - 1.0) <= 1e-8);
  }
  CHECK(std::abs(total_mass(exponential_prior(1.0, 100, 1)) - 1.0) <= 1e-8);
  CHECK(std::abs(total_mass(exponential_prior(20.0, 100, 1)) - 1.0) <= 1e-8);
  CHECK(std::abs(total_mass(inverse_gamma_prior(1.0, 1.0, 100, 1)) - 1.0) <= 1e-8);
  CHECK(std::abs(total_mass(inverse_gamma_prior(0.5, 3.0, 100, 1)) - 1.0) <= 1e-8);
  // Independent check of the oracle integrator itself.
  const auto mass = oracle::integrate_to_inf([](oracle::real u) { return oracle::horseshoe_density(u, 0.1L); });
  CHECK(std::abs(double(mass) - 1.0) <= 1e-8);
}

TEST_CASE("constructor preconditions") {
  CHECK_THROWS_AS(horseshoe_prior(0.0, 100, 10), ValidationError);
  CHECK_THROWS_AS(horseshoe_prior(-1.0, 100, 10), ValidationError);
  CHECK_THROWS_AS(exponential_prior(0.0, 100, 10), ValidationError);
  CHECK_THROWS_AS(inverse_gamma_prior(1.0, -2.0, 100, 10), ValidationError);
  CHECK_THROWS_AS(horseshoe_prior(0.1, 100, 100), ValidationError);  // p = n
  CHECK_THROWS_AS(horseshoe_prior(0.1, 100, 0), ValidationError);
}

TEST_CASE("sparsity pair") {
  const Sparsity s{100, 10};
  CHECK(s.tau() == Approx(0.1));
  CHECK(s.s_n() == Approx(0.1 * std::log(10.0)));
  CHECK(s.s_n() == Approx(0.23026).epsilon(1e-4));
}

TEST_CASE("condition 2 against closed forms and the oracle") {
  CHECK(check_condition2(exponential_prior(1.0, 100, 10)).estimated_constant ==
        Approx(1.0 - std::exp(-1.0)).epsilon(1e-10));
  CHECK(check_condition2(horseshoe_prior(1.0, 100, 10)).estimated_constant ==
        Approx(0.5).epsilon(1e-10));
  for (double tau : {0.05, 0.01}) {
    const auto cert = check_condition2(horseshoe_prior(tau, 100, 1));
    const auto ref = oracle::integrate_sqrt_map(
        [tau](oracle::real u) { return oracle::horseshoe_density(u, tau); }, 1.0L);
    CHECK(cert.satisfied);
    CHECK(std::abs(cert.estimated_constant - double(ref)) <= 1e-6);
    CHECK(cert.estimated_constant ==
          Approx(2.0 / std::numbers::pi * std::atan(1.0 / tau)).epsilon(1e-10));
  }
}

TEST_CASE("horseshoe condition-2 constant is nondecreasing as tau falls") {
  double previous = 0.0;
  for (double tau : {1.0, 0.5, 0.1, 0.01, 1e-3, 1e-5}) {
    const double c = check_condition2(horseshoe_prior(tau, 1000000, 1)).estimated_constant;
    CHECK(c >= previous);
    CHECK(c >= 0.5 - 1e-12);
    previous = c;
  }
}

TEST_CASE("condition 1 on the built-in priors") {
  SUBCASE("exponential: constant L gives R = 1") {
    const auto cert = check_condition1(exponential_prior(1.0, 100, 10));
    CHECK(cert.satisfied());
    CHECK(cert.regular_variation.estimated_constant == 1.0);
  }
  SUBCASE("horseshoe with tau = p/n") {
    const auto cert = check_condition1(horseshoe_prior(0.01, 10000, 100));
    CHECK(cert.satisfied());
    // L(u)/L(au) = a^{1/2} (tau^2 + au)/(tau^2 + u) <= 2^{3/2}
    CHECK(cert.regular_variation.estimated_constant <= std::pow(2.0, 1.5) + 1e-9);
    CHECK(cert.regular_variation.estimated_constant >= std::pow(2.0, 1.5) * 0.999);
  }
  SUBCASE("inverse gamma R matches the analytic grid supremum") {
    // L(u)/L(au) = a^{s+1} exp(-beta (1 - 1/a)/u), largest at a = 2, u = u_max.
    for (double shape : {1.0, 2.5}) {
      const double scale = 1.0;
      const auto cert = check_condition1(inverse_gamma_prior(shape, scale, 100, 10));
      const double analytic = std::pow(2.0, shape + 1.0) * std::exp(-scale / (2.0 * 1e4));
      CHECK(std::abs(cert.regular_variation.estimated_constant / analytic - 1.0) <= 0.05);
    }
  }
  SUBCASE("super-exponential tail declared with b = 0 fails with a witness") {
    ConditionConstants k;
    k.tail_rate = 0.0;
    k.lower_rate = 1.0;
    k.lower_scale = 1.0;
    k.lower_exponent = 0.0;
    k.lower_onset = 1.0;
    k.rv_ratio = 4.0;
    const double log_norm = std::log(2.0 / std::sqrt(std::numbers::pi));
    const auto prior = ScaleMixturePrior::from_log_density(
        "half_gaussian", [log_norm](double u) { return log_norm - u * u; }, k, {100, 10});
    const auto cert = check_condition1(prior);
    CHECK_FALSE(cert.regular_variation.satisfied);
    CHECK_FALSE(cert.regular_variation.witness.empty());
  }
}

TEST_CASE("certified R bounds the grid ratios") {
  for (const auto& prior : {horseshoe_prior(0.01, 10000, 100), exponential_prior(2.0, 100, 10),
                            inverse_gamma_prior(1.5, 0.5, 100, 10)}) {
    const GridSpec grid;
    const double R = check_condition1(prior, grid).regular_variation.estimated_constant;
    const double u0 = prior.constants().rv_onset;
    for (int i = 0; i < grid.a_points; ++i) {
      const double a = grid.a_min + (grid.a_max - grid.a_min) * i / (grid.a_points - 1);
      for (int j = 0; j < grid.u_points; j += 7) {
        const double u = u0 * std::pow(grid.u_max / u0, double(j) / (grid.u_points - 1));
        const double r = std::exp(prior.log_slowly_varying(a * u) - prior.log_slowly_varying(u));
        CHECK(r <= R * (1 + 1e-12));
        CHECK(r >= 1.0 / R * (1 - 1e-12));
      }
    }
  }
}

TEST_CASE("grid preconditions") {
  GridSpec grid;
  grid.a_points = 4;
  CHECK_THROWS_AS(check_condition1(horseshoe_prior(0.1, 100, 10), grid), ValidationError);
  grid = GridSpec{};
  grid.u_max = 100;
  CHECK_THROWS_AS(check_condition1(horseshoe_prior(0.1, 100, 10), grid), ValidationError);
}

TEST_CASE("condition 3 against the brute-force oracle") {
  SUBCASE("exponential rate 2, n = 1000, p = 10") {
    const auto cert = check_condition3(exponential_prior(2.0, 1000, 10));
    const auto ref = oracle::condition3_constant(
        [](oracle::real u) { return oracle::exponential_density(u, 2.0L); }, 1000, 10);
    CHECK(cert.satisfied);
    CHECK(cert.estimated_constant == Approx(double(ref)).epsilon(1e-4));
  }
  SUBCASE("horseshoe tau = p/n stays bounded along p = sqrt(n)") {
    for (long n : {1000L, 10000L, 100000L}) {
      const double p = std::round(std::sqrt(double(n)));
      const auto cert = check_condition3(horseshoe_prior(p / n, n, p));
      const double tau = p / n;
      const auto ref = oracle::condition3_constant(
          [tau](oracle::real u) { return oracle::horseshoe_density(u, tau); }, n, p);
      CHECK(cert.estimated_constant == Approx(double(ref)).epsilon(1e-4));
      CHECK(cert.estimated_constant <= 10.0);
    }
  }
  SUBCASE("fixed-rate exponential does not adapt") {
    CHECK(check_condition3(exponential_prior(1.0, 10000, 100)).estimated_constant > 10.0);
  }
  SUBCASE("degenerate sparsity is refused") {
    CHECK_THROWS_AS(check_condition3(horseshoe_prior(0.5, 100, 50)), ValidationError);
  }
}

TEST_CASE("prior specs") {
  const auto spec = parse_prior_spec("family=horseshoe, n=10000, p=100");
  const auto prior = make_prior(spec);
  CHECK(prior.family() == "horseshoe");
  CHECK(prior.params().at("tau") == Approx(0.01));
  CHECK(prior.constants().lower_exponent.value() == 1.0);

  const auto pinned = make_prior(parse_prior_spec("family=horseshoe,tau=0.05,n=200,p=10,K=2,u0=0.5"));
  CHECK(pinned.params().at("tau") == Approx(0.05));
  CHECK(pinned.constants().lower_exponent.value() == 2.0);
  CHECK(pinned.constants().rv_onset == 0.5);

  // Round trip through text.
  const auto again = make_prior(parse_prior_spec(format_prior_spec(to_spec(pinned))));
  CHECK(again.density(0.37) == pinned.density(0.37));
  CHECK(again.constants().rv_onset == 0.5);

  CHECK_THROWS_AS(make_prior(parse_prior_spec("family=cauchy,n=10,p=1")), ValidationError);
  CHECK_THROWS_AS(make_prior(parse_prior_spec("family=horseshoe,n=10,p=1,bogus=3")), ValidationError);
  CHECK_THROWS_AS(make_prior(parse_prior_spec("family=horseshoe,p=1")), ValidationError);
  CHECK_THROWS_AS(make_prior(parse_prior_spec("family=exponential,n=10,p=1")), ValidationError);
  CHECK_THROWS_AS(parse_prior_spec("family"), ValidationError);
}
