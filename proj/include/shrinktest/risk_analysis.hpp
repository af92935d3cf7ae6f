#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "shrinktest/testing_procedures.hpp"

namespace shrinktest {

// One Monte Carlo replicate. Fields a given experiment does not measure are NaN.
struct ReplicateRisk {
  double type1 = NAN;
  double type2 = NAN;
  double bayes_risk = NAN;
  double fdr = NAN;
  double fnr = NAN;

  double rsup() const { return fdr + fnr; }
};

// Point estimates with Monte Carlo standard errors (all zero for closed forms).
struct RiskReport {
  double type1 = NAN;
  double type2 = NAN;
  double bayes_risk = NAN;
  double fdr = NAN;
  double fnr = NAN;
  double rsup = NAN;  // fdr + fnr

  struct StandardErrors {
    double type1 = 0.0;
    double type2 = 0.0;
    double bayes_risk = 0.0;
    double fdr = 0.0;
    double fnr = 0.0;
    double rsup = 0.0;
  } se;

  long n_replicates = 0;
  std::vector<ReplicateRisk> replicates;
};

// theta with support S0 (values nonzero on S0, zero elsewhere).
struct SparseSignal {
  long n = 0;
  std::vector<std::size_t> support;
  std::vector<double> values;

  std::size_t p_n() const { return support.size(); }
  std::vector<double> dense() const;
  void validate() const;

  // p_n signals of common magnitude on the first p_n coordinates.
  static SparseSignal flat(long n, std::size_t p_n, double magnitude);
};

using Procedure = std::function<DecisionVector(std::span<const double>)>;

// Closed form for a shared threshold x*:
//   type1 = 2 Phi(-x*), type2 = 2 Phi(x*/sqrt(1+psi^2)) - 1,
//   R = (n - p_n) type1 + p_n type2.
RiskReport bayes_risk_analytic(const TwoGroupModel& model, double x_star);

// Leading term p_n (2 Phi(sqrt(C_psi)) - 1) of the Bayes oracle risk.
double oracle_risk(const TwoGroupModel& model);

// Monte Carlo Bayes risk: `replicates` independent datasets of size n drawn
// from the two-group marginal; per dataset the loss is #false rejections +
// #false acceptances. Deterministic in (seed, replicates) for any thread count.
RiskReport bayes_risk_mc(const TwoGroupModel& model, const Procedure& procedure,
                         long replicates, std::uint64_t seed, int threads = 1);

// The dataset bayes_risk_mc uses for a replicate; signal flags are 1 on the
// alternative component.
struct TwoGroupDraw {
  std::vector<double> x;
  std::vector<std::uint8_t> signal;
};
TwoGroupDraw draw_two_group(const TwoGroupModel& model, std::uint64_t seed, long replicate);

// Monte Carlo FDR / FNR for X = theta + eps, eps ~ N(0, I_n).
// FDR averages V / (R v 1), FNR averages (#missed signals) / p_n.
// Throws ValidationError when the signal has empty support.
RiskReport fdr_fnr_mc(const ShrinkageCurve& curve, const SparseSignal& signal, double alpha,
                      long replicates, std::uint64_t seed, int threads = 1);

// Same, for an arbitrary procedure.
RiskReport fdr_fnr_mc(const Procedure& procedure, const SparseSignal& signal, long replicates,
                      std::uint64_t seed, int threads = 1);

// p_n (8 sqrt(pi) C/(c alpha) + 2 Phi(sqrt(2 K (u0+1) C_psi)) - 1), with K and
// u0 taken from the prior.
double theorem1_bound(const ScaleMixturePrior& prior, const TwoGroupModel& model, double alpha,
                      double C, double c);

// rho_n = C1 + sqrt(2 K (u0+1) log(n/p)) + v_n.
double separation_rate(const ScaleMixturePrior& prior, double p, double c1, double v_n);

// 1 / (1 + lambda alpha c / (8 C sqrt(pi))) + Phi(-v_n), lambda in (0,1).
double theorem2_bound(double lambda, double alpha, double C, double c, double v_n);

}  // namespace shrinktest
