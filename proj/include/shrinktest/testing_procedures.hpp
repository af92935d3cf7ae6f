#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "shrinktest/shrinkage_engine.hpp"

namespace shrinktest {

// Per-hypothesis outcomes: 1 = reject H0_i (declare a signal).
struct DecisionVector {
  std::vector<std::uint8_t> decisions;
  double alpha = 0.0;  // threshold / level that generated the decisions
  std::string procedure_id;

  std::size_t size() const { return decisions.size(); }
  std::size_t rejections() const;
};

// Reference two-group distribution for the Bayes risk:
//   theta ~ (1 - p_n/n) delta_0 + (p_n/n) N(0, psi^2)
// so X ~ (1 - p_n/n) N(0,1) + (p_n/n) N(0, 1 + psi^2).
struct TwoGroupModel {
  long n = 0;
  double p_n = 0.0;
  double psi_sq = 0.0;
  double c_psi = 0.0;

  // psi^2 = log(n/p_n) / C_psi.
  static TwoGroupModel from_c_psi(long n, double p_n, double c_psi);

  double mixture_weight() const { return p_n / static_cast<double>(n); }
  double alternative_sd() const { return std::sqrt(1.0 + psi_sq); }
  void validate() const;
};

// xi_i = 1{ m_{X_i} > alpha }, computed as |X_i| > x*(alpha).
// Propagates AlwaysRejectError / NoCrossingError.
DecisionVector threshold_test(const ShrinkageCurve& curve, std::span<const double> data,
                              double alpha);

// Squared cutoff of the two-group Bayes oracle: reject iff x^2 >= c^2 with
//   c^2 = (1+psi^2)/psi^2 * (log(1+psi^2) + 2 log((n-p_n)/p_n)).
// Can be negative (everything rejected) when p_n >= n/2.
double bayes_oracle_cutoff_sq(const TwoGroupModel& model);

DecisionVector bayes_oracle_test(const TwoGroupModel& model, std::span<const double> data);

// Step-up on two-sided p-values 2 Phi(-|X_i|); ties broken by index.
DecisionVector benjamini_hochberg(std::span<const double> data, double q);

// Standard normal helpers shared by the risk code.
double normal_cdf(double x);
// 2 Phi(-|x|) without cancellation.
double two_sided_p(double x);

}  // namespace shrinktest
