#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "shrinktest/prior_models.hpp"

namespace shrinktest {

// Posterior shrinkage weight m_x = E(kappa | X = x), kappa = sigma^2/(1+sigma^2),
// under X | theta ~ N(theta, 1), theta | sigma^2 ~ N(0, sigma^2), sigma^2 ~ pi.
//
//          int u (1+u)^{-3/2} exp(x^2/2 * u/(1+u)) pi(u) du
//   m_x = ---------------------------------------------------
//          int   (1+u)^{-1/2} exp(x^2/2 * u/(1+u)) pi(u) du
//
// Both integrals are evaluated in log space after writing
// exp(x^2/2 * u/(1+u)) = exp(x^2/2) exp(-x^2/2 / (1+u)) and dropping the
// common exp(x^2/2), so |x| in the hundreds is fine.
//
// Copies share the threshold cache; evaluation is thread safe.
class ShrinkageCurve {
 public:
  explicit ShrinkageCurve(ScaleMixturePrior prior, double quad_tolerance = 1e-9);

  const ScaleMixturePrior& prior() const { return prior_; }
  double quad_tolerance() const { return quad_tolerance_; }

  // m_x in [0,1]. Throws NumericError if the quadrature misses its tolerance.
  double shrinkage_weight(double x) const;

  // E(theta | X = x) = m_x x.
  double posterior_mean(double x) const { return shrinkage_weight(x) * x; }

  // The x* >= 0 with m_{x*} = alpha. Bisection on |x| after a monotonicity
  // scan of the bracket [0, x_cap], x_cap = sqrt(2 log(1/tau_n)) + 20
  // (doubled once if needed). Results are cached per alpha.
  //
  // Throws AlwaysRejectError if m_0 >= alpha, NoCrossingError if m stays
  // below alpha on the bracket, NumericError if the scan finds m decreasing.
  double decision_threshold(double alpha) const;

 private:
  struct Cache {
    std::mutex mutex;
    std::map<double, double> thresholds;
  };

  double solve_threshold(double alpha) const;

  ScaleMixturePrior prior_;
  double quad_tolerance_;
  std::shared_ptr<Cache> cache_;
};

// T = C1 + sqrt(2 K (1+u0) log(n/p)) with K, u0 from the prior and n from its
// sparsity pair. Throws ValidationError when p >= n or K is undeclared.
double lemma1_threshold(const ScaleMixturePrior& prior, double p, double c1);

struct Lemma1Calibration {
  double c1 = 0.0;
  double threshold = 0.0;  // T at the calibrated c1
};

// Smallest c1 on `c1_grid` (ascending) such that m_x >= alpha for every x on
// `x_grid` with x >= T(c1). The sparsity p is the curve prior's own.
// Throws NumericError if no grid value works.
Lemma1Calibration calibrate_lemma1(const ShrinkageCurve& curve, double alpha,
                                   std::span<const double> c1_grid,
                                   std::span<const double> x_grid);

// Default grids: c1 in {0, 0.05, ..., 10}, x in {0, 0.01, ..., 50}.
Lemma1Calibration calibrate_lemma1(const ShrinkageCurve& curve, double alpha);

}  // namespace shrinktest
