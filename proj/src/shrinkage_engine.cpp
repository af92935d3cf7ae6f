#include "shrinktest/shrinkage_engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "shrinktest/errors.hpp"
#include "shrinktest/quadrature.hpp"
#include "shrinktest/text.hpp"

namespace shrinktest {

namespace {

constexpr int kScanPoints = 65;
constexpr double kMonotoneSlack = 1e-12;

}  // namespace

ShrinkageCurve::ShrinkageCurve(ScaleMixturePrior prior, double quad_tolerance)
    : prior_(std::move(prior)),
      quad_tolerance_(quad_tolerance),
      cache_(std::make_shared<Cache>()) {
  if (!(quad_tolerance > 0.0 && quad_tolerance < 1.0)) {
    throw ValidationError("quad_tolerance must lie in (0, 1)");
  }
}

double ShrinkageCurve::shrinkage_weight(double x) const {
  if (!std::isfinite(x)) {
    throw ValidationError("shrinkage_weight: x must be finite");
  }
  const double half_sq = 0.5 * x * x;
  auto log_den = [this, half_sq](double u) {
    const double one_p_u = 1.0 + u;
    return -0.5 * std::log1p(u) - half_sq / one_p_u + prior_.log_density(u);
  };
  auto log_num = [&log_den](double u) { return std::log(u) - std::log1p(u) + log_den(u); };

  quad::Options opts;
  opts.rel_tol = quad_tolerance_;
  const auto den = quad::integrate_log(log_den, 0.0, INFINITY, opts);
  const auto num = quad::integrate_log(log_num, 0.0, INFINITY, opts);
  if (!den.converged || !num.converged) {
    std::ostringstream msg;
    msg << "shrinkage_weight(" << x << "): quadrature reached rel. error "
        << std::max(den.rel_error, num.rel_error) << " > " << quad_tolerance_;
    throw NumericError(msg.str());
  }
  if (den.log_value == -INFINITY) {
    throw NumericError("shrinkage_weight: posterior normalizer vanished");
  }
  const double m = std::exp(num.log_value - den.log_value);
  return std::clamp(m, 0.0, 1.0);
}

double ShrinkageCurve::decision_threshold(double alpha) const {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ValidationError("decision_threshold: alpha must lie in (0, 1)");
  }
  {
    std::lock_guard lock(cache_->mutex);
    if (auto it = cache_->thresholds.find(alpha); it != cache_->thresholds.end()) {
      return it->second;
    }
  }
  // Computed outside the lock; concurrent callers may duplicate work but
  // arrive at the same deterministic value.
  const double x_star = solve_threshold(alpha);
  std::lock_guard lock(cache_->mutex);
  cache_->thresholds.emplace(alpha, x_star);
  return x_star;
}

double ShrinkageCurve::solve_threshold(double alpha) const {
  const double m0 = shrinkage_weight(0.0);
  if (m0 >= alpha) {
    std::ostringstream msg;
    msg << "m_0 = " << m0 << " >= alpha = " << alpha << ": every observation is rejected";
    throw AlwaysRejectError(msg.str());
  }

  const double cap = std::sqrt(2.0 * std::log(1.0 / prior_.sparsity().tau())) + 20.0;

  // Scan [lo, hi] for the first grid cell where m crosses alpha, checking
  // monotonicity on the way.
  double prev_x = 0.0;
  double prev_m = m0;
  auto scan = [&](double lo, double hi) -> bool {
    for (int i = 1; i < kScanPoints; ++i) {
      const double x = lo + (hi - lo) * i / (kScanPoints - 1);
      const double m = shrinkage_weight(x);
      if (m < prev_m - kMonotoneSlack) {
        std::ostringstream msg;
        msg << "decision_threshold: m_x decreases between x = " << prev_x << " (" << prev_m
            << ") and x = " << x << " (" << m << "); refusing to bisect";
        throw NumericError(msg.str());
      }
      if (m > alpha) {
        return true;
      }
      prev_x = x;
      prev_m = m;
    }
    return false;
  };

  double lo = 0.0;
  bool found = scan(0.0, cap);
  if (!found) {
    found = scan(cap, 2.0 * cap);
  }
  if (!found) {
    std::ostringstream msg;
    msg << "decision_threshold: m_x < alpha = " << alpha << " up to x = " << 2.0 * cap;
    throw NoCrossingError(msg.str());
  }
  lo = prev_x;
  double hi = lo + cap / (kScanPoints - 1);
  if (hi > 2.0 * cap) hi = 2.0 * cap;

  // m(lo) <= alpha < m(hi)
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double m = shrinkage_weight(mid);
    if (std::abs(m - alpha) <= 1e-10) {
      return mid;
    }
    if (m > alpha) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double lemma1_threshold(const ScaleMixturePrior& prior, double p, double c1) {
  const double n = static_cast<double>(prior.sparsity().n);
  if (!(p > 0.0 && p < n)) {
    throw ValidationError("lemma1_threshold: need 0 < p < n");
  }
  if (!(c1 >= 0.0)) {
    throw ValidationError("lemma1_threshold: C1 must be nonnegative");
  }
  const auto& k = prior.constants();
  if (!k.lower_exponent) {
    throw ValidationError("lemma1_threshold: prior does not declare K");
  }
  return c1 + std::sqrt(2.0 * *k.lower_exponent * (1.0 + k.rv_onset) * std::log(n / p));
}

Lemma1Calibration calibrate_lemma1(const ShrinkageCurve& curve, double alpha,
                                   std::span<const double> c1_grid,
                                   std::span<const double> x_grid) {
  std::vector<double> m(x_grid.size());
  for (std::size_t i = 0; i < x_grid.size(); ++i) {
    m[i] = curve.shrinkage_weight(x_grid[i]);
  }
  const double p = curve.prior().sparsity().p;
  for (double c1 : c1_grid) {
    const double t = lemma1_threshold(curve.prior(), p, c1);
    bool holds = true;
    for (std::size_t i = 0; i < x_grid.size() && holds; ++i) {
      if (x_grid[i] >= t && m[i] < alpha) {
        holds = false;
      }
    }
    if (holds) {
      return {c1, t};
    }
  }
  throw NumericError("calibrate_lemma1: no C1 on the grid makes m_x >= alpha beyond T");
}

Lemma1Calibration calibrate_lemma1(const ShrinkageCurve& curve, double alpha) {
  std::vector<double> c1s(201);
  for (int i = 0; i <= 200; ++i) c1s[i] = 0.05 * i;
  std::vector<double> xs(5001);
  for (int i = 0; i <= 5000; ++i) xs[i] = 0.01 * i;
  return calibrate_lemma1(curve, alpha, c1s, xs);
}

}  // namespace shrinktest
