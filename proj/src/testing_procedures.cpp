#include "shrinktest/testing_procedures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "shrinktest/errors.hpp"

namespace shrinktest {

std::size_t DecisionVector::rejections() const {
  return static_cast<std::size_t>(std::count(decisions.begin(), decisions.end(), 1));
}

TwoGroupModel TwoGroupModel::from_c_psi(long n, double p_n, double c_psi) {
  TwoGroupModel m{n, p_n, 0.0, c_psi};
  if (!(c_psi > 0.0)) {
    throw ValidationError("two-group model: C_psi must be positive");
  }
  if (!(p_n > 0.0 && p_n < static_cast<double>(n))) {
    throw ValidationError("two-group model: need 0 < p_n < n");
  }
  m.psi_sq = std::log(static_cast<double>(n) / p_n) / c_psi;
  m.validate();
  return m;
}

void TwoGroupModel::validate() const {
  if (n < 2) {
    throw ValidationError("two-group model: n must be at least 2");
  }
  if (!(p_n > 0.0 && p_n < static_cast<double>(n))) {
    std::ostringstream msg;
    msg << "two-group model: p_n must lie in (0, n), got " << p_n;
    throw ValidationError(msg.str());
  }
  if (!(psi_sq > 0.0) || !std::isfinite(psi_sq)) {
    throw ValidationError("two-group model: psi^2 must be positive");
  }
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double two_sided_p(double x) { return std::erfc(std::abs(x) / std::numbers::sqrt2); }

DecisionVector threshold_test(const ShrinkageCurve& curve, std::span<const double> data,
                              double alpha) {
  for (double x : data) {
    if (!std::isfinite(x)) {
      throw ValidationError("threshold_test: data must be finite");
    }
  }
  const double x_star = curve.decision_threshold(alpha);
  DecisionVector out;
  out.alpha = alpha;
  out.procedure_id = "threshold";
  out.decisions.resize(data.size());
  // Strict inequality: m_x = alpha exactly is not a rejection.
  std::transform(data.begin(), data.end(), out.decisions.begin(),
                 [x_star](double x) { return std::uint8_t{std::abs(x) > x_star}; });
  return out;
}

double bayes_oracle_cutoff_sq(const TwoGroupModel& model) {
  model.validate();
  const double n = static_cast<double>(model.n);
  const double psi_sq = model.psi_sq;
  return (1.0 + psi_sq) / psi_sq *
         (std::log1p(psi_sq) + 2.0 * std::log((n - model.p_n) / model.p_n));
}

DecisionVector bayes_oracle_test(const TwoGroupModel& model, std::span<const double> data) {
  const double c_sq = bayes_oracle_cutoff_sq(model);
  DecisionVector out;
  out.alpha = 0.5;
  out.procedure_id = "bayes_oracle";
  out.decisions.resize(data.size());
  std::transform(data.begin(), data.end(), out.decisions.begin(),
                 [c_sq](double x) { return std::uint8_t{x * x >= c_sq}; });
  return out;
}

DecisionVector benjamini_hochberg(std::span<const double> data, double q) {
  if (!(q > 0.0 && q < 1.0)) {
    throw ValidationError("benjamini_hochberg: q must lie in (0, 1)");
  }
  const std::size_t n = data.size();
  std::vector<double> pvals(n);
  std::transform(data.begin(), data.end(), pvals.begin(), two_sided_p);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&pvals](std::size_t a, std::size_t b) { return pvals[a] < pvals[b]; });

  // Largest k with p_(k) <= k q / n; reject the k smallest.
  std::size_t k_max = 0;
  for (std::size_t k = 1; k <= n; ++k) {
    if (pvals[order[k - 1]] <= static_cast<double>(k) * q / static_cast<double>(n)) {
      k_max = k;
    }
  }
  DecisionVector out;
  out.alpha = q;
  out.procedure_id = "benjamini_hochberg";
  out.decisions.assign(n, 0);
  for (std::size_t k = 0; k < k_max; ++k) {
    out.decisions[order[k]] = 1;
  }
  return out;
}

}  // namespace shrinktest
