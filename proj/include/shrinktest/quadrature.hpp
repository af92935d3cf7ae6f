#pragma once

#include <cmath>
#include <functional>

namespace shrinktest::quad {

struct Options {
  double rel_tol = 1e-9;
  int max_panels = 20000;
  // Panels are graded geometrically toward each endpoint, down to 2^-levels
  // in the square-root coordinate.
  int geometric_levels = 40;
};

// exp(log_value) is the integral; log_value = -inf for an identically zero
// integrand.
struct LogIntegral {
  double log_value = -INFINITY;
  double rel_error = 0.0;
  long evaluations = 0;
  bool converged = true;

  double value() const { return std::exp(log_value); }
};

using LogIntegrand = std::function<double(double)>;

// Integrates exp(log_f(u)) over [lo, hi] with 0 <= lo < hi <= +inf.
//
// The interval is mapped to z = u/(1+u) in [0,1]; each half of the z-interval
// is then reparameterised with a square root (z - z_lo = w t^2) so u^{-1/2}
// type endpoint singularities become smooth. Integration is global-adaptive
// Gauss-Kronrod 10/21 over geometrically graded panels, with the integrand
// rescaled by its largest sampled log value so nothing overflows.
//
// Throws NumericError when log_f returns NaN or +inf, or on bad limits.
LogIntegral integrate_log(const LogIntegrand& log_f, double lo, double hi,
                          const Options& opts = {});

// Convenience for plain nonnegative integrands given in log form.
inline double integrate(const LogIntegrand& log_f, double lo, double hi,
                        const Options& opts = {}) {
  return integrate_log(log_f, lo, hi, opts).value();
}

}  // namespace shrinktest::quad
