#include "shrinktest/prior_models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <utility>
#include <vector>

#include "shrinktest/errors.hpp"
#include "shrinktest/quadrature.hpp"
#include "shrinktest/text.hpp"

namespace shrinktest {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    std::ostringstream msg;
    msg << name << " must be a positive finite number, got " << v;
    throw ValidationError(msg.str());
  }
}

std::vector<double> geometric_grid(double lo, double hi, int points) {
  std::vector<double> g(points);
  const double step = std::log(hi / lo) / (points - 1);
  for (int i = 0; i < points; ++i) {
    g[i] = lo * std::exp(step * i);
  }
  g.back() = hi;
  return g;
}

std::string describe(double v) { return text::format_double(v); }

}  // namespace

void Sparsity::validate() const {
  if (n < 1) {
    throw ValidationError("sparsity n must be a positive integer");
  }
  if (!(p > 0.0) || !(p < static_cast<double>(n))) {
    std::ostringstream msg;
    msg << "sparsity p must lie in (0, n) = (0, " << n << "), got " << p;
    throw ValidationError(msg.str());
  }
}

ScaleMixturePrior::ScaleMixturePrior(std::string family, LogFn log_slowly_varying,
                                     ConditionConstants constants, Sparsity sparsity,
                                     std::map<std::string, double> params)
    : family_(std::move(family)),
      log_l_(std::move(log_slowly_varying)),
      constants_(constants),
      sparsity_(sparsity),
      params_(std::move(params)) {
  sparsity_.validate();
  if (!(constants_.tail_rate >= 0.0)) {
    throw ValidationError("tail rate b must be nonnegative");
  }
  require_positive(constants_.rv_onset, "u0");
  if (constants_.lower_rate) require_positive(*constants_.lower_rate, "b'");
  if (constants_.lower_scale) require_positive(*constants_.lower_scale, "C'");
  if (constants_.lower_exponent && !(*constants_.lower_exponent >= 0.0)) {
    throw ValidationError("K must be nonnegative");
  }
  if (constants_.lower_onset && !(*constants_.lower_onset >= 1.0)) {
    throw ValidationError("u* must be >= 1");
  }
  if (constants_.rv_ratio && !(*constants_.rv_ratio >= 1.0)) {
    throw ValidationError("R must be >= 1");
  }
}

ScaleMixturePrior ScaleMixturePrior::from_log_density(std::string family,
                                                      LogFn log_density,
                                                      ConditionConstants constants,
                                                      Sparsity sparsity) {
  const double b = constants.tail_rate;
  LogFn log_l = [log_density = std::move(log_density), b](double u) {
    return log_density(u) + b * u;
  };
  return ScaleMixturePrior(std::move(family), std::move(log_l), constants, sparsity);
}

ScaleMixturePrior ScaleMixturePrior::with_sparsity(Sparsity sparsity) const {
  return ScaleMixturePrior(family_, log_l_, constants_, sparsity, params_);
}

ScaleMixturePrior horseshoe_prior(double tau, long n, double p) {
  require_positive(tau, "horseshoe tau");
  const Sparsity sp{n, p};
  sp.validate();
  ConditionConstants k;
  k.tail_rate = 0.0;
  k.lower_rate = 1.0;
  k.lower_onset = 1.0;
  // C' pi(u) >= tau e^{-u} on u >= 1 needs C' >= pi sqrt(u)(tau^2+u)e^{-u}.
  k.lower_scale = std::numbers::pi * (1.0 + tau * tau);
  // tau_n^K <= min(tau, tau_n): K = 1 when tau = p/n.
  const double k_exp = tau < 1.0 ? std::max(1.0, std::log(tau) / std::log(sp.tau())) : 1.0;
  k.lower_exponent = k_exp;
  k.rv_onset = 1.0;
  // L(au)/L(u) = a^{-1/2} (tau^2+u)/(tau^2+au) lies in [2^{-3/2}, 1].
  k.rv_ratio = std::pow(2.0, 1.5);
  const double log_tau = std::log(tau);
  const double tau_sq = tau * tau;
  auto log_l = [log_tau, tau_sq](double u) {
    return log_tau - std::log(std::numbers::pi) - 0.5 * std::log(u) - std::log(tau_sq + u);
  };
  return ScaleMixturePrior("horseshoe", log_l, k, sp, {{"tau", tau}});
}

ScaleMixturePrior exponential_prior(double rate, long n, double p) {
  require_positive(rate, "exponential rate");
  ConditionConstants k;
  k.tail_rate = rate;
  k.lower_rate = rate;
  k.lower_scale = 1.0 / rate;
  k.lower_exponent = 0.0;
  k.lower_onset = 1.0;
  k.rv_onset = 1.0;
  k.rv_ratio = 1.0;
  const double log_rate = std::log(rate);
  auto log_l = [log_rate](double) { return log_rate; };
  return ScaleMixturePrior("exponential", log_l, k, Sparsity{n, p}, {{"rate", rate}});
}

ScaleMixturePrior inverse_gamma_prior(double shape, double scale, long n, double p) {
  require_positive(shape, "inverse_gamma shape");
  require_positive(scale, "inverse_gamma scale");
  ConditionConstants k;
  k.tail_rate = 0.0;
  k.lower_rate = 1.0;
  k.lower_exponent = 0.0;
  k.lower_onset = 1.0;
  k.rv_onset = 1.0;
  const double log_norm = shape * std::log(scale) - std::lgamma(shape);
  auto log_l = [log_norm, shape, scale](double u) {
    return log_norm - (shape + 1.0) * std::log(u) - scale / u;
  };
  return ScaleMixturePrior("inverse_gamma", log_l, k, Sparsity{n, p},
                           {{"shape", shape}, {"scale", scale}});
}

double total_mass(const ScaleMixturePrior& prior) {
  auto f = [&prior](double u) { return prior.log_density(u); };
  const auto r = quad::integrate_log(f, 0.0, INFINITY);
  if (!r.converged) {
    throw NumericError("total_mass: quadrature did not converge (rel. error " +
                       describe(r.rel_error) + ")");
  }
  return r.value();
}

// ---------------------------------------------------------------------------

std::string to_string(ConditionId id) {
  switch (id) {
    case ConditionId::C1Rv:
      return "C1-rv";
    case ConditionId::C1Lower:
      return "C1-lower";
    case ConditionId::C2:
      return "C2";
    case ConditionId::C3:
      return "C3";
  }
  return "unknown";
}

void GridSpec::validate() const {
  if (!(a_min == 1.0) || !(a_max >= 2.0) || a_points < 16) {
    throw ValidationError("grid: a must cover [1, 2] with at least 16 points");
  }
  if (u_min && !(*u_min > 0.0)) {
    throw ValidationError("grid: u_min must be positive");
  }
  if (u_points < 256 || !(u_max >= 1e3)) {
    throw ValidationError("grid: need at least 256 u points and u_max >= 1000");
  }
  if (!(max_ratio > 1.0)) {
    throw ValidationError("grid: max_ratio must exceed 1");
  }
}

namespace {

double checked_log(const ScaleMixturePrior& prior, double u, bool slowly_varying) {
  const double v = slowly_varying ? prior.log_slowly_varying(u) : prior.log_density(u);
  if (!std::isfinite(v)) {
    std::ostringstream msg;
    msg << "non-finite log-density at u = " << u;
    throw NumericError(msg.str());
  }
  return v;
}

ConditionCertificate check_regular_variation(const ScaleMixturePrior& prior,
                                             const GridSpec& grid) {
  const double u0 = grid.u_min.value_or(prior.constants().rv_onset);
  if (!(grid.u_max > u0)) {
    throw ValidationError("grid: u_max must exceed u0");
  }
  const auto us = geometric_grid(u0, grid.u_max, grid.u_points);
  std::vector<double> as(grid.a_points);
  for (int i = 0; i < grid.a_points; ++i) {
    as[i] = grid.a_min + (grid.a_max - grid.a_min) * i / (grid.a_points - 1);
  }

  double worst = 0.0;  // max |log L(au) - log L(u)|
  double worst_a = 1.0;
  double worst_u = u0;
  for (double u : us) {
    const double lu = checked_log(prior, u, true);
    for (double a : as) {
      const double d = std::abs(checked_log(prior, a * u, true) - lu);
      if (d > worst) {
        worst = d;
        worst_a = a;
        worst_u = u;
      }
    }
  }

  ConditionCertificate cert;
  cert.condition = ConditionId::C1Rv;
  cert.estimated_constant = std::exp(worst);
  std::ostringstream g;
  g << "grid evidence: a in [" << grid.a_min << ", " << grid.a_max << "] x "
    << grid.a_points << ", u geometric in [" << u0 << ", " << grid.u_max << "] x "
    << grid.u_points;
  cert.grid = g.str();

  const double cap = std::log(grid.max_ratio);
  const auto declared = prior.constants().rv_ratio;
  bool ok = worst <= cap;
  if (ok && declared) {
    ok = worst <= std::log(*declared) + 1e-12;
  }
  cert.satisfied = ok;
  if (!ok) {
    std::ostringstream w;
    w << "a = " << describe(worst_a) << ", u = " << describe(worst_u)
      << ": |log L(au) - log L(u)| = " << describe(worst);
    if (declared) {
      w << " (declared R = " << describe(*declared) << ")";
    } else {
      w << " exceeds log(max_ratio) = " << describe(cap);
    }
    cert.witness = w.str();
  }
  return cert;
}

ConditionCertificate check_lower_bound(const ScaleMixturePrior& prior,
                                       const GridSpec& grid) {
  const auto& k = prior.constants();
  if (!k.lower_exponent || !k.lower_rate) {
    throw ValidationError("condition 1 lower bound needs declared K and b'");
  }
  const double u_star = k.lower_onset.value_or(1.0);
  const double u_lo = grid.u_min.value_or(u_star);
  if (!(grid.u_max > u_lo)) {
    throw ValidationError("grid: u_max must exceed u*");
  }
  const double log_tau = std::log(prior.sparsity().tau());
  const double kexp = *k.lower_exponent;
  const double bprime = *k.lower_rate;

  // Needed log C' at each u: K log tau - b' u - log pi(u).
  double need = -INFINITY;
  double need_u = u_lo;
  for (double u : geometric_grid(u_lo, grid.u_max, grid.u_points)) {
    const double v = kexp * log_tau - bprime * u - checked_log(prior, u, false);
    if (v > need) {
      need = v;
      need_u = u;
    }
  }

  ConditionCertificate cert;
  cert.condition = ConditionId::C1Lower;
  std::ostringstream g;
  g << "grid evidence: u geometric in [" << u_lo << ", " << grid.u_max << "] x "
    << grid.u_points << ", K = " << describe(kexp) << ", b' = " << describe(bprime)
    << ", u* = " << describe(u_star);
  cert.grid = g.str();

  if (k.lower_scale) {
    const double log_c = std::log(*k.lower_scale);
    cert.estimated_constant = *k.lower_scale;
    // Relative slack absorbs rounding where the bound holds with equality.
    cert.satisfied = log_c >= need - 1e-12 * std::max(1.0, std::abs(need));
    if (!cert.satisfied) {
      std::ostringstream w;
      w << "u = " << describe(need_u) << ": needs C' >= " << describe(std::exp(need))
        << ", declared " << describe(*k.lower_scale);
      cert.witness = w.str();
    }
  } else {
    cert.estimated_constant = std::exp(need);
    cert.satisfied = std::isfinite(cert.estimated_constant) && cert.estimated_constant > 0.0;
    if (!cert.satisfied) {
      cert.witness = "u = " + describe(need_u) + ": implied C' is not finite";
    }
  }
  return cert;
}

quad::LogIntegral checked_integral(const quad::LogIntegrand& f, double lo, double hi,
                                   const char* what) {
  auto r = quad::integrate_log(f, lo, hi);
  if (!r.converged || (std::isnan(r.log_value) || r.log_value == INFINITY)) {
    throw NumericError(std::string(what) + ": quadrature failed (rel. error " +
                       describe(r.rel_error) + ")");
  }
  return r;
}

}  // namespace

Condition1Certificate check_condition1(const ScaleMixturePrior& prior, const GridSpec& grid) {
  grid.validate();
  return Condition1Certificate{check_regular_variation(prior, grid),
                               check_lower_bound(prior, grid)};
}

ConditionCertificate check_condition2(const ScaleMixturePrior& prior) {
  auto f = [&prior](double u) { return prior.log_density(u); };
  const auto r = checked_integral(f, 0.0, 1.0, "condition 2");
  ConditionCertificate cert;
  cert.condition = ConditionId::C2;
  cert.estimated_constant = r.value();
  cert.satisfied = cert.estimated_constant > 0.0;
  cert.grid = "adaptive Gauss-Kronrod on z = u/(1+u), sqrt endpoint maps, rel. error " +
              describe(r.rel_error);
  if (!cert.satisfied) {
    cert.witness = "integral of pi over (0,1) is zero";
  }
  return cert;
}

ConditionCertificate check_condition3(const ScaleMixturePrior& prior) {
  const Sparsity& sp = prior.sparsity();
  const double n = static_cast<double>(sp.n);
  if (!(sp.p < n / std::numbers::e)) {
    std::ostringstream msg;
    msg << "condition 3: degenerate sparsity p = " << sp.p << " >= n/e = "
        << n / std::numbers::e << " (nu_n <= 1)";
    throw ValidationError(msg.str());
  }
  const double s_n = sp.s_n();
  const double nu = sp.nu();
  const double nu_sq = nu * nu;
  const double log_nu3 = 3.0 * std::log(nu);

  // u ^ nu^3/sqrt(u) switches branch at u = nu^2.
  auto f_low = [&prior](double u) { return std::log(u) + prior.log_density(u); };
  auto f_high = [&prior, log_nu3](double u) {
    return log_nu3 - 0.5 * std::log(u) + prior.log_density(u);
  };
  auto f_mid = [&prior](double u) { return prior.log_density(u) - 0.5 * std::log(u); };

  const auto a = checked_integral(f_low, s_n, nu_sq, "condition 3");
  const auto b = checked_integral(f_high, nu_sq, INFINITY, "condition 3");
  const auto c = checked_integral(f_mid, 1.0, nu_sq, "condition 3");
  const double i1 = a.value() + b.value();
  const double i2 = nu * c.value();

  ConditionCertificate cert;
  cert.condition = ConditionId::C3;
  cert.estimated_constant = (i1 + i2) / s_n;
  cert.satisfied = true;
  std::ostringstream g;
  g << "s_n = " << describe(s_n) << ", nu_n = " << describe(nu) << ", I1 = "
    << describe(i1) << ", I2 = " << describe(i2);
  cert.grid = g.str();
  return cert;
}

// ---------------------------------------------------------------------------

PriorSpec parse_prior_spec(const std::string& text) {
  PriorSpec spec;
  for (const auto& item : text::split(text, ',')) {
    if (item.empty()) {
      continue;
    }
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("prior spec: expected key=value, got '" + item + "'");
    }
    spec[std::string(text::trim(item.substr(0, eq)))] =
        std::string(text::trim(item.substr(eq + 1)));
  }
  return spec;
}

namespace {

double spec_number(const PriorSpec& spec, const std::string& key) {
  const auto it = spec.find(key);
  if (it == spec.end()) {
    throw ValidationError("prior spec: missing field '" + key + "'");
  }
  return text::parse_double(it->second, "prior." + key);
}

std::optional<double> spec_optional(const PriorSpec& spec, const std::string& key) {
  const auto it = spec.find(key);
  if (it == spec.end()) {
    return std::nullopt;
  }
  return text::parse_double(it->second, "prior." + key);
}

}  // namespace

ScaleMixturePrior make_prior(const PriorSpec& spec) {
  const auto fam = spec.find("family");
  if (fam == spec.end()) {
    throw ValidationError("prior spec: missing field 'family'");
  }
  const auto n_it = spec.find("n");
  if (n_it == spec.end()) {
    throw ValidationError("prior spec: missing field 'n'");
  }
  const long n = text::parse_long(n_it->second, "prior.n");
  const double p = spec_number(spec, "p");

  static const std::vector<std::string> known = {
      "family", "n", "p", "tau", "rate", "shape", "scale",
      "b_prime", "c_prime", "K", "u_star", "u0", "R"};
  for (const auto& [key, value] : spec) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ValidationError("prior spec: unknown field '" + key + "'");
    }
  }

  std::optional<ScaleMixturePrior> prior;
  if (fam->second == "horseshoe") {
    // tau defaults to p/n, the sparsity-matched choice.
    const auto tau_it = spec.find("tau");
    const double tau = (tau_it == spec.end() || tau_it->second == "auto")
                           ? p / static_cast<double>(n)
                           : text::parse_double(tau_it->second, "prior.tau");
    prior = horseshoe_prior(tau, n, p);
  } else if (fam->second == "exponential") {
    prior = exponential_prior(spec_number(spec, "rate"), n, p);
  } else if (fam->second == "inverse_gamma") {
    prior = inverse_gamma_prior(spec_number(spec, "shape"), spec_number(spec, "scale"), n, p);
  } else {
    throw ValidationError("prior spec: unknown family '" + fam->second +
                          "' (expected horseshoe, exponential or inverse_gamma)");
  }

  ConditionConstants k = prior->constants();
  if (auto v = spec_optional(spec, "b_prime")) k.lower_rate = *v;
  if (auto v = spec_optional(spec, "c_prime")) k.lower_scale = *v;
  if (auto v = spec_optional(spec, "K")) k.lower_exponent = *v;
  if (auto v = spec_optional(spec, "u_star")) k.lower_onset = *v;
  if (auto v = spec_optional(spec, "u0")) k.rv_onset = *v;
  if (auto v = spec_optional(spec, "R")) k.rv_ratio = *v;

  const auto& fresh = *prior;
  return ScaleMixturePrior(fresh.family(),
                           [fresh](double u) { return fresh.log_slowly_varying(u); }, k,
                           fresh.sparsity(), fresh.params());
}

PriorSpec to_spec(const ScaleMixturePrior& prior) {
  const auto& f = prior.family();
  if (f != "horseshoe" && f != "exponential" && f != "inverse_gamma") {
    throw ValidationError("prior family '" + f + "' has no key-value form");
  }
  PriorSpec spec;
  spec["family"] = f;
  spec["n"] = std::to_string(prior.sparsity().n);
  spec["p"] = describe(prior.sparsity().p);
  for (const auto& [key, value] : prior.params()) {
    spec[key] = describe(value);
  }
  const auto& k = prior.constants();
  if (k.lower_rate) spec["b_prime"] = describe(*k.lower_rate);
  if (k.lower_scale) spec["c_prime"] = describe(*k.lower_scale);
  if (k.lower_exponent) spec["K"] = describe(*k.lower_exponent);
  if (k.lower_onset) spec["u_star"] = describe(*k.lower_onset);
  spec["u0"] = describe(k.rv_onset);
  if (k.rv_ratio) spec["R"] = describe(*k.rv_ratio);
  return spec;
}

std::string format_prior_spec(const PriorSpec& spec) {
  std::string out;
  // family first, rest in key order
  if (auto it = spec.find("family"); it != spec.end()) {
    out = "family=" + it->second;
  }
  for (const auto& [key, value] : spec) {
    if (key == "family") continue;
    if (!out.empty()) out += ',';
    out += key + "=" + value;
  }
  return out;
}

}  // namespace shrinktest
