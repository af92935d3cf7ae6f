#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>

namespace shrinktest {

// The pair (n, p) fixing tau_n(p) = p/n and nu_n(p) = sqrt(log(n/p)).
struct Sparsity {
  long n = 0;
  double p = 0.0;

  double tau() const { return p / static_cast<double>(n); }
  double nu() const { return std::sqrt(std::log(static_cast<double>(n) / p)); }
  // s_n = tau_n(p) nu_n(p)^2
  double s_n() const { return tau() * std::log(static_cast<double>(n) / p); }

  void validate() const;
};

// Constants of the tail decomposition pi(u) = L(u) e^{-b u} and of the lower
// bound C' pi(u) >= tau^K e^{-b' u} for u >= u*. Unset optionals are
// estimated by the certificate operations.
struct ConditionConstants {
  double tail_rate = 0.0;  // b
  std::optional<double> lower_rate;      // b'
  std::optional<double> lower_scale;     // C'
  std::optional<double> lower_exponent;  // K
  std::optional<double> lower_onset;     // u*
  double rv_onset = 1.0;                 // u0
  std::optional<double> rv_ratio;        // R
};

// Density pi on (0, inf) for the local variance sigma^2 of a Gaussian scale
// mixture, stored through its slowly varying factor: log pi(u) = log L(u) - b u.
// Immutable after construction; safe to share between threads.
class ScaleMixturePrior {
 public:
  using LogFn = std::function<double(double)>;

  ScaleMixturePrior(std::string family, LogFn log_slowly_varying,
                    ConditionConstants constants, Sparsity sparsity,
                    std::map<std::string, double> params = {});

  // Wraps a user density given as log pi; b must be declared (the split of
  // pi into L and e^{-bu} is not unique).
  static ScaleMixturePrior from_log_density(std::string family, LogFn log_density,
                                            ConditionConstants constants,
                                            Sparsity sparsity);

  double log_density(double u) const { return log_l_(u) - constants_.tail_rate * u; }
  double density(double u) const { return std::exp(log_density(u)); }
  double log_slowly_varying(double u) const { return log_l_(u); }

  const std::string& family() const { return family_; }
  const ConditionConstants& constants() const { return constants_; }
  const Sparsity& sparsity() const { return sparsity_; }
  const std::map<std::string, double>& params() const { return params_; }

  // Same density and constants, new sparsity pair.
  ScaleMixturePrior with_sparsity(Sparsity sparsity) const;

 private:
  std::string family_;
  LogFn log_l_;
  ConditionConstants constants_;
  Sparsity sparsity_;
  std::map<std::string, double> params_;
};

// pi_tau(u) = tau / (pi sqrt(u) (tau^2 + u)).
ScaleMixturePrior horseshoe_prior(double tau, long n, double p);
// pi(u) = rate e^{-rate u}.
ScaleMixturePrior exponential_prior(double rate, long n, double p);
// pi(u) = scale^shape / Gamma(shape) u^{-shape-1} e^{-scale/u}.
ScaleMixturePrior inverse_gamma_prior(double shape, double scale, long n, double p);

// Integral of pi over (0, inf); 1 for a proper density.
double total_mass(const ScaleMixturePrior& prior);

// ---------------------------------------------------------------------------
// Condition certificates. Grid checks are evidence, not proof: each
// certificate carries a description of the grid it was computed on.

enum class ConditionId { C1Rv, C1Lower, C2, C3 };

std::string to_string(ConditionId id);

struct ConditionCertificate {
  ConditionId condition = ConditionId::C2;
  bool satisfied = false;
  double estimated_constant = 0.0;
  std::string witness;  // violating grid point when !satisfied
  std::string grid;
};

struct GridSpec {
  double a_min = 1.0;
  double a_max = 2.0;
  int a_points = 17;
  std::optional<double> u_min;  // defaults to u0 (rv) or u* (lower bound)
  double u_max = 1e4;
  int u_points = 512;
  // Largest R accepted as "bounded" on a finite grid.
  double max_ratio = 1e6;

  void validate() const;
};

struct Condition1Certificate {
  ConditionCertificate regular_variation;
  ConditionCertificate lower_bound;

  bool satisfied() const { return regular_variation.satisfied && lower_bound.satisfied; }
};

Condition1Certificate check_condition1(const ScaleMixturePrior& prior,
                                       const GridSpec& grid = {});
ConditionCertificate check_condition2(const ScaleMixturePrior& prior);
// Throws ValidationError when p >= n/e (nu_n(p) <= 1).
ConditionCertificate check_condition3(const ScaleMixturePrior& prior);

// ---------------------------------------------------------------------------
// Key-value prior specs: family=horseshoe,tau=0.01,n=10000,p=100[,K=1,...]

using PriorSpec = std::map<std::string, std::string>;

PriorSpec parse_prior_spec(const std::string& text);
ScaleMixturePrior make_prior(const PriorSpec& spec);
PriorSpec to_spec(const ScaleMixturePrior& prior);
std::string format_prior_spec(const PriorSpec& spec);

}  // namespace shrinktest
