#include "shrinktest/quadrature.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <queue>
#include <sstream>
#include <vector>

#include "shrinktest/errors.hpp"

namespace shrinktest::quad {

namespace {

// QUADPACK qk21 abscissae and weights.
constexpr std::array<double, 11> kXgk = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0};
constexpr std::array<double, 11> kWgk = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077600525478584, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
constexpr std::array<double, 5> kWg = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

constexpr double kEps = std::numeric_limits<double>::epsilon();

// One half of the z-interval in square-root coordinates. For the left half
// z = z_lo + width t^2, for the right half z = z_hi - width t^2; t in [0,1].
struct Half {
  double anchor_z;        // z at t = 0
  double anchor_one_m_z;  // 1 - z at t = 0, kept separately for accuracy
  double width;
  bool from_left;
};

struct Panel {
  int half;
  double a;
  double b;
  double value;
  double error;

  bool operator<(const Panel& other) const { return error < other.error; }
};

class Integrator {
 public:
  Integrator(const LogIntegrand& log_f, std::array<Half, 2> halves)
      : log_f_(log_f), halves_(halves) {}

  // log of the transformed integrand at parameter t of the given half.
  double log_integrand(int h, double t) {
    const Half& half = halves_[h];
    const double dz = half.width * t * t;
    double z;
    double one_m_z;
    if (half.from_left) {
      z = half.anchor_z + dz;
      one_m_z = half.anchor_one_m_z - dz;
    } else {
      z = half.anchor_z - dz;
      one_m_z = half.anchor_one_m_z + dz;
    }
    if (t <= 0.0 || one_m_z <= 0.0) {
      return -INFINITY;
    }
    const double u = z / one_m_z;
    ++evaluations_;
    const double lf = log_f_(u);
    if (std::isnan(lf) || lf == INFINITY) {
      std::ostringstream msg;
      msg << "non-finite integrand at u = " << u;
      throw NumericError(msg.str());
    }
    if (lf == -INFINITY) {
      return -INFINITY;
    }
    // du = dz / (1-z)^2, dz = 2 width t dt
    return lf + std::log(2.0 * half.width * t) - 2.0 * std::log(one_m_z);
  }

  double scaled(int h, double t) {
    const double lv = log_integrand(h, t);
    if (lv == -INFINITY) {
      return 0.0;
    }
    const double v = std::exp(lv - shift_);
    if (!std::isfinite(v)) {
      throw NumericError("integrand overflow after rescaling");
    }
    return v;
  }

  void set_shift(double shift) { shift_ = shift; }

  Panel kronrod(int h, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half_len = 0.5 * (b - a);
    std::array<double, 21> f{};
    const double fc = scaled(h, center);
    double res_k = fc * kWgk[10];
    double res_g = 0.0;
    double res_abs = std::abs(res_k);
    for (int j = 0; j < 10; ++j) {
      const double dx = half_len * kXgk[j];
      const double f1 = scaled(h, center - dx);
      const double f2 = scaled(h, center + dx);
      f[2 * j] = f1;
      f[2 * j + 1] = f2;
      res_k += kWgk[j] * (f1 + f2);
      res_abs += kWgk[j] * (std::abs(f1) + std::abs(f2));
      if (j % 2 == 1) {
        res_g += kWg[j / 2] * (f1 + f2);
      }
    }
    const double mean = 0.5 * res_k;
    double res_asc = kWgk[10] * std::abs(fc - mean);
    for (int j = 0; j < 10; ++j) {
      res_asc += kWgk[j] * (std::abs(f[2 * j] - mean) + std::abs(f[2 * j + 1] - mean));
    }
    res_k *= half_len;
    res_g *= half_len;
    res_abs *= std::abs(half_len);
    res_asc *= std::abs(half_len);

    double err = std::abs(res_k - res_g);
    if (res_asc != 0.0 && err != 0.0) {
      err = res_asc * std::min(1.0, std::pow(200.0 * err / res_asc, 1.5));
    }
    if (res_abs > std::numeric_limits<double>::min() / (50.0 * kEps)) {
      err = std::max(50.0 * kEps * res_abs, err);
    }
    return Panel{h, a, b, res_k, err};
  }

  long evaluations() const { return evaluations_; }

 private:
  const LogIntegrand& log_f_;
  std::array<Half, 2> halves_;
  double shift_ = 0.0;
  long evaluations_ = 0;
};

}  // namespace

LogIntegral integrate_log(const LogIntegrand& log_f, double lo, double hi,
                          const Options& opts) {
  if (!(lo >= 0.0) || !(hi > lo) || std::isnan(hi)) {
    std::ostringstream msg;
    msg << "integrate_log: invalid limits [" << lo << ", " << hi << "]";
    throw NumericError(msg.str());
  }
  const double z_lo = lo / (1.0 + lo);
  const double one_m_z_lo = 1.0 / (1.0 + lo);
  const double z_hi = std::isinf(hi) ? 1.0 : hi / (1.0 + hi);
  const double one_m_z_hi = std::isinf(hi) ? 0.0 : 1.0 / (1.0 + hi);
  const double width = 0.5 * (one_m_z_lo - one_m_z_hi);

  Integrator integ(log_f, {Half{z_lo, one_m_z_lo, width, true},
                           Half{z_hi, one_m_z_hi, width, false}});

  // Panel edges in t: 0, 2^-L, ..., 1/2, 1.
  std::vector<double> edges;
  edges.push_back(0.0);
  for (int k = opts.geometric_levels; k >= 1; --k) {
    edges.push_back(std::ldexp(1.0, -k));
  }
  edges.push_back(1.0);

  double shift = -INFINITY;
  for (int h = 0; h < 2; ++h) {
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
      for (double frac : {0.25, 0.5, 0.75}) {
        const double t = edges[i] + frac * (edges[i + 1] - edges[i]);
        shift = std::max(shift, integ.log_integrand(h, t));
      }
    }
  }
  LogIntegral out;
  if (shift == -INFINITY) {
    out.evaluations = integ.evaluations();
    return out;
  }
  integ.set_shift(shift);

  std::priority_queue<Panel> heap;
  double total = 0.0;
  double total_err = 0.0;
  for (int h = 0; h < 2; ++h) {
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
      Panel p = integ.kronrod(h, edges[i], edges[i + 1]);
      total += p.value;
      total_err += p.error;
      heap.push(p);
    }
  }

  int panels = static_cast<int>(heap.size());
  while (total_err > opts.rel_tol * std::abs(total)) {
    if (panels >= opts.max_panels) {
      out.converged = false;
      break;
    }
    Panel worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      // Cannot split further in double precision.
      out.converged = false;
      heap.push(worst);
      break;
    }
    Panel left = integ.kronrod(worst.half, worst.a, mid);
    Panel right = integ.kronrod(worst.half, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++panels;
  }

  // Resum to shed drift from the incremental updates.
  total = 0.0;
  total_err = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    total_err += heap.top().error;
    heap.pop();
  }
  out.evaluations = integ.evaluations();
  if (total <= 0.0) {
    out.log_value = -INFINITY;
    out.rel_error = 0.0;
    return out;
  }
  out.log_value = std::log(total) + shift;
  out.rel_error = total_err / total;
  if (out.rel_error <= opts.rel_tol) {
    out.converged = true;
  }
  return out;
}

}  // namespace shrinktest::quad
