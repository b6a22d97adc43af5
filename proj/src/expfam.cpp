#include "crm/expfam.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/factorials.hpp>
#include <boost/math/special_functions/polygamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "crm/error.hpp"
#include "crm/quadrature.hpp"

namespace crm {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string coordinate_label(const ExpFamily& fam, std::size_t j) {
  return "coordinate " + std::to_string(j + 1) + " (" +
         fam.coordinate_name(j) + ")";
}

// psi^{(n)}(x); n = 0 is the digamma function.
double psi(int n, double x) {
  if (n == 0) return boost::math::digamma(x);
  if (n == 1) return boost::math::trigamma(x);
  return boost::math::polygamma(n, x);
}

double factorial(int n) { return boost::math::factorial<double>(n); }

std::optional<std::string> require_finite(const ExpFamily& fam,
                                          const Params& p) {
  if (p.size() != fam.dimension()) {
    return fam.name() + ": expected " + std::to_string(fam.dimension()) +
           " parameters, got " + std::to_string(p.size());
  }
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (!std::isfinite(p[j])) {
      return coordinate_label(fam, j) + " = " + fmt(p[j]) + " is not finite";
    }
  }
  return std::nullopt;
}

std::optional<std::string> require_positive(const ExpFamily& fam,
                                            const Params& p, std::size_t j) {
  if (!(p[j] > 0.0)) {
    return coordinate_label(fam, j) + " = " + fmt(p[j]) + " must be > 0";
  }
  return std::nullopt;
}

}  // namespace

bool Support::contains(double x) const {
  if (std::isnan(x)) return false;
  if (discrete && std::floor(x) != x) return false;
  const bool above = (lower_closed || discrete) ? x >= lower : x > lower;
  const bool below = (upper_closed || discrete) ? x <= upper : x < upper;
  return above && below && std::isfinite(x);
}

// ---------------------------------------------------------------------------
// ExpFamily defaults

bool ExpFamily::has_inverse(std::size_t) const { return false; }

double ExpFamily::statistic_inverse(std::size_t k, double) const {
  throw DomainError(name() + ": statistic " + std::to_string(k + 1) +
                    " has no declared inverse");
}

double ExpFamily::statistic_inverse_derivative(std::size_t k, double) const {
  throw DomainError(name() + ": statistic " + std::to_string(k + 1) +
                    " has no declared inverse");
}

std::pair<double, double> ExpFamily::statistic_image(std::size_t) const {
  return {-kInf, kInf};
}

bool ExpFamily::in_natural_space(const Params& p) const {
  return !natural_space_violation(p).has_value();
}

std::optional<double> ExpFamily::cumulant(const Params&, std::size_t,
                                          int) const {
  return std::nullopt;
}

std::optional<double> ExpFamily::raw_moment(const Params&, std::size_t,
                                            int) const {
  return std::nullopt;
}

double ExpFamily::sample(const Params& p, Rng& rng) const {
  const Support s = support();
  const double target = uniform_open(rng);
  if (s.discrete) {
    double cum = 0.0;
    const double last = std::min(s.upper, s.lower + 1e7);
    for (double x = s.lower; x <= last; x += 1.0) {
      cum += density(*this, p, x);
      if (cum >= target) return x;
    }
    return last;
  }
  double lo = s.lower;
  double hi = s.upper;
  const double c = center(p);
  if (!std::isfinite(lo)) {
    double step = std::max(1.0, std::abs(c));
    lo = c - step;
    while (numeric_cdf(*this, p, lo) > target) {
      step *= 2;
      lo = c - step;
    }
  }
  if (!std::isfinite(hi)) {
    double step = std::max(1.0, std::abs(c));
    hi = c + step;
    while (numeric_cdf(*this, p, hi) < target) {
      step *= 2;
      hi = c + step;
      if (!std::isfinite(hi)) return std::numeric_limits<double>::max();
    }
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    if (numeric_cdf(*this, p, mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-13 * std::max(1.0, std::abs(lo))) break;
  }
  return 0.5 * (lo + hi);
}

double ExpFamily::sample_statistic(const Params& p, std::size_t k,
                                   Rng& rng) const {
  return statistic(k, sample(p, rng));
}

double ExpFamily::expect_statistic(const Params& p, std::size_t k,
                                   const std::function<double(double)>& g,
                                   double u_lo) const {
  const Support s = support();
  if (s.discrete || !std::isfinite(u_lo) || !has_inverse(k)) {
    return expectation(*this, p, [&](double x) {
      const double u = statistic(k, x);
      return u >= u_lo ? g(u) : 0.0;
    });
  }
  const auto [img_lo, img_hi] = statistic_image(k);
  if (u_lo >= img_hi) return 0.0;
  if (u_lo <= img_lo) return expect_statistic(p, k, g);
  const double x0 = statistic_inverse(k, u_lo);
  const bool increasing = statistic_inverse_derivative(k, u_lo) > 0;
  const double a = increasing ? x0 : s.lower;
  const double b = increasing ? s.upper : x0;
  return quad::improper(
      [&](double x) {
        return g(statistic(k, x)) * std::exp(log_density(*this, p, x));
      },
      a, b, center(p));
}

// ---------------------------------------------------------------------------
// Families

namespace {

class BetaFamily final : public ExpFamily {
 public:
  std::string name() const override { return "beta"; }
  std::size_t dimension() const override { return 2; }
  Support support() const override { return {0.0, 1.0, false, false, false}; }
  std::string coordinate_name(std::size_t j) const override {
    return j == 0 ? "alpha" : "beta";
  }
  double log_base_density(double x) const override {
    return -std::log(x) - std::log1p(-x);
  }
  double statistic(std::size_t k, double x) const override {
    return k == 0 ? std::log(x) : std::log1p(-x);
  }
  bool has_inverse(std::size_t) const override { return true; }
  double statistic_inverse(std::size_t k, double u) const override {
    return k == 0 ? std::exp(u) : -std::expm1(u);
  }
  double statistic_inverse_derivative(std::size_t k, double u) const override {
    return k == 0 ? std::exp(u) : -std::exp(u);
  }
  std::pair<double, double> statistic_image(std::size_t) const override {
    return {-kInf, 0.0};
  }
  std::vector<double> to_natural(const Params& p) const override { return p; }
  Params from_natural(std::span<const double> eta) const override {
    return {eta.begin(), eta.end()};
  }
  std::optional<std::string> natural_space_violation(
      const Params& p) const override {
    if (auto e = require_finite(*this, p)) return e;
    if (auto e = require_positive(*this, p, 0)) return e;
    return require_positive(*this, p, 1);
  }
  double log_partition(const Params& p) const override {
    return std::lgamma(p[0]) + std::lgamma(p[1]) - std::lgamma(p[0] + p[1]);
  }
  std::optional<double> cumulant(const Params& p, std::size_t k,
                                 int order) const override {
    return psi(order - 1, p[k]) - psi(order - 1, p[0] + p[1]);
  }
  double sample(const Params& p, Rng& rng) const override {
    std::gamma_distribution<double> ga(p[0], 1.0);
    std::gamma_distribution<double> gb(p[1], 1.0);
    for (;;) {
      const double a = ga(rng);
      const double b = gb(rng);
      const double x = a / (a + b);
      if (x > 0.0 && x < 1.0) return x;
    }
  }
  double center(const Params& p) const override {
    return p[0] / (p[0] + p[1]);
  }
};

class GammaFamily final : public ExpFamily {
 public:
  std::string name() const override { return "gamma"; }
  std::size_t dimension() const override { return 2; }
  Support support() const override { return {0.0, kInf, false, false, false}; }
  std::string coordinate_name(std::size_t j) const override {
    return j == 0 ? "shape" : "rate";
  }
  double log_base_density(double x) const override { return -std::log(x); }
  double statistic(std::size_t k, double x) const override {
    return k == 0 ? std::log(x) : x;
  }
  bool has_inverse(std::size_t) const override { return true; }
  double statistic_inverse(std::size_t k, double u) const override {
    return k == 0 ? std::exp(u) : u;
  }
  double statistic_inverse_derivative(std::size_t k, double u) const override {
    return k == 0 ? std::exp(u) : 1.0;
  }
  std::pair<double, double> statistic_image(std::size_t k) const override {
    return k == 0 ? std::pair{-kInf, kInf} : std::pair{0.0, kInf};
  }
  std::vector<double> to_natural(const Params& p) const override {
    return {p[0], -p[1]};
  }
  Params from_natural(std::span<const double> eta) const override {
    return {eta[0], -eta[1]};
  }
  std::optional<std::string> natural_space_violation(
      const Params& p) const override {
    if (auto e = require_finite(*this, p)) return e;
    if (auto e = require_positive(*this, p, 0)) return e;
    return require_positive(*this, p, 1);
  }
  double log_partition(const Params& p) const override {
    return std::lgamma(p[0]) - p[0] * std::log(p[1]);
  }
  std::optional<double> cumulant(const Params& p, std::size_t k,
                                 int order) const override {
    if (k == 0) {
      return order == 1 ? psi(0, p[0]) - std::log(p[1]) : psi(order - 1, p[0]);
    }
    return factorial(order - 1) * p[0] / std::pow(p[1], order);
  }
  double sample(const Params& p, Rng& rng) const override {
    std::gamma_distribution<double> g(p[0], 1.0 / p[1]);
    return g(rng);
  }
  double center(const Params& p) const override { return p[0] / p[1]; }
};

class ParetoFamily final : public ExpFamily {
 public:
  explicit ParetoFamily(double u_m) : u_m_(u_m) {
    if (!(u_m > 0.0) || !std::isfinite(u_m)) {
      throw DomainError("pareto: scale u_m = " + fmt(u_m) + " must be > 0");
    }
  }
  std::string name() const override { return "pareto"; }
  std::size_t dimension() const override { return 1; }
  Support support() const override { return {u_m_, kInf, true, false, false}; }
  std::string coordinate_name(std::size_t) const override { return "alpha"; }
  double log_base_density(double) const override { return 0.0; }
  double statistic(std::size_t, double x) const override {
    return std::log(x);
  }
  bool has_inverse(std::size_t) const override { return true; }
  double statistic_inverse(std::size_t, double u) const override {
    return std::exp(u);
  }
  double statistic_inverse_derivative(std::size_t, double u) const override {
    return std::exp(u);
  }
  std::pair<double, double> statistic_image(std::size_t) const override {
    return {std::log(u_m_), kInf};
  }
  std::vector<double> to_natural(const Params& p) const override {
    return {-(p[0] + 1.0)};
  }
  Params from_natural(std::span<const double> eta) const override {
    return {-eta[0] - 1.0};
  }
  std::optional<std::string> natural_space_violation(
      const Params& p) const override {
    if (auto e = require_finite(*this, p)) return e;
    return require_positive(*this, p, 0);
  }
  double log_partition(const Params& p) const override {
    return -std::log(p[0]) - p[0] * std::log(u_m_);
  }
  std::optional<double> cumulant(const Params& p, std::size_t,
                                 int order) const override {
    const double tail = factorial(order - 1) / std::pow(p[0], order);
    return order == 1 ? std::log(u_m_) + tail : tail;
  }
  double sample(const Params& p, Rng& rng) const override {
    return u_m_ * std::pow(uniform_open(rng), -1.0 / p[0]);
  }
  double sample_statistic(const Params& p, std::size_t,
                          Rng& rng) const override {
    return std::log(u_m_) - std::log(uniform_open(rng)) / p[0];
  }
  double center(const Params& p) const override {
    return u_m_ * std::pow(2.0, 1.0 / p[0]);
  }

 private:
  double u_m_;
};

// Family on (e^{u_m}, inf) with T = (ln x, ln ln x). Working in y = ln x
// keeps everything finite: y has density proportional to
// exp(-rho y) y^{-1-alpha} on (u_m, inf).
class ParetoLogLogFamily final : public ExpFamily {
 public:
  explicit ParetoLogLogFamily(double u_m) : u_m_(u_m) {
    if (!(u_m > 0.0) || !(u_m <= 700.0)) {
      throw DomainError("pareto_loglog: scale u_m = " + fmt(u_m) +
                        " must lie in (0, 700]");
    }
  }
  std::string name() const override { return "pareto_loglog"; }
  std::size_t dimension() const override { return 2; }
  Support support() const override {
    return {std::exp(u_m_), kInf, false, false, false};
  }
  std::string coordinate_name(std::size_t j) const override {
    return j == 0 ? "rho" : "alpha";
  }
  double log_base_density(double) const override { return 0.0; }
  double statistic(std::size_t k, double x) const override {
    return k == 0 ? std::log(x) : std::log(std::log(x));
  }
  bool has_inverse(std::size_t) const override { return true; }
  double statistic_inverse(std::size_t k, double u) const override {
    return k == 0 ? std::exp(u) : std::exp(std::exp(u));
  }
  double statistic_inverse_derivative(std::size_t k, double u) const override {
    return k == 0 ? std::exp(u) : std::exp(u + std::exp(u));
  }
  std::pair<double, double> statistic_image(std::size_t k) const override {
    return {k == 0 ? u_m_ : std::log(u_m_), kInf};
  }
  std::vector<double> to_natural(const Params& p) const override {
    return {-1.0 - p[0], -1.0 - p[1]};
  }
  Params from_natural(std::span<const double> eta) const override {
    return {-1.0 - eta[0], -1.0 - eta[1]};
  }
  std::optional<std::string> natural_space_violation(
      const Params& p) const override {
    if (auto e = require_finite(*this, p)) return e;
    if (p[0] < 0.0) {
      return coordinate_label(*this, 0) + " = " + fmt(p[0]) + " must be >= 0";
    }
    if (p[0] == 0.0 && !(p[1] > 0.0)) {
      return coordinate_label(*this, 1) + " = " + fmt(p[1]) +
             " must be > 0 when rho = 0";
    }
    return std::nullopt;
  }
  double log_partition(const Params& p) const override {
    const double rho = p[0];
    const double alpha = p[1];
    if (rho == 0.0) return -std::log(alpha) - alpha * std::log(u_m_);
    // y = u_m (1 + v): the remaining integral is O(1) for any (rho, alpha).
    thread_local boost::math::quadrature::exp_sinh<double> integrator;
    const double c = rho * u_m_;
    auto f = [&](double v) {
      const double r = std::exp(-c * v - (1.0 + alpha) * std::log1p(v));
      return std::isfinite(r) ? r : 0.0;
    };
    const double j = integrator.integrate(f, 0.0, kInf, 1e-15);
    return -alpha * std::log(u_m_) - c + std::log(j * u_m_);
  }
  std::optional<double> raw_moment(const Params& p, std::size_t k,
                                   int m) const override {
    if (k != 0) return std::nullopt;
    Params shifted{p[0], p[1] - m};
    if (!in_natural_space(shifted)) {
      throw DerivativeDomainError(
          "pareto_loglog: moment " + std::to_string(m) +
          " of ln x is infinite at alpha = " + fmt(p[1]));
    }
    return std::exp(log_partition(shifted) - log_partition(p));
  }
  std::optional<double> cumulant(const Params& p, std::size_t k,
                                 int order) const override {
    if (k != 1 || p[0] != 0.0) return std::nullopt;
    const double tail = factorial(order - 1) / std::pow(p[1], order);
    return order == 1 ? std::log(u_m_) + tail : tail;
  }
  double sample(const Params& p, Rng& rng) const override {
    return std::exp(sample_log(p, rng));
  }
  double sample_statistic(const Params& p, std::size_t k,
                          Rng& rng) const override {
    const double y = sample_log(p, rng);
    return k == 0 ? y : std::log(y);
  }
  double expect_statistic(const Params& p, std::size_t k,
                          const std::function<double(double)>& g,
                          double u_lo) const override {
    double y_lo = u_m_;
    if (std::isfinite(u_lo)) {
      y_lo = std::max(y_lo, k == 0 ? u_lo : std::exp(u_lo));
    }
    if (p[0] == 0.0) {
      // Pure power tail: w = (u_m / y)^alpha is uniform on (0, 1), which
      // stays well conditioned as alpha -> 0.
      const double alpha = p[1];
      const double w_hi = std::exp(-alpha * (std::log(y_lo) - std::log(u_m_)));
      if (!(w_hi > 0.0)) return 0.0;
      auto f = [&](double w) {
        const double log_y = std::log(u_m_) - std::log(w) / alpha;
        return g(k == 0 ? std::exp(log_y) : std::log(log_y));
      };
      return quad::improper(f, 0.0, w_hi, 0.5 * w_hi);
    }
    const double a = log_partition(p);
    auto f = [&](double y) {
      const double dens = std::exp(-p[0] * y - (1.0 + p[1]) * std::log(y) - a);
      return dens == 0.0 ? 0.0 : g(k == 0 ? y : std::log(y)) * dens;
    };
    return quad::improper(f, y_lo, kInf, center_log(p));
  }
  double center(const Params& p) const override {
    return std::exp(std::min(center_log(p), 700.0));
  }

 private:
  double center_log(const Params& p) const {
    if (p[0] == 0.0) return u_m_ * std::pow(2.0, 1.0 / p[1]);
    const double mode = -(1.0 + p[1]) / p[0];
    return mode > u_m_ ? mode : u_m_ + 1.0 / p[0];
  }

  double sample_log(const Params& p, Rng& rng) const {
    if (p[0] == 0.0) return u_m_ * std::pow(uniform_open(rng), -1.0 / p[1]);
    // Inverse CDF of y by bisection on the numerically integrated tail.
    const double target = uniform_open(rng);
    auto tail = [&](double y) {
      return expect_statistic(p, 0, [](double) { return 1.0; }, y);
    };
    double lo = u_m_;
    double hi = center_log(p);
    while (tail(hi) > target) hi = u_m_ + 2.0 * (hi - u_m_) + 1.0;
    for (int it = 0; it < 100 && hi - lo > 1e-13 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (tail(mid) > target) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  }

  double u_m_;
};

class LogNormalFamily final : public ExpFamily {
 public:
  explicit LogNormalFamily(double mu) : mu_(mu) {
    if (!std::isfinite(mu)) {
      throw DomainError("lognormal: drift mu = " + fmt(mu) + " is not finite");
    }
  }
  std::string name() const override { return "lognormal"; }
  std::size_t dimension() const override { return 1; }
  Support support() const override { return {0.0, kInf, false, false, false}; }
  std::string coordinate_name(std::size_t) const override {
    return "variance";
  }
  double log_base_density(double x) const override {
    return -std::log(x) - kLogSqrt2Pi;
  }
  double statistic(std::size_t, double x) const override {
    const double d = std::log(x) - mu_;
    return d * d;
  }
  std::pair<double, double> statistic_image(std::size_t) const override {
    return {0.0, kInf};
  }
  std::vector<double> to_natural(const Params& p) const override {
    return {-0.5 / p[0]};
  }
  Params from_natural(std::span<const double> eta) const override {
    return {-0.5 / eta[0]};
  }
  std::optional<std::string> natural_space_violation(
      const Params& p) const override {
    if (auto e = require_finite(*this, p)) return e;
    return require_positive(*this, p, 0);
  }
  double log_partition(const Params& p) const override {
    return 0.5 * std::log(p[0]);
  }
  std::optional<double> cumulant(const Params& p, std::size_t,
                                 int order) const override {
    return std::pow(p[0], order) * std::ldexp(1.0, order - 1) *
           factorial(order - 1);
  }
  double sample(const Params& p, Rng& rng) const override {
    std::normal_distribution<double> n(mu_, std::sqrt(p[0]));
    return std::exp(n(rng));
  }
  double center(const Params&) const override { return std::exp(mu_); }
  double drift() const { return mu_; }

 private:
  double mu_;
};

class PoissonFamily final : public ExpFamily {
 public:
  std::string name() const override { return "poisson"; }
  std::size_t dimension() const override { return 1; }
  Support support() const override { return {0.0, kInf, true, false, true}; }
  std::string coordinate_name(std::size_t) const override { return "lambda"; }
  double log_base_density(double x) const override {
    return -std::lgamma(x + 1.0);
  }
  double statistic(std::size_t, double x) const override { return x; }
  std::pair<double, double> statistic_image(std::size_t) const override {
    return {0.0, kInf};
  }
  std::vector<double> to_natural(const Params& p) const override {
    return {std::log(p[0])};
  }
  Params from_natural(std::span<const double> eta) const override {
    return {std::exp(eta[0])};
  }
  std::optional<std::string> natural_space_violation(
      const Params& p) const override {
    if (auto e = require_finite(*this, p)) return e;
    return require_positive(*this, p, 0);
  }
  double log_partition(const Params& p) const override { return p[0]; }
  std::optional<double> cumulant(const Params& p, std::size_t,
                                 int) const override {
    return p[0];
  }
  double sample(const Params& p, Rng& rng) const override {
    std::poisson_distribution<long long> d(p[0]);
    return static_cast<double>(d(rng));
  }
  double center(const Params& p) const override { return p[0]; }
};

class BernoulliFamily final : public ExpFamily {
 public:
  std::string name() const override { return "bernoulli"; }
  std::size_t dimension() const override { return 1; }
  Support support() const override { return {0.0, 1.0, true, true, true}; }
  std::string coordinate_name(std::size_t) const override { return "p"; }
  double log_base_density(double) const override { return 0.0; }
  double statistic(std::size_t, double x) const override { return x; }
  std::pair<double, double> statistic_image(std::size_t) const override {
    return {0.0, 1.0};
  }
  std::vector<double> to_natural(const Params& p) const override {
    return {std::log(p[0]) - std::log1p(-p[0])};
  }
  Params from_natural(std::span<const double> eta) const override {
    return {1.0 / (1.0 + std::exp(-eta[0]))};
  }
  std::optional<std::string> natural_space_violation(
      const Params& p) const override {
    if (auto e = require_finite(*this, p)) return e;
    if (!(p[0] > 0.0 && p[0] < 1.0)) {
      return coordinate_label(*this, 0) + " = " + fmt(p[0]) +
             " must lie in (0, 1)";
    }
    return std::nullopt;
  }
  double log_partition(const Params& p) const override {
    return -std::log1p(-p[0]);
  }
  std::optional<double> cumulant(const Params& p, std::size_t,
                                 int order) const override {
    const double q = p[0];
    switch (order) {
      case 1: return q;
      case 2: return q * (1 - q);
      case 3: return q * (1 - q) * (1 - 2 * q);
      case 4: return q * (1 - q) * (1 - 6 * q + 6 * q * q);
      default: return std::nullopt;
    }
  }
  double sample(const Params& p, Rng& rng) const override {
    return uniform_open(rng) < p[0] ? 1.0 : 0.0;
  }
  double center(const Params& p) const override { return p[0]; }
};

}  // namespace

FamilyPtr make_beta() { return std::make_shared<BetaFamily>(); }
FamilyPtr make_gamma() { return std::make_shared<GammaFamily>(); }
FamilyPtr make_pareto(double u_m) {
  return std::make_shared<ParetoFamily>(u_m);
}
FamilyPtr make_pareto_loglog(double u_m) {
  return std::make_shared<ParetoLogLogFamily>(u_m);
}
FamilyPtr make_lognormal(double mu) {
  return std::make_shared<LogNormalFamily>(mu);
}
FamilyPtr make_poisson() { return std::make_shared<PoissonFamily>(); }
FamilyPtr make_bernoulli() { return std::make_shared<BernoulliFamily>(); }

// ---------------------------------------------------------------------------
// Operations

void require_admissible(const ExpFamily& fam, const Params& p) {
  if (auto why = fam.natural_space_violation(p)) {
    throw DomainError(fam.name() + ": parameter outside natural space: " +
                      *why);
  }
}

double log_density(const ExpFamily& fam, const Params& p, double x) {
  double acc = fam.log_base_density(x) - fam.log_partition(p);
  const auto eta = fam.to_natural(p);
  for (std::size_t j = 0; j < eta.size(); ++j) {
    acc += eta[j] * fam.statistic(j, x);
  }
  return acc;
}

double density(const ExpFamily& fam, const Params& p, double x) {
  require_admissible(fam, p);
  if (!fam.support().contains(x)) {
    throw SupportError(fam.name() + ": x = " + fmt(x) +
                       " lies outside the support");
  }
  return std::exp(log_density(fam, p, x));
}

double log_partition(const ExpFamily& fam, const Params& p) {
  require_admissible(fam, p);
  return fam.log_partition(p);
}

namespace {

// Raw moments from cumulants: m_n = sum_{i<n} C(n-1, i) kappa_{i+1} m_{n-1-i}.
std::optional<double> moment_from_cumulants(const ExpFamily& fam,
                                            const Params& p, std::size_t k,
                                            int m) {
  std::vector<double> kappa(m + 1);
  for (int j = 1; j <= m; ++j) {
    auto c = fam.cumulant(p, k, j);
    if (!c) return std::nullopt;
    kappa[j] = *c;
  }
  std::vector<double> raw(m + 1);
  raw[0] = 1.0;
  for (int n = 1; n <= m; ++n) {
    double acc = 0.0;
    double binom = 1.0;
    for (int i = 0; i < n; ++i) {
      acc += binom * kappa[i + 1] * raw[n - 1 - i];
      binom = binom * (n - 1 - i) / (i + 1);
    }
    raw[n] = acc;
  }
  return raw[m];
}

// m-th derivative at 0 of f(d) = exp(A(eta + d e_k) - A(eta)), central
// differences with one Richardson step for m >= 2.
double moment_finite_difference(const ExpFamily& fam, const Params& p,
                                std::size_t k, int m) {
  if (m > 3) {
    throw DomainError(fam.name() +
                      ": finite-difference moments support m <= 3");
  }
  const auto eta = fam.to_natural(p);
  const double a0 = fam.log_partition(p);
  const double scale = std::max(1.0, std::abs(eta[k]));
  static constexpr std::array<double, 4> kBase{0.0, 1e-5, 5e-4, 2e-3};
  const int reach = m == 3 ? 2 : 1;

  auto shifted = [&](double d) -> std::optional<double> {
    auto e = eta;
    e[k] += d;
    if (e[k] == eta[k]) return std::nullopt;
    const Params q = fam.from_natural(e);
    if (!fam.in_natural_space(q)) return std::nullopt;
    const double v = std::exp(fam.log_partition(q) - a0);
    return std::isfinite(v) ? std::optional<double>(v) : std::nullopt;
  };
  auto stencil = [&](double h) -> std::optional<double> {
    std::array<double, 5> f{};
    for (int j = -reach; j <= reach; ++j) {
      if (j == 0) {
        f[2] = 1.0;
        continue;
      }
      auto v = shifted(j * h);
      if (!v) return std::nullopt;
      f[j + 2] = *v;
    }
    switch (m) {
      case 1: return (f[3] - f[1]) / (2 * h);
      case 2: return (f[3] - 2 * f[2] + f[1]) / (h * h);
      default: return (f[4] - 2 * f[3] + 2 * f[1] - f[0]) / (2 * h * h * h);
    }
  };

  double h = kBase[m] * scale;
  for (; h >= 1e-10 * scale; h *= 0.5) {
    auto coarse = stencil(h);
    if (!coarse) continue;
    if (m == 1) return *coarse;
    auto fine = stencil(0.5 * h);
    if (!fine) continue;
    return (4.0 * *fine - *coarse) / 3.0;
  }
  throw DerivativeDomainError(
      fam.name() + ": no admissible finite-difference step around " +
      coordinate_label(fam, k) + " = " + fmt(p[k]));
}

}  // namespace

double moment_suff_stat(const ExpFamily& fam, const Params& p, std::size_t k,
                        int m, MomentMethod method) {
  require_admissible(fam, p);
  if (k >= fam.dimension()) {
    throw DomainError(fam.name() + ": statistic index " +
                      std::to_string(k + 1) + " out of range");
  }
  if (m < 1) throw DomainError("moment order must be >= 1");
  if (method != MomentMethod::FiniteDifference) {
    if (auto r = fam.raw_moment(p, k, m)) return *r;
    if (auto r = moment_from_cumulants(fam, p, k, m)) return *r;
    if (method == MomentMethod::ClosedForm) {
      throw DomainError(fam.name() + ": no closed-form moment for statistic " +
                        std::to_string(k + 1));
    }
  }
  return moment_finite_difference(fam, p, k, m);
}

double statistic_mgf(const ExpFamily& fam, const Params& p, std::size_t k,
                     double s) {
  require_admissible(fam, p);
  auto eta = fam.to_natural(p);
  eta[k] += s;
  const Params q = fam.from_natural(eta);
  if (!fam.in_natural_space(q)) {
    throw DomainError(fam.name() + ": E[exp(" + fmt(s) + " T_" +
                      std::to_string(k + 1) + ")] is infinite");
  }
  return std::exp(fam.log_partition(q) - fam.log_partition(p));
}

double raw_moment_beta(double alpha, double beta, int m) {
  if (!(alpha > 0.0) || !(beta > 0.0)) {
    throw DomainError("raw_moment_beta: alpha and beta must be > 0");
  }
  return std::exp(std::lgamma(alpha + m) + std::lgamma(alpha + beta) -
                  std::lgamma(alpha + beta + m) - std::lgamma(alpha));
}

double sample(const ExpFamily& fam, const Params& p, Rng& rng) {
  require_admissible(fam, p);
  return fam.sample(p, rng);
}

double expectation(const ExpFamily& fam, const Params& p,
                   const std::function<double(double)>& g) {
  require_admissible(fam, p);
  const Support s = fam.support();
  if (s.discrete) {
    const double c = fam.center(p);
    const double last =
        std::min(s.upper, c + 40.0 * std::sqrt(std::max(c, 1.0)) + 60.0);
    double acc = 0.0;
    for (double x = s.lower; x <= last; x += 1.0) {
      acc += g(x) * std::exp(log_density(fam, p, x));
    }
    return acc;
  }
  return quad::improper(
      [&](double x) { return g(x) * std::exp(log_density(fam, p, x)); },
      s.lower, s.upper, fam.center(p));
}

double numeric_cdf(const ExpFamily& fam, const Params& p, double x) {
  const Support s = fam.support();
  if (x <= s.lower) return s.discrete && x == s.lower ? density(fam, p, x) : 0.0;
  if (s.discrete) {
    double acc = 0.0;
    for (double v = s.lower; v <= std::min(x, s.upper); v += 1.0) {
      acc += std::exp(log_density(fam, p, v));
    }
    return std::min(acc, 1.0);
  }
  if (x >= s.upper) return 1.0;
  const double c = fam.center(p);
  const double v = quad::improper(
      [&](double y) { return std::exp(log_density(fam, p, y)); }, s.lower, x,
      c);
  return std::clamp(v, 0.0, 1.0);
}

std::vector<double> support_grid(const ExpFamily& fam, std::size_t count) {
  const Support s = fam.support();
  std::vector<double> grid;
  grid.reserve(count);
  if (s.discrete) {
    for (std::size_t i = 0; i < count && s.lower + i <= s.upper; ++i) {
      grid.push_back(s.lower + static_cast<double>(i));
    }
    return grid;
  }
  const double denom = count > 1 ? static_cast<double>(count - 1) : 1.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double f = static_cast<double>(i) / denom;
    if (std::isfinite(s.lower) && std::isfinite(s.upper)) {
      grid.push_back(s.lower + (s.upper - s.lower) * (i + 0.5) / count);
    } else if (std::isfinite(s.lower)) {
      const double w = std::max(1.0, std::abs(s.lower));
      grid.push_back(s.lower + w * std::pow(10.0, -2.0 + 4.0 * f));
    } else {
      grid.push_back(-50.0 + 100.0 * f);
    }
  }
  return grid;
}

bool is_positive_family(const ExpFamily& fam, std::span<const double> grid) {
  for (std::size_t j = 0; j < fam.dimension(); ++j) {
    bool nonneg = true;
    bool nonpos = true;
    for (double x : grid) {
      const double t = fam.statistic(j, x);
      nonneg = nonneg && t >= 0.0;
      nonpos = nonpos && t <= 0.0;
    }
    if (nonneg || nonpos) return true;
  }
  return false;
}

double inverse_roundtrip_error(const ExpFamily& fam, std::size_t k,
                               std::span<const double> grid) {
  if (!fam.has_inverse(k)) return kInf;
  double worst = 0.0;
  for (double x : grid) {
    const double back = fam.statistic_inverse(k, fam.statistic(k, x));
    worst = std::max(worst, std::abs(back - x) / std::max(1.0, std::abs(x)));
  }
  return worst;
}

}  // namespace crm
