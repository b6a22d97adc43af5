#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "crm/random.hpp"

namespace crm {

/// A point in a family's parameter coordinates. These are the coordinates in
/// which paths eta(z) are written and in which natural-space membership and
/// the contraction condition are tested (beta: (alpha, beta); gamma:
/// (shape, rate); ...). Each family maps them affinely or monotonically onto
/// its canonical natural parameters via `to_natural`.
using Params = std::vector<double>;

struct Support {
  double lower = 0.0;
  double upper = std::numeric_limits<double>::infinity();
  bool lower_closed = false;
  bool upper_closed = false;
  /// Integer-valued support; the dominating measure is counting measure.
  bool discrete = false;

  bool contains(double x) const;
};

/// A positive exponential family in canonical form
///   p(x | eta) = h(x) exp(<eta, T(x)> - A(eta))
/// on an interval (or integer range) of the real line.
///
/// Implementations are immutable; share them through
/// `std::shared_ptr<const ExpFamily>`.
class ExpFamily {
 public:
  virtual ~ExpFamily() = default;

  virtual std::string name() const = 0;
  /// Number l of sufficient statistics and natural parameters.
  virtual std::size_t dimension() const = 0;
  virtual Support support() const = 0;
  virtual std::string coordinate_name(std::size_t j) const = 0;

  /// ln h(x).
  virtual double log_base_density(double x) const = 0;
  /// T_k(x), zero-based k.
  virtual double statistic(std::size_t k, double x) const = 0;

  /// Whether T_k has a declared differentiable inverse on its image.
  virtual bool has_inverse(std::size_t k) const;
  virtual double statistic_inverse(std::size_t k, double u) const;
  /// d(T_k^{-1})/du, signed.
  virtual double statistic_inverse_derivative(std::size_t k, double u) const;
  /// Image of T_k over the support as an open interval (lo, hi).
  virtual std::pair<double, double> statistic_image(std::size_t k) const;

  virtual std::vector<double> to_natural(const Params& p) const = 0;
  virtual Params from_natural(std::span<const double> eta) const = 0;

  /// Reason `p` lies outside the natural parameter space, naming the
  /// offending coordinate; nullopt when p is admissible.
  virtual std::optional<std::string> natural_space_violation(
      const Params& p) const = 0;
  bool in_natural_space(const Params& p) const;

  /// A(eta(p)); only meaningful on the natural space.
  virtual double log_partition(const Params& p) const = 0;

  /// Closed-form j-th derivative of A in the k-th canonical coordinate (the
  /// j-th cumulant of T_k). nullopt selects the finite-difference fallback.
  virtual std::optional<double> cumulant(const Params& p, std::size_t k,
                                         int order) const;
  /// Closed-form E[T_k^m] for families where a shift of the partition
  /// function gives raw moments directly. Takes precedence over `cumulant`.
  virtual std::optional<double> raw_moment(const Params& p, std::size_t k,
                                           int m) const;

  /// Draw from p(. | p). The default is inverse-CDF by bisection on the
  /// numerically integrated CDF.
  virtual double sample(const Params& p, Rng& rng) const;
  /// Draw T_k(X). Families whose support overflows doubles override this
  /// to sample the statistic directly.
  virtual double sample_statistic(const Params& p, std::size_t k,
                                  Rng& rng) const;

  /// E[g(T_k(X))] restricted to {T_k(X) >= u_lo}. Integrates in x over the
  /// support by default.
  virtual double expect_statistic(
      const Params& p, std::size_t k, const std::function<double(double)>& g,
      double u_lo = -std::numeric_limits<double>::infinity()) const;

  /// A point near the bulk of the distribution; used to split quadrature.
  virtual double center(const Params& p) const = 0;
};

using FamilyPtr = std::shared_ptr<const ExpFamily>;

FamilyPtr make_beta();
FamilyPtr make_gamma();
/// Pareto(shape alpha) with known scale u_m, support [u_m, inf), T = ln u.
FamilyPtr make_pareto(double u_m = 1.0);
/// Two-statistic family T = (ln x, ln ln x) on (e^{u_m}, inf) whose ln x
/// image carries Pareto(alpha, u_m) densities. Parameter coordinates
/// (rho, alpha) map to eta = (-1 - rho, -1 - alpha).
FamilyPtr make_pareto_loglog(double u_m = 1.0);
/// Log-normal with known drift mu, parameter = variance, T = (ln x - mu)^2.
FamilyPtr make_lognormal(double mu = 0.0);
FamilyPtr make_poisson();
FamilyPtr make_bernoulli();

// ---------------------------------------------------------------------------
// Operations

/// Throws DomainError naming the offending coordinate if p is not in the
/// natural space.
void require_admissible(const ExpFamily& fam, const Params& p);

double log_density(const ExpFamily& fam, const Params& p, double x);
double density(const ExpFamily& fam, const Params& p, double x);
double log_partition(const ExpFamily& fam, const Params& p);

enum class MomentMethod { Auto, ClosedForm, FiniteDifference };

/// E[T_k(X)^m] = e^{-A} d^m e^{A} / d eta_k^m at the canonical point of p.
double moment_suff_stat(const ExpFamily& fam, const Params& p, std::size_t k,
                        int m, MomentMethod method = MomentMethod::Auto);

/// E[exp(s T_k(X))] = exp(A(eta + s e_k) - A(eta)). DomainError when the
/// shifted point leaves the natural space (the transform is infinite).
double statistic_mgf(const ExpFamily& fam, const Params& p, std::size_t k,
                     double s);

/// E[X^m] for X ~ Beta(alpha, beta) from the gamma-function ratio.
double raw_moment_beta(double alpha, double beta, int m);

double sample(const ExpFamily& fam, const Params& p, Rng& rng);

/// E[g(X)] over the support by numerical quadrature (summation for discrete
/// families), in the x variable.
double expectation(const ExpFamily& fam, const Params& p,
                   const std::function<double(double)>& g);

/// P(X <= x) by numerical integration of the density.
double numeric_cdf(const ExpFamily& fam, const Params& p, double x);

/// Evenly spread interior points of the support (integers for discrete).
std::vector<double> support_grid(const ExpFamily& fam, std::size_t count);

/// Some T_j keeps one sign over `grid`.
bool is_positive_family(const ExpFamily& fam, std::span<const double> grid);

/// max |T_k^{-1}(T_k(x)) - x| / max(1, |x|) over `grid`; +inf without inverse.
double inverse_roundtrip_error(const ExpFamily& fam, std::size_t k,
                               std::span<const double> grid);

}  // namespace crm
