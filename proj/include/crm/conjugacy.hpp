#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "crm/levy.hpp"
#include "crm/sampler.hpp"

namespace crm {

/// A parametric prior/likelihood pair whose posterior update adds an
/// observation-only increment to the prior's parameter coordinates:
///   tau(p, y_1..y_n) = p + sum_i increment(y_i).
/// Every registered pair has this form, so tau commutes with itself and
/// with permutations of the data.
class ConjugatePair {
 public:
  /// Registered names: "beta-bernoulli", "gamma-poisson",
  /// "geng-lognormal" (hyper = known drift mu), "geng-pareto"
  /// (hyper = known scale x_m). Throws UnsupportedPairError otherwise.
  static ConjugatePair make(const std::string& name, double hyper);
  static ConjugatePair make(const std::string& name);
  static std::vector<std::string> registered();

  const std::string& name() const { return name_; }
  const FamilyPtr& prior() const { return prior_; }
  const FamilyPtr& likelihood() const { return likelihood_; }
  const Link& link() const { return link_; }
  double hyper() const { return hyper_; }

  /// Update contributed by one observation, in prior parameter coordinates.
  /// Throws DomainError when y is outside the likelihood's support.
  Params increment(double y) const;
  /// tau in parameter coordinates. Increments are summed per coordinate in
  /// ascending order before being added to p.
  Params tau(const Params& p, std::span<const double> ys) const;
  /// tau on canonical natural parameters.
  std::vector<double> tau_natural(std::span<const double> eta,
                                  std::span<const double> ys) const;

  /// Whether the pair has a (concentration, base) parameterization.
  bool has_concentration_form() const;

 private:
  std::string name_;
  FamilyPtr prior_;
  FamilyPtr likelihood_;
  Link link_;
  double hyper_ = 0.0;
};

struct LocatedObservation {
  double location = 0.0;
  double value = 0.0;
};

enum class ObservationMode {
  /// Every observation updates eta(z) at every z.
  Uniform,
  /// Observations update only the parameter at their own location, as an
  /// atom override of the path.
  PerAtom,
};

/// z -> tau(eta(z), Y). Checks the result on `grid` (and, per atom, at each
/// observed location) and throws DomainError with the first failing z.
ParameterPath posterior_path(const ConjugatePair& pair,
                             const ParameterPath& prior,
                             std::span<const LocatedObservation> observations,
                             ObservationMode mode, std::span<const double> grid);

/// Posterior context: the prior context rebuilt on the tau-updated path.
LevyContext posterior_context(const ConjugatePair& pair, const LevyContext& prior,
                              std::span<const LocatedObservation> observations,
                              ObservationMode mode);

/// levy_density_u of `posterior_context`.
double posterior_levy_density(const ConjugatePair& pair, const LevyContext& prior,
                              std::span<const LocatedObservation> observations,
                              ObservationMode mode, double t, double u);

/// (concentration c, base B_0 or G_0) form of a prior increment. Beta
/// pairs read it as (alpha, beta) = (c B_0, c (1 - B_0)); gamma-prior pairs
/// as (shape, rate) = (c, c G_0).
template <class Scalar>
struct ProcessSummaryOf {
  Scalar concentration{};
  Scalar base{};
};
using ProcessSummary = ProcessSummaryOf<double>;

/// Exact-arithmetic core of the concentration-form update. `count` is the
/// growth of the concentration and `total` the summed statistic, so the
/// result is (c + count, c / (c + count) base + total / (c + count)).
template <class Scalar>
ProcessSummaryOf<Scalar> update_summary(const ProcessSummaryOf<Scalar>& prior,
                                        const Scalar& count, const Scalar& total) {
  const Scalar c = prior.concentration + count;
  return {c, prior.concentration / c * prior.base + total / c};
}

/// Parameter coordinates of a summary for a beta prior (beta = true) or a
/// gamma prior.
template <class Scalar>
std::vector<Scalar> summary_to_params(const ProcessSummaryOf<Scalar>& s, bool beta) {
  if (beta) return {s.concentration * s.base, s.concentration * (Scalar(1) - s.base)};
  return {s.concentration, s.concentration * s.base};
}

/// Posterior summary. beta-bernoulli: (c + n, weighted base with sum X);
/// geng-pareto: (c + n, weighted base with sum ln(X / x_m)); geng-lognormal:
/// (c + n/2, weighted base with sum (ln X - mu)^2 / 2). Throws
/// UnsupportedPairError for pairs without a concentration form.
ProcessSummary posterior_process_params(const ConjugatePair& pair,
                                        const ProcessSummary& prior,
                                        std::span<const double> ys);

/// Total-variation distance between the grid posterior (prior density times
/// likelihood, renormalized over `points` midpoints of the prior's support)
/// and the prior family's density at tau(p, ys) on the same grid.
double grid_bayes_tv(const ConjugatePair& pair, const Params& prior,
                     std::span<const double> ys, std::size_t points = 2000);

}  // namespace crm
