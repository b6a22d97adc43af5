#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crm/levy.hpp"

namespace crm {

/// One point of the superposed Poisson process: location z, weight
/// u = T_k(S), the component it came from and its draw order there.
struct Atom {
  double location = 0.0;
  double weight = 0.0;
  std::size_t component = 0;
  std::size_t index = 0;
};

struct CRMDraw {
  /// Sorted by location, then component, then index.
  std::vector<Atom> atoms;
  std::size_t truncation = 0;
  double z_max = 0.0;
  std::uint64_t seed = 0;
  /// Base mass of the components beyond the truncation level, when known.
  std::optional<double> tail_mass;
  /// Expected atom count of each component.
  std::vector<double> component_mass;

  std::string tail_report() const;
};

/// Draws every component on (0, z_max]: a Poisson(A_{0,n}(0, z_max]) count,
/// locations from the normalized base measure, then a weight from the
/// family at the parameter of that location. Component n uses stream n of
/// `seed`. Throws TruncationError when a component has infinite base mass
/// and DomainError when the weight statistic can be negative.
CRMDraw sample_crm(std::span<const LevyContext> components, double z_max,
                   std::uint64_t seed,
                   std::optional<double> tail_mass = std::nullopt);

/// Components n = 1..N of the superposed Pareto construction: the
/// (ln x, ln ln x) family with rho = 0 and shape n * alpha(z), where
/// alpha(z) = alpha0 + alpha1 z, base density 1 / (n alpha(z)) and weight
/// u = ln x. alpha(z) must stay positive on (0, inf).
std::vector<LevyContext> pareto_series(std::size_t terms, double alpha0,
                                       double alpha1, double u_m);

/// Closed-form base mass of series component n (1-based) over (0, z_max].
double pareto_series_mass(std::size_t n, double alpha0, double alpha1,
                          double z_max);

/// Superposed Levy density in u of the first `terms` components at a fixed
/// location with shape alpha: sum_n (1/u) (u_m / u)^(n alpha).
double pareto_series_density(std::size_t terms, double alpha, double u_m,
                             double u);
/// Its limit as terms -> inf: (1/u) r / (1 - r) with r = (u_m / u)^alpha.
double pareto_series_limit(double alpha, double u_m, double u);

/// T(t) = sum of weights at locations <= t.
double evaluate_path(const CRMDraw& draw, double t);

/// Maps a base weight to the likelihood family's parameter vector.
struct Link {
  std::string name;
  std::function<Params(double)> map;
};

/// parameter = {w}.
Link identity_link();
/// parameter = {1 / w}; a precision weight feeding a variance parameter.
Link reciprocal_link();

struct Observation {
  double location = 0.0;
  double value = 0.0;
  std::size_t component = 0;
  std::size_t index = 0;
};

struct LikelihoodDraw {
  std::vector<Observation> atoms;
  /// Content hash of the base draw's atom CSV.
  std::string base_reference;
};

/// One observation per base atom, zero observations kept. Atom j uses
/// stream j of `seed`. Throws DomainError naming the location when the
/// link leaves the likelihood's natural space.
LikelihoodDraw sample_likelihood(const CRMDraw& base, const ExpFamily& likelihood,
                                 const Link& link, std::uint64_t seed);

/// Round-trip decimal text for a double.
std::string format_double(double v);

/// "component,location,weight" rows.
std::string atoms_csv(const CRMDraw& draw);
std::string observations_csv(const LikelihoodDraw& draw);
/// "t,value" rows of T(t) on `grid`.
std::string path_csv(const CRMDraw& draw, std::span<const double> grid);

/// 64-bit FNV-1a, as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace crm
