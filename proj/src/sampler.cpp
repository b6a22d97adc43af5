#include "crm/sampler.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include "crm/error.hpp"
#include "crm/random.hpp"

namespace crm {

namespace {
constexpr double kInfinity = std::numeric_limits<double>::infinity();
}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string CRMDraw::tail_report() const {
  if (!tail_mass) return "unknown tail";
  return "dropped base mass " + format_double(*tail_mass);
}

CRMDraw sample_crm(std::span<const LevyContext> components, double z_max,
                   std::uint64_t seed, std::optional<double> tail_mass) {
  if (!(z_max > 0.0) || !std::isfinite(z_max)) {
    throw DomainError("sampling region (0, z_max] needs finite z_max > 0, got " +
                      format_double(z_max));
  }
  CRMDraw draw;
  draw.truncation = components.size();
  draw.z_max = z_max;
  draw.seed = seed;
  draw.tail_mass = tail_mass;

  for (std::size_t n = 0; n < components.size(); ++n) {
    const LevyContext& ctx = components[n];
    const double mass = ctx.base().increment(0.0, z_max);
    draw.component_mass.push_back(mass);
    if (!std::isfinite(mass)) {
      throw TruncationError("component " + std::to_string(n + 1) +
                            " has infinite base mass on (0, " +
                            format_double(z_max) +
                            "]; restrict the region or the base measure");
    }
    if (ctx.family().statistic_image(ctx.k()).first < 0.0) {
      throw DomainError("component " + std::to_string(n + 1) + ": statistic " +
                        std::to_string(ctx.k() + 1) + " of " + ctx.family().name() +
                        " can be negative, so it cannot serve as a jump weight");
    }
    if (mass == 0.0) continue;
    Rng rng = make_stream(seed, n);
    const auto count = std::poisson_distribution<std::uint64_t>(mass)(rng);
    for (std::uint64_t j = 0; j < count; ++j) {
      const double z = ctx.base().sample_location(0.0, z_max, rng);
      const double u = ctx.family().sample_statistic(ctx.path()(z), ctx.k(), rng);
      draw.atoms.push_back({z, u, n, static_cast<std::size_t>(j)});
    }
  }
  std::stable_sort(draw.atoms.begin(), draw.atoms.end(),
                   [](const Atom& a, const Atom& b) {
                     if (a.location != b.location) return a.location < b.location;
                     if (a.component != b.component) return a.component < b.component;
                     return a.index < b.index;
                   });
  return draw;
}

std::vector<LevyContext> pareto_series(std::size_t terms, double alpha0,
                                       double alpha1, double u_m) {
  if (!(alpha0 >= 0.0) || !(alpha1 >= 0.0) || !(alpha0 + alpha1 > 0.0)) {
    throw DomainError("pareto series needs alpha(z) = alpha0 + alpha1 z with "
                      "alpha0, alpha1 >= 0, not both zero");
  }
  const auto fam = make_pareto_loglog(u_m);
  std::vector<LevyContext> out;
  out.reserve(terms);
  for (std::size_t n = 1; n <= terms; ++n) {
    const double s = static_cast<double>(n);
    ParameterPath path({PathComponent({PathPiece{0.0, kInfinity, 0.0, 0.0}}),
                        PathComponent({PathPiece{0.0, kInfinity, s * alpha0, s * alpha1}})});
    BaseMeasure base({DensityPiece{0.0, kInfinity, 1.0, 0.0, s * alpha0, s * alpha1}});
    out.emplace_back(fam, std::move(path), std::move(base), 0);
  }
  return out;
}

double pareto_series_mass(std::size_t n, double alpha0, double alpha1,
                          double z_max) {
  const double s = static_cast<double>(n);
  if (alpha1 == 0.0) return z_max / (s * alpha0);
  if (alpha0 == 0.0) return kInfinity;
  return std::log1p(alpha1 * z_max / alpha0) / (s * alpha1);
}

double pareto_series_density(std::size_t terms, double alpha, double u_m,
                             double u) {
  if (!(u > u_m)) return 0.0;
  const double r = std::pow(u_m / u, alpha);
  double total = 0.0;
  double term = r;
  for (std::size_t n = 1; n <= terms; ++n) {
    total += term;
    term *= r;
  }
  return total / u;
}

double pareto_series_limit(double alpha, double u_m, double u) {
  if (!(u > u_m)) return 0.0;
  const double r = std::pow(u_m / u, alpha);
  return r / (1.0 - r) / u;
}

double evaluate_path(const CRMDraw& draw, double t) {
  if (!(t >= 0.0)) throw DomainError("evaluate_path needs t >= 0");
  double total = 0.0;
  for (const Atom& a : draw.atoms) {
    if (a.location > t) break;
    total += a.weight;
  }
  return total;
}

Link identity_link() {
  return {"identity", [](double w) { return Params{w}; }};
}

Link reciprocal_link() {
  return {"reciprocal", [](double w) { return Params{1.0 / w}; }};
}

LikelihoodDraw sample_likelihood(const CRMDraw& base, const ExpFamily& likelihood,
                                 const Link& link, std::uint64_t seed) {
  LikelihoodDraw out;
  out.base_reference = fnv1a_hex(atoms_csv(base));
  out.atoms.reserve(base.atoms.size());
  for (std::size_t j = 0; j < base.atoms.size(); ++j) {
    const Atom& a = base.atoms[j];
    const Params p = link.map(a.weight);
    if (auto why = likelihood.natural_space_violation(p)) {
      throw DomainError("atom at location " + format_double(a.location) +
                        ": " + link.name + " link gives a " + likelihood.name() +
                        " parameter outside its natural space: " + *why);
    }
    Rng rng = make_stream(seed, j);
    out.atoms.push_back({a.location, likelihood.sample(p, rng), a.component, a.index});
  }
  return out;
}

std::string atoms_csv(const CRMDraw& draw) {
  std::string s = "component,location,weight\n";
  for (const Atom& a : draw.atoms) {
    s += std::to_string(a.component + 1) + "," + format_double(a.location) + "," +
         format_double(a.weight) + "\n";
  }
  return s;
}

std::string observations_csv(const LikelihoodDraw& draw) {
  std::string s = "component,location,value\n";
  for (const Observation& o : draw.atoms) {
    s += std::to_string(o.component + 1) + "," + format_double(o.location) + "," +
         format_double(o.value) + "\n";
  }
  return s;
}

std::string path_csv(const CRMDraw& draw, std::span<const double> grid) {
  std::string s = "t,value\n";
  for (double t : grid) {
    s += format_double(t) + "," + format_double(evaluate_path(draw, t)) + "\n";
  }
  return s;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

}  // namespace crm
