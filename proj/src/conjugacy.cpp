#include "crm/conjugacy.hpp"

#include <algorithm>
#include <cmath>

#include "crm/error.hpp"

namespace crm {

namespace {

std::string where(double z) { return format_double(z); }

}  // namespace

ConjugatePair ConjugatePair::make(const std::string& name) {
  return make(name, name == "geng-pareto" ? 1.0 : 0.0);
}

ConjugatePair ConjugatePair::make(const std::string& name, double hyper) {
  ConjugatePair p;
  p.name_ = name;
  p.hyper_ = hyper;
  if (name == "beta-bernoulli") {
    p.prior_ = make_beta();
    p.likelihood_ = make_bernoulli();
    p.link_ = identity_link();
  } else if (name == "gamma-poisson") {
    p.prior_ = make_gamma();
    p.likelihood_ = make_poisson();
    p.link_ = identity_link();
  } else if (name == "geng-lognormal") {
    // The gamma-distributed weight is the precision of ln X.
    p.prior_ = make_gamma();
    p.likelihood_ = make_lognormal(hyper);
    p.link_ = reciprocal_link();
  } else if (name == "geng-pareto") {
    if (!(hyper > 0.0)) {
      throw DomainError("geng-pareto: scale x_m = " + format_double(hyper) +
                        " must be > 0");
    }
    p.prior_ = make_gamma();
    p.likelihood_ = make_pareto(hyper);
    p.link_ = identity_link();
  } else {
    std::string known;
    for (const auto& n : registered()) known += (known.empty() ? "" : ", ") + n;
    throw UnsupportedPairError("unknown conjugate pair '" + name +
                               "'; registered pairs: " + known);
  }
  return p;
}

std::vector<std::string> ConjugatePair::registered() {
  return {"beta-bernoulli", "gamma-poisson", "geng-lognormal", "geng-pareto"};
}

Params ConjugatePair::increment(double y) const {
  if (!likelihood_->support().contains(y)) {
    throw DomainError(name_ + ": observation " + format_double(y) +
                      " is outside the " + likelihood_->name() + " support");
  }
  if (name_ == "beta-bernoulli") return {y, 1.0 - y};
  if (name_ == "gamma-poisson") return {y, 1.0};
  if (name_ == "geng-lognormal") {
    const double d = std::log(y) - hyper_;
    return {0.5, 0.5 * d * d};
  }
  return {1.0, std::log(y / hyper_)};
}

Params ConjugatePair::tau(const Params& p, std::span<const double> ys) const {
  const std::size_t dim = prior_->dimension();
  if (p.size() != dim) {
    throw DomainError(name_ + ": expected " + std::to_string(dim) +
                      " prior parameters, got " + std::to_string(p.size()));
  }
  std::vector<std::vector<double>> parts(dim);
  for (double y : ys) {
    const Params inc = increment(y);
    for (std::size_t j = 0; j < dim; ++j) parts[j].push_back(inc[j]);
  }
  Params out = p;
  for (std::size_t j = 0; j < dim; ++j) {
    std::sort(parts[j].begin(), parts[j].end());
    double sum = 0.0;
    for (double v : parts[j]) sum += v;
    out[j] += sum;
  }
  return out;
}

std::vector<double> ConjugatePair::tau_natural(std::span<const double> eta,
                                               std::span<const double> ys) const {
  return prior_->to_natural(tau(prior_->from_natural(eta), ys));
}

bool ConjugatePair::has_concentration_form() const {
  return name_ != "gamma-poisson";
}

ParameterPath posterior_path(const ConjugatePair& pair, const ParameterPath& prior,
                             std::span<const LocatedObservation> observations,
                             ObservationMode mode, std::span<const double> grid) {
  const ExpFamily& fam = *pair.prior();
  if (prior.dimension() != fam.dimension()) {
    throw DomainError(pair.name() + ": path has " + std::to_string(prior.dimension()) +
                      " components, the prior family needs " +
                      std::to_string(fam.dimension()));
  }
  if (observations.empty()) return prior;

  auto check = [&](double z, const Params& p) {
    if (auto why = fam.natural_space_violation(p)) {
      throw DomainError(pair.name() + ": posterior parameter leaves the natural space at z = " +
                        where(z) + ": " + *why);
    }
  };

  if (mode == ObservationMode::Uniform) {
    std::vector<double> ys;
    ys.reserve(observations.size());
    for (const auto& o : observations) ys.push_back(o.value);
    const Params zero(fam.dimension(), 0.0);
    const Params shift = pair.tau(zero, ys);
    std::vector<PathComponent> comps;
    for (std::size_t j = 0; j < prior.dimension(); ++j) {
      auto pieces = prior.components()[j].pieces();
      for (auto& piece : pieces) piece.intercept += shift[j];
      comps.emplace_back(std::move(pieces));
    }
    std::vector<PathAtom> atoms = prior.atoms();
    for (auto& a : atoms) a.value = pair.tau(a.value, ys);
    ParameterPath out(std::move(comps), std::move(atoms));
    for (double z : grid) check(z, out(z));
    for (const auto& a : out.atoms()) check(a.at, a.value);
    return out;
  }

  // Per-atom: group observations by exact location.
  std::vector<LocatedObservation> sorted(observations.begin(), observations.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const LocatedObservation& a, const LocatedObservation& b) {
                     return a.location < b.location;
                   });
  ParameterPath out = prior;
  for (std::size_t i = 0; i < sorted.size();) {
    const double z = sorted[i].location;
    std::vector<double> ys;
    for (; i < sorted.size() && sorted[i].location == z; ++i) ys.push_back(sorted[i].value);
    const Params p = pair.tau(prior(z), ys);
    check(z, p);
    out = out.with_atom(z, p);
  }
  return out;
}

LevyContext posterior_context(const ConjugatePair& pair, const LevyContext& prior,
                              std::span<const LocatedObservation> observations,
                              ObservationMode mode) {
  if (prior.family().name() != pair.prior()->name()) {
    throw UnsupportedPairError("pair " + pair.name() + " expects a " +
                               pair.prior()->name() + " prior, the context has " +
                               prior.family().name());
  }
  return prior.with_path(
      posterior_path(pair, prior.path(), observations, mode, prior.grid()));
}

double posterior_levy_density(const ConjugatePair& pair, const LevyContext& prior,
                              std::span<const LocatedObservation> observations,
                              ObservationMode mode, double t, double u) {
  return levy_density_u(posterior_context(pair, prior, observations, mode), t, u);
}

ProcessSummary posterior_process_params(const ConjugatePair& pair,
                                        const ProcessSummary& prior,
                                        std::span<const double> ys) {
  if (!pair.has_concentration_form()) {
    throw UnsupportedPairError(pair.name() +
                               " has no (concentration, base) parameterization");
  }
  // The summed increments give the concentration growth and the statistic
  // total: beta (sum X, sum (1 - X)); gamma priors (count, total).
  const Params sums = pair.tau(Params(2, 0.0), ys);
  const bool beta = pair.prior()->name() == "beta";
  const double count = beta ? static_cast<double>(ys.size()) : sums[0];
  return update_summary(prior, count, sums[beta ? 0 : 1]);
}

double grid_bayes_tv(const ConjugatePair& pair, const Params& prior,
                     std::span<const double> ys, std::size_t points) {
  const ExpFamily& pf = *pair.prior();
  const ExpFamily& lf = *pair.likelihood();
  require_admissible(pf, prior);
  const Params post = pair.tau(prior, ys);
  require_admissible(pf, post);

  double lo = 0.0, hi = 1.0;
  if (pf.name() != "beta") {
    // Gamma prior in (shape, rate): cover prior and posterior bulk.
    auto upper = [](const Params& p) {
      return p[0] / p[1] + 30.0 * std::sqrt(p[0]) / p[1] + 30.0 / p[1];
    };
    hi = std::max(upper(prior), upper(post));
  }
  const double width = (hi - lo) / static_cast<double>(points);
  std::vector<double> logw(points);
  double top = -INFINITY;
  for (std::size_t i = 0; i < points; ++i) {
    const double w = lo + (static_cast<double>(i) + 0.5) * width;
    double acc = log_density(pf, prior, w);
    const Params lp = pair.link().map(w);
    for (double y : ys) acc += log_density(lf, lp, y);
    logw[i] = acc;
    top = std::max(top, acc);
  }
  double norm = 0.0;
  for (double& v : logw) {
    v = std::exp(v - top);
    norm += v;
  }
  double tv = 0.0;
  for (std::size_t i = 0; i < points; ++i) {
    const double w = lo + (static_cast<double>(i) + 0.5) * width;
    tv += std::abs(logw[i] / norm - density(pf, post, w) * width);
  }
  return 0.5 * tv;
}

}  // namespace crm
