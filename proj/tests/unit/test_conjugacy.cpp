#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <doctest.h>

#include "crm/conjugacy.hpp"
#include "crm/error.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace crm;
using fixture::affine;
using fixture::constant;

namespace {

// Five fixed atoms at z = 1..5, each carrying the same beta increment.
LevyContext five_atom_beta(double c, double b0) {
  std::vector<Jump> jumps;
  for (int i = 1; i <= 5; ++i) jumps.push_back({static_cast<double>(i), 1.0});
  return LevyContext(make_beta(), ParameterPath::constant({c * b0, c * (1.0 - b0)}),
                     BaseMeasure({}, jumps), 0);
}

}  // namespace

TEST_CASE("registry holds exactly the four pairs") {
  CHECK(ConjugatePair::registered() ==
        std::vector<std::string>{"beta-bernoulli", "gamma-poisson", "geng-lognormal",
                                 "geng-pareto"});
  CHECK_THROWS_AS(ConjugatePair::make("beta-negative-binomial"), UnsupportedPairError);
  CHECK_THROWS_AS(ConjugatePair::make("geng-pareto", 0.0), DomainError);
  const auto ln = ConjugatePair::make("geng-lognormal", 0.5);
  CHECK(ln.hyper() == 0.5);
  CHECK(ln.prior()->name() == "gamma");
  CHECK(ln.likelihood()->name() == "lognormal");
  CHECK(ConjugatePair::make("geng-pareto").hyper() == 1.0);
}

TEST_CASE("no observations leave every pair unchanged") {
  for (const auto& name : ConjugatePair::registered()) {
    const auto pair = ConjugatePair::make(name);
    const Params p = name == "beta-bernoulli" ? Params{0.7, 1.3} : Params{2.5, 0.75};
    CHECK(pair.tau(p, {}) == p);
    const auto eta = pair.prior()->to_natural(p);
    CHECK(pair.tau_natural(eta, {}) == eta);
  }
}

TEST_CASE("parametric update formulas") {
  const std::vector<double> bern{1, 0, 1};
  CHECK(ConjugatePair::make("beta-bernoulli").tau({0.6, 1.4}, bern) ==
        Params{0.6 + 2.0, 1.4 + 1.0});
  const std::vector<double> counts{3, 0, 4, 1};
  CHECK(ConjugatePair::make("gamma-poisson").tau({2.0, 1.0}, counts) == Params{10.0, 5.0});

  // (alpha + n/2, beta + sum (ln x - mu)^2 / 2) with ln x in {1, -2, 0, 3}.
  const std::vector<double> xs{std::exp(1.0), std::exp(-2.0), 1.0, std::exp(3.0)};
  const auto ln = ConjugatePair::make("geng-lognormal", 0.0).tau({1.0, 2.0}, xs);
  CHECK(ln[0] == 3.0);
  CHECK(ln[1] == doctest::Approx(2.0 + (1.0 + 4.0 + 0.0 + 9.0) / 2.0).epsilon(1e-15));

  // a = c = 2, b = c G_0 = 2 * 0.5; observations e and e^2 with x_m = 1.
  const std::vector<double> par{std::exp(1.0), std::exp(2.0)};
  const auto pp = ConjugatePair::make("geng-pareto", 1.0).tau({2.0, 1.0}, par);
  CHECK(pp[0] == 4.0);
  CHECK(pp[1] == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("tau ignores the order of the observations") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& name : ConjugatePair::registered()) {
    const auto pair = ConjugatePair::make(name);
    std::vector<double> ys;
    for (int i = 0; i < 25; ++i) {
      if (name == "beta-bernoulli") ys.push_back(u(rng) < 0.4 ? 1.0 : 0.0);
      else if (name == "gamma-poisson") ys.push_back(std::floor(10 * u(rng)));
      else ys.push_back(1.0 + 5.0 * u(rng));
    }
    const Params p = name == "beta-bernoulli" ? Params{0.7, 1.3} : Params{2.5, 0.75};
    const Params a = pair.tau(p, ys);
    for (int rep = 0; rep < 5; ++rep) {
      std::shuffle(ys.begin(), ys.end(), rng);
      CHECK(pair.tau(p, ys) == a);
    }
  }
}

TEST_CASE("sequential updates equal one update on the union") {
  // Dyadic statistics keep every partial sum exact.
  const std::vector<double> b1{1, 0, 0}, b2{1, 1};
  std::vector<double> both = b1;
  both.insert(both.end(), b2.begin(), b2.end());
  const auto bb = ConjugatePair::make("beta-bernoulli");
  CHECK(bb.tau(bb.tau({0.5, 1.5}, b1), b2) == bb.tau({0.5, 1.5}, both));

  const auto gp = ConjugatePair::make("geng-pareto", 1.0);
  std::vector<double> p1, p2;
  for (double d : {0.5, 1.25, 2.0}) p1.push_back(std::exp(d));
  for (double d : {0.75, 3.0}) p2.push_back(std::exp(d));
  for (double x : p1) REQUIRE(std::log(x) == std::round(std::log(x) * 4) / 4);
  for (double x : p2) REQUIRE(std::log(x) == std::round(std::log(x) * 4) / 4);
  std::vector<double> pu = p1;
  pu.insert(pu.end(), p2.begin(), p2.end());
  CHECK(gp.tau(gp.tau({2.0, 1.0}, p1), p2) == gp.tau({2.0, 1.0}, pu));
}

TEST_CASE("observations outside the likelihood support are refused") {
  CHECK_THROWS_AS(ConjugatePair::make("beta-bernoulli").tau({1, 1}, std::vector<double>{0.5}),
                  DomainError);
  CHECK_THROWS_AS(ConjugatePair::make("gamma-poisson").tau({1, 1}, std::vector<double>{-1}),
                  DomainError);
  CHECK_THROWS_AS(ConjugatePair::make("geng-pareto", 2.0).tau({1, 1}, std::vector<double>{1.5}),
                  DomainError);
  CHECK_THROWS_AS(ConjugatePair::make("geng-lognormal").tau({1, 1}, std::vector<double>{0.0}),
                  DomainError);
  CHECK_THROWS_AS(ConjugatePair::make("beta-bernoulli").tau({1, 1, 1}, std::vector<double>{}),
                  DomainError);
}

TEST_CASE("grid Bayes agrees with the conjugate update") {
  struct Case {
    const char* name;
    Params prior;
    std::vector<double> ys;
  };
  const std::vector<Case> cases{
      {"beta-bernoulli", {2.0, 3.0}, {1, 0, 1, 1, 0, 0, 1}},
      {"gamma-poisson", {2.0, 1.0}, {3, 5, 2, 4}},
      {"geng-lognormal", {3.0, 2.0}, {0.5, 1.7, 2.4, 0.9, 3.1}},
      {"geng-pareto", {2.0, 1.0}, {1.2, 3.5, 1.05, 2.2}},
  };
  for (const auto& c : cases) {
    CAPTURE(c.name);
    const auto pair = ConjugatePair::make(c.name);
    CHECK(grid_bayes_tv(pair, c.prior, c.ys) < 1e-3);
  }
}

TEST_CASE("uniform posterior path shifts every piece") {
  const auto pair = ConjugatePair::make("geng-pareto", 1.0);
  ParameterPath prior({affine(2.0, 1.0), constant(1.0)});
  const std::vector<LocatedObservation> obs{{0.3, std::exp(1.0)}, {0.8, std::exp(2.0)}};
  const std::vector<double> grid{0.1, 0.5, 1.0, 4.0};
  const auto post = posterior_path(pair, prior, obs, ObservationMode::Uniform, grid);
  for (double z : grid) {
    const std::vector<double> ys{std::exp(1.0), std::exp(2.0)};
    const Params expect = pair.tau(prior(z), ys);
    CHECK(post(z)[0] == doctest::Approx(expect[0]).epsilon(1e-15));
    CHECK(post(z)[1] == doctest::Approx(expect[1]).epsilon(1e-15));
  }
  CHECK(posterior_path(pair, prior, {}, ObservationMode::Uniform, grid) == prior);
}

TEST_CASE("per-atom posterior on a five-atom beta process") {
  const auto pair = ConjugatePair::make("beta-bernoulli");
  const auto prior = five_atom_beta(2.0, 0.3);
  const std::vector<LocatedObservation> obs{{3.0, 1.0}, {3.0, 0.0}, {3.0, 1.0}};
  const auto post = posterior_context(pair, prior, obs, ObservationMode::PerAtom);
  const Params at = post.path()(3.0);
  // (c B_0 + sum X, c (1 - B_0) + (n - sum X)) with n = 3, sum X = 2.
  CHECK(at == Params{2.0 * 0.3 + 2.0, 2.0 * (1.0 - 0.3) + (3.0 - 2.0)});
  CHECK(at[0] == doctest::Approx(2.6).epsilon(1e-15));
  CHECK(at[1] == doctest::Approx(2.4).epsilon(1e-15));
  for (double z : {1.0, 2.0, 4.0, 5.0}) CHECK(post.path()(z) == prior.path()(z));
  CHECK(post.path().atoms().size() == 1);

  // The posterior Levy measure carries the updated beta law at the atom.
  const double u = std::log(0.4);
  const double prior_at = levy_density_u(prior, 5.0, u);
  const double post_at = posterior_levy_density(pair, prior, obs, ObservationMode::PerAtom, 5.0, u);
  const double x = 0.4;
  const double expected = prior_at - density(*make_beta(), prior.path()(3.0), x) * x +
                          density(*make_beta(), at, x) * x;
  CHECK(post_at == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("posterior density ratio is the exponential tilt") {
  // Uniform update of a constant gamma path; the ratio at any (z, u) is
  // exp(<d eta, U> - d A).
  const auto pair = ConjugatePair::make("geng-pareto", 1.0);
  LevyContext prior(make_gamma(), ParameterPath::constant({2.0, 1.0}),
                    BaseMeasure::lebesgue(), 1);
  const std::vector<LocatedObservation> obs{{0.2, 1.5}, {0.9, 2.5}, {1.4, 1.1}};
  const std::vector<double> ys{1.5, 2.5, 1.1};
  const Params post = pair.tau({2.0, 1.0}, ys);
  const auto fam = make_gamma();
  const auto e0 = fam->to_natural({2.0, 1.0});
  const auto e1 = fam->to_natural(post);
  const double dA = log_partition(*fam, post) - log_partition(*fam, {2.0, 1.0});
  for (double u : {0.1, 0.7, 2.0, 5.0}) {
    const double ratio =
        posterior_levy_density(pair, prior, obs, ObservationMode::Uniform, 1.0, u) /
        levy_density_u(prior, 1.0, u);
    const double tilt = std::exp((e1[0] - e0[0]) * std::log(u) + (e1[1] - e0[1]) * u - dA);
    CHECK(ratio == doctest::Approx(tilt).epsilon(1e-10));
  }
  CHECK(posterior_levy_density(pair, prior, {}, ObservationMode::Uniform, 1.0, 0.7) ==
        levy_density_u(prior, 1.0, 0.7));
}

TEST_CASE("posterior paths pass the conditions whenever the prior does") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& name : ConjugatePair::registered()) {
    const auto pair = ConjugatePair::make(name);
    for (int rep = 0; rep < 5; ++rep) {
      ParameterPath path = name == "beta-bernoulli"
                               ? ParameterPath({affine(0.5 + u(rng), u(rng)), affine(1.0 + u(rng), u(rng))})
                               : ParameterPath({affine(1.0 + u(rng), u(rng)), affine(0.5 + u(rng), u(rng))});
      LevyContext prior(pair.prior(), path, BaseMeasure::lebesgue(), 1);
      std::vector<LocatedObservation> obs;
      for (int i = 0; i < 6; ++i) {
        double y = name == "beta-bernoulli" ? (u(rng) < 0.5 ? 1.0 : 0.0)
                   : name == "gamma-poisson" ? std::floor(6 * u(rng))
                                             : 1.0 + 3.0 * u(rng);
        obs.push_back({0.1 + u(rng), y});
      }
      for (auto mode : {ObservationMode::Uniform, ObservationMode::PerAtom}) {
        const auto post = posterior_context(pair, prior, obs, mode);
        CHECK(post.report().passed());
      }
    }
  }
}

TEST_CASE("a posterior that leaves the natural space names the location") {
  // Negative prior intercepts where no grid point looks; the per-atom update
  // evaluates the path at the observation itself.
  const auto pair = ConjugatePair::make("gamma-poisson");
  ParameterPath path({affine(-5.0, 10.0), constant(1.0)});
  const std::vector<LocatedObservation> obs{{0.1, 2.0}};
  try {
    posterior_path(pair, path, obs, ObservationMode::PerAtom, std::vector<double>{1.0});
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("z = 0.10000000000000001") != std::string::npos);
  }
  LevyContext wrong(make_beta(), ParameterPath::constant({1.0, 1.0}), BaseMeasure::lebesgue(), 0);
  CHECK_THROWS_AS(posterior_context(pair, wrong, obs, ObservationMode::Uniform),
                  UnsupportedPairError);
}

TEST_CASE("concentration form") {
  const auto bb = ConjugatePair::make("beta-bernoulli");
  const ProcessSummary prior{2.0, 0.3};
  const auto same = posterior_process_params(bb, prior, {});
  CHECK(same.concentration == 2.0);
  CHECK(same.base == 0.3);

  const std::vector<double> xs{1, 0, 1};
  const auto post = posterior_process_params(bb, prior, xs);
  CHECK(post.concentration == 5.0);
  CHECK(post.base == 2.0 / 5.0 * 0.3 + 2.0 / 5.0);
  const auto params = summary_to_params(post, true);
  CHECK(params[0] == doctest::Approx(2.6).epsilon(1e-15));
  CHECK(params[1] == doctest::Approx(2.4).epsilon(1e-15));

  // GenG-Pareto: (c + n, c/(c+n) G_0 + sum ln(X / x_m) / (c + n)).
  const auto gp = ConjugatePair::make("geng-pareto", 1.0);
  const std::vector<double> ps{std::exp(1.0), std::exp(2.0)};
  const auto g = posterior_process_params(gp, {2.0, 0.5}, ps);
  CHECK(g.concentration == 4.0);
  CHECK(g.base == doctest::Approx(0.5 * 0.5 + 3.0 / 4.0).epsilon(1e-15));
  const auto gparams = summary_to_params(g, false);
  CHECK(gparams[0] == 4.0);
  CHECK(gparams[1] == doctest::Approx(4.0).epsilon(1e-15));

  // GenG-lognormal grows the concentration by n / 2.
  const auto gl = ConjugatePair::make("geng-lognormal", 0.0);
  const std::vector<double> ls{1.0, std::exp(2.0), std::exp(-1.0), 1.0};
  const auto l = posterior_process_params(gl, {3.0, 1.0}, ls);
  CHECK(l.concentration == 5.0);
  CHECK(summary_to_params(l, false)[1] == doctest::Approx(3.0 + 2.5).epsilon(1e-15));

  CHECK_THROWS_AS(posterior_process_params(ConjugatePair::make("gamma-poisson"), prior, xs),
                  UnsupportedPairError);
}

TEST_CASE("concentration form and tau agree in exact arithmetic") {
  using Q = boost::multiprecision::cpp_rational;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    const bool beta = rep % 2 == 0;
    const Q c = Q(0.1 + 5.0 * u(rng));
    const Q base = Q(beta ? u(rng) : 0.1 + 3.0 * u(rng));
    const Q n = Q(static_cast<int>(1 + 10 * u(rng)));
    const Q total = Q(beta ? std::floor(u(rng) * 11.0) : 7.0 * u(rng));
    const auto post = summary_to_params(update_summary<Q>({c, base}, n, total), beta);
    const auto prior = summary_to_params<Q>({c, base}, beta);
    // tau adds (sum X, n - sum X) for beta priors and (n, total) for gamma.
    if (beta) {
      CHECK(post[0] == prior[0] + total);
      CHECK(post[1] == prior[1] + (n - total));
    } else {
      CHECK(post[0] == prior[0] + n);
      CHECK(post[1] == prior[1] + total);
    }
  }
}
