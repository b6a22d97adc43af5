#include <cmath>

#include <doctest.h>

#include "crm/error.hpp"
#include "crm/levy.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace crm;

using fixture::affine;
using fixture::beta_component;
using fixture::constant;
using fixture::gamma_constant;

TEST_CASE("conditions for the beta components") {
  for (int n : {1, 2, 5}) {
    for (std::size_t k : {0u, 1u}) {
      CHECK_NOTHROW(beta_component(n, 1.0, 1.0, k));
    }
  }
}

TEST_CASE("negative concentration fails condition 2 with a witness") {
  ParameterPath path({constant(1.0), constant(-2.0 + 1.0)});
  std::vector<double> grid{0.25, 0.5, 1.0};
  const auto rep = check_conditions(*make_beta(), path, 0, grid);
  CHECK_FALSE(rep.passed());
  CHECK_FALSE(rep.admissible);
  REQUIRE(!rep.failures.empty());
  CHECK(rep.failures[0].condition == 2);
  CHECK(*rep.failures[0].witness_z == 0.25);
  CHECK_THROWS_AS(LevyContext(make_beta(), path, BaseMeasure::lebesgue(), 0), ConditionError);
}

TEST_CASE("condition 1 and 3 failures") {
  // The log-normal statistic is not invertible on the support.
  auto rep = check_conditions(*make_lognormal(0.0), ParameterPath::constant({1.0}), 0,
                              std::vector<double>{1.0});
  CHECK_FALSE(rep.invertible);
  // A sign change inside an affine piece is caught between grid points.
  ParameterPath crossing({constant(1.0), affine(1.0, -1.0)});
  const auto grid = default_condition_grid(crossing, BaseMeasure::lebesgue());
  rep = check_conditions(*make_beta(), crossing, 0, grid);
  CHECK_FALSE(rep.admissible);
  // Contraction of the loglog family's rho coordinate towards 0 leaves the
  // space when alpha <= 0.
  ParameterPath neg({constant(1.0), constant(-0.5)});
  rep = check_conditions(*make_pareto_loglog(1.0), neg, 0, std::vector<double>{1.0});
  CHECK(rep.admissible);
  CHECK(rep.contraction);  // eps * rho stays > 0
  rep = check_conditions(*make_pareto_loglog(1.0), neg, 1, std::vector<double>{1.0});
  CHECK(rep.contraction);
  // Bad grids are report entries, not exceptions.
  rep = check_conditions(*make_beta(), crossing, 0, std::vector<double>{0.5, 0.25});
  CHECK_FALSE(rep.passed());
  rep = check_conditions(*make_beta(), crossing, 0, std::vector<double>{});
  CHECK_FALSE(rep.passed());
}

TEST_CASE("beta component density matches the explicit integral") {
  for (int n : {1, 2, 5}) {
    const auto ctx = beta_component(n, 1.0, 1.0, 0);
    for (double t : {0.5, 1.0, 2.0}) {
      for (double s : {0.05, 0.3, 0.7, 0.95}) {
        const double L = std::log1p(-s);
        auto prim = [&](double z) {
          return std::exp(n * L) * ((1 + z) * std::exp(z * L) / L - std::exp(z * L) / (L * L));
        };
        const double expected = prim(t) - prim(0.0);
        CHECK(levy_density_s(ctx, t, s) == doctest::Approx(expected).epsilon(1e-8));
      }
    }
  }
}

TEST_CASE("time zero and domain errors") {
  const auto ctx = beta_component(1, 1.0, 1.0, 0);
  CHECK(levy_density_s(ctx, 0.0, 0.5) == 0.0);
  CHECK(levy_density_u(ctx, 0.0, -0.5) == 0.0);
  CHECK(laplace_exponent(ctx, 0.0, 1.0) == 0.0);
  CHECK(laplace_exponent(ctx, 1.0, 0.0) == 0.0);
  CHECK_THROWS_AS(levy_density_s(ctx, -1.0, 0.5), DomainError);
  CHECK_THROWS_AS(levy_density_s(ctx, 1.0, 1.5), SupportError);
  CHECK_THROWS_AS(levy_density_u(ctx, 1.0, 0.5), DomainError);
  CHECK_THROWS_AS(laplace_exponent(ctx, 1.0, -1.0), DomainError);
  CHECK_THROWS_AS(classify_activity(ctx, 0.0), DomainError);
}

TEST_CASE("constant path separates") {
  const auto ctx = gamma_constant(2.0, 3.0, 1.0, 1);
  for (double t : {0.3, 1.0, 2.5}) {
    for (double s : {0.1, 0.5, 2.0}) {
      CHECK(levy_density_s(ctx, t, s) ==
            doctest::Approx(t * density(*make_gamma(), {2.0, 3.0}, s)).epsilon(1e-12));
    }
  }
}

TEST_CASE("change of variables between s and u") {
  for (std::size_t k : {0u, 1u}) {
    const auto ctx = beta_component(2, 1.0, 1.0, k);
    const auto& fam = ctx.family();
    for (double s : {0.01, 0.2, 0.5, 0.8, 0.99}) {
      const double u = fam.statistic(k, s);
      const double ds_du = std::abs(fam.statistic_inverse_derivative(k, u));
      CHECK(levy_density_u(ctx, 1.5, u) / ds_du ==
            doctest::Approx(levy_density_s(ctx, 1.5, s)).epsilon(1e-8));
    }
  }
}

TEST_CASE("pareto construction gives a pareto density in u") {
  auto fam = make_pareto_loglog(1.0);
  for (double alpha : {0.5, 2.0, 3.5}) {
    LevyContext ctx(fam, ParameterPath::constant({0.0, alpha}), BaseMeasure::lebesgue(), 0);
    for (double u : {1.01, 1.5, 3.0, 20.0}) {
      const double pareto = alpha / std::pow(u, alpha + 1);
      CHECK(levy_density_u(ctx, 1.0, u) == doctest::Approx(pareto).epsilon(1e-9));
    }
  }
  LevyContext scaled(make_pareto_loglog(2.0), ParameterPath::constant({0.0, 2.0}),
                     BaseMeasure::lebesgue(), 0);
  CHECK(levy_density_u(scaled, 1.0, 3.0) ==
        doctest::Approx(2.0 * 4.0 / 27.0).epsilon(1e-9));
}

TEST_CASE("additivity in t") {
  const auto ctx = beta_component(1, 1.0, 1.0, 0);
  for (double s : {0.1, 0.6}) {
    const double whole = levy_density_s(ctx, 1.7, s);
    const double parts = levy_density_s(ctx, 0.4, s) + levy_density_s_window(ctx, 0.4, 1.7, s);
    CHECK(parts == doctest::Approx(whole).epsilon(1e-10));
  }
  CHECK(laplace_exponent(ctx, 0.4, 0.5) + laplace_exponent_window(ctx, 0.4, 1.7, 0.5) ==
        doctest::Approx(laplace_exponent(ctx, 1.7, 0.5)).epsilon(1e-9));
}

TEST_CASE("gamma Laplace exponent in closed form") {
  const auto ctx = gamma_constant(2.0, 3.0, 1.0, 1);
  const double expected = 1.0 - std::pow(3.0 / 4.0, 2.0);
  CHECK(laplace_exponent(ctx, 1.0, 1.0) == doctest::Approx(expected).epsilon(1e-10));
  CHECK(laplace_exponent(ctx, 1.0, 1.0, LaplaceMethod::PartitionShift) ==
        doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("Laplace exponent is monotone in theta and t") {
  // Needs a nonnegative statistic: x under a gamma law.
  const auto ctx = gamma_constant(2.0, 3.0, 1.0, 1);
  double prev = 0.0;
  for (double theta : {0.1, 0.5, 1.0, 2.0, 5.0}) {
    const double v = laplace_exponent(ctx, 1.0, theta);
    CHECK(v > prev);
    prev = v;
  }
  prev = 0.0;
  for (double t : {0.1, 0.5, 1.0, 3.0}) {
    const double v = laplace_exponent(ctx, t, 1.0);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("first-order link to the moment integral") {
  const double theta = 1e-4;
  for (std::size_t k : {0u, 1u}) {
    const auto ctx = beta_component(2, 1.0, 1.0, k);
    const double lin = theta * first_moment_integral(ctx, 1.0);
    CHECK(laplace_exponent(ctx, 1.0, theta) == doctest::Approx(lin).epsilon(1e-3));
  }
  const auto g = gamma_constant(2.0, 3.0, 1.0, 1);
  CHECK(laplace_exponent(g, 1.0, theta) ==
        doctest::Approx(theta * first_moment_integral(g, 1.0)).epsilon(1e-3));
}

TEST_CASE("divergent Laplace exponent carries a partial value") {
  // E[X^{-2}] is infinite for X ~ Beta(1, 2).
  LevyContext ctx(make_beta(), ParameterPath::constant({1.0, 2.0}), BaseMeasure::lebesgue(), 0);
  try {
    laplace_exponent(ctx, 1.0, 2.0);
    FAIL("expected DivergenceError");
  } catch (const DivergenceError& e) {
    CHECK(e.partial() < 0.0);
    CHECK(std::isfinite(e.partial()));
  }
  CHECK_NOTHROW(laplace_exponent(ctx, 1.0, 0.5));
}

TEST_CASE("jumps in the base measure") {
  BaseMeasure base({}, {Jump{0.5, 2.0}, Jump{1.0, 1.0}});
  LevyContext ctx(make_gamma(), ParameterPath::constant({2.0, 3.0}), base, 1);
  const double d = density(*make_gamma(), {2.0, 3.0}, 0.7);
  CHECK(levy_density_s(ctx, 0.49, 0.7) == 0.0);
  CHECK(levy_density_s(ctx, 0.5, 0.7) == doctest::Approx(2.0 * d));
  CHECK(levy_density_s(ctx, 1.0, 0.7) == doctest::Approx(3.0 * d));
  CHECK(levy_density_s_window(ctx, 0.5, 1.0, 0.7) == doctest::Approx(d));
}

TEST_CASE("activity classification") {
  SUBCASE("gamma component with a bounded base is compound Poisson") {
    // Constant c = 2, k = 1, h = 2: eta = (2, 1), base 1 / (2^2 * 2).
    const double a0 = 1.0 / (4.0 * 2.0);
    const auto ctx = gamma_constant(2.0, 1.0, a0, 1);
    const auto act = classify_activity(ctx, 1.0);
    REQUIRE(std::holds_alternative<FiniteActivity>(act));
    const auto& f = std::get<FiniteActivity>(act);
    CHECK(f.total_mass == doctest::Approx(a0).epsilon(1e-8));
    CHECK(f.rate == doctest::Approx(a0).epsilon(1e-8));
    CHECK(f.sigma(0.5) == doctest::Approx(density(*make_gamma(), {2.0, 1.0}, 0.5)).epsilon(1e-8));
  }
  SUBCASE("pareto with alpha(z) = z is not time homogeneous") {
    ParameterPath path({constant(0.0), affine(0.0, 1.0)});
    LevyContext ctx(make_pareto_loglog(1.0), path, BaseMeasure::lebesgue(), 0);
    const auto act = classify_activity(ctx, 1.0);
    CHECK(activity_name(act) == "NotTimeHomogeneous");
    CHECK(std::get<NotTimeHomogeneous>(act).total_mass == doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("null base measure") {
    LevyContext ctx(make_gamma(), ParameterPath::constant({2.0, 3.0}), BaseMeasure::null(), 1);
    const auto act = classify_activity(ctx, 1.0);
    REQUIRE(std::holds_alternative<FiniteActivity>(act));
    CHECK(std::get<FiniteActivity>(act).total_mass == 0.0);
  }
  SUBCASE("varying concentration is not time homogeneous") {
    ParameterPath path({constant(2.0), affine(1.0, 1.0)});
    LevyContext ctx(make_gamma(), path, BaseMeasure::lebesgue(0.125), 1);
    CHECK(activity_name(classify_activity(ctx, 1.0)) == "NotTimeHomogeneous");
  }
  SUBCASE("a base supported on a bounded window is not time homogeneous") {
    BaseMeasure base({DensityPiece{0.0, 1.0, 1.0, 0.0, 1.0, 0.0}});
    LevyContext ctx(make_gamma(), ParameterPath::constant({2.0, 3.0}), base, 1);
    CHECK(activity_name(classify_activity(ctx, 1.0)) == "NotTimeHomogeneous");
  }
}

TEST_CASE("mass that keeps growing near zero is infinite activity") {
  // Registered families are proper, so this uses a stub whose tail
  // probability grows like -log(u) as u -> 0.
  class Improper final : public ExpFamily {
   public:
    std::string name() const override { return "improper"; }
    std::size_t dimension() const override { return 1; }
    Support support() const override { return {0.0, INFINITY, false, false, false}; }
    std::string coordinate_name(std::size_t) const override { return "c"; }
    double log_base_density(double) const override { return 0.0; }
    double statistic(std::size_t, double x) const override { return x; }
    bool has_inverse(std::size_t) const override { return true; }
    double statistic_inverse(std::size_t, double u) const override { return u; }
    double statistic_inverse_derivative(std::size_t, double) const override { return 1.0; }
    std::pair<double, double> statistic_image(std::size_t) const override { return {0.0, INFINITY}; }
    std::vector<double> to_natural(const Params& p) const override { return p; }
    Params from_natural(std::span<const double> e) const override { return {e.begin(), e.end()}; }
    std::optional<std::string> natural_space_violation(const Params& p) const override {
      if (!(p[0] > 0)) return std::string("c must be > 0");
      return std::nullopt;
    }
    double log_partition(const Params&) const override { return 0.0; }
    double expect_statistic(const Params&, std::size_t, const std::function<double(double)>&,
                            double u_lo) const override {
      return std::isfinite(u_lo) && u_lo > 0 ? std::max(0.0, -std::log(u_lo)) + 1.0 : INFINITY;
    }
    double center(const Params&) const override { return 1.0; }
  };
  LevyContext ctx(std::make_shared<Improper>(), ParameterPath::constant({1.0}),
                  BaseMeasure::lebesgue(), 0);
  CHECK(activity_name(classify_activity(ctx, 1.0)) == "InfiniteActivity");
}
