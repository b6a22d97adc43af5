#include "crm/levy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "crm/error.hpp"
#include "crm/quadrature.hpp"

namespace crm {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::vector<double> merged_breakpoints(const LevyContext& ctx) {
  auto cuts = ctx.base().breakpoints();
  auto more = ctx.path().breakpoints();
  cuts.insert(cuts.end(), more.begin(), more.end());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  return cuts;
}

void require_time(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw DomainError("time t = " + fmt(t) + " must be finite and >= 0");
  }
}

double one_minus_exp(double theta, double u) { return -std::expm1(-theta * u); }

}  // namespace

std::string ConditionReport::summary() const {
  if (passed()) return "all conditions hold";
  std::ostringstream os;
  for (std::size_t i = 0; i < failures.size(); ++i) {
    const auto& f = failures[i];
    if (i) os << "; ";
    os << "condition " << f.condition << ": " << f.detail;
    if (f.witness_z) os << " (z = " << fmt(*f.witness_z) << ")";
    if (f.epsilon) os << " (epsilon = " << *f.epsilon << ")";
  }
  return os.str();
}

ConditionReport check_conditions(const ExpFamily& fam, const ParameterPath& path,
                                 std::size_t k, std::span<const double> grid) {
  ConditionReport rep;
  auto fail = [&](int cond, std::string detail, std::optional<double> z = {},
                  std::optional<double> eps = {}) {
    if (cond == 1) rep.invertible = false;
    if (cond == 2) rep.admissible = false;
    if (cond == 3) rep.contraction = false;
    rep.failures.push_back({cond, std::move(detail), z, eps});
  };

  if (grid.empty()) {
    fail(2, "empty grid");
    return rep;
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0) || !std::isfinite(grid[i]) ||
        (i > 0 && !(grid[i] > grid[i - 1]))) {
      fail(2, "grid must be strictly increasing inside (0, inf)", grid[i]);
      return rep;
    }
  }
  if (path.dimension() != fam.dimension()) {
    fail(2, "path has " + std::to_string(path.dimension()) +
                " coordinates, family needs " +
                std::to_string(fam.dimension()));
    return rep;
  }
  if (k >= fam.dimension()) {
    fail(1, "statistic index " + std::to_string(k + 1) + " out of range");
    return rep;
  }

  // Condition 1.
  if (!fam.has_inverse(k)) {
    fail(1, fam.name() + " statistic " + std::to_string(k + 1) +
                " has no declared inverse");
  } else {
    const auto sgrid = support_grid(fam, 64);
    const double err = inverse_roundtrip_error(fam, k, sgrid);
    if (!(err <= 1e-10)) {
      fail(1, "inverse round trip error " + fmt(err) + " exceeds 1e-10");
    }
    for (double x : sgrid) {
      const double d = fam.statistic_inverse_derivative(k, fam.statistic(k, x));
      if (!std::isfinite(d) || d == 0.0) {
        fail(1, "inverse derivative is not finite and nonzero at x = " + fmt(x));
        break;
      }
    }
  }

  // Conditions 2 and 3; report the first witness of each.
  bool seen2 = false;
  bool seen3 = false;
  for (double z : grid) {
    const Params p = path(z);
    if (!seen2) {
      if (auto why = fam.natural_space_violation(p)) {
        fail(2, *why, z);
        seen2 = true;
      }
    }
    if (!seen3 && !seen2) {
      for (double eps : kContractionFactors) {
        Params q = p;
        q[k] *= eps;
        if (auto why = fam.natural_space_violation(q)) {
          fail(3, *why, z, eps);
          seen3 = true;
          break;
        }
      }
    }
    if (seen2 && seen3) break;
  }
  for (const auto& atom : path.atoms()) {
    if (auto why = fam.natural_space_violation(atom.value)) {
      if (!seen2) fail(2, "atom override: " + *why, atom.at);
      seen2 = true;
    }
  }
  return rep;
}

std::vector<double> default_condition_grid(const ParameterPath& path,
                                           const BaseMeasure& base) {
  double z_end = 1e3;
  for (const auto& c : path.components()) {
    double reach = 0.0;
    for (const auto& p : c.pieces()) reach = std::max(reach, p.to);
    z_end = std::min(z_end, reach);
  }
  std::vector<double> grid;
  for (int i = 0; i < 200; ++i) {
    grid.push_back(std::pow(10.0, -6.0 + 9.0 * i / 199.0));
  }
  auto add = [&](double z) {
    if (z > 0.0 && std::isfinite(z)) {
      grid.push_back(z);
      grid.push_back(std::nextafter(z, kInf));
      grid.push_back(z * (1.0 + 1e-9));
    }
  };
  for (double b : path.breakpoints()) add(b);
  for (double b : base.breakpoints()) add(b);
  for (const auto& a : path.atoms()) add(a.at);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  std::erase_if(grid, [&](double z) {
    return !(z > 0.0) || !(z < z_end || (z == z_end && std::isinf(z_end)));
  });
  // Midpoints between consecutive grid points catch interior sign changes
  // of affine pieces.
  std::vector<double> out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (i > 0) out.push_back(0.5 * (grid[i - 1] + grid[i]));
    out.push_back(grid[i]);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

LevyContext::LevyContext(FamilyPtr family, ParameterPath path,
                         BaseMeasure base, std::size_t k,
                         std::optional<std::vector<double>> grid)
    : family_(std::move(family)),
      path_(std::move(path)),
      base_(std::move(base)),
      k_(k),
      grid_(grid ? std::move(*grid) : default_condition_grid(path_, base_)) {
  if (!family_) throw DomainError("context needs a family");
  report_ = check_conditions(*family_, path_, k_, grid_);
  if (!report_.passed()) {
    throw ConditionError(family_->name() + " context fails: " +
                         report_.summary());
  }
}

LevyContext LevyContext::with_path(ParameterPath path) const {
  return LevyContext(family_, std::move(path), base_, k_, grid_);
}

double integrate_base(const LevyContext& ctx, double a, double b,
                      const std::function<double(double)>& f) {
  if (!(a < b)) return 0.0;
  const auto& base = ctx.base();
  double total = 0.0;
  if (!base.pieces().empty()) {
    const auto cuts = merged_breakpoints(ctx);
    total += quad::piecewise(
        [&](double z) {
          const double w = base.density(z);
          return w == 0.0 ? 0.0 : w * f(z);
        },
        a, b, cuts);
  }
  for (const auto& j : base.jumps_in(a, b)) total += j.mass * f(j.location);
  return total;
}

double levy_density_s_window(const LevyContext& ctx, double t0, double t1,
                             double s) {
  require_time(t0);
  require_time(t1);
  const auto& fam = ctx.family();
  if (!fam.support().contains(s)) {
    throw SupportError(fam.name() + ": s = " + fmt(s) +
                       " lies outside the support");
  }
  return integrate_base(ctx, t0, t1, [&](double z) {
    return density(fam, ctx.path()(z), s);
  });
}

double levy_density_s(const LevyContext& ctx, double t, double s) {
  return levy_density_s_window(ctx, 0.0, t, s);
}

double levy_density_u_window(const LevyContext& ctx, double t0, double t1,
                             double u) {
  const auto& fam = ctx.family();
  const auto [lo, hi] = fam.statistic_image(ctx.k());
  if (!(u > lo && u < hi)) {
    throw DomainError("u = " + fmt(u) + " lies outside the image (" + fmt(lo) +
                      ", " + fmt(hi) + ") of statistic " +
                      std::to_string(ctx.k() + 1));
  }
  const double s = fam.statistic_inverse(ctx.k(), u);
  const double jac = std::abs(fam.statistic_inverse_derivative(ctx.k(), u));
  return levy_density_s_window(ctx, t0, t1, s) * jac;
}

double levy_density_u(const LevyContext& ctx, double t, double u) {
  return levy_density_u_window(ctx, 0.0, t, u);
}

double laplace_exponent_window(const LevyContext& ctx, double t0, double t1,
                               double theta, LaplaceMethod method) {
  require_time(t0);
  require_time(t1);
  if (!(theta >= 0.0) || !std::isfinite(theta)) {
    throw DomainError("theta = " + fmt(theta) + " must be finite and >= 0");
  }
  if (theta == 0.0 || !(t0 < t1)) return 0.0;
  const auto& fam = ctx.family();
  const std::size_t k = ctx.k();

  auto shifted_ok = [&](const Params& p) {
    auto eta = fam.to_natural(p);
    eta[k] -= theta;
    return fam.in_natural_space(fam.from_natural(eta));
  };

  // e^{-theta u} is bounded on a nonnegative image, so only statistics that
  // reach negative values can make the integral diverge.
  if (fam.statistic_image(k).first < 0.0) {
    std::vector<double> probes;
    for (double z : ctx.grid()) {
      if (z > t0 && z <= t1) probes.push_back(z);
    }
    for (const auto& j : ctx.base().jumps_in(t0, t1)) {
      probes.push_back(j.location);
    }
    for (double z : probes) {
      if (shifted_ok(ctx.path()(z))) continue;
      const double cut = -std::log(1e12) / theta;
      const double partial = integrate_base(ctx, t0, t1, [&](double zz) {
        return fam.expect_statistic(
            ctx.path()(zz), k,
            [&](double u) { return one_minus_exp(theta, u); }, cut);
      });
      throw DivergenceError(
          "E[exp(-theta T_" + std::to_string(k + 1) + ")] is infinite at z = " +
              fmt(z) + "; the Laplace exponent diverges",
          partial);
    }
  }

  return integrate_base(ctx, t0, t1, [&](double z) {
    const Params p = ctx.path()(z);
    if (method == LaplaceMethod::PartitionShift) {
      return -std::expm1(std::log(statistic_mgf(fam, p, k, -theta)));
    }
    return fam.expect_statistic(
        p, k, [&](double u) { return one_minus_exp(theta, u); });
  });
}

double laplace_exponent(const LevyContext& ctx, double t, double theta,
                        LaplaceMethod method) {
  return laplace_exponent_window(ctx, 0.0, t, theta, method);
}

double first_moment_integral(const LevyContext& ctx, double t) {
  require_time(t);
  return integrate_base(ctx, 0.0, t, [&](double z) {
    return moment_suff_stat(ctx.family(), ctx.path()(z), ctx.k(), 1);
  });
}

double levy_mass_above(const LevyContext& ctx, double t, double u_min) {
  require_time(t);
  return integrate_base(ctx, 0.0, t, [&](double z) {
    return ctx.family().expect_statistic(
        ctx.path()(z), ctx.k(), [](double) { return 1.0; }, u_min);
  });
}

std::string activity_name(const Activity& a) {
  if (std::holds_alternative<FiniteActivity>(a)) return "FiniteActivity";
  if (std::holds_alternative<InfiniteActivity>(a)) return "InfiniteActivity";
  return "NotTimeHomogeneous";
}

Activity classify_activity(const LevyContext& ctx, double t) {
  if (!(t > 0.0) || !std::isfinite(t)) {
    throw DomainError("classify_activity needs t > 0, got " + fmt(t));
  }
  if (ctx.base().increment(0.0, t) == 0.0) {
    return FiniteActivity{0.0, 0.0, {}};
  }

  // Total mass with a shrinking lower cutoff.
  const auto [lo, hi] = ctx.family().statistic_image(ctx.k());
  double u = std::isfinite(lo) ? lo + std::min(1.0, 0.5 * (hi - lo)) : -1.0;
  double mass = levy_mass_above(ctx, t, u);
  int streak = 0;
  for (int step = 0; step < 200; ++step) {
    u = std::isfinite(lo) ? lo + 0.5 * (u - lo) : 2.0 * u;
    const double next = levy_mass_above(ctx, t, u);
    const double growth = mass > 0.0 ? next / mass - 1.0 : (next > 0 ? kInf : 0);
    mass = next;
    if (!std::isfinite(mass)) return InfiniteActivity{mass};
    if (growth > 0.01) {
      if (++streak >= 20) return InfiniteActivity{mass};
    } else {
      streak = 0;
      if (growth < 1e-10) break;
    }
  }

  // Product form dL_t = t c sigma(du): dL_{t'} / dL_t = t' / t for every u.
  NotTimeHomogeneous worst{mass, 0.0, 0.0};
  const auto& fam = ctx.family();
  for (double x : support_grid(fam, 24)) {
    const double uu = fam.statistic(ctx.k(), x);
    if (!(uu > lo && uu < hi)) continue;
    const double here = levy_density_u(ctx, t, uu);
    for (double factor : {0.5, 2.0}) {
      const double there = levy_density_u(ctx, factor * t, uu);
      double err;
      if (here == 0.0) {
        err = there == 0.0 ? 0.0 : kInf;
      } else {
        err = std::abs(there / here - factor) / factor;
      }
      if (err > worst.worst_ratio_error) {
        worst.worst_ratio_error = err;
        worst.witness_u = uu;
      }
    }
  }
  if (worst.worst_ratio_error > 1e-6) return worst;

  return FiniteActivity{mass, mass / t, [ctx, t, mass](double uu) {
                          return levy_density_u(ctx, t, uu) / mass;
                        }};
}

}  // namespace crm
