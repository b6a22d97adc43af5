#include "crm/construct.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "crm/error.hpp"

namespace crm {

std::size_t DiscretizationPlan::cells() const { return cells_up_to(*this, horizon); }

double DiscretizationPlan::midpoint(std::size_t i) const {
  return (static_cast<double>(i) - 0.5) / n;
}
double DiscretizationPlan::left(std::size_t i) const {
  return static_cast<double>(i - 1) / n;
}
double DiscretizationPlan::right(std::size_t i) const {
  return static_cast<double>(i) / n;
}

std::size_t cells_up_to(const DiscretizationPlan& plan, double t) {
  if (!(t >= 0.0)) return 0;
  auto count = static_cast<std::size_t>(std::floor(t * plan.n));
  // Correct the floor for rounding either way; the rule is i/n <= t.
  while (count > 0 && !(static_cast<double>(count) / plan.n <= t)) --count;
  while (static_cast<double>(count + 1) / plan.n <= t) ++count;
  return count;
}

Discretization::Discretization(const LevyContext& ctx, DiscretizationPlan plan)
    : ctx_(ctx), plan_(plan) {
  if (plan_.n < 1) throw DomainError("discretization needs n >= 1");
  if (!(plan_.horizon >= 0.0) || !std::isfinite(plan_.horizon)) {
    throw DomainError("discretization horizon must be finite and >= 0");
  }
  const std::size_t m = plan_.cells();
  params_.reserve(m);
  increments_.reserve(m);
  for (std::size_t i = 1; i <= m; ++i) {
    const double inc = ctx.base().increment(plan_.left(i), plan_.right(i));
    increments_.push_back(inc);
    Params p = ctx.path()(plan_.midpoint(i));
    if (inc > 0.0) require_admissible(ctx.family(), p);
    params_.push_back(std::move(p));
  }
}

double Discretization::sample(double t, Rng& rng) const {
  if (t > plan_.horizon) {
    throw DomainError("t exceeds the discretization horizon");
  }
  const std::size_t m = cells_up_to(plan_, t);
  const auto& fam = ctx_.family();
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (increments_[i] == 0.0) continue;
    total += increments_[i] * fam.sample_statistic(params_[i], ctx_.k(), rng);
  }
  return total;
}

std::vector<double> Discretization::sample_windows(
    std::span<const double> edges, Rng& rng) const {
  if (edges.size() < 2) return {};
  if (edges.back() > plan_.horizon) {
    throw DomainError("window edge exceeds the discretization horizon");
  }
  std::vector<double> out(edges.size() - 1, 0.0);
  const auto& fam = ctx_.family();
  const std::size_t m = cells_up_to(plan_, edges.back());
  std::size_t w = 0;
  for (std::size_t i = 1; i <= m; ++i) {
    const double r = plan_.right(i);
    if (!(r > edges.front())) continue;
    while (w + 1 < out.size() && !(r <= edges[w + 1])) ++w;
    if (increments_[i - 1] == 0.0) continue;
    out[w] += increments_[i - 1] *
              fam.sample_statistic(params_[i - 1], ctx_.k(), rng);
  }
  return out;
}

double Discretization::mean(double t) const {
  const std::size_t m = cells_up_to(plan_, std::min(t, plan_.horizon));
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (increments_[i] == 0.0) continue;
    total += increments_[i] *
             moment_suff_stat(ctx_.family(), params_[i], ctx_.k(), 1);
  }
  return total;
}

double Discretization::max_cell_mean() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < increments_.size(); ++i) {
    if (increments_[i] == 0.0) continue;
    const double v = std::abs(
        increments_[i] * moment_suff_stat(ctx_.family(), params_[i], ctx_.k(), 1));
    worst = std::max(worst, v);
  }
  return worst;
}

double sample_discretized(const LevyContext& ctx, const DiscretizationPlan& plan,
                          double t, Rng& rng) {
  return Discretization(ctx, plan).sample(t, rng);
}

void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(
      std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count || failed.load()) return;
        try {
          body(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

namespace {

LaplaceEstimate summarize(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double var = v.size() > 1 ? ss / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n)};
}

void require_replicates(std::size_t replicates) {
  if (replicates < 100) {
    throw DomainError("empirical Laplace transforms need >= 100 replicates");
  }
}

}  // namespace

LaplaceEstimate empirical_laplace(const LevyContext& ctx,
                                  const DiscretizationPlan& plan, double t,
                                  double theta, std::size_t replicates,
                                  std::uint64_t seed, unsigned threads) {
  require_replicates(replicates);
  if (!(theta >= 0.0)) throw DomainError("theta must be >= 0");
  if (theta == 0.0) return {1.0, 0.0};
  const Discretization disc(ctx, plan);
  std::vector<double> values(replicates);
  parallel_for(replicates, threads, [&](std::size_t r) {
    Rng rng = make_stream(seed, r);
    values[r] = std::exp(-theta * disc.sample(t, rng));
  });
  return summarize(values);
}

JointLaplaceEstimate empirical_joint_laplace(
    const LevyContext& ctx, const DiscretizationPlan& plan,
    std::span<const double> edges, std::span<const double> thetas,
    std::size_t replicates, std::uint64_t seed, unsigned threads) {
  require_replicates(replicates);
  if (edges.size() < 2 || thetas.size() + 1 != edges.size()) {
    throw DomainError("need one theta per window");
  }
  const Discretization disc(ctx, plan);
  const std::size_t w = thetas.size();
  std::vector<double> joint(replicates);
  std::vector<std::vector<double>> per(w, std::vector<double>(replicates));
  parallel_for(replicates, threads, [&](std::size_t r) {
    Rng rng = make_stream(seed, r);
    const auto x = disc.sample_windows(edges, rng);
    double expo = 0.0;
    for (std::size_t j = 0; j < w; ++j) {
      expo += thetas[j] * x[j];
      per[j][r] = std::exp(-thetas[j] * x[j]);
    }
    joint[r] = std::exp(-expo);
  });
  JointLaplaceEstimate out;
  out.joint = summarize(joint);
  out.product = 1.0;
  for (const auto& v : per) {
    out.windows.push_back(summarize(v));
    out.product *= out.windows.back().estimate;
  }
  return out;
}

}  // namespace crm
