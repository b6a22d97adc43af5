#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "crm/levy.hpp"
#include "crm/random.hpp"

namespace crm {

/// Resolution n (cells per unit time) and horizon. Cell i (1-based) covers
/// ((i-1)/n, i/n] and takes its parameter at the midpoint (i - 1/2)/n.
struct DiscretizationPlan {
  int n = 1;
  double horizon = 1.0;

  /// Number of cells with i/n <= horizon.
  std::size_t cells() const;
  double midpoint(std::size_t i) const;
  double left(std::size_t i) const;
  double right(std::size_t i) const;
};

/// Number of cells with i/n <= t, compared literally in floating point.
std::size_t cells_up_to(const DiscretizationPlan& plan, double t);

/// Parameters and base increments of every cell, computed once.
class Discretization {
 public:
  Discretization(const LevyContext& ctx, DiscretizationPlan plan);

  const DiscretizationPlan& plan() const { return plan_; }
  const std::vector<double>& increments() const { return increments_; }
  const std::vector<Params>& parameters() const { return params_; }

  /// T_{k,n}(t) = sum over cells with i/n <= t of A_{0,n,i} T_k(S_{n,i}).
  double sample(double t, Rng& rng) const;
  /// Increments over the windows (edges[j-1], edges[j]]; edges start at 0
  /// or later and increase. One draw per cell.
  std::vector<double> sample_windows(std::span<const double> edges,
                                     Rng& rng) const;
  /// E[T_{k,n}(t)] from the moment engine, cell by cell.
  double mean(double t) const;
  /// max_i A_{0,n,i} E[T_k(S_{n,i})].
  double max_cell_mean() const;

 private:
  LevyContext ctx_;
  DiscretizationPlan plan_;
  std::vector<Params> params_;
  std::vector<double> increments_;
};

double sample_discretized(const LevyContext& ctx, const DiscretizationPlan& plan,
                          double t, Rng& rng);

struct LaplaceEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

/// Mean and standard error of exp(-theta T_{k,n}(t)) over `replicates`
/// draws. Replicate r uses the stream derive_seed(seed, r), so the result
/// does not depend on `threads` (0 picks the hardware concurrency).
LaplaceEstimate empirical_laplace(const LevyContext& ctx,
                                  const DiscretizationPlan& plan, double t,
                                  double theta, std::size_t replicates,
                                  std::uint64_t seed, unsigned threads = 0);

struct JointLaplaceEstimate {
  LaplaceEstimate joint;
  std::vector<LaplaceEstimate> windows;
  /// Product of the per-window estimates.
  double product = 0.0;
};

/// E[exp(-sum_j theta_j X_j)] for window increments X_j over
/// (edges[j], edges[j+1]], alongside the per-window transforms.
JointLaplaceEstimate empirical_joint_laplace(
    const LevyContext& ctx, const DiscretizationPlan& plan,
    std::span<const double> edges, std::span<const double> thetas,
    std::size_t replicates, std::uint64_t seed, unsigned threads = 0);

/// Runs body(r) for r in [0, count) on up to `threads` workers.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace crm
