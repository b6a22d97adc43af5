#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "crm/base_measure.hpp"
#include "crm/expfam.hpp"
#include "crm/path.hpp"

namespace crm {

struct ConditionFailure {
  int condition = 0;  // 1: invertible statistic, 2: eta(z) admissible,
                      // 3: closed under contraction of coordinate k
  std::string detail;
  std::optional<double> witness_z;
  std::optional<double> epsilon;
};

struct ConditionReport {
  bool invertible = true;
  bool admissible = true;
  bool contraction = true;
  std::vector<ConditionFailure> failures;

  bool passed() const { return invertible && admissible && contraction; }
  std::string summary() const;
};

inline constexpr double kContractionFactors[] = {0.1, 0.5, 0.9};

/// Checks that T_k is invertible with a differentiable inverse, that the path
/// stays in the natural space on `grid`, and that scaling coordinate k of the
/// path by 0.1, 0.5 and 0.9 keeps it there. The grid must be strictly
/// increasing and inside (0, inf). Never throws for failing conditions.
ConditionReport check_conditions(const ExpFamily& fam, const ParameterPath& path,
                                 std::size_t k, std::span<const double> grid);

/// Grid used when a context is built without an explicit one: log-spaced
/// points in (0, z_end), every breakpoint of the path and base, points just
/// to the right of each, jump and atom locations. z_end is where the path
/// stops being defined, capped at 1e3.
std::vector<double> default_condition_grid(const ParameterPath& path,
                                           const BaseMeasure& base);

/// Family, parameter path, base measure and statistic index. Construction
/// runs `check_conditions` and throws ConditionError when it fails.
class LevyContext {
 public:
  LevyContext(FamilyPtr family, ParameterPath path, BaseMeasure base,
              std::size_t k, std::optional<std::vector<double>> grid = {});

  const ExpFamily& family() const { return *family_; }
  const FamilyPtr& family_ptr() const { return family_; }
  const ParameterPath& path() const { return path_; }
  const BaseMeasure& base() const { return base_; }
  std::size_t k() const { return k_; }
  const ConditionReport& report() const { return report_; }
  const std::vector<double>& grid() const { return grid_; }

  /// Same family, base, k and grid with another path.
  LevyContext with_path(ParameterPath path) const;

 private:
  FamilyPtr family_;
  ParameterPath path_;
  BaseMeasure base_;
  std::size_t k_;
  std::vector<double> grid_;
  ConditionReport report_;
};

/// Integral of f(z) dA_0(z) over (a, b]: Gauss-Kronrod on the continuous
/// part cut at every breakpoint, plus exact jump terms f(loc) * mass.
double integrate_base(const LevyContext& ctx, double a, double b,
                      const std::function<double(double)>& f);

/// dL_t(s)/ds = int_{(0,t]} p(s | eta(z)) dA_0(z).
double levy_density_s(const LevyContext& ctx, double t, double s);
/// Same integral over the window (t0, t1].
double levy_density_s_window(const LevyContext& ctx, double t0, double t1,
                             double s);

/// Density of the Levy measure in u = T_k(s):
/// levy_density_s(T_k^{-1}(u)) * |d T_k^{-1}/du|.
double levy_density_u(const LevyContext& ctx, double t, double u);
double levy_density_u_window(const LevyContext& ctx, double t0, double t1,
                             double u);

enum class LaplaceMethod {
  /// Inner expectation over u by quadrature, outer over z.
  Quadrature,
  /// Inner expectation in closed form as 1 - exp(A(eta - theta e_k) - A(eta)).
  PartitionShift,
};

/// int (1 - e^{-theta u}) dL_t(u). Throws DivergenceError when
/// E[e^{-theta T_k}] is infinite somewhere on the grid in (0, t]; the error
/// carries the value restricted to {T_k >= -ln(1e12) / theta}.
double laplace_exponent(const LevyContext& ctx, double t, double theta,
                        LaplaceMethod method = LaplaceMethod::Quadrature);
double laplace_exponent_window(const LevyContext& ctx, double t0, double t1,
                               double theta,
                               LaplaceMethod method = LaplaceMethod::Quadrature);

/// int_{(0,t]} E_{eta(z)}[T_k] dA_0(z), the first-order term of the Laplace
/// exponent in theta.
double first_moment_integral(const LevyContext& ctx, double t);

/// int_{(0,t]} P_{eta(z)}(T_k >= u_min) dA_0(z).
double levy_mass_above(const LevyContext& ctx, double t, double u_min);

struct FiniteActivity {
  double total_mass = 0.0;
  double rate = 0.0;  // total_mass / t
  /// Normalized jump-size density in u; empty when total_mass is 0.
  std::function<double(double)> sigma;
};
struct InfiniteActivity {
  double last_mass = 0.0;
};
struct NotTimeHomogeneous {
  double total_mass = 0.0;
  double worst_ratio_error = 0.0;
  double witness_u = 0.0;
};
using Activity = std::variant<FiniteActivity, InfiniteActivity,
                              NotTimeHomogeneous>;

std::string activity_name(const Activity& a);

/// Mass of dL_t with a shrinking lower cutoff on u; divergence when the mass
/// keeps growing by more than 1% per step for 20 consecutive steps. Finite
/// mass is then tested for the product form t * c * sigma(du) by comparing
/// dL_{t/2} and dL_{2t} with dL_t on a u-grid (relative tolerance 1e-6).
Activity classify_activity(const LevyContext& ctx, double t);

}  // namespace crm
