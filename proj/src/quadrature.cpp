#include "crm/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace crm::quad {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double tanh_sinh_range(const Integrand& f, double a, double b, double tol) {
  thread_local boost::math::quadrature::tanh_sinh<double> integrator;
  if (!(a < b)) return 0.0;
  auto guarded = [&](double x) {
    double v = f(x);
    return std::isfinite(v) ? v : 0.0;
  };
  return integrator.integrate(guarded, a, b, tol);
}

double exp_sinh_upper(const Integrand& f, double a, double tol) {
  thread_local boost::math::quadrature::exp_sinh<double> integrator;
  auto guarded = [&](double x) {
    double v = f(x);
    return std::isfinite(v) ? v : 0.0;
  };
  return integrator.integrate(guarded, a, kInf, tol);
}

}  // namespace

double finite(const Integrand& f, double a, double b, double rel_tol) {
  if (!(a < b)) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      f, a, b, 15, rel_tol);
}

double improper(const Integrand& f, double a, double b, double split,
                double rel_tol) {
  if (!(a < b)) return 0.0;
  if (std::isfinite(split) && split > a && split < b) {
    return improper(f, a, split, kInf, rel_tol) +
           improper(f, split, b, kInf, rel_tol);
  }
  if (std::isfinite(a) && std::isfinite(b)) {
    return tanh_sinh_range(f, a, b, rel_tol);
  }
  if (std::isfinite(a)) {
    return exp_sinh_upper(f, a, rel_tol);
  }
  if (std::isfinite(b)) {
    // Reflect (-inf, b) onto (-b, inf).
    return exp_sinh_upper([&](double y) { return f(-y); }, -b, rel_tol);
  }
  return improper(f, -kInf, 0.0, kInf, rel_tol) +
         improper(f, 0.0, kInf, kInf, rel_tol);
}

double piecewise(const Integrand& f, double a, double b,
                 std::span<const double> breakpoints, double rel_tol) {
  if (!(a < b)) return 0.0;
  std::vector<double> cuts{a};
  for (double c : breakpoints) {
    if (c > a && c < b) cuts.push_back(c);
  }
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    total += finite(f, cuts[i], cuts[i + 1], rel_tol);
  }
  return total;
}

}  // namespace crm::quad
