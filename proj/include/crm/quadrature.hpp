#pragma once

#include <functional>
#include <span>

namespace crm::quad {

using Integrand = std::function<double(double)>;

/// Adaptive Gauss-Kronrod (7/15) on a finite interval. Nodes are interior,
/// so the integrand is never evaluated at `a` or `b`.
double finite(const Integrand& f, double a, double b, double rel_tol = 1e-11);

/// Double-exponential quadrature on an interval that may be semi-infinite or
/// infinite and may carry integrable endpoint singularities. When `split` lies
/// strictly inside (a, b) the range is cut there first; pass the location of
/// the bulk of the integrand for peaked integrands on long ranges.
double improper(const Integrand& f, double a, double b, double split,
                double rel_tol = 1e-12);

/// `finite` over (a, b) cut at every interior breakpoint.
double piecewise(const Integrand& f, double a, double b,
                 std::span<const double> breakpoints, double rel_tol = 1e-11);

}  // namespace crm::quad
