#include "crm/base_measure.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "crm/error.hpp"

namespace crm {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_zero_piece(const DensityPiece& p) { return p.p0 == 0.0 && p.p1 == 0.0; }

}  // namespace

double DensityPiece::integral(double a, double b) const {
  if (!(a < b) || is_zero_piece(*this)) return 0.0;
  if (q1 == 0.0) {
    if (!std::isfinite(b)) return kInf;
    return (p0 * (b - a) + 0.5 * p1 * (b - a) * (b + a)) / q0;
  }
  const double lead = p1 / q1;
  const double coef = (p0 - lead * q0) / q1;
  if (!std::isfinite(b)) return (lead != 0.0 || coef != 0.0) ? kInf : 0.0;
  return lead * (b - a) + coef * std::log1p(q1 * (b - a) / (q0 + q1 * a));
}

BaseMeasure::BaseMeasure(std::vector<DensityPiece> pieces,
                         std::vector<Jump> jumps)
    : pieces_(std::move(pieces)), jumps_(std::move(jumps)) {
  std::sort(pieces_.begin(), pieces_.end(),
            [](const DensityPiece& a, const DensityPiece& b) {
              return a.from < b.from;
            });
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    const auto& p = pieces_[i];
    const std::string where = "base density piece " + std::to_string(i + 1);
    if (!(p.from >= 0.0) || !(p.from < p.to)) {
      throw DomainError(where + " must satisfy 0 <= from < to");
    }
    if (i > 0 && p.from < pieces_[i - 1].to) {
      throw DomainError(where + " overlaps its predecessor");
    }
    const double far = std::isfinite(p.to) ? p.to : std::max(1e12, 1e6 * p.from);
    const double qa = p.q0 + p.q1 * p.from;
    const double qb = p.q0 + p.q1 * far;
    // The denominator may vanish at the open left end, which gives a
    // density with infinite mass near `from` (such as 1 / z).
    if (!(qa * qb > 0.0) && !(qa == 0.0 && qb != 0.0)) {
      throw DomainError(where + " has a pole or zero denominator");
    }
    if (p(p.from) < 0.0 || p(far) < 0.0) {
      throw DomainError(where + " takes negative values");
    }
  }
  for (std::size_t i = 0; i < jumps_.size(); ++i) {
    if (!(jumps_[i].location >= 0.0) || !std::isfinite(jumps_[i].location)) {
      throw DomainError("jump " + std::to_string(i + 1) +
                        " must be at a finite location >= 0");
    }
    if (!(jumps_[i].mass > 0.0) || !std::isfinite(jumps_[i].mass)) {
      throw DomainError("jump " + std::to_string(i + 1) +
                        " must carry a finite positive mass");
    }
  }
  std::stable_sort(jumps_.begin(), jumps_.end(),
                   [](const Jump& a, const Jump& b) {
                     return a.location < b.location;
                   });
}

BaseMeasure BaseMeasure::lebesgue(double rate) {
  return BaseMeasure({DensityPiece{0.0, kInf, rate, 0.0, 1.0, 0.0}});
}

double BaseMeasure::density(double z) const {
  for (const auto& p : pieces_) {
    if (z >= p.from && z < p.to) return p(z);
  }
  return 0.0;
}

double BaseMeasure::continuous_mass(double a, double b) const {
  double total = 0.0;
  for (const auto& p : pieces_) {
    const double lo = std::max(a, p.from);
    const double hi = std::min(b, p.to);
    total += p.integral(lo, hi);
  }
  return total;
}

double BaseMeasure::jump_mass(double a, double b) const {
  double total = 0.0;
  for (const auto& j : jumps_) {
    if (j.location > a && j.location <= b) total += j.mass;
  }
  return total;
}

double BaseMeasure::increment(double a, double b) const {
  if (!(a < b)) return 0.0;
  return continuous_mass(a, b) + jump_mass(a, b);
}

std::vector<Jump> BaseMeasure::jumps_in(double a, double b) const {
  std::vector<Jump> out;
  for (const auto& j : jumps_) {
    if (j.location > a && j.location <= b) out.push_back(j);
  }
  return out;
}

double BaseMeasure::sample_location(double a, double b, Rng& rng) const {
  const double total = increment(a, b);
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw TruncationError("cannot sample a location from a base measure with "
                          "zero or infinite mass on the region");
  }
  double target = uniform_open(rng) * total;
  // Jumps first, then pieces, in a fixed order.
  for (const auto& j : jumps_) {
    if (j.location > a && j.location <= b) {
      if (target < j.mass) return j.location;
      target -= j.mass;
    }
  }
  const DensityPiece* last = nullptr;
  double last_lo = a;
  double last_hi = b;
  for (const auto& p : pieces_) {
    const double lo = std::max(a, p.from);
    const double hi = std::min(b, p.to);
    const double mass = p.integral(lo, hi);
    if (!(mass > 0.0)) continue;
    last = &p;
    last_lo = lo;
    last_hi = hi;
    if (target >= mass) {
      target -= mass;
      continue;
    }
    if (p.q1 == 0.0) {
      // Solve the (at most quadratic) cumulative mass for the offset.
      const double c0 = p.p0 / p.q0;
      const double c1 = p.p1 / p.q0;
      const double start = c0 + c1 * lo;
      const double disc = std::max(0.0, start * start + 2.0 * c1 * target);
      const double d = 2.0 * target / (start + std::sqrt(disc));
      return std::clamp(lo + d, lo, hi);
    }
    double x0 = lo;
    double x1 = hi;
    for (int it = 0; it < 200 && x0 < x1; ++it) {
      const double mid = 0.5 * (x0 + x1);
      if (!(mid > x0 && mid < x1)) break;
      if (p.integral(lo, mid) < target) {
        x0 = mid;
      } else {
        x1 = mid;
      }
    }
    return 0.5 * (x0 + x1);
  }
  // Rounding left a sliver of mass unassigned; take the right end.
  return last ? last_hi : last_lo;
}

std::vector<double> BaseMeasure::breakpoints() const {
  std::vector<double> out;
  for (const auto& p : pieces_) {
    out.push_back(p.from);
    if (std::isfinite(p.to)) out.push_back(p.to);
  }
  for (const auto& j : jumps_) out.push_back(j.location);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace crm
