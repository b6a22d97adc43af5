#pragma once

#include <limits>
#include <utility>
#include <vector>

#include "crm/random.hpp"

namespace crm {

/// a_0(z) = (p0 + p1 z) / (q0 + q1 z) on [from, to). Constants and affine
/// densities are the special cases q = (1, 0).
struct DensityPiece {
  double from = 0.0;
  double to = std::numeric_limits<double>::infinity();
  double p0 = 0.0;
  double p1 = 0.0;
  double q0 = 1.0;
  double q1 = 0.0;

  double operator()(double z) const { return (p0 + p1 * z) / (q0 + q1 * z); }
  /// Closed-form integral over [a, b] within the piece.
  double integral(double a, double b) const;
};

struct Jump {
  double location = 0.0;
  double mass = 0.0;
};

/// A_0 on [0, inf): an absolutely continuous part given piecewise plus a
/// finite list of point masses. Increments use (a, b] semantics, so a jump
/// at b counts and a jump at a does not.
class BaseMeasure {
 public:
  BaseMeasure() = default;
  BaseMeasure(std::vector<DensityPiece> pieces, std::vector<Jump> jumps = {});

  static BaseMeasure lebesgue(double rate = 1.0);
  static BaseMeasure null() { return {}; }

  /// a_0(z); zero outside every piece.
  double density(double z) const;
  /// Integral of a_0 over [a, b].
  double continuous_mass(double a, double b) const;
  /// Sum of jump masses with a < location <= b.
  double jump_mass(double a, double b) const;
  /// A_0(a, b].
  double increment(double a, double b) const;

  /// Jumps with a < location <= b.
  std::vector<Jump> jumps_in(double a, double b) const;

  /// Draw a location from A_0 restricted to (a, b] and normalized.
  /// Requires 0 < increment(a, b) < inf.
  double sample_location(double a, double b, Rng& rng) const;

  std::vector<double> breakpoints() const;
  const std::vector<DensityPiece>& pieces() const { return pieces_; }
  const std::vector<Jump>& jumps() const { return jumps_; }
  bool is_null() const { return pieces_.empty() && jumps_.empty(); }

 private:
  std::vector<DensityPiece> pieces_;
  std::vector<Jump> jumps_;
};

}  // namespace crm
