#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "crm/expfam.hpp"

namespace crm {

/// value(z) = intercept + slope * z on [from, to).
struct PathPiece {
  double from = 0.0;
  double to = std::numeric_limits<double>::infinity();
  double intercept = 0.0;
  double slope = 0.0;
};

/// One coordinate of a parameter path, piecewise affine over (0, inf).
/// Pieces are half-open on the right, so at a shared breakpoint the piece
/// starting there wins (right-continuity). Outside all pieces the value
/// is NaN.
class PathComponent {
 public:
  PathComponent() = default;
  explicit PathComponent(std::vector<PathPiece> pieces);

  double operator()(double z) const;
  const std::vector<PathPiece>& pieces() const { return pieces_; }

 private:
  std::vector<PathPiece> pieces_;
};

/// Replaces the whole parameter vector at a single location. Used for fixed
/// atoms of posterior paths.
struct PathAtom {
  double at = 0.0;
  Params value;
};

/// z -> parameter vector, one piecewise-affine component per coordinate.
class ParameterPath {
 public:
  ParameterPath() = default;
  ParameterPath(std::vector<PathComponent> components,
                std::vector<PathAtom> atoms = {});

  static ParameterPath constant(const Params& value);

  std::size_t dimension() const { return components_.size(); }
  Params operator()(double z) const;

  const std::vector<PathComponent>& components() const { return components_; }
  const std::vector<PathAtom>& atoms() const { return atoms_; }

  /// Returns a copy with an atom override at `at` (replacing an existing one
  /// at the same location).
  ParameterPath with_atom(double at, Params value) const;

  /// Piece boundaries of all components, sorted, finite only.
  std::vector<double> breakpoints() const;

  bool operator==(const ParameterPath& other) const;

 private:
  std::vector<PathComponent> components_;
  std::vector<PathAtom> atoms_;
};

}  // namespace crm
