// Small builders shared by the unit and acceptance tests.
#pragma once

#include <cmath>

#include "crm/decompositions.hpp"
#include "crm/levy.hpp"

namespace fixture {

inline crm::PathComponent affine(double a, double b, double from = 0.0,
                                 double to = INFINITY) {
  return crm::PathComponent({crm::PathPiece{from, to, a, b}});
}

inline crm::PathComponent constant(double c) { return affine(c, 0.0); }

inline crm::LevyContext beta_component(int n, double c0, double c1,
                                       std::size_t k) {
  return crm::beta_component(static_cast<std::size_t>(n), c0, c1, k);
}

inline crm::LevyContext gamma_constant(double shape, double rate, double a0,
                                       std::size_t k) {
  return crm::LevyContext(crm::make_gamma(),
                          crm::ParameterPath::constant({shape, rate}),
                          crm::BaseMeasure::lebesgue(a0), k);
}

}  // namespace fixture
