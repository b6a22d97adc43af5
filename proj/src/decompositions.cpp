#include "crm/decompositions.hpp"

#include <cmath>
#include <limits>

#include "crm/error.hpp"

namespace crm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

LevyContext beta_component(std::size_t n, double c0, double c1, std::size_t stat) {
  const double shift = static_cast<double>(n);
  ParameterPath path({PathComponent({PathPiece{0.0, kInf, 1.0, 0.0}}),
                      PathComponent({PathPiece{0.0, kInf, c0 + shift, c1}})});
  BaseMeasure base({DensityPiece{0.0, kInf, c0, c1, c0 + shift, c1}});
  return LevyContext(make_beta(), std::move(path), std::move(base), stat);
}

LevyContext gamma_component(std::size_t index, double h, double c0, double c1,
                            double alpha_rate, std::size_t stat) {
  if (!(h > 0.0)) {
    throw DomainError("gamma component: shape h = " + std::to_string(h) +
                      " must be > 0");
  }
  const double scale = static_cast<double>(index) + 1.0;
  ParameterPath path({PathComponent({PathPiece{0.0, kInf, h, 0.0}}),
                      PathComponent({PathPiece{0.0, kInf, c0 / scale, c1 / scale}})});
  const double rate = alpha_rate / (std::pow(scale, h) * h);
  return LevyContext(make_gamma(), std::move(path), BaseMeasure::lebesgue(rate), stat);
}

}  // namespace crm
