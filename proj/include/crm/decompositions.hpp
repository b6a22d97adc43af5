#pragma once

#include <cstddef>

#include "crm/levy.hpp"

namespace crm {

/// Component n (n >= 0) of the beta-process decomposition with
/// concentration c(z) = c0 + c1 z: Beta(1, c(z) + n) jump sizes against the
/// base density c(z) / (c(z) + n). `stat` selects the weight statistic.
LevyContext beta_component(std::size_t n, double c0, double c1,
                           std::size_t stat);

/// Component (index, h) of the gamma-process decomposition with
/// concentration c(z) = c0 + c1 z and base rate alpha' (dalpha = alpha' dz):
/// Gamma(h, c(z) / (index + 1)) jump sizes against the base density
/// alpha' / ((index + 1)^h h). Requires h > 0.
LevyContext gamma_component(std::size_t index, double h, double c0, double c1,
                            double alpha_rate, std::size_t stat);

}  // namespace crm
