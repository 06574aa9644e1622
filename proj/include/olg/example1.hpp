#pragma once

#include "olg/economy.hpp"

// Built-in stationary single-good benchmark economy: one household per
// generation with utility sqrt(c_t) + sqrt(3 c_{t+1} / 5) and endowment
// (4, 0.8). Its per-capita savings function and the inverse of the
// equilibrium step have closed forms, which anchor the oracle tests and the
// `example1` CLI command.

namespace olg::example1 {

// The economy, with bounds (alpha in [0.5, 2], e_max = 4, sigma = 0.5) and
// prone-to-savings constants epsilon = 0.3, delta = 0.5.
EconomySpec economy(int prefix_periods = 2);

// Per-capita real savings at real return rate r = p_t / p_{t+1}:
// (12 r^2 - 4) / (3 r^2 + 5 r). Strictly increasing, zero at sqrt(3)/3.
double phi(double r);

// Inverse of r -> r phi(r): psi(r phi(r)) = r for all r > 0. Defined for
// y > -0.8.
double psi(double y);

}  // namespace olg::example1
