#include "olg/example1.hpp"

#include <cmath>
#include <stdexcept>

namespace olg::example1 {

EconomySpec economy(int prefix_periods) {
    if (prefix_periods < 1) throw std::invalid_argument("prefix needs at least one period");
    EconomySpec e;
    e.bundle.alpha_min = 0.5;
    e.bundle.alpha_max = 2.0;
    e.bundle.e_max = 4.0;
    e.bundle.sigma = 0.5;
    e.bundle.epsilon = 0.3;  // phi(1/1.3) > 0.5 = delta, so the threshold implication holds
    e.bundle.delta = 0.5;

    HouseholdSpec h;
    h.endow_young = {4.0};
    h.endow_old = {0.8};
    CesUtility u;
    u.lambda = {1.0};
    u.mu = {std::sqrt(3.0 / 5.0)};
    u.rho = 0.5;
    h.utility = u;

    GenerationSpec gen;
    gen.goods_young = 1;
    gen.goods_old = 1;
    gen.households.push_back({h, 1});

    for (int t = 0; t < prefix_periods; ++t) {
        gen.t = t;
        e.prefix.push_back(gen);
    }
    gen.t = 0;
    e.tail = StationaryRepeat{gen};
    return e;
}

double phi(double r) {
    if (!(r > 0.0)) throw std::domain_error("return rate must be positive");
    return (12.0 * r * r - 4.0) / (3.0 * r * r + 5.0 * r);
}

double psi(double y) {
    if (!(y > -0.8)) throw std::domain_error("psi is defined for y > -0.8");
    return (3.0 * y + std::sqrt(9.0 * y * y + 240.0 * y + 192.0)) / 24.0;
}

}  // namespace olg::example1
