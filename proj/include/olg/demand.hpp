#pragma once

#include <span>
#include <vector>

#include "olg/economy.hpp"

// Closed-form Walrasian demand for the CES family and the aggregates built
// on it: excess demand, joint excess demand, real savings. Everything here
// is a pure function of its inputs.

namespace olg {

struct DemandResult {
    std::vector<double> young;
    std::vector<double> old;
};

// Unique utility maximizer on the budget set at strictly positive prices.
// Satisfies Walras' law up to rounding: p.(x - e) == 0.
DemandResult ces_demand(const HouseholdSpec& h, std::span<const double> p_young,
                        std::span<const double> p_old);

// Young-period expenditure share gamma in (0,1):
// p_young . x_young = gamma * (p . e). Log-linear uses the eta -> 1 limit
// ||lambda|| / (||lambda|| + ||mu||).
double gamma_share(const UtilityParams& u, std::span<const double> p_young,
                   std::span<const double> p_old);

// Prop-1 box bound on gamma over K0 x K0 prices:
// sum lambda^eta / (sum lambda^eta + sigma^(2(eta-1)) sum mu^eta).
double gamma_box_bound(const UtilityParams& u, double sigma);

// d(x_young, x_old) / d(p_young, p_old), row-major square matrix of size
// (L_t + L_{t+1})^2 flattened. Used for closed-form Jacobians in the solver.
std::vector<double> demand_jacobian(const HouseholdSpec& h,
                                    std::span<const double> p_young,
                                    std::span<const double> p_old);

// Single-period demand: spend `wealth` on goods priced `p` with CES or
// log-linear preferences given by the young weights of `u`.
std::vector<double> spend_all_demand(const UtilityParams& u,
                                     std::span<const double> p, double wealth);

// Total excess demand for period-t goods, old generation t-1 plus young
// generation t. Throws std::invalid_argument for t = 0: there is no market
// clearing equation in period 0.
std::vector<double> excess_demand_t(const EconomySpec& e, int t,
                                    std::span<const double> p_prev,
                                    std::span<const double> p_cur,
                                    std::span<const double> p_next);

// Concatenation (z_1, ..., z_t) where t = p.periods() - 2.
std::vector<double> joint_excess(const EconomySpec& e, const PriceSequence& p);

// Real savings (p_t/||p_t||) . (e_young - x_young); homogeneous of degree
// zero in the price pair.
double real_savings(const HouseholdSpec& h, std::span<const double> p_young,
                    std::span<const double> p_old);

// Mean of real_savings over the generation's households.
double avg_savings(const GenerationSpec& gen, std::span<const double> p_young,
                   std::span<const double> p_old);

}  // namespace olg
