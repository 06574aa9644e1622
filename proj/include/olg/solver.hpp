#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "olg/demand.hpp"
#include "olg/economy.hpp"

// Root finding for equilibrium systems: damped Gauss-Newton with
// positivity-preserving steps, finite-horizon equilibrium enumeration,
// forward shooting, and the closed-loop virtual economy at a tail seam.

namespace olg {

struct SolveOptions {
    double tol_residual = 1e-10;
    int max_iter = 200;
    int n_starts = 8;
    double damping = 1.0;        // initial step scale, in (0,1]
    std::uint64_t seed = 0;      // drives all start sampling
    double dedup_tol = 1e-6;     // relative distance for root deduplication
    int branch_budget = 64;      // max simultaneous backward branches
    bool fd_jacobian = false;    // force finite differences
    double fd_step = 1e-7;       // scaled by max(1,|x|)
    int jobs = 1;                // bound on concurrent backward runs
};

using VectorFn = std::function<std::vector<double>(std::span<const double>)>;
// Row-major m x n Jacobian of a VectorFn.
using JacobianFn = std::function<std::vector<double>(std::span<const double>)>;

struct NewtonResult {
    std::vector<double> x;
    double residual = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
};

// Damped (Gauss-)Newton on the positive orthant. Steps are clipped so no
// coordinate drops below 20% of its current value, which keeps iterates
// strictly positive; roots outside the orthant are unreachable and report
// failure. Non-square systems are solved in the least-squares sense.
// Throws std::domain_error if F(x0) is not finite.
NewtonResult newton_root(const VectorFn& F, std::span<const double> x0,
                         const SolveOptions& opts,
                         const JacobianFn& jac = nullptr);

struct CandidatePath {
    PriceSequence prices;
    double residual = std::numeric_limits<double>::infinity();
    bool boxes_ok = false;
};

// Roots of Z_j = 0 with p_{0,1} = 1, from multi-start Gauss-Newton seeded
// log-uniformly in the price boxes (first start: box center, all ones).
// boxes_ok checks (p_0,p_1) in K_0 x K0_1 and the trailing condition
// (p_j/p_{j,1}, p_{j+1}/p_{j,1}) in K0_j x K0_{j+1}. An empty result means
// no root was found within the solver budget.
std::vector<CandidatePath> solve_j_sighted(const EconomySpec& e, int j,
                                           const SolveOptions& opts);

struct ShootResult {
    CandidatePath path;
    bool complete = false;
    int steps_done = 0;  // number of extension steps that converged
};

// Extends (p0, p1) period by period, solving z_t = 0 for p_{t+1}. Performs T
// extension steps, so the complete path covers periods 0..T+1; T = 0 returns
// the input pair. Requires square steps (L_t == L_{t+1}) throughout. A step
// failure returns the partial path with complete = false.
ShootResult forward_shoot(const EconomySpec& e, std::vector<double> p0,
                          std::vector<double> p1, int T,
                          const SolveOptions& opts);

struct ClosedLoopResult {
    CandidatePath path;    // normalized prices p_0..p_{k+1}
    double star_value = 0.0;  // p_0 . (aggregate star net trade), ~0 by Walras
    bool converged = false;
};

// Finite Arrow-Debreu system closing the truncated economy at seam k: market
// clearing at t = 1..k, the modified period-(k+1) equation with spend-all
// households holding the tail consumption bundle, and the period-0 equation
// with star households endowed at k+1 but consuming at period 0 with
// preferences `star_utility` (young weights over L_0 goods).
ClosedLoopResult solve_closed_loop(const EconomySpec& e, int k,
                                   const UtilityParams& star_utility,
                                   const SolveOptions& opts);

// Definition-1 edge boxes plus the induction bounds sigma^t <= p_{t,i} <=
// sigma^-t (t >= 1). Used for boxes_ok on shot and backward paths.
bool path_boxes_ok(const PriceSequence& p, double sigma);

}  // namespace olg
