#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "olg/diagnostics.hpp"
#include "olg/economy.hpp"
#include "olg/solver.hpp"

// Tail-economy builders, the backward calculation of equilibrium paths from
// a tail anchor, nested-run convergence detection, and the bridge from
// classical initial-old economies via the extension of generation 0 back to
// period 0.

namespace olg {

struct TailBuild {
    std::vector<GenerationSpec> generations;  // first tail generation, then the repeating one
    double e_min = 0.0;
    double anchor_savings = 0.0;  // (e_max - e_min)/2, savings at constant prices
};

// Log-linear tail generations with endowments (e_max,...,e_max,e_min),
// constant population; the tail's optimal equilibria have constant prices
// p_t = ||p_0|| for t >= 1 with consumption (e_max+e_min)/2 each period.
// Throws std::domain_error when e_max <= 2*delta.
TailBuild build_theorem3_tail(const EconomySpec& e, int k);

// Savings boundary target for a scalar-economy backward run: the seam
// generation's per-capita savings at return rate w. Throws
// std::domain_error unless the target is positive and the economy scalar.
double build_gale_tail(const EconomySpec& e, int k, double w);

// The finitely replicating economy at horizon k: generations through the
// seam copied from `e`, everything after replaced by the tail. Backward runs
// solve and certify against this working economy.
EconomySpec replicate_with_tail(const EconomySpec& e, const TailSpec& tail, int k);

// All roots p_t of z_{t+1}(p_t, p_next, p_next2) = 0 inside the period-t
// search box, deduplicated and deterministically ordered. Empty list: the
// branch dies. Requires a square step (L_t == L_{t+1}).
std::vector<std::vector<double>> backward_step(const EconomySpec& e, int t,
                                               std::span<const double> p_next,
                                               std::span<const double> p_next2,
                                               const SolveOptions& opts);

struct BackwardRun {
    int k = 0;
    CandidatePath candidate;   // normalized prices p_0..p_{k+2} (anchor included)
    std::string tail_anchor;   // description of the tail equilibrium used
    bool converged = false;    // residual within tolerance
    bool truncated = false;    // branch enumeration hit the budget
    std::vector<double> returns;  // r_t = ||p_t||/||p_{t+1}|| per period
};

// Starting from the tail anchor at the seam, applies backward steps down to
// period 0, enumerating branches up to opts.branch_budget, normalizing each
// completed path to p_{0,1} = 1 and attaching the residual of the full
// joint system including the seam equation.
std::vector<BackwardRun> run_backward(const EconomySpec& e, const TailSpec& tail,
                                      int k, const SolveOptions& opts);

struct HpoTrace {
    int k = 0;
    bool run_ok = false;
    double p1 = 0.0;          // first coordinate of p_1
    double prefix_gap = -1.0; // max diff vs previous run over the window, -1 first run
};

struct HpoResult {
    bool converged = false;
    PriceSequence limit;       // prefix of the last selected run
    std::vector<HpoTrace> trace;
    ShootResult continuation;  // forward continuation from the limit prefix
    DiagnosticsReport report;  // diagnostics of the continued path
};

// Runs the backward calculation along an increasing schedule of horizons and
// declares convergence only when the leading price coordinates of successive
// runs are Cauchy within conv_tol over a window growing with k (min(k/2, 50)
// coordinates). The detected limit is certified by forward continuation and
// savings diagnostics, never assumed from theory.
HpoResult approximate_hpo(const EconomySpec& e,
                          const std::function<TailSpec(int)>& tail_family,
                          std::span<const int> k_schedule, double conv_tol,
                          const SolveOptions& opts);

// A classical economy whose initial old generation lives only in period 1,
// holding money m^h and log-linear old-age utilities.
struct ClassicalHousehold {
    std::vector<double> endow;    // commodities at t = 1
    UtilityParams utility;        // old-age side only: young weights must be empty
    double money = 0.0;
};

struct ClassicalEconomy {
    AssumptionBundle bundle;
    std::vector<ClassicalHousehold> initial_old;  // generation living at t = 1 only
    std::vector<GenerationSpec> generations;      // born at t = 1, 2, ...
    TailRule tail{};
};

// The extension back to period 0: one synthetic young-period good, endowment
// (e_max, endow), utility zeta*ln(c_0/e_max) + old-age utility. Only
// log-linear old-age utilities stay inside the demand family; anything else
// throws std::invalid_argument.
EconomySpec extend_classical(const ClassicalEconomy& e2, double zeta);

// Money positions m' = e_max - x_0(1, p_1) implied by a solved extension,
// returned as transfers tau^h = m' - m^h per initial-old household. The
// solved path must be normalized to p_0 = 1.
std::vector<double> compute_transfers(const ClassicalEconomy& e2, double zeta,
                                      const PriceSequence& solved);

struct ClassicalSolveResult {
    double zeta = 0.0;          // value accepted by the downward search
    HpoResult hpo;
    std::vector<double> transfers;
    bool claim_ok = false;      // threshold implication verified on the path
};

// End-to-end bridge: extend, approximate the optimal equilibrium, verify the
// savings-threshold implication on the solved path (halving zeta until it
// holds), and compute the initial-old transfers.
ClassicalSolveResult solve_classical(const ClassicalEconomy& e2, double zeta0,
                                     std::span<const int> k_schedule,
                                     double conv_tol, const SolveOptions& opts);

}  // namespace olg
