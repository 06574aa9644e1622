#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "olg/demand.hpp"
#include "olg/economy.hpp"
#include "olg/solver.hpp"

// Efficiency classification: partial sums of the price-sum criterion,
// savings trajectories, prone-to-savings certification, and the savings
// recursion identity check.

namespace olg {

enum class Verdict { Efficient, Inefficient, Undetermined };

const char* to_string(Verdict v);

// S_0..S_T with S_T = sum_{t<=T} 1/(H_t ||p_t||_1). Strictly increasing.
std::vector<double> cass_partial_sums(const PriceSequence& p,
                                      std::span<const int> counts, int T);

struct ProneCheck {
    bool applicable = false;  // false: wrong utility family, not "not prone"
    bool prone = false;       // margin > 0
    double margin = 0.0;      // infimum over covered periods
    std::vector<double> per_t;
    std::string note;
};

// Sufficient condition for a prone-to-savings economy with per-generation
// common CES utilities: inf_t {(1-gamma_t) min_i e^t_{t,i}
// - gamma_t ||e^t_{t+1}||_inf / alpha_t} > 0, gamma_t the box bound on the
// young expenditure share. Weights are normalized internally so that
// ||lambda|| + ||mu|| = 1, which the margin formula assumes.
ProneCheck check_prone_ces(const EconomySpec& e);

// The sigma-free log-linear specialization:
// inf_t {||mu|| min_i e^t_{t,i} - ||lambda|| ||e^t_{t+1}||_inf / alpha_t} > 0.
ProneCheck check_prone_loglinear(const EconomySpec& e);

struct DiagnosticsOptions {
    double margin_guard = 1e-6;    // savings must clear delta by this much
    double cert_tol = 1e-8;        // residual bound for "certified" paths
    double constant_tol = 1e-9;    // relative tol for constant-tail detection
};

// Savings-based verdict for a certified equilibrium path:
//   Inefficient  if avg savings <= delta at any computed period;
//   Efficient    if savings clear delta + guard at every computed period AND
//                the tail continuation analytically keeps them there (tail
//                anchor savings above delta, or a verified constant-price
//                stationary continuation);
//   Undetermined otherwise: finite evidence alone cannot certify the tail.
// Throws std::invalid_argument when the path is not certified.
Verdict classify(const EconomySpec& e, const CandidatePath& path,
                 const AssumptionBundle& bundle,
                 const DiagnosticsOptions& opts = {});

// Per-period residual of the identity
// avg_savings_{t+1} = (||p_t|| / (alpha_t ||p_{t+1}||)) avg_savings_t,
// which market clearing plus Walras' law force on equilibrium paths.
std::vector<double> savings_recursion_residual(const EconomySpec& e,
                                               const PriceSequence& path);

struct GeometricBoundCheck {
    bool triggered = false;  // savings fell to delta somewhere on the path
    int t0 = -1;             // first such period
    bool holds = true;       // 1/(H_{t0+i}||p_{t0+i}||) <= (1+eps)^-i / (H_{t0}||p_{t0}||)
    std::vector<double> slack;  // bound minus value, per i >= 1
};

GeometricBoundCheck lemma_geometric_bound(const EconomySpec& e,
                                          const PriceSequence& p, double delta,
                                          double epsilon);

struct DiagnosticsReport {
    std::vector<double> savings;
    std::vector<double> cass_partials;
    Verdict verdict = Verdict::Undetermined;
    std::optional<double> prone_margin;
    std::vector<std::string> notes;
};

// Bundles the savings trajectory, partial sums, prone margin when one of the
// sufficient checks applies, the verdict, and explanatory notes.
DiagnosticsReport diagnose(const EconomySpec& e, const CandidatePath& path,
                           const DiagnosticsOptions& opts = {});

}  // namespace olg
