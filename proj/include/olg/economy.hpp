#pragma once

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

// Core data model for nonstationary consumption-loan overlapping generations
// economies: uniform bound constants, households, generations, price paths,
// and structural validation. All types are immutable values after
// construction; nothing here mutates shared state.

namespace olg {

// Uniform constants bounding demographics, endowments and prices, plus the
// prone-to-savings thresholds (epsilon, delta).
struct AssumptionBundle {
    double alpha_min = 0.5;  // in (0,1)
    double alpha_max = 2.0;  // > 1
    double e_max = 1.0;      // max-norm cap on household endowments
    double sigma = 0.5;      // price-box parameter, in (0,1)
    double epsilon = 1.0;    // prone-to-savings return-rate slack
    double delta = 0.1;      // prone-to-savings savings threshold
};

// max(1 + 1/alpha_min, 1 + alpha_max)
double beta_of(const AssumptionBundle& bundle);

// Tail endowment floor (e_max - 2 delta)/(1 + epsilon), the value solving
// e_max/2 - (1+epsilon) e_min/2 = delta. Throws std::domain_error when
// e_max <= 2 delta, which leaves no positive solution.
double tail_e_min(const AssumptionBundle& bundle);

// CES utility (sum lambda_i c^rho + sum mu_j c^rho)^(1/rho), rho in (0,1).
struct CesUtility {
    std::vector<double> lambda;  // young-period weights, length L_t
    std::vector<double> mu;     // old-period weights, length L_{t+1}
    double rho = 0.5;
    double eta() const { return 1.0 / (1.0 - rho); }
};

// Log-linear utility sum lambda_i ln c_i + sum mu_j ln c_j (the rho -> 0
// member of the CES family, implemented by its own closed form).
struct LogLinearUtility {
    std::vector<double> lambda;
    std::vector<double> mu;
};

using UtilityParams = std::variant<CesUtility, LogLinearUtility>;

const std::vector<double>& young_weights(const UtilityParams& u);
const std::vector<double>& old_weights(const UtilityParams& u);
bool is_ces(const UtilityParams& u);

// ||lambda||_1 + ||mu||_1 == 1 within tol. Recorded as a flag, never
// enforced: demand is invariant to positive scaling of utility, but the
// prone-to-savings margins assume normalized weights.
bool weights_normalized(const UtilityParams& u, double tol = 1e-12);

struct HouseholdSpec {
    std::vector<double> endow_young;  // length L_t, nonnegative, not all zero
    std::vector<double> endow_old;    // length L_{t+1}
    UtilityParams utility;
};

// Multiplicity shortcut: one spec standing for `count` identical households.
struct HouseholdGroup {
    HouseholdSpec household;
    int count = 1;
};

struct GenerationSpec {
    int t = 0;            // period of birth
    int goods_young = 1;  // L_t
    int goods_old = 1;    // L_{t+1}
    std::vector<HouseholdGroup> households;

    int household_count() const;  // H_t
};

// Economy continues beyond the prefix by repeating one generation forever.
struct StationaryRepeat {
    GenerationSpec generation;
};

// Tail built from log-linear generations with endowments (e_max,..,e_min),
// anchored on its constant-price optimal equilibrium. `k` is the seam: the
// tail starts at period k+1.
struct Theorem3Tail {
    int k = -1;
};

// Scalar-economy tail pinning the first tail generation's real savings to
// the seam generation's savings function evaluated at w.
struct GaleTail {
    double w = 1.0;
};

using TailSpec = std::variant<Theorem3Tail, GaleTail>;
using TailRule = std::variant<std::monostate, StationaryRepeat, Theorem3Tail, GaleTail>;

struct EconomySpec {
    AssumptionBundle bundle;
    std::vector<GenerationSpec> prefix;  // generations t = 0..T_explicit
    TailRule tail{};
    bool resource_related = true;  // declared, not verified

    // Generation born at t, materializing the tail rule when t is past the
    // prefix. Throws std::out_of_range when the tail cannot produce it.
    GenerationSpec generation(int t) const;
    // Largest t for which generation(t) is defined, or -1 if unbounded.
    int max_defined_period() const;
};

// Truncated positive price path; prices[t] has length L_t. The normalization
// convention is p_{0,1} = 1.
struct PriceSequence {
    std::vector<std::vector<double>> prices;

    int periods() const { return static_cast<int>(prices.size()); }
    double norm1(int t) const;  // sum of coordinates of prices[t]
    bool normalized(double tol = 0.0) const;
    PriceSequence normalize() const;  // divide everything by p_{0,1}
};

// true iff every coordinate of p lies in [sigma^(n+1), sigma^-(n+1)].
// Throws std::domain_error on a nonpositive coordinate.
bool in_box(std::span<const double> p, int n, double sigma);

struct Violation {
    std::string code;     // short machine key, e.g. "endowment-norm"
    int period = -1;      // -1 when not tied to a period
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    std::vector<Violation> warnings;  // e.g. unnormalized utility weights
    bool ok() const { return violations.empty(); }
};

// Pure structural check: every violated invariant is listed, an empty list
// means valid. Violations are data, not failures.
ValidationReport validate_spec(const EconomySpec& spec);

}  // namespace olg
