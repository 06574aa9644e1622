#include "olg/economy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace olg {

double beta_of(const AssumptionBundle& bundle) {
    return std::max(1.0 + 1.0 / bundle.alpha_min, 1.0 + bundle.alpha_max);
}

double tail_e_min(const AssumptionBundle& bundle) {
    if (!(bundle.e_max > 2.0 * bundle.delta))
        throw std::domain_error("e_max <= 2*delta: tail endowment relation unsatisfiable");
    return (bundle.e_max - 2.0 * bundle.delta) / (1.0 + bundle.epsilon);
}

const std::vector<double>& young_weights(const UtilityParams& u) {
    return std::visit([](const auto& v) -> const std::vector<double>& { return v.lambda; }, u);
}

const std::vector<double>& old_weights(const UtilityParams& u) {
    return std::visit([](const auto& v) -> const std::vector<double>& { return v.mu; }, u);
}

bool is_ces(const UtilityParams& u) {
    return std::holds_alternative<CesUtility>(u);
}

bool weights_normalized(const UtilityParams& u, double tol) {
    auto sum = [](const std::vector<double>& w) {
        return std::accumulate(w.begin(), w.end(), 0.0);
    };
    return std::abs(sum(young_weights(u)) + sum(old_weights(u)) - 1.0) <= tol;
}

int GenerationSpec::household_count() const {
    int n = 0;
    for (const auto& g : households) n += g.count;
    return n;
}

namespace {

GenerationSpec log_linear_tail_generation(int t, int goods_young, int goods_old,
                                          int count, double e_max, double e_min) {
    GenerationSpec gen;
    gen.t = t;
    gen.goods_young = goods_young;
    gen.goods_old = goods_old;
    HouseholdSpec h;
    h.endow_young.assign(goods_young, e_max);
    h.endow_old.assign(goods_old, e_min);
    LogLinearUtility u;
    u.lambda.assign(goods_young, 1.0 / goods_young);
    u.mu.assign(goods_old, 1.0);
    h.utility = u;
    gen.households.push_back({std::move(h), count});
    return gen;
}

}  // namespace

GenerationSpec EconomySpec::generation(int t) const {
    if (t < 0) throw std::out_of_range("generation index must be nonnegative");
    if (t < static_cast<int>(prefix.size())) return prefix[t];
    if (std::holds_alternative<StationaryRepeat>(tail)) {
        GenerationSpec gen = std::get<StationaryRepeat>(tail).generation;
        gen.t = t;
        return gen;
    }
    if (std::holds_alternative<Theorem3Tail>(tail)) {
        const int k = std::get<Theorem3Tail>(tail).k;
        if (t <= k)
            throw std::out_of_range("tail starts at period k+1 but prefix ends earlier");
        const GenerationSpec& seam = prefix.at(k);  // throws if prefix short
        const int h_tail = (k + 1 < static_cast<int>(prefix.size()))
                               ? prefix[k + 1].household_count()
                               : seam.household_count();
        const double e_min = tail_e_min(bundle);
        if (t == k + 1)
            return log_linear_tail_generation(t, seam.goods_old, 1, h_tail,
                                              bundle.e_max, e_min);
        return log_linear_tail_generation(t, 1, 1, h_tail, bundle.e_max, e_min);
    }
    throw std::out_of_range("no generation defined past the explicit prefix");
}

int EconomySpec::max_defined_period() const {
    if (std::holds_alternative<std::monostate>(tail) ||
        std::holds_alternative<GaleTail>(tail))
        return static_cast<int>(prefix.size()) - 1;
    return -1;
}

double PriceSequence::norm1(int t) const {
    const auto& p = prices.at(t);
    return std::accumulate(p.begin(), p.end(), 0.0);
}

bool PriceSequence::normalized(double tol) const {
    if (prices.empty() || prices[0].empty()) return false;
    return std::abs(prices[0][0] - 1.0) <= tol;
}

PriceSequence PriceSequence::normalize() const {
    if (prices.empty() || prices[0].empty() || prices[0][0] <= 0.0)
        throw std::domain_error("cannot normalize: p_{0,1} missing or nonpositive");
    PriceSequence out = *this;
    const double scale = prices[0][0];
    for (auto& p : out.prices)
        for (auto& v : p) v /= scale;
    out.prices[0][0] = 1.0;  // exact after normalization
    return out;
}

bool in_box(std::span<const double> p, int n, double sigma) {
    if (!(sigma > 0.0 && sigma < 1.0))
        throw std::domain_error("sigma must lie in (0,1)");
    const double lo = std::pow(sigma, n + 1);
    const double hi = std::pow(sigma, -(n + 1));
    for (double v : p) {
        if (!(v > 0.0)) throw std::domain_error("box membership needs positive prices");
        if (v < lo || v > hi) return false;
    }
    return true;
}

namespace {

void check_weights(const std::vector<double>& w, int expected_len, int t,
                   const char* side, ValidationReport& rep) {
    if (static_cast<int>(w.size()) != expected_len)
        rep.violations.push_back({"weight-dim", t,
                                  std::string(side) + " weight vector has length " +
                                      std::to_string(w.size()) + ", expected " +
                                      std::to_string(expected_len)});
    for (double v : w)
        if (!(v > 0.0)) {
            rep.violations.push_back({"weight-positive", t,
                                      std::string(side) + " weights must be strictly positive"});
            break;
        }
}

void validate_generation(const GenerationSpec& gen, const AssumptionBundle& b,
                         ValidationReport& rep) {
    const int t = gen.t;
    if (gen.goods_young < 1 || gen.goods_old < 1)
        rep.violations.push_back({"goods-count", t, "goods counts must be positive"});
    if (gen.household_count() < 1)
        rep.violations.push_back({"household-count", t, "generation has no households"});
    for (const auto& grp : gen.households) {
        if (grp.count < 1)
            rep.violations.push_back({"household-count", t, "household multiplicity must be positive"});
        const auto& h = grp.household;
        if (static_cast<int>(h.endow_young.size()) != gen.goods_young ||
            static_cast<int>(h.endow_old.size()) != gen.goods_old)
            rep.violations.push_back({"endowment-dim", t, "endowment length does not match goods counts"});
        double maxnorm = 0.0;
        bool nonzero = false, nonneg = true;
        for (double v : h.endow_young) {
            maxnorm = std::max(maxnorm, std::abs(v));
            nonzero = nonzero || v > 0.0;
            nonneg = nonneg && v >= 0.0;
        }
        for (double v : h.endow_old) {
            maxnorm = std::max(maxnorm, std::abs(v));
            nonzero = nonzero || v > 0.0;
            nonneg = nonneg && v >= 0.0;
        }
        if (!nonzero)
            rep.violations.push_back({"endowment-zero", t, "endowment must have a strictly positive coordinate"});
        if (!nonneg)
            rep.violations.push_back({"endowment-negative", t, "endowments must be nonnegative"});
        if (maxnorm > b.e_max)
            rep.violations.push_back({"endowment-norm", t,
                                      "endowment max-norm " + std::to_string(maxnorm) +
                                          " exceeds e_max " + std::to_string(b.e_max)});
        check_weights(young_weights(h.utility), gen.goods_young, t, "young", rep);
        check_weights(old_weights(h.utility), gen.goods_old, t, "old", rep);
        if (const auto* ces = std::get_if<CesUtility>(&h.utility)) {
            if (!(ces->rho > 0.0 && ces->rho < 1.0))
                rep.violations.push_back({"ces-rho", t, "rho must lie in (0,1)"});
        }
        if (!weights_normalized(h.utility, 1e-9))
            rep.warnings.push_back({"weights-unnormalized", t,
                                    "utility weights do not sum to 1; prone-to-savings margins use normalized weights"});
    }
}

void validate_seam(const GenerationSpec& cur, const GenerationSpec& next,
                   const AssumptionBundle& b, ValidationReport& rep) {
    if (cur.goods_old != next.goods_young)
        rep.violations.push_back({"goods-seam", cur.t,
                                  "L_next of generation " + std::to_string(cur.t) +
                                      " does not match L of generation " + std::to_string(next.t)});
    const double alpha =
        static_cast<double>(next.household_count()) / cur.household_count();
    if (alpha < b.alpha_min || alpha > b.alpha_max)
        rep.violations.push_back({"alpha-range", cur.t,
                                  "alpha_" + std::to_string(cur.t) + " = " + std::to_string(alpha) +
                                      " outside [alpha_min, alpha_max]"});
}

}  // namespace

ValidationReport validate_spec(const EconomySpec& spec) {
    ValidationReport rep;
    const auto& b = spec.bundle;
    if (!(b.alpha_min > 0.0 && b.alpha_min < 1.0))
        rep.violations.push_back({"bundle-alpha-min", -1, "alpha_min must lie in (0,1)"});
    if (!(b.alpha_max > 1.0))
        rep.violations.push_back({"bundle-alpha-max", -1, "alpha_max must exceed 1"});
    if (!(b.sigma > 0.0 && b.sigma < 1.0))
        rep.violations.push_back({"bundle-sigma", -1, "sigma must lie in (0,1)"});
    if (!(b.e_max > 0.0))
        rep.violations.push_back({"bundle-e-max", -1, "e_max must be positive"});
    if (!(b.epsilon > 0.0))
        rep.violations.push_back({"bundle-epsilon", -1, "epsilon must be positive"});
    if (!(b.delta > 0.0))
        rep.violations.push_back({"bundle-delta", -1, "delta must be positive"});
    if (spec.prefix.empty())
        rep.violations.push_back({"prefix-empty", -1, "economy needs at least one explicit generation"});

    for (const auto& gen : spec.prefix) validate_generation(gen, b, rep);
    for (size_t i = 0; i + 1 < spec.prefix.size(); ++i)
        validate_seam(spec.prefix[i], spec.prefix[i + 1], b, rep);

    // Seam between the prefix and a materializable tail, plus one tail
    // self-consistency step (the tail repeats from there on).
    if (!spec.prefix.empty() &&
        (std::holds_alternative<StationaryRepeat>(spec.tail) ||
         std::holds_alternative<Theorem3Tail>(spec.tail))) {
        if (const auto* t3 = std::get_if<Theorem3Tail>(&spec.tail)) {
            if (t3->k != static_cast<int>(spec.prefix.size()) - 1)
                rep.violations.push_back({"tail-seam", t3->k,
                                          "tail seam k must be the last explicit generation "
                                          "(prefix generations past the seam would shadow the tail)"});
            if (!(b.e_max > 2.0 * b.delta))
                rep.violations.push_back({"tail-e-min", t3->k, "e_max <= 2*delta leaves no positive e_min"});
        }
        try {
            const int first_tail = [&] {
                if (const auto* t3 = std::get_if<Theorem3Tail>(&spec.tail)) return t3->k + 1;
                return static_cast<int>(spec.prefix.size());
            }();
            if (first_tail >= 1 && first_tail <= static_cast<int>(spec.prefix.size())) {
                GenerationSpec g0 = spec.generation(first_tail);
                validate_generation(g0, b, rep);
                validate_seam(spec.generation(first_tail - 1), g0, b, rep);
                validate_seam(g0, spec.generation(first_tail + 1), b, rep);
            }
        } catch (const std::exception& e) {
            rep.violations.push_back({"tail-materialize", -1, e.what()});
        }
    }
    return rep;
}

}  // namespace olg
