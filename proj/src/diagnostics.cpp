#include "olg/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace olg {

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Efficient: return "Efficient";
        case Verdict::Inefficient: return "Inefficient";
        default: return "Undetermined";
    }
}

std::vector<double> cass_partial_sums(const PriceSequence& p,
                                      std::span<const int> counts, int T) {
    if (T < 0 || T >= p.periods() || T >= static_cast<int>(counts.size()))
        throw std::invalid_argument("horizon exceeds available prices or counts");
    std::vector<double> out;
    double s = 0.0;
    for (int t = 0; t <= T; ++t) {
        s += 1.0 / (counts[t] * p.norm1(t));
        out.push_back(s);
    }
    return out;
}

namespace {

double weight_sum(const std::vector<double>& w) {
    return std::accumulate(w.begin(), w.end(), 0.0);
}

// Aggregate per-capita endowments of a generation.
struct MeanEndow {
    std::vector<double> young, old;
};

MeanEndow mean_endowment(const GenerationSpec& gen) {
    MeanEndow m;
    m.young.assign(gen.goods_young, 0.0);
    m.old.assign(gen.goods_old, 0.0);
    for (const auto& grp : gen.households) {
        for (int i = 0; i < gen.goods_young; ++i)
            m.young[i] += grp.count * grp.household.endow_young[i];
        for (int i = 0; i < gen.goods_old; ++i)
            m.old[i] += grp.count * grp.household.endow_old[i];
    }
    const double h = gen.household_count();
    for (auto& v : m.young) v /= h;
    for (auto& v : m.old) v /= h;
    return m;
}

// Common utility of a generation, or nullopt when households differ.
std::optional<UtilityParams> common_utility(const GenerationSpec& gen) {
    const UtilityParams* first = nullptr;
    for (const auto& grp : gen.households) {
        if (!first) {
            first = &grp.household.utility;
            continue;
        }
        if (first->index() != grp.household.utility.index()) return std::nullopt;
        if (young_weights(*first) != young_weights(grp.household.utility) ||
            old_weights(*first) != old_weights(grp.household.utility))
            return std::nullopt;
        if (const auto* a = std::get_if<CesUtility>(first))
            if (a->rho != std::get<CesUtility>(grp.household.utility).rho)
                return std::nullopt;
    }
    return first ? std::optional<UtilityParams>(*first) : std::nullopt;
}

// Periods the prone checks cover: the explicit prefix plus one period into a
// materializable tail (the tail repeats itself afterwards, so one period
// into it decides the infimum).
int prone_horizon(const EconomySpec& e) {
    const int last = static_cast<int>(e.prefix.size()) - 1;
    if (std::holds_alternative<StationaryRepeat>(e.tail)) return last + 1;
    if (const auto* t3 = std::get_if<Theorem3Tail>(&e.tail))
        return std::max(last, t3->k + 2);
    return last;
}

UtilityParams normalized_copy(const UtilityParams& u, double wsum) {
    UtilityParams out = u;
    std::visit(
        [wsum](auto& v) {
            for (auto& w : v.lambda) w /= wsum;
            for (auto& w : v.mu) w /= wsum;
        },
        out);
    return out;
}

ProneCheck check_prone(const EconomySpec& e, bool want_ces) {
    ProneCheck out;
    const int horizon = prone_horizon(e);
    if (horizon < 0) {
        out.note = "economy has no generations";
        return out;
    }
    out.per_t.reserve(horizon + 1);
    for (int t = 0; t <= horizon; ++t) {
        const GenerationSpec gen = e.generation(t);
        const auto u = common_utility(gen);
        if (!u) {
            out.note = "generation " + std::to_string(t) + " has heterogeneous utilities";
            return out;
        }
        if (is_ces(*u) != want_ces) {
            out.note = "generation " + std::to_string(t) + (want_ces ? " is not CES" : " is not log-linear");
            return out;
        }
        // Normalize weights so ||lambda|| + ||mu|| = 1.
        const double wsum = weight_sum(young_weights(*u)) + weight_sum(old_weights(*u));
        const double lam = weight_sum(young_weights(*u)) / wsum;
        const double gamma = want_ces
                                 ? gamma_box_bound(normalized_copy(*u, wsum), e.bundle.sigma)
                                 : lam;
        const MeanEndow m = mean_endowment(gen);
        const double min_young = *std::min_element(m.young.begin(), m.young.end());
        double old_max = 0.0;
        for (double v : m.old) old_max = std::max(old_max, v);
        double alpha = 1.0;
        try {
            alpha = static_cast<double>(e.generation(t + 1).household_count()) /
                    gen.household_count();
        } catch (const std::out_of_range&) {
            alpha = 1.0;  // no successor defined; treat boundary as constant population
        }
        out.per_t.push_back((1.0 - gamma) * min_young - gamma * old_max / alpha);
    }
    out.applicable = true;
    out.margin = *std::min_element(out.per_t.begin(), out.per_t.end());
    out.prone = out.margin > 0.0;
    return out;
}

}  // namespace

ProneCheck check_prone_ces(const EconomySpec& e) { return check_prone(e, true); }

ProneCheck check_prone_loglinear(const EconomySpec& e) { return check_prone(e, false); }

std::vector<double> savings_recursion_residual(const EconomySpec& e,
                                               const PriceSequence& p) {
    std::vector<double> out;
    for (int t = 0; t + 2 < p.periods(); ++t) {
        const GenerationSpec g_t = e.generation(t);
        const GenerationSpec g_next = e.generation(t + 1);
        const double alpha =
            static_cast<double>(g_next.household_count()) / g_t.household_count();
        const double s_t = avg_savings(g_t, p.prices[t], p.prices[t + 1]);
        const double s_next = avg_savings(g_next, p.prices[t + 1], p.prices[t + 2]);
        out.push_back(s_next - p.norm1(t) / (alpha * p.norm1(t + 1)) * s_t);
    }
    return out;
}

GeometricBoundCheck lemma_geometric_bound(const EconomySpec& e,
                                          const PriceSequence& p, double delta,
                                          double epsilon) {
    GeometricBoundCheck out;
    for (int t = 0; t + 1 < p.periods(); ++t) {
        const double s = avg_savings(e.generation(t), p.prices[t], p.prices[t + 1]);
        if (s <= delta) {
            out.triggered = true;
            out.t0 = t;
            break;
        }
    }
    if (!out.triggered) return out;
    const double base = 1.0 / (e.generation(out.t0).household_count() * p.norm1(out.t0));
    for (int t = out.t0 + 1; t + 1 < p.periods(); ++t) {
        const int i = t - out.t0;
        const double value = 1.0 / (e.generation(t).household_count() * p.norm1(t));
        const double bound = std::pow(1.0 + epsilon, -i) * base;
        out.slack.push_back(bound - value);
        if (value > bound * (1.0 + 1e-12)) out.holds = false;
    }
    return out;
}

namespace {

// Accepts the tail continuation as analytically savings-preserving either
// through a tail anchor with savings above delta, or through a verified
// constant-price stationary continuation.
bool analytic_tail_keeps_savings(const EconomySpec& e, const PriceSequence& p,
                                 double delta, const DiagnosticsOptions& opts,
                                 std::vector<std::string>& notes) {
    if (std::holds_alternative<Theorem3Tail>(e.tail)) {
        const double anchor = 0.5 * (e.bundle.e_max - tail_e_min(e.bundle));
        notes.push_back("tail anchor savings " + std::to_string(anchor));
        return anchor > delta + opts.margin_guard;
    }
    if (std::holds_alternative<StationaryRepeat>(e.tail)) {
        const int P = p.periods();
        if (P < 3) return false;
        // Constant continuation: last price vector repeated. Verify market
        // clearing of the repeated period and that savings stay put.
        const auto& last = p.prices[P - 1];
        const auto& prev = p.prices[P - 2];
        if (last.size() != prev.size()) return false;
        double scale = 0.0;
        for (double v : last) scale = std::max(scale, std::abs(v));
        for (size_t i = 0; i < last.size(); ++i)
            if (std::abs(last[i] - prev[i]) > opts.constant_tol * scale) {
                notes.push_back("path not constant at its end; tail behavior unresolved");
                return false;
            }
        const GenerationSpec gen = std::get<StationaryRepeat>(e.tail).generation;
        double zres = 0.0;
        for (int t = P - 1; t <= P; ++t)  // seam period and one pure-tail period
            for (double v : excess_demand_t(e, t, prev, last, last))
                zres = std::max(zres, std::abs(v));
        if (zres > opts.cert_tol) {
            notes.push_back("constant continuation does not clear markets");
            return false;
        }
        const double s = avg_savings(gen, last, last);
        notes.push_back("stationary continuation savings " + std::to_string(s));
        return s > delta + opts.margin_guard;
    }
    notes.push_back("no materializable tail rule; tail behavior unresolved");
    return false;
}

Verdict classify_with_notes(const EconomySpec& e, const CandidatePath& path,
                            const AssumptionBundle& bundle,
                            const DiagnosticsOptions& opts,
                            std::vector<std::string>& notes) {
    if (!(path.residual <= opts.cert_tol))
        throw std::invalid_argument("classify needs a certified path (residual too large)");
    const PriceSequence& p = path.prices;
    bool all_clear = true;
    for (int t = 0; t + 1 < p.periods(); ++t) {
        const double s = avg_savings(e.generation(t), p.prices[t], p.prices[t + 1]);
        if (s <= bundle.delta) {
            notes.push_back("savings fell to the threshold at t=" + std::to_string(t));
            return Verdict::Inefficient;
        }
        if (s < bundle.delta + opts.margin_guard) all_clear = false;
    }
    if (!all_clear) notes.push_back("savings hover within the guard band above the threshold");
    if (all_clear && analytic_tail_keeps_savings(e, p, bundle.delta, opts, notes))
        return Verdict::Efficient;
    return Verdict::Undetermined;
}

}  // namespace

Verdict classify(const EconomySpec& e, const CandidatePath& path,
                 const AssumptionBundle& bundle, const DiagnosticsOptions& opts) {
    std::vector<std::string> notes;
    return classify_with_notes(e, path, bundle, opts, notes);
}

DiagnosticsReport diagnose(const EconomySpec& e, const CandidatePath& path,
                           const DiagnosticsOptions& opts) {
    DiagnosticsReport rep;
    const PriceSequence& p = path.prices;
    std::vector<int> counts;
    for (int t = 0; t < p.periods(); ++t)
        counts.push_back(e.generation(t).household_count());
    for (int t = 0; t + 1 < p.periods(); ++t)
        rep.savings.push_back(
            avg_savings(e.generation(t), p.prices[t], p.prices[t + 1]));
    rep.cass_partials = cass_partial_sums(p, counts, p.periods() - 1);

    ProneCheck prone = check_prone_loglinear(e);
    if (!prone.applicable) prone = check_prone_ces(e);
    if (prone.applicable) {
        rep.prone_margin = prone.margin;
        rep.notes.push_back(prone.prone ? "prone-to-savings: certified"
                                        : "prone-to-savings: not certified");
    } else {
        rep.notes.push_back("prone-to-savings: inapplicable (" + prone.note + ")");
    }

    if (path.residual <= opts.cert_tol) {
        rep.verdict = classify_with_notes(e, path, e.bundle, opts, rep.notes);
        const auto bound =
            lemma_geometric_bound(e, p, e.bundle.delta, e.bundle.epsilon);
        if (bound.triggered)
            rep.notes.push_back(std::string("geometric price-sum bound after t=") +
                                std::to_string(bound.t0) +
                                (bound.holds ? ": holds" : ": violated"));
    } else {
        rep.verdict = Verdict::Undetermined;
        rep.notes.push_back("path not certified (residual " +
                            std::to_string(path.residual) + "); verdict withheld");
    }
    rep.notes.push_back(std::string("verdict: ") + to_string(rep.verdict));
    return rep;
}

}  // namespace olg
