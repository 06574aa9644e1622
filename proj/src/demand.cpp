#include "olg/demand.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace olg {

namespace {

void require_positive(std::span<const double> p, const char* what) {
    for (double v : p)
        if (!(v > 0.0)) throw std::domain_error(std::string(what) + " must be strictly positive");
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double sum(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0);
}

// Shared scaffolding for the CES closed form: price-weighted terms
// w_i^eta p_i^(1-eta) and their sum D over both periods.
struct CesTerms {
    std::vector<double> young, old;  // w_i^eta p_i^(1-eta)
    double d_young = 0.0, d_old = 0.0;
    double eta = 0.0;
};

CesTerms ces_terms(const CesUtility& u, std::span<const double> py,
                   std::span<const double> po) {
    CesTerms t;
    t.eta = u.eta();
    t.young.resize(py.size());
    t.old.resize(po.size());
    for (size_t i = 0; i < py.size(); ++i) {
        t.young[i] = std::pow(u.lambda[i], t.eta) * std::pow(py[i], 1.0 - t.eta);
        t.d_young += t.young[i];
    }
    for (size_t i = 0; i < po.size(); ++i) {
        t.old[i] = std::pow(u.mu[i], t.eta) * std::pow(po[i], 1.0 - t.eta);
        t.d_old += t.old[i];
    }
    return t;
}

}  // namespace

DemandResult ces_demand(const HouseholdSpec& h, std::span<const double> p_young,
                        std::span<const double> p_old) {
    require_positive(p_young, "young prices");
    require_positive(p_old, "old prices");
    if (p_young.size() != h.endow_young.size() || p_old.size() != h.endow_old.size())
        throw std::invalid_argument("price/endowment dimension mismatch");

    const double wealth = dot(p_young, h.endow_young) + dot(p_old, h.endow_old);
    DemandResult res;
    res.young.resize(p_young.size());
    res.old.resize(p_old.size());

    if (const auto* ces = std::get_if<CesUtility>(&h.utility)) {
        const CesTerms t = ces_terms(*ces, p_young, p_old);
        const double d = t.d_young + t.d_old;
        // x_i = w_i^eta p_i^-eta wealth / D = (term_i / p_i) wealth / D
        for (size_t i = 0; i < p_young.size(); ++i)
            res.young[i] = t.young[i] / p_young[i] * wealth / d;
        for (size_t i = 0; i < p_old.size(); ++i)
            res.old[i] = t.old[i] / p_old[i] * wealth / d;
        return res;
    }
    const auto& ll = std::get<LogLinearUtility>(h.utility);
    const double w_total = sum(ll.lambda) + sum(ll.mu);
    for (size_t i = 0; i < p_young.size(); ++i)
        res.young[i] = ll.lambda[i] / w_total * wealth / p_young[i];
    for (size_t i = 0; i < p_old.size(); ++i)
        res.old[i] = ll.mu[i] / w_total * wealth / p_old[i];
    return res;
}

double gamma_share(const UtilityParams& u, std::span<const double> p_young,
                   std::span<const double> p_old) {
    require_positive(p_young, "young prices");
    require_positive(p_old, "old prices");
    if (const auto* ces = std::get_if<CesUtility>(&u)) {
        const CesTerms t = ces_terms(*ces, p_young, p_old);
        return t.d_young / (t.d_young + t.d_old);
    }
    const auto& ll = std::get<LogLinearUtility>(u);
    return sum(ll.lambda) / (sum(ll.lambda) + sum(ll.mu));
}

double gamma_box_bound(const UtilityParams& u, double sigma) {
    if (!(sigma > 0.0 && sigma < 1.0))
        throw std::domain_error("sigma must lie in (0,1)");
    if (const auto* ces = std::get_if<CesUtility>(&u)) {
        const double eta = ces->eta();
        double sl = 0.0, sm = 0.0;
        for (double v : ces->lambda) sl += std::pow(v, eta);
        for (double v : ces->mu) sm += std::pow(v, eta);
        return sl / (sl + std::pow(sigma, 2.0 * (eta - 1.0)) * sm);
    }
    const auto& ll = std::get<LogLinearUtility>(u);
    return sum(ll.lambda) / (sum(ll.lambda) + sum(ll.mu));
}

std::vector<double> demand_jacobian(const HouseholdSpec& h,
                                    std::span<const double> p_young,
                                    std::span<const double> p_old) {
    const size_t ly = p_young.size(), lo = p_old.size(), n = ly + lo;
    std::vector<double> p(n), e(n);
    for (size_t i = 0; i < ly; ++i) { p[i] = p_young[i]; e[i] = h.endow_young[i]; }
    for (size_t i = 0; i < lo; ++i) { p[ly + i] = p_old[i]; e[ly + i] = h.endow_old[i]; }
    const double wealth = dot(p, e);
    std::vector<double> jac(n * n, 0.0);

    if (const auto* ces = std::get_if<CesUtility>(&h.utility)) {
        const double eta = ces->eta();
        std::vector<double> term(n);  // w_i^eta p_i^(1-eta)
        double d = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const double w = i < ly ? ces->lambda[i] : ces->mu[i - ly];
            term[i] = std::pow(w, eta) * std::pow(p[i], 1.0 - eta);
            d += term[i];
        }
        // x_i = term_i wealth / (p_i D);
        // dx_i/dp_k = x_i [ e_k/wealth - dD_k/D - delta_ik eta/p_i ]
        // with dD_k = (1-eta) term_k / p_k.
        for (size_t i = 0; i < n; ++i) {
            const double xi = term[i] / p[i] * wealth / d;
            for (size_t k = 0; k < n; ++k) {
                const double dd = (1.0 - eta) * term[k] / p[k];
                double v = xi * (e[k] / wealth - dd / d);
                if (i == k) v -= xi * eta / p[i];
                jac[i * n + k] = v;
            }
        }
        return jac;
    }
    const auto& ll = std::get<LogLinearUtility>(h.utility);
    const double w_total = sum(ll.lambda) + sum(ll.mu);
    for (size_t i = 0; i < n; ++i) {
        const double share = (i < ly ? ll.lambda[i] : ll.mu[i - ly]) / w_total;
        for (size_t k = 0; k < n; ++k) {
            double v = share * e[k] / p[i];
            if (i == k) v -= share * wealth / (p[i] * p[i]);
            jac[i * n + k] = v;
        }
    }
    return jac;
}

std::vector<double> spend_all_demand(const UtilityParams& u,
                                     std::span<const double> p, double wealth) {
    require_positive(p, "prices");
    if (!(wealth > 0.0)) throw std::domain_error("wealth must be positive");
    std::vector<double> x(p.size());
    if (const auto* ces = std::get_if<CesUtility>(&u)) {
        const double eta = ces->eta();
        double d = 0.0;
        std::vector<double> term(p.size());
        for (size_t i = 0; i < p.size(); ++i) {
            term[i] = std::pow(ces->lambda[i], eta) * std::pow(p[i], 1.0 - eta);
            d += term[i];
        }
        for (size_t i = 0; i < p.size(); ++i) x[i] = term[i] / p[i] * wealth / d;
        return x;
    }
    const auto& ll = std::get<LogLinearUtility>(u);
    const double w_total = sum(ll.lambda);
    for (size_t i = 0; i < p.size(); ++i)
        x[i] = ll.lambda[i] / w_total * wealth / p[i];
    return x;
}

namespace {

// Adds count * (x - e) for one period's slice into acc.
void accumulate_excess(std::vector<double>& acc, std::span<const double> x,
                       std::span<const double> e, int count) {
    for (size_t i = 0; i < acc.size(); ++i) acc[i] += count * (x[i] - e[i]);
}

}  // namespace

std::vector<double> excess_demand_t(const EconomySpec& e, int t,
                                    std::span<const double> p_prev,
                                    std::span<const double> p_cur,
                                    std::span<const double> p_next) {
    if (t < 1)
        throw std::invalid_argument(
            "no market clearing equation in period 0: excess demand starts at t = 1");
    const GenerationSpec old_gen = e.generation(t - 1);
    const GenerationSpec young_gen = e.generation(t);
    if (static_cast<int>(p_cur.size()) != old_gen.goods_old ||
        static_cast<int>(p_cur.size()) != young_gen.goods_young)
        throw std::invalid_argument("period-t price length does not match generations");

    std::vector<double> z(p_cur.size(), 0.0);
    for (const auto& grp : old_gen.households) {
        const DemandResult d = ces_demand(grp.household, p_prev, p_cur);
        accumulate_excess(z, d.old, grp.household.endow_old, grp.count);
    }
    for (const auto& grp : young_gen.households) {
        const DemandResult d = ces_demand(grp.household, p_cur, p_next);
        accumulate_excess(z, d.young, grp.household.endow_young, grp.count);
    }
    return z;
}

std::vector<double> joint_excess(const EconomySpec& e, const PriceSequence& p) {
    if (p.periods() < 3)
        throw std::invalid_argument("joint excess demand needs prices through period t+1 >= 2");
    std::vector<double> out;
    for (int t = 1; t + 1 < p.periods(); ++t) {
        const auto z = excess_demand_t(e, t, p.prices[t - 1], p.prices[t], p.prices[t + 1]);
        out.insert(out.end(), z.begin(), z.end());
    }
    return out;
}

double real_savings(const HouseholdSpec& h, std::span<const double> p_young,
                    std::span<const double> p_old) {
    const DemandResult d = ces_demand(h, p_young, p_old);
    double net = 0.0, norm = 0.0;
    for (size_t i = 0; i < p_young.size(); ++i) {
        net += p_young[i] * (h.endow_young[i] - d.young[i]);
        norm += p_young[i];
    }
    return net / norm;
}

double avg_savings(const GenerationSpec& gen, std::span<const double> p_young,
                   std::span<const double> p_old) {
    double total = 0.0;
    for (const auto& grp : gen.households)
        total += grp.count * real_savings(grp.household, p_young, p_old);
    return total / gen.household_count();
}

}  // namespace olg
