#include "olg/backward.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <random>
#include <stdexcept>

namespace olg {

namespace {

GenerationSpec make_tail_generation(int t, int goods_young, int count, double e_max,
                                    double e_min) {
    GenerationSpec gen;
    gen.t = t;
    gen.goods_young = goods_young;
    gen.goods_old = 1;
    HouseholdSpec h;
    h.endow_young.assign(goods_young, e_max);
    h.endow_old = {e_min};
    LogLinearUtility u;
    u.lambda.assign(goods_young, 1.0 / goods_young);
    u.mu = {1.0};
    h.utility = u;
    gen.households.push_back({std::move(h), count});
    return gen;
}

int tail_household_count(const EconomySpec& e, int k) {
    try {
        return e.generation(k + 1).household_count();
    } catch (const std::out_of_range&) {
        return e.generation(k).household_count();  // constant population at the seam
    }
}

}  // namespace

TailBuild build_theorem3_tail(const EconomySpec& e, int k) {
    if (k < 0) throw std::invalid_argument("seam period must be nonnegative");
    TailBuild out;
    out.e_min = tail_e_min(e.bundle);  // throws when e_max <= 2*delta
    out.anchor_savings = 0.5 * (e.bundle.e_max - out.e_min);
    const int l_seam = e.generation(k).goods_old;
    const int count = tail_household_count(e, k);
    out.generations.push_back(
        make_tail_generation(k + 1, l_seam, count, e.bundle.e_max, out.e_min));
    out.generations.push_back(
        make_tail_generation(k + 2, 1, count, e.bundle.e_max, out.e_min));
    return out;
}

double build_gale_tail(const EconomySpec& e, int k, double w) {
    if (!(w > 0.0)) throw std::domain_error("w must be positive");
    for (int t = 0; t <= k + 1; ++t)
        if (e.generation(t).goods_young != 1)
            throw std::domain_error("this tail applies to single-good economies only");
    const GenerationSpec seam = e.generation(k + 1);
    const double p_young[] = {w};
    const double p_old[] = {1.0};
    const double target = avg_savings(seam, p_young, p_old);
    if (!(target > 0.0))
        throw std::domain_error("seam savings at w is not positive: " +
                                std::to_string(target));
    return target;
}

namespace {

// Residual of z_{t+1}(p_t, p_next, p_next2) as a function of p_t: old
// generation t demand varies, the young side at t+1 is a fixed constant.
struct StepSystem {
    const EconomySpec* e;
    int t;
    std::vector<double> young_side;  // young-generation excess at t+1
    std::span<const double> p_next;

    std::vector<double> residual(std::span<const double> p_t) const {
        const GenerationSpec old_gen = e->generation(t);
        std::vector<double> f = young_side;
        for (const auto& grp : old_gen.households) {
            const DemandResult d = ces_demand(grp.household, p_t, p_next);
            for (size_t i = 0; i < f.size(); ++i)
                f[i] += grp.count * (d.old[i] - grp.household.endow_old[i]);
        }
        return f;
    }

    std::vector<double> jacobian(std::span<const double> p_t) const {
        const GenerationSpec old_gen = e->generation(t);
        const int ly = static_cast<int>(p_t.size());
        const int lo = static_cast<int>(p_next.size());
        const int n = ly + lo;
        std::vector<double> jac(static_cast<size_t>(lo) * ly, 0.0);
        for (const auto& grp : old_gen.households) {
            const std::vector<double> hj = demand_jacobian(grp.household, p_t, p_next);
            for (int r = 0; r < lo; ++r)
                for (int c = 0; c < ly; ++c)
                    jac[r * ly + c] += grp.count * hj[(ly + r) * n + c];
        }
        return jac;
    }
};

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// Scalar bisection between two bracketing abscissae.
double bisect(const std::function<double(double)>& f, double lo, double hi,
              double flo) {
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

bool near_duplicate(std::span<const double> a, std::span<const double> b, double tol) {
    double scale = 1.0;
    for (double v : a) scale = std::max(scale, std::abs(v));
    for (size_t i = 0; i < a.size(); ++i)
        if (std::abs(a[i] - b[i]) > tol * scale) return false;
    return true;
}

}  // namespace

std::vector<std::vector<double>> backward_step(const EconomySpec& e, int t,
                                               std::span<const double> p_next,
                                               std::span<const double> p_next2,
                                               const SolveOptions& opts) {
    if (t < 0) throw std::invalid_argument("backward step index must be nonnegative");
    const GenerationSpec old_gen = e.generation(t);
    const GenerationSpec young_gen = e.generation(t + 1);
    if (old_gen.goods_young != old_gen.goods_old)
        throw std::invalid_argument(
            "backward steps need square systems: L_t = " + std::to_string(old_gen.goods_young) +
            " but L_{t+1} = " + std::to_string(old_gen.goods_old) + " at t = " + std::to_string(t));

    StepSystem sys;
    sys.e = &e;
    sys.t = t;
    sys.p_next = p_next;
    sys.young_side.assign(p_next.size(), 0.0);
    for (const auto& grp : young_gen.households) {
        const DemandResult d = ces_demand(grp.household, p_next, p_next2);
        for (size_t i = 0; i < sys.young_side.size(); ++i)
            sys.young_side[i] += grp.count * (d.young[i] - grp.household.endow_young[i]);
    }

    const int dim = old_gen.goods_young;
    const double sigma = e.bundle.sigma;
    const double scale =
        std::accumulate(p_next.begin(), p_next.end(), 0.0) / p_next.size();
    const double lo = sigma * sigma * scale, hi = scale / (sigma * sigma);
    std::vector<std::vector<double>> roots;

    auto push_root = [&](std::vector<double> r) {
        if (max_abs(sys.residual(r)) > opts.tol_residual) return;
        for (const auto& existing : roots)
            if (near_duplicate(existing, r, opts.dedup_tol)) return;
        roots.push_back(std::move(r));
    };

    if (dim == 1) {
        // Deterministic sign scan over a log grid, then bisection.
        auto f = [&sys](double p) {
            const double arr[] = {p};
            return sys.residual(arr)[0];
        };
        const int grid = 64;
        double prev_p = lo, prev_f = f(lo);
        if (prev_f == 0.0) push_root({lo});
        for (int i = 1; i <= grid; ++i) {
            const double p = lo * std::pow(hi / lo, static_cast<double>(i) / grid);
            const double fp = f(p);
            if (fp == 0.0) {
                push_root({p});
            } else if ((fp > 0.0) != (prev_f > 0.0)) {
                const double root = bisect(f, prev_p, p, prev_f);
                // Newton polish through the generic machinery.
                const double start[] = {root};
                NewtonResult nr = newton_root(
                    [&sys](std::span<const double> x) { return sys.residual(x); }, start, opts,
                    [&sys](std::span<const double> x) { return sys.jacobian(x); });
                if (nr.converged) push_root(std::move(nr.x));
            }
            prev_p = p;
            prev_f = fp;
        }
    } else {
        std::mt19937_64 rng(opts.seed + 0x9e3779b97f4a7c15ull * (t + 1));
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (int s = 0; s < 2 * opts.n_starts; ++s) {
            std::vector<double> x0(dim);
            for (int i = 0; i < dim; ++i)
                x0[i] = s == 0 ? scale : scale * std::pow(sigma, 2.0 * u(rng));
            NewtonResult nr = newton_root(
                [&sys](std::span<const double> x) { return sys.residual(x); }, x0, opts,
                [&sys](std::span<const double> x) { return sys.jacobian(x); });
            if (!nr.converged) continue;
            bool inside = true;
            for (double v : nr.x) inside = inside && v >= lo * 0.999 && v <= hi * 1.001;
            if (inside) push_root(std::move(nr.x));
        }
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

namespace {

// Working copy of the economy whose generations past the seam come from the
// requested tail, together with the anchor prices at (k+1, k+2).
struct BackwardSetup {
    EconomySpec ek;
    std::vector<double> anchor_first;   // p_{k+1}
    std::vector<double> anchor_second;  // p_{k+2}
    std::string description;
};

BackwardSetup prepare_backward(const EconomySpec& e, const TailSpec& tail, int k) {
    BackwardSetup s;
    s.ek = replicate_with_tail(e, tail, k);
    if (std::holds_alternative<Theorem3Tail>(tail)) {
        const int l_seam = s.ek.prefix.back().goods_old;
        s.anchor_first.assign(l_seam, 1.0);
        s.anchor_second = {static_cast<double>(l_seam)};  // ||p_{k+1}||_1
        s.description = "constant tail prices p_t = ||p_{k+1}||, consumption (e_max+e_min)/2";
    } else {
        const double w = std::get<GaleTail>(tail).w;
        const double target = build_gale_tail(e, k, w);
        s.anchor_first = {1.0};
        s.anchor_second = {1.0 / w};
        s.description = "seam generation savings pinned to " + std::to_string(target) +
                        " (return rate w = " + std::to_string(w) + ")";
    }
    return s;
}

}  // namespace

EconomySpec replicate_with_tail(const EconomySpec& e, const TailSpec& tail, int k) {
    if (k < 1) throw std::invalid_argument("horizon k must be at least 1");
    EconomySpec ek;
    ek.bundle = e.bundle;
    ek.resource_related = e.resource_related;
    if (std::holds_alternative<Theorem3Tail>(tail)) {
        build_theorem3_tail(e, k);  // validates e_min and the seam up front
        for (int t = 0; t <= k; ++t) ek.prefix.push_back(e.generation(t));
        ek.tail = Theorem3Tail{k};
    } else {
        build_gale_tail(e, k, std::get<GaleTail>(tail).w);  // validates positivity
        for (int t = 0; t <= k + 1; ++t) ek.prefix.push_back(e.generation(t));
    }
    return ek;
}

std::vector<BackwardRun> run_backward(const EconomySpec& e, const TailSpec& tail,
                                      int k, const SolveOptions& opts) {
    if (k < 1) throw std::invalid_argument("horizon k must be at least 1");
    BackwardSetup setup = prepare_backward(e, tail, k);
    const EconomySpec& ek = setup.ek;

    // Each branch is a price suffix (p_t, ..., p_{k+2}), grown leftwards.
    std::vector<std::vector<std::vector<double>>> branches;
    branches.push_back({setup.anchor_first, setup.anchor_second});
    bool truncated = false;
    for (int t = k; t >= 0; --t) {
        std::vector<std::vector<std::vector<double>>> next;
        for (const auto& suffix : branches) {
            const auto cands = backward_step(ek, t, suffix[0], suffix[1], opts);
            for (const auto& c : cands) {
                std::vector<std::vector<double>> grown;
                grown.reserve(suffix.size() + 1);
                grown.push_back(c);
                grown.insert(grown.end(), suffix.begin(), suffix.end());
                next.push_back(std::move(grown));
                if (static_cast<int>(next.size()) >= opts.branch_budget) break;
            }
            if (static_cast<int>(next.size()) >= opts.branch_budget) {
                truncated = true;
                break;
            }
        }
        branches = std::move(next);
        if (branches.empty()) return {};  // every branch died
    }

    std::vector<BackwardRun> runs;
    for (auto& suffix : branches) {
        BackwardRun run;
        run.k = k;
        run.tail_anchor = setup.description;
        run.truncated = truncated;
        run.candidate.prices.prices = std::move(suffix);
        run.candidate.prices = run.candidate.prices.normalize();
        run.candidate.residual = 0.0;
        for (double v : joint_excess(ek, run.candidate.prices))
            run.candidate.residual = std::max(run.candidate.residual, std::abs(v));
        run.candidate.boxes_ok = path_boxes_ok(run.candidate.prices, e.bundle.sigma);
        run.converged = run.candidate.residual <= opts.tol_residual;
        const auto& p = run.candidate.prices;
        for (int t = 0; t + 1 < p.periods(); ++t)
            run.returns.push_back(p.norm1(t) / p.norm1(t + 1));
        runs.push_back(std::move(run));
    }
    std::sort(runs.begin(), runs.end(), [](const BackwardRun& a, const BackwardRun& b) {
        return a.candidate.prices.prices < b.candidate.prices.prices;
    });
    return runs;
}

namespace {

std::vector<double> flatten_prefix(const PriceSequence& p, int coords) {
    std::vector<double> out;
    for (const auto& block : p.prices) {
        for (double v : block) {
            out.push_back(v);
            if (static_cast<int>(out.size()) == coords) return out;
        }
    }
    return out;
}

// Periods fully covered by the first `coords` flattened coordinates.
int periods_covered(const PriceSequence& p, int coords) {
    int used = 0, t = 0;
    for (const auto& block : p.prices) {
        if (used + static_cast<int>(block.size()) > coords) break;
        used += static_cast<int>(block.size());
        ++t;
    }
    return t;
}

}  // namespace

HpoResult approximate_hpo(const EconomySpec& e,
                          const std::function<TailSpec(int)>& tail_family,
                          std::span<const int> k_schedule, double conv_tol,
                          const SolveOptions& opts) {
    if (k_schedule.empty()) throw std::invalid_argument("empty horizon schedule");
    for (size_t i = 1; i < k_schedule.size(); ++i)
        if (k_schedule[i] <= k_schedule[i - 1])
            throw std::invalid_argument("horizon schedule must increase");

    // Runs for different horizons are independent; compute them up front,
    // bounded by opts.jobs, then fold in schedule order (deterministic merge).
    std::vector<std::vector<BackwardRun>> all_runs(k_schedule.size());
    if (opts.jobs > 1) {
        const size_t n = k_schedule.size();
        for (size_t base = 0; base < n; base += opts.jobs) {
            std::vector<std::future<std::vector<BackwardRun>>> batch;
            for (size_t i = base; i < std::min(n, base + opts.jobs); ++i)
                batch.push_back(std::async(std::launch::async, [&, i] {
                    return run_backward(e, tail_family(k_schedule[i]), k_schedule[i], opts);
                }));
            for (size_t i = base; i < std::min(n, base + opts.jobs); ++i)
                all_runs[i] = batch[i - base].get();
        }
    }

    HpoResult out;
    PriceSequence previous;
    bool have_previous = false;
    int window_coords = 0;
    for (size_t idx = 0; idx < k_schedule.size(); ++idx) {
        const int k = k_schedule[idx];
        HpoTrace tr;
        tr.k = k;
        const auto runs = opts.jobs > 1
                              ? std::move(all_runs[idx])
                              : run_backward(e, tail_family(k), k, opts);
        if (runs.empty()) {
            out.trace.push_back(tr);
            have_previous = false;
            continue;
        }
        // Select the branch tracking the previous run, or the best-certified
        // one on the first usable horizon.
        const BackwardRun* pick = &runs.front();
        if (have_previous) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& r : runs) {
                const auto a = flatten_prefix(r.candidate.prices, window_coords);
                const auto b = flatten_prefix(previous, window_coords);
                double d = 0.0;
                for (size_t i = 0; i < std::min(a.size(), b.size()); ++i)
                    d = std::max(d, std::abs(a[i] - b[i]));
                if (d < best) {
                    best = d;
                    pick = &r;
                }
            }
        } else {
            for (const auto& r : runs)
                if (r.candidate.residual < pick->candidate.residual) pick = &r;
        }
        tr.run_ok = pick->converged;
        tr.p1 = pick->candidate.prices.prices.at(1).at(0);
        window_coords = std::min(k / 2, 50);
        if (have_previous) {
            const auto a = flatten_prefix(pick->candidate.prices, window_coords);
            const auto b = flatten_prefix(previous, window_coords);
            double gap = 0.0;
            for (size_t i = 0; i < std::min(a.size(), b.size()); ++i)
                gap = std::max(gap, std::abs(a[i] - b[i]));
            tr.prefix_gap = gap;
            if (pick->converged && gap < conv_tol) {
                out.converged = true;
                out.limit = pick->candidate.prices;
                out.trace.push_back(tr);
                break;
            }
        }
        previous = pick->candidate.prices;
        have_previous = pick->converged;
        out.trace.push_back(tr);
    }
    if (!out.converged) {
        if (have_previous) out.limit = previous;  // best effort, not converged
        return out;
    }

    // Certify the detected limit: re-shoot the agreed window forward and run
    // the savings diagnostics on it.
    const int window_periods = std::max(3, periods_covered(out.limit, window_coords));
    const int T = window_periods - 2;
    out.continuation =
        forward_shoot(e, out.limit.prices[0], out.limit.prices[1], T, opts);
    CandidatePath window;
    window.prices.prices.assign(out.limit.prices.begin(),
                                out.limit.prices.begin() + window_periods);
    window.residual = 0.0;
    for (double v : joint_excess(e, window.prices))
        window.residual = std::max(window.residual, std::abs(v));
    window.boxes_ok = path_boxes_ok(window.prices, e.bundle.sigma);
    out.report = diagnose(e, window);
    out.converged = out.converged && out.continuation.complete &&
                    out.continuation.path.residual <= 100 * opts.tol_residual;
    return out;
}

EconomySpec extend_classical(const ClassicalEconomy& e2, double zeta) {
    if (!(zeta > 0.0)) throw std::invalid_argument("zeta must be positive");
    if (e2.initial_old.empty()) throw std::invalid_argument("no initial-old households");
    if (e2.generations.empty()) throw std::invalid_argument("no later generations");

    EconomySpec e;
    e.bundle = e2.bundle;
    GenerationSpec g0;
    g0.t = 0;
    g0.goods_young = 1;
    g0.goods_old = static_cast<int>(e2.initial_old.front().endow.size());
    for (const auto& ch : e2.initial_old) {
        const auto* ll = std::get_if<LogLinearUtility>(&ch.utility);
        if (!ll || !ll->lambda.empty())
            throw std::invalid_argument(
                "the extension mixes a log term with the old-age utility; only "
                "log-linear old-age utilities stay inside the demand family");
        if (static_cast<int>(ch.endow.size()) != g0.goods_old)
            throw std::invalid_argument("initial-old endowment dimensions differ");
        HouseholdSpec h;
        h.endow_young = {e2.bundle.e_max};
        h.endow_old = ch.endow;
        LogLinearUtility u;
        u.lambda = {zeta};
        u.mu = ll->mu;
        h.utility = u;
        g0.households.push_back({std::move(h), 1});
    }
    e.prefix.push_back(std::move(g0));
    for (const auto& gen : e2.generations) e.prefix.push_back(gen);
    for (size_t i = 0; i < e.prefix.size(); ++i) e.prefix[i].t = static_cast<int>(i);
    e.tail = e2.tail;
    return e;
}

std::vector<double> compute_transfers(const ClassicalEconomy& e2, double zeta,
                                      const PriceSequence& solved) {
    if (solved.periods() < 2)
        throw std::invalid_argument("solved path must cover periods 0 and 1");
    if (!solved.normalized(1e-12))
        throw std::invalid_argument("solved path must be normalized to p_0 = 1");
    const EconomySpec e = extend_classical(e2, zeta);
    const GenerationSpec& g0 = e.prefix.front();
    std::vector<double> out;
    for (size_t i = 0; i < e2.initial_old.size(); ++i) {
        const DemandResult d =
            ces_demand(g0.households[i].household, solved.prices[0], solved.prices[1]);
        const double m_prime = e2.bundle.e_max - d.young[0];
        out.push_back(m_prime - e2.initial_old[i].money);
    }
    return out;
}

ClassicalSolveResult solve_classical(const ClassicalEconomy& e2, double zeta0,
                                     std::span<const int> k_schedule,
                                     double conv_tol, const SolveOptions& opts) {
    ClassicalSolveResult out;
    double zeta = zeta0;
    for (int attempt = 0; attempt < 20; ++attempt, zeta *= 0.5) {
        const EconomySpec e = extend_classical(e2, zeta);
        HpoResult hpo = approximate_hpo(
            e, [](int k) { return TailSpec{Theorem3Tail{k}}; }, k_schedule, conv_tol, opts);
        if (!hpo.converged) continue;
        // Savings-threshold implication on the solved path: either savings of
        // the extended generation clear delta, or the period-1 price sum is
        // already high enough.
        const auto& p = hpo.limit;
        const GenerationSpec g0 = e.generation(0);
        const double s0 = avg_savings(g0, p.prices[0], p.prices[1]);
        const double alpha0 =
            static_cast<double>(e.generation(1).household_count()) / g0.household_count();
        bool ok = true;
        if (s0 <= e.bundle.delta) {
            double norm1 = 0.0;
            for (double v : p.prices[1]) norm1 += v;
            ok = 1.0 / norm1 <= alpha0 / (1.0 + e.bundle.epsilon);
        }
        out.zeta = zeta;
        out.hpo = std::move(hpo);
        out.claim_ok = ok;
        if (ok) break;
    }
    if (out.claim_ok)
        out.transfers = compute_transfers(e2, out.zeta, out.hpo.limit);
    return out;
}

}  // namespace olg
