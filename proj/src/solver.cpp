#include "olg/solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace olg {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

bool all_finite(const VectorXd& v) { return v.allFinite(); }

// Largest step fraction keeping every coordinate above 20% of its value.
double positivity_clip(const VectorXd& x, const VectorXd& step) {
    double alpha = 1.0;
    for (int i = 0; i < x.size(); ++i)
        if (step[i] < 0.0) alpha = std::min(alpha, -0.8 * x[i] / step[i]);
    return alpha;
}

struct System {
    std::function<VectorXd(const VectorXd&)> residual;
    std::function<MatrixXd(const VectorXd&)> jacobian;  // may be empty
};

MatrixXd fd_jacobian(const std::function<VectorXd(const VectorXd&)>& F,
                     const VectorXd& x, const VectorXd& fx, double step) {
    MatrixXd jac(fx.size(), x.size());
    VectorXd xp = x;
    for (int i = 0; i < x.size(); ++i) {
        const double h = step * std::max(1.0, std::abs(x[i]));
        xp[i] = x[i] + h;
        jac.col(i) = (F(xp) - fx) / h;
        xp[i] = x[i];
    }
    return jac;
}

struct CoreResult {
    VectorXd x;
    double residual = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
};

CoreResult gauss_newton(const System& sys, VectorXd x, const SolveOptions& opts) {
    CoreResult out;
    VectorXd fx = sys.residual(x);
    if (!all_finite(fx)) throw std::domain_error("system residual is not finite at x0");
    double rnorm = fx.lpNorm<Eigen::Infinity>();
    int it = 0;
    for (; it < opts.max_iter; ++it) {
        if (rnorm <= opts.tol_residual) {
            out.converged = true;
            break;
        }
        MatrixXd jac = (sys.jacobian && !opts.fd_jacobian)
                           ? sys.jacobian(x)
                           : fd_jacobian(sys.residual, x, fx, opts.fd_step);
        if (!jac.allFinite()) break;
        // Minimum-norm least-squares step: exact on square full-rank systems,
        // well defined on under/overdetermined and rank-deficient ones. The
        // rank threshold keeps numerically dependent directions out of the
        // step instead of amplifying roundoff along them.
        auto cod = jac.completeOrthogonalDecomposition();
        cod.setThreshold(1e-12);
        VectorXd step = cod.solve(-fx);
        if (!all_finite(step)) break;
        double alpha = std::min(opts.damping, positivity_clip(x, step));
        bool improved = false;
        for (int bt = 0; bt < 40; ++bt) {
            VectorXd xt = x + alpha * step;
            VectorXd ft = sys.residual(xt);
            const double rt = all_finite(ft) ? ft.lpNorm<Eigen::Infinity>()
                                             : std::numeric_limits<double>::infinity();
            if (rt < rnorm) {
                x = std::move(xt);
                fx = std::move(ft);
                rnorm = rt;
                improved = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!improved) break;  // stalled
    }
    out.x = std::move(x);
    out.residual = rnorm;
    out.iterations = it;
    out.converged = out.converged || rnorm <= opts.tol_residual;
    return out;
}

VectorXd to_eigen(std::span<const double> v) {
    return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

NewtonResult newton_root(const VectorFn& F, std::span<const double> x0,
                         const SolveOptions& opts, const JacobianFn& jac) {
    for (double v : x0)
        if (!(v > 0.0)) throw std::domain_error("newton_root needs a strictly positive start");
    System sys;
    sys.residual = [&F](const VectorXd& x) { return to_eigen(F(std::span(x.data(), x.size()))); };
    if (jac) {
        sys.jacobian = [&F, &jac](const VectorXd& x) {
            std::vector<double> flat = jac(std::span(x.data(), x.size()));
            const VectorXd fx = to_eigen(F(std::span(x.data(), x.size())));
            return Eigen::Map<const MatrixXd>(flat.data(), x.size(), fx.size()).transpose().eval();
        };
    }
    CoreResult core = gauss_newton(sys, to_eigen(x0), opts);
    NewtonResult res;
    res.x = to_std(core.x);
    res.residual = core.residual;
    res.iterations = core.iterations;
    res.converged = core.converged;
    return res;
}

namespace {

// Offsets of each period's price block inside a stacked price vector.
struct Layout {
    std::vector<int> offset;  // offset[t], plus total at the back
    int total() const { return offset.back(); }
};

Layout make_layout(const std::vector<int>& dims) {
    Layout lay;
    lay.offset.resize(dims.size() + 1, 0);
    for (size_t t = 0; t < dims.size(); ++t) lay.offset[t + 1] = lay.offset[t] + dims[t];
    return lay;
}

std::span<const double> block(const VectorXd& x, const Layout& lay, int t) {
    return std::span(x.data() + lay.offset[t], static_cast<size_t>(lay.offset[t + 1] - lay.offset[t]));
}

PriceSequence unpack(const VectorXd& x, const Layout& lay) {
    PriceSequence p;
    for (size_t t = 0; t + 1 < lay.offset.size(); ++t) {
        auto b = block(x, lay, static_cast<int>(t));
        p.prices.emplace_back(b.begin(), b.end());
    }
    return p;
}

// Scatter a household demand Jacobian (count households of gen `gen_t`, at
// prices (p_a, p_b) living at period offsets off_a/off_b) into the system
// Jacobian rows [row0, row0+len): young rows if `young_rows`, else old rows.
void scatter_household(MatrixXd& jac, const HouseholdSpec& h, int count,
                       std::span<const double> pa, std::span<const double> pb,
                       bool young_rows, int row0, int off_a, int off_b) {
    const int ly = static_cast<int>(pa.size());
    const int lo = static_cast<int>(pb.size());
    const int n = ly + lo;
    const std::vector<double> hj = demand_jacobian(h, pa, pb);
    const int r0 = young_rows ? 0 : ly;
    const int rows = young_rows ? ly : lo;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < ly; ++c)
            jac(row0 + r, off_a + c) += count * hj[(r0 + r) * n + c];
        for (int c = 0; c < lo; ++c)
            jac(row0 + r, off_b + c) += count * hj[(r0 + r) * n + ly + c];
    }
}

// log-uniform sample in [sigma^(n+1), sigma^-(n+1)]
double sample_box(std::mt19937_64& rng, double sigma, int n) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    return std::pow(sigma, (n + 1) * u(rng));
}

bool near_duplicate(const std::vector<double>& a, const std::vector<double>& b, double tol) {
    if (a.size() != b.size()) return false;
    double scale = 1.0;
    for (double v : a) scale = std::max(scale, std::abs(v));
    for (size_t i = 0; i < a.size(); ++i)
        if (std::abs(a[i] - b[i]) > tol * scale) return false;
    return true;
}

std::vector<double> flatten(const PriceSequence& p) {
    std::vector<double> out;
    for (const auto& v : p.prices) out.insert(out.end(), v.begin(), v.end());
    return out;
}

}  // namespace

bool path_boxes_ok(const PriceSequence& p, double sigma) {
    if (p.periods() < 2) return false;
    if (!in_box(p.prices[0], 0, sigma) || !in_box(p.prices[1], 0, sigma)) return false;
    for (int t = 1; t < p.periods(); ++t)
        if (!in_box(p.prices[t], t - 1, sigma)) return false;  // sigma^t..sigma^-t bounds
    return true;
}

std::vector<CandidatePath> solve_j_sighted(const EconomySpec& e, int j,
                                           const SolveOptions& opts) {
    if (j < 1) throw std::invalid_argument("horizon j must be at least 1");
    std::vector<int> dims;
    for (int t = 0; t <= j + 1; ++t) dims.push_back(e.generation(t).goods_young);
    const Layout lay = make_layout(dims);
    const double sigma = e.bundle.sigma;

    System sys;
    // Equations: p_{0,1} - 1, then z_1..z_j.
    sys.residual = [&e, &lay, j](const VectorXd& x) {
        int m = 1;
        std::vector<std::vector<double>> zs;
        for (int t = 1; t <= j; ++t) {
            zs.push_back(excess_demand_t(e, t, block(x, lay, t - 1), block(x, lay, t),
                                         block(x, lay, t + 1)));
            m += static_cast<int>(zs.back().size());
        }
        VectorXd f(m);
        f[0] = x[0] - 1.0;
        int r = 1;
        for (const auto& z : zs)
            for (double v : z) f[r++] = v;
        return f;
    };
    sys.jacobian = [&e, &lay, j](const VectorXd& x) {
        int m = 1;
        for (int t = 1; t <= j; ++t) m += lay.offset[t + 1] - lay.offset[t];
        MatrixXd jac = MatrixXd::Zero(m, x.size());
        jac(0, 0) = 1.0;
        int row = 1;
        for (int t = 1; t <= j; ++t) {
            const GenerationSpec old_gen = e.generation(t - 1);
            const GenerationSpec young_gen = e.generation(t);
            for (const auto& grp : old_gen.households)
                scatter_household(jac, grp.household, grp.count, block(x, lay, t - 1),
                                  block(x, lay, t), false, row, lay.offset[t - 1], lay.offset[t]);
            for (const auto& grp : young_gen.households)
                scatter_household(jac, grp.household, grp.count, block(x, lay, t),
                                  block(x, lay, t + 1), true, row, lay.offset[t], lay.offset[t + 1]);
            row += lay.offset[t + 1] - lay.offset[t];
        }
        return jac;
    };

    std::mt19937_64 rng(opts.seed);
    std::vector<CandidatePath> found;
    for (int s = 0; s < opts.n_starts; ++s) {
        VectorXd x0 = VectorXd::Ones(lay.total());
        if (s > 0) {
            // Alternate K0-sized and full K_t-sized sampling boxes.
            for (size_t t = 0; t + 1 < lay.offset.size(); ++t)
                for (int i = lay.offset[t]; i < lay.offset[t + 1]; ++i)
                    x0[i] = sample_box(rng, sigma, (s % 2 == 1) ? 0 : static_cast<int>(t));
        }
        x0[0] = 1.0;
        CoreResult core = gauss_newton(sys, x0, opts);
        if (!core.converged) continue;
        PriceSequence prices = unpack(core.x, lay);
        std::vector<double> flat = flatten(prices);
        bool dup = false;
        for (const auto& c : found)
            if (near_duplicate(flat, flatten(c.prices), opts.dedup_tol)) { dup = true; break; }
        if (dup) continue;

        CandidatePath cand;
        cand.prices = std::move(prices);
        const auto z = joint_excess(e, cand.prices);
        cand.residual = 0.0;
        for (double v : z) cand.residual = std::max(cand.residual, std::abs(v));
        const double pj1 = cand.prices.prices[j][0];
        std::vector<double> pj = cand.prices.prices[j], pj2 = cand.prices.prices[j + 1];
        for (auto& v : pj) v /= pj1;
        for (auto& v : pj2) v /= pj1;
        cand.boxes_ok = in_box(cand.prices.prices[0], 0, sigma) &&
                        in_box(cand.prices.prices[1], 0, sigma) &&
                        in_box(pj, 0, sigma) && in_box(pj2, 0, sigma);
        found.push_back(std::move(cand));
    }
    std::sort(found.begin(), found.end(), [](const CandidatePath& a, const CandidatePath& b) {
        return flatten(a.prices) < flatten(b.prices);
    });
    return found;
}

ShootResult forward_shoot(const EconomySpec& e, std::vector<double> p0,
                          std::vector<double> p1, int T, const SolveOptions& opts) {
    ShootResult res;
    res.path.prices.prices.push_back(std::move(p0));
    res.path.prices.prices.push_back(std::move(p1));
    for (int t = 1; t <= T; ++t) {
        const GenerationSpec young_gen = e.generation(t);
        if (young_gen.goods_young != young_gen.goods_old)
            throw std::invalid_argument(
                "forward shooting needs square steps: L_t = " + std::to_string(young_gen.goods_young) +
                " but L_{t+1} = " + std::to_string(young_gen.goods_old) + " at t = " + std::to_string(t));
        const auto& p_prev = res.path.prices.prices[t - 1];
        const auto& p_cur = res.path.prices.prices[t];
        System sys;
        sys.residual = [&e, t, &p_prev, &p_cur](const VectorXd& x) {
            return to_eigen(excess_demand_t(e, t, p_prev, p_cur, std::span(x.data(), x.size())));
        };
        sys.jacobian = [&e, t, &p_cur](const VectorXd& x) {
            // Only the p_{t+1} block varies; p_{t-1}, p_t are fixed data.
            const GenerationSpec g = e.generation(t);
            const int l_next = static_cast<int>(x.size());
            const int ly = static_cast<int>(p_cur.size());
            MatrixXd jac = MatrixXd::Zero(l_next, l_next);
            std::span<const double> pn(x.data(), static_cast<size_t>(x.size()));
            for (const auto& grp : g.households) {
                const std::vector<double> hj = demand_jacobian(grp.household, p_cur, pn);
                const int n = ly + l_next;
                for (int r = 0; r < ly; ++r)
                    for (int c = 0; c < l_next; ++c)
                        jac(r, c) += grp.count * hj[r * n + ly + c];
            }
            return jac;
        };
        CoreResult core = gauss_newton(sys, to_eigen(p_cur), opts);
        if (!core.converged) break;
        res.path.prices.prices.push_back(to_std(core.x));
        res.steps_done = t;
    }
    res.complete = res.steps_done == T;
    res.path.residual = 0.0;
    if (res.path.prices.periods() >= 3)
        for (double v : joint_excess(e, res.path.prices))
            res.path.residual = std::max(res.path.residual, std::abs(v));
    res.path.boxes_ok = path_boxes_ok(res.path.prices, e.bundle.sigma);
    return res;
}

namespace {

// Jacobian of spend_all_demand w.r.t. prices at fixed wealth.
MatrixXd spend_all_price_jacobian(const UtilityParams& u, std::span<const double> p,
                                  double wealth) {
    const int n = static_cast<int>(p.size());
    const std::vector<double> x = spend_all_demand(u, p, wealth);
    MatrixXd jac = MatrixXd::Zero(n, n);
    double eta = 1.0;
    std::vector<double> term(n, 0.0);
    double d = 1.0;
    if (const auto* ces = std::get_if<CesUtility>(&u)) {
        eta = ces->eta();
        d = 0.0;
        for (int i = 0; i < n; ++i) {
            term[i] = std::pow(ces->lambda[i], eta) * std::pow(p[i], 1.0 - eta);
            d += term[i];
        }
    }
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            double v = eta == 1.0 ? 0.0 : -x[i] * (1.0 - eta) * term[k] / (p[k] * d);
            if (i == k) v -= x[i] * eta / p[i];
            jac(i, k) = v;
        }
    return jac;
}

}  // namespace

ClosedLoopResult solve_closed_loop(const EconomySpec& e, int k,
                                   const UtilityParams& star_utility,
                                   const SolveOptions& opts) {
    if (k < 1) throw std::invalid_argument("seam k must be at least 1");
    std::vector<int> dims;
    for (int t = 0; t <= k; ++t) dims.push_back(e.generation(t).goods_young);
    const GenerationSpec seam_gen = e.generation(k);
    dims.push_back(seam_gen.goods_old);  // L_{k+1}
    const Layout lay = make_layout(dims);
    const int l_seam = seam_gen.goods_old;
    const int l0 = dims[0];
    if (static_cast<int>(young_weights(star_utility).size()) != l0)
        throw std::invalid_argument("star utility weights must cover the period-0 goods");

    const double e_min = tail_e_min(e.bundle);
    const int h_tail = (k + 1 < static_cast<int>(e.prefix.size()))
                           ? e.prefix[k + 1].household_count()
                           : seam_gen.household_count();
    const std::vector<double> tilde_endow(l_seam, 0.5 * (e.bundle.e_max + e_min));
    const std::vector<double> star_endow(l_seam, 0.5 * (e.bundle.e_max - e_min));
    LogLinearUtility tilde_u;
    tilde_u.lambda.assign(l_seam, 1.0 / l_seam);

    const GenerationSpec g0 = e.generation(0);

    auto residual = [&](const VectorXd& x) {
        VectorXd f(1 + lay.total());
        f[0] = x[0] - 1.0;
        auto p0 = block(x, lay, 0);
        auto pk = block(x, lay, k);
        auto pk1 = block(x, lay, k + 1);
        int r = 1;
        // Period 0: young demand of G_0 plus star (time-traveler) demand.
        double star_wealth = 0.0;
        for (int i = 0; i < l_seam; ++i) star_wealth += pk1[i] * star_endow[i];
        const std::vector<double> xstar =
            spend_all_demand(star_utility, p0, star_wealth);
        {
            std::vector<double> z(l0, 0.0);
            for (const auto& grp : g0.households) {
                const DemandResult d = ces_demand(grp.household, p0, block(x, lay, 1));
                for (int i = 0; i < l0; ++i)
                    z[i] += grp.count * (d.young[i] - grp.household.endow_young[i]);
            }
            for (int i = 0; i < l0; ++i) f[r++] = z[i] + h_tail * xstar[i];
        }
        for (int t = 1; t <= k; ++t) {
            const auto z = excess_demand_t(e, t, block(x, lay, t - 1), block(x, lay, t),
                                           block(x, lay, t + 1));
            for (double v : z) f[r++] = v;
        }
        // Period k+1: old G_k demand plus tilde households, against their
        // endowments and the star excess.
        double tilde_wealth = 0.0;
        for (int i = 0; i < l_seam; ++i) tilde_wealth += pk1[i] * tilde_endow[i];
        const std::vector<double> xtilde = spend_all_demand(tilde_u, pk1, tilde_wealth);
        {
            std::vector<double> z(l_seam, 0.0);
            for (const auto& grp : seam_gen.households) {
                const DemandResult d = ces_demand(grp.household, pk, pk1);
                for (int i = 0; i < l_seam; ++i)
                    z[i] += grp.count * (d.old[i] - grp.household.endow_old[i]);
            }
            for (int i = 0; i < l_seam; ++i)
                f[r++] = z[i] + h_tail * (xtilde[i] - tilde_endow[i] - star_endow[i]);
        }
        return f;
    };

    auto jacobian = [&](const VectorXd& x) {
        MatrixXd jac = MatrixXd::Zero(1 + lay.total(), lay.total());
        jac(0, 0) = 1.0;
        auto p0 = block(x, lay, 0);
        auto pk = block(x, lay, k);
        auto pk1 = block(x, lay, k + 1);
        // Period-0 rows.
        for (const auto& grp : g0.households)
            scatter_household(jac, grp.household, grp.count, p0, block(x, lay, 1), true, 1,
                              lay.offset[0], lay.offset[1]);
        double star_wealth = 0.0;
        for (int i = 0; i < l_seam; ++i) star_wealth += pk1[i] * star_endow[i];
        const MatrixXd star_dp = spend_all_price_jacobian(star_utility, p0, star_wealth);
        const std::vector<double> xstar = spend_all_demand(star_utility, p0, star_wealth);
        for (int i = 0; i < l0; ++i) {
            for (int c = 0; c < l0; ++c) jac(1 + i, lay.offset[0] + c) += h_tail * star_dp(i, c);
            for (int c = 0; c < l_seam; ++c)  // d(wealth)/d(p_{k+1}) = e*
                jac(1 + i, lay.offset[k + 1] + c) +=
                    h_tail * xstar[i] / star_wealth * star_endow[c];
        }
        int row = 1 + l0;
        for (int t = 1; t <= k; ++t) {
            const GenerationSpec old_gen = e.generation(t - 1);
            const GenerationSpec young_gen = e.generation(t);
            for (const auto& grp : old_gen.households)
                scatter_household(jac, grp.household, grp.count, block(x, lay, t - 1),
                                  block(x, lay, t), false, row, lay.offset[t - 1], lay.offset[t]);
            for (const auto& grp : young_gen.households)
                scatter_household(jac, grp.household, grp.count, block(x, lay, t),
                                  block(x, lay, t + 1), true, row, lay.offset[t], lay.offset[t + 1]);
            row += lay.offset[t + 1] - lay.offset[t];
        }
        // Seam rows.
        for (const auto& grp : seam_gen.households)
            scatter_household(jac, grp.household, grp.count, pk, pk1, false, row,
                              lay.offset[k], lay.offset[k + 1]);
        double tilde_wealth = 0.0;
        for (int i = 0; i < l_seam; ++i) tilde_wealth += pk1[i] * tilde_endow[i];
        UtilityParams tilde_params = tilde_u;
        const MatrixXd tilde_dp = spend_all_price_jacobian(tilde_params, pk1, tilde_wealth);
        const std::vector<double> xtilde = spend_all_demand(tilde_params, pk1, tilde_wealth);
        for (int i = 0; i < l_seam; ++i)
            for (int c = 0; c < l_seam; ++c)
                jac(row + i, lay.offset[k + 1] + c) +=
                    h_tail * (tilde_dp(i, c) + xtilde[i] / tilde_wealth * tilde_endow[c]);
        return jac;
    };

    System sys{residual, jacobian};
    std::mt19937_64 rng(opts.seed);
    ClosedLoopResult best;
    for (int s = 0; s < opts.n_starts; ++s) {
        VectorXd x0 = VectorXd::Ones(lay.total());
        if (s > 0)
            for (int i = 0; i < x0.size(); ++i) x0[i] = sample_box(rng, e.bundle.sigma, 0);
        x0[0] = 1.0;
        CoreResult core = gauss_newton(sys, x0, opts);
        if (!core.converged) continue;

        ClosedLoopResult res;
        res.converged = true;
        res.path.prices = unpack(core.x, lay).normalize();
        res.path.residual = 0.0;
        if (k >= 2)
            for (double v : joint_excess(e, res.path.prices))
                res.path.residual = std::max(res.path.residual, std::abs(v));
        const VectorXd f = residual(core.x);
        for (int i = 0; i < f.size(); ++i)
            res.path.residual = std::max(res.path.residual, std::abs(f[i]));
        res.path.boxes_ok = in_box(res.path.prices.prices[0], 0, e.bundle.sigma) &&
                            in_box(res.path.prices.prices[1], 0, e.bundle.sigma);
        // Aggregate star net trade value at the solution; ~0 by Walras' law.
        auto p0 = block(core.x, lay, 0);
        auto pk1 = block(core.x, lay, k + 1);
        double star_wealth = 0.0;
        for (int i = 0; i < l_seam; ++i) star_wealth += pk1[i] * star_endow[i];
        const std::vector<double> xstar = spend_all_demand(star_utility, p0, star_wealth);
        double v0 = 0.0;
        for (int i = 0; i < l0; ++i) v0 += p0[i] * xstar[i];
        res.star_value = h_tail * (v0 - star_wealth);
        if (!best.converged || res.path.residual < best.path.residual) best = std::move(res);
    }
    return best;
}

}  // namespace olg
