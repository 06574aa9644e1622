#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "olg/backward.hpp"
#include "olg/diagnostics.hpp"
#include "olg/example1.hpp"
#include "olg/solver.hpp"

using namespace olg;

namespace {

EconomySpec loglinear_economy(double lam, double mu, std::vector<double> ey,
                              std::vector<double> eo, int count = 1) {
    EconomySpec e;
    e.bundle.alpha_min = 0.5;
    e.bundle.alpha_max = 2.0;
    e.bundle.e_max = 4.0;
    e.bundle.sigma = 0.5;
    e.bundle.epsilon = 1.0;
    e.bundle.delta = 0.5;
    HouseholdSpec h;
    h.endow_young = std::move(ey);
    h.endow_old = std::move(eo);
    LogLinearUtility u;
    u.lambda.assign(h.endow_young.size(), lam / h.endow_young.size());
    u.mu.assign(h.endow_old.size(), mu / h.endow_old.size());
    h.utility = u;
    GenerationSpec g;
    g.goods_young = static_cast<int>(h.endow_young.size());
    g.goods_old = static_cast<int>(h.endow_old.size());
    g.households.push_back({h, count});
    g.t = 0;
    e.prefix.push_back(g);
    e.tail = StationaryRepeat{g};
    return e;
}

}  // namespace

TEST_CASE("partial sums with constant prices and counts") {
    PriceSequence p;
    p.prices.assign(6, {2.0});
    const std::vector<int> counts(6, 1);
    const auto s = cass_partial_sums(p, counts, 5);
    REQUIRE(s.size() == 6);
    for (int t = 0; t <= 5; ++t) CHECK(s[t] == doctest::Approx((t + 1) / 2.0).epsilon(1e-15));
}

TEST_CASE("partial sums of a geometric price path converge") {
    PriceSequence p;
    for (int t = 0; t < 40; ++t) p.prices.push_back({std::pow(2.0, t)});
    const std::vector<int> counts(40, 1);
    const auto s = cass_partial_sums(p, counts, 39);
    CHECK(s.back() == doctest::Approx(2.0).epsilon(1e-9));
    for (size_t i = 1; i < s.size(); ++i) CHECK(s[i] > s[i - 1]);  // strictly increasing
}

TEST_CASE("partial sums on the unit path count periods exactly") {
    PriceSequence p;
    p.prices.assign(31, {1.0});
    const std::vector<int> counts(31, 1);
    const auto s = cass_partial_sums(p, counts, 30);
    CHECK(s.back() == 31.0);  // exact in floating point
    CHECK_THROWS_AS(cass_partial_sums(p, counts, 31), std::invalid_argument);
}

TEST_CASE("log-linear prone margin matches the hand-computed value") {
    const EconomySpec e = loglinear_economy(0.5, 0.5, {4.0}, {0.8});
    const ProneCheck pc = check_prone_loglinear(e);
    REQUIRE(pc.applicable);
    CHECK(pc.prone);
    CHECK(pc.margin == doctest::Approx(1.6).epsilon(1e-12));
}

TEST_CASE("endowments skewed to old age are not certified prone") {
    const EconomySpec e = loglinear_economy(0.5, 0.5, {0.0}, {0.8});
    const ProneCheck pc = check_prone_loglinear(e);
    REQUIRE(pc.applicable);
    CHECK_FALSE(pc.prone);
    CHECK(pc.margin <= 0.0);
}

TEST_CASE("a balanced configuration sits exactly at margin zero") {
    // mu*min_e_young == lambda*e_old/alpha with alpha = 1.
    const EconomySpec e = loglinear_economy(0.5, 0.5, {1.0}, {1.0});
    const ProneCheck pc = check_prone_loglinear(e);
    REQUIRE(pc.applicable);
    CHECK(pc.margin == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
    CHECK_FALSE(pc.prone);
}

TEST_CASE("raising the growth rate raises the log-linear margin") {
    EconomySpec e = loglinear_economy(0.5, 0.5, {4.0}, {0.8});
    GenerationSpec g1 = e.prefix[0];
    g1.t = 1;
    g1.households[0].count = 2;  // alpha_0 = 2
    e.prefix.push_back(g1);
    e.tail = std::monostate{};
    const ProneCheck faster = check_prone_loglinear(e);
    REQUIRE(faster.applicable);
    CHECK(faster.per_t[0] == doctest::Approx(0.5 * 4.0 - 0.5 * 0.8 / 2.0).epsilon(1e-12));
    CHECK(faster.per_t[0] > 1.6);
}

TEST_CASE("prone margins scale linearly with endowments") {
    const EconomySpec base = loglinear_economy(0.5, 0.5, {4.0}, {0.8});
    EconomySpec scaled = loglinear_economy(0.5, 0.5, {4.0 * 1.75}, {0.8 * 1.75});
    scaled.bundle.e_max *= 1.75;
    const double m0 = check_prone_loglinear(base).margin;
    const double m1 = check_prone_loglinear(scaled).margin;
    CHECK(m1 == doctest::Approx(1.75 * m0).epsilon(1e-12));
}

TEST_CASE("ces prone margin is monotone in sigma and respects the family guard") {
    EconomySpec e = example1::economy();
    const ProneCheck wrong_family = check_prone_loglinear(e);
    CHECK_FALSE(wrong_family.applicable);

    ProneCheck last;
    double prev_margin = -1e300;
    for (double sigma : {0.3, 0.5, 0.7, 0.9}) {
        e.bundle.sigma = sigma;
        last = check_prone_ces(e);
        REQUIRE(last.applicable);
        CHECK(last.margin >= prev_margin);
        prev_margin = last.margin;
    }
    const ProneCheck ll_on_ces = check_prone_ces(loglinear_economy(0.5, 0.5, {4.0}, {0.8}));
    CHECK_FALSE(ll_on_ces.applicable);
}

TEST_CASE("the benchmark constant path classifies as efficient") {
    const EconomySpec e = example1::economy();
    SolveOptions opts;
    const ShootResult shot = forward_shoot(e, {1.0}, {1.0}, 30, opts);
    REQUIRE(shot.complete);
    CHECK(classify(e, shot.path, e.bundle) == Verdict::Efficient);
    const DiagnosticsReport rep = diagnose(e, shot.path);
    CHECK(rep.verdict == Verdict::Efficient);
    for (double s : rep.savings) CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    // 30 extension steps cover periods 0..31, so the final partial sum is 32.
    CHECK(rep.cass_partials.back() == doctest::Approx(32.0).epsilon(1e-9));
}

TEST_CASE("shooting below the golden rule classifies as inefficient") {
    const EconomySpec e = example1::economy();
    SolveOptions opts;
    const ShootResult shot = forward_shoot(e, {1.0}, {1.0 / 0.9}, 30, opts);
    REQUIRE(shot.complete);
    CHECK(classify(e, shot.path, e.bundle) == Verdict::Inefficient);
    const auto bound = lemma_geometric_bound(e, shot.path.prices, e.bundle.delta, e.bundle.epsilon);
    REQUIRE(bound.triggered);
    CHECK(bound.t0 == 4);  // savings cross 0.5 between t = 3 and t = 4
    CHECK(bound.holds);
    for (double gap : bound.slack) CHECK(gap >= 0.0);
}

TEST_CASE("short clean paths without an analytic tail stay undetermined") {
    const EconomySpec e = example1::economy();
    SolveOptions opts;
    // Only two steps: savings stay above delta (0.82, 0.74, 0.64) but the
    // path is not constant at its end, so no tail argument applies.
    const ShootResult shot = forward_shoot(e, {1.0}, {1.0 / 0.9}, 2, opts);
    REQUIRE(shot.complete);
    CHECK(classify(e, shot.path, e.bundle) == Verdict::Undetermined);
}

TEST_CASE("classify rejects uncertified paths") {
    const EconomySpec e = example1::economy();
    CandidatePath sloppy;
    sloppy.prices.prices.assign(5, {1.0});
    sloppy.residual = 1.0;
    CHECK_THROWS_AS(classify(e, sloppy, e.bundle), std::invalid_argument);
}

TEST_CASE("savings recursion residual vanishes on certified paths only") {
    const EconomySpec e = example1::economy();
    SolveOptions opts;
    const ShootResult shot = forward_shoot(e, {1.0}, {1.0 / 0.9}, 20, opts);
    REQUIRE(shot.complete);
    const auto res = savings_recursion_residual(e, shot.path.prices);
    REQUIRE(res.size() == static_cast<size_t>(shot.path.prices.periods() - 2));
    for (double v : res) CHECK(std::abs(v) < 1e-8);

    const ShootResult constant = forward_shoot(e, {1.0}, {1.0}, 10, opts);
    for (double v : savings_recursion_residual(e, constant.path.prices))
        CHECK(std::abs(v) < 1e-12);

    PriceSequence off = shot.path.prices;
    off.prices[5][0] *= 1.01;  // knock one period off the equilibrium
    double worst = 0.0;
    for (double v : savings_recursion_residual(e, off))
        worst = std::max(worst, std::abs(v));
    CHECK(worst > 1e-3);
}

TEST_CASE("efficient verdicts come with linear partial-sum growth") {
    const EconomySpec e = example1::economy();
    SolveOptions opts;
    const ShootResult shot = forward_shoot(e, {1.0}, {1.0}, 40, opts);
    const DiagnosticsReport rep = diagnose(e, shot.path);
    REQUIRE(rep.verdict == Verdict::Efficient);
    double sup = 0.0;
    for (int t = 0; t < shot.path.prices.periods(); ++t)
        sup = std::max(sup, e.generation(t).household_count() * shot.path.prices.norm1(t));
    const double slope = 1.0 / sup;
    for (size_t t = 1; t < rep.cass_partials.size(); ++t)
        CHECK(rep.cass_partials[t] - rep.cass_partials[t - 1] >= slope - 1e-12);
}

TEST_CASE("theorem-3 tail economies certify prone with the threshold implication") {
    // The acceptance constants: e_max = 4, eps = 1, delta = 0.5, e_min = 1.5.
    EconomySpec ref = example1::economy(3);
    ref.bundle.epsilon = 1.0;
    ref.bundle.delta = 0.5;
    const TailBuild tb = build_theorem3_tail(ref, 1);
    EconomySpec tail;
    tail.bundle = ref.bundle;
    tail.prefix = tb.generations;
    tail.prefix[0].t = 0;
    tail.prefix[1].t = 1;
    tail.tail = StationaryRepeat{tb.generations[1]};
    const ProneCheck pc = check_prone_loglinear(tail);
    REQUIRE(pc.applicable);
    CHECK(pc.prone);
    // Normalized weights are (1/2, 1/2): margin = 0.5*4 - 0.5*1.5 = 1.25.
    CHECK(pc.margin == doctest::Approx(1.25).epsilon(1e-12));
}

TEST_CASE("diagnose reports the prone margin and verdict notes") {
    const EconomySpec e = loglinear_economy(0.5, 0.5, {4.0}, {0.8});
    SolveOptions opts;
    const ShootResult shot = forward_shoot(e, {1.0}, {1.0}, 10, opts);
    REQUIRE(shot.complete);
    const DiagnosticsReport rep = diagnose(e, shot.path);
    REQUIRE(rep.prone_margin.has_value());
    CHECK(*rep.prone_margin == doctest::Approx(1.6).epsilon(1e-12));
    bool has_verdict_note = false;
    for (const auto& n : rep.notes) has_verdict_note = has_verdict_note || n.find("verdict") == 0;
    CHECK(has_verdict_note);
}
