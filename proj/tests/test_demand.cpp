#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "olg/demand.hpp"
#include "olg/example1.hpp"

using namespace olg;

namespace {

HouseholdSpec benchmark_household() {
    return example1::economy().prefix[0].households[0].household;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Random household generator shared by the property suites.
struct RandomHouseholds {
    std::mt19937_64 rng{12345};
    std::uniform_real_distribution<double> weight{0.05, 1.0};
    std::uniform_real_distribution<double> endow{0.0, 4.0};
    std::uniform_real_distribution<double> rho{0.05, 0.95};
    std::uniform_int_distribution<int> dim{1, 4};

    HouseholdSpec next(bool ces) {
        const int ly = dim(rng), lo = dim(rng);
        HouseholdSpec h;
        for (int i = 0; i < ly; ++i) h.endow_young.push_back(endow(rng));
        for (int i = 0; i < lo; ++i) h.endow_old.push_back(endow(rng));
        h.endow_young[0] = std::max(h.endow_young[0], 0.1);  // keep it nonzero
        if (ces) {
            CesUtility u;
            for (int i = 0; i < ly; ++i) u.lambda.push_back(weight(rng));
            for (int i = 0; i < lo; ++i) u.mu.push_back(weight(rng));
            u.rho = rho(rng);
            h.utility = u;
        } else {
            LogLinearUtility u;
            for (int i = 0; i < ly; ++i) u.lambda.push_back(weight(rng));
            for (int i = 0; i < lo; ++i) u.mu.push_back(weight(rng));
            h.utility = u;
        }
        return h;
    }

    std::vector<double> box_prices(size_t n, double sigma) {
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::vector<double> p(n);
        for (auto& v : p) v = std::pow(sigma, u(rng));
        return p;
    }
};

}  // namespace

TEST_CASE("benchmark household demand at unit prices") {
    const HouseholdSpec h = benchmark_household();
    const std::vector<double> one{1.0};
    const DemandResult d = ces_demand(h, one, one);
    CHECK(d.young[0] == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(d.old[0] == doctest::Approx(1.8).epsilon(1e-14));
}

TEST_CASE("symmetric log-linear household splits wealth equally") {
    HouseholdSpec h;
    h.endow_young = {1.0};
    h.endow_old = {0.0};
    h.utility = LogLinearUtility{{0.5}, {0.5}};
    const std::vector<double> one{1.0};
    const DemandResult d = ces_demand(h, one, one);
    CHECK(d.young[0] == doctest::Approx(0.5));
    CHECK(d.old[0] == doctest::Approx(0.5));
}

TEST_CASE("demand rejects nonpositive prices") {
    const HouseholdSpec h = benchmark_household();
    CHECK_THROWS_AS(ces_demand(h, std::vector<double>{0.0}, std::vector<double>{1.0}),
                    std::domain_error);
    CHECK_THROWS_AS(ces_demand(h, std::vector<double>{1.0}, std::vector<double>{-2.0}),
                    std::domain_error);
}

TEST_CASE("gamma share at the benchmark point and under symmetry") {
    const HouseholdSpec h = benchmark_household();
    const std::vector<double> one{1.0};
    CHECK(gamma_share(h.utility, one, one) == doctest::Approx(0.625).epsilon(1e-14));

    CesUtility sym;
    sym.lambda = {0.3, 0.2};
    sym.mu = {0.3, 0.2};
    sym.rho = 0.4;
    const std::vector<double> p{1.3, 0.7};
    CHECK(gamma_share(sym, p, p) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("gamma is invariant to joint price scaling") {
    RandomHouseholds gen;
    for (int i = 0; i < 200; ++i) {
        const HouseholdSpec h = gen.next(i % 2 == 0);
        auto py = gen.box_prices(h.endow_young.size(), 0.4);
        auto po = gen.box_prices(h.endow_old.size(), 0.4);
        const double g = gamma_share(h.utility, py, po);
        for (auto& v : py) v *= 2.0;
        for (auto& v : po) v *= 2.0;
        CHECK(gamma_share(h.utility, py, po) == doctest::Approx(g).epsilon(1e-13));
    }
}

TEST_CASE("gamma equals the young expenditure share of demand") {
    RandomHouseholds gen;
    for (int i = 0; i < 200; ++i) {
        const HouseholdSpec h = gen.next(i % 2 == 0);
        const auto py = gen.box_prices(h.endow_young.size(), 0.4);
        const auto po = gen.box_prices(h.endow_old.size(), 0.4);
        const DemandResult d = ces_demand(h, py, po);
        const double wealth = dot(py, h.endow_young) + dot(po, h.endow_old);
        const double g = gamma_share(h.utility, py, po);
        CHECK(dot(py, d.young) == doctest::Approx(g * wealth).epsilon(1e-12));
    }
}

TEST_CASE("Walras' law over randomized households and box prices") {
    RandomHouseholds gen;
    for (int i = 0; i < 1200; ++i) {
        const HouseholdSpec h = gen.next(i % 2 == 0);
        const auto py = gen.box_prices(h.endow_young.size(), 0.25);
        const auto po = gen.box_prices(h.endow_old.size(), 0.25);
        const DemandResult d = ces_demand(h, py, po);
        const double we = dot(py, h.endow_young) + dot(po, h.endow_old);
        const double wx = dot(py, d.young) + dot(po, d.old);
        CHECK(std::abs(wx - we) <= 1e-10 * (1.0 + std::abs(we)));
    }
}

TEST_CASE("demand is homogeneous of degree zero in prices") {
    RandomHouseholds gen;
    std::uniform_real_distribution<double> scale(0.1, 10.0);
    for (int i = 0; i < 1000; ++i) {
        const HouseholdSpec h = gen.next(i % 2 == 0);
        auto py = gen.box_prices(h.endow_young.size(), 0.25);
        auto po = gen.box_prices(h.endow_old.size(), 0.25);
        const DemandResult d = ces_demand(h, py, po);
        const double s0 = real_savings(h, py, po);
        const double c = scale(gen.rng);
        for (auto& v : py) v *= c;
        for (auto& v : po) v *= c;
        const DemandResult ds = ces_demand(h, py, po);
        for (size_t j = 0; j < d.young.size(); ++j)
            CHECK(ds.young[j] == doctest::Approx(d.young[j]).epsilon(1e-12));
        for (size_t j = 0; j < d.old.size(); ++j)
            CHECK(ds.old[j] == doctest::Approx(d.old[j]).epsilon(1e-12));
        CHECK(real_savings(h, py, po) == doctest::Approx(s0).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("gamma box bound dominates gamma on box prices") {
    RandomHouseholds gen;
    for (int i = 0; i < 1000; ++i) {
        const HouseholdSpec h = gen.next(true);
        const double sigma = 0.3 + 0.5 * (i % 7) / 7.0;
        // Prices relative to p_{t,1}: first coordinate 1, rest in [sigma, 1/sigma].
        auto py = gen.box_prices(h.endow_young.size(), sigma);
        auto po = gen.box_prices(h.endow_old.size(), sigma);
        py[0] = 1.0;
        const double bound = gamma_box_bound(h.utility, sigma);
        CHECK(gamma_share(h.utility, py, po) <= bound + 1e-12);
    }
}

TEST_CASE("savings bounds from Walras' law on box prices") {
    RandomHouseholds gen;
    const double e_max = 4.0;  // endowment generator stays below this
    for (int i = 0; i < 600; ++i) {
        const HouseholdSpec h = gen.next(i % 2 == 0);
        const auto py = gen.box_prices(h.endow_young.size(), 0.3);
        const auto po = gen.box_prices(h.endow_old.size(), 0.3);
        const double s = real_savings(h, py, po);
        CHECK(s <= e_max + 1e-12);
        double ny = 0, no = 0;
        for (double v : py) ny += v;
        for (double v : po) no += v;
        CHECK((ny / no) * s >= -e_max - 1e-12);
    }
}

TEST_CASE("excess demand at period zero is a contract violation") {
    const EconomySpec e = example1::economy();
    const std::vector<double> one{1.0};
    CHECK_THROWS_AS(excess_demand_t(e, 0, one, one, one), std::invalid_argument);
}

TEST_CASE("benchmark economy clears at constant unit prices") {
    const EconomySpec e = example1::economy();
    const std::vector<double> one{1.0};
    const auto z = excess_demand_t(e, 1, one, one, one);
    REQUIRE(z.size() == 1);
    CHECK(std::abs(z[0]) < 1e-14);
}

TEST_CASE("benchmark excess demand away from the fixed point") {
    // z_1 at prices (1, 2, 1) is r_0 phi(r_0) - phi(r_1) = -28/13.
    const EconomySpec e = example1::economy();
    const auto z = excess_demand_t(e, 1, std::vector<double>{1.0}, std::vector<double>{2.0},
                                   std::vector<double>{1.0});
    CHECK(z[0] == doctest::Approx(-28.0 / 13.0).epsilon(1e-14));
    CHECK(z[0] < 0.0);  // phi increasing: the deficit side is pinned down
}

TEST_CASE("symmetric stationary log economy is autarkic at equal prices") {
    EconomySpec e;
    e.bundle.e_max = 2.0;
    HouseholdSpec h;
    h.endow_young = {1.0};
    h.endow_old = {1.0};
    h.utility = LogLinearUtility{{0.5}, {0.5}};
    GenerationSpec g;
    g.goods_young = g.goods_old = 1;
    g.households.push_back({h, 1});
    for (int t = 0; t < 2; ++t) {
        g.t = t;
        e.prefix.push_back(g);
    }
    g.t = 0;
    e.tail = StationaryRepeat{g};
    const std::vector<double> p{0.7};
    const auto z = excess_demand_t(e, 1, p, p, p);
    CHECK(std::abs(z[0]) < 1e-14);
    CHECK(std::abs(real_savings(h, p, p)) < 1e-14);
}

TEST_CASE("joint excess demand at the constant path is zero with length bookkeeping") {
    const EconomySpec e = example1::economy();
    PriceSequence p;
    p.prices.assign(5, {1.0});  // periods 0..4, so t runs 1..3
    const auto z = joint_excess(e, p);
    REQUIRE(z.size() == 3);
    for (double v : z) CHECK(std::abs(v) < 1e-14);
}

TEST_CASE("joint excess length adds up across mixed dimensions") {
    EconomySpec e;
    e.bundle.e_max = 3.0;
    HouseholdSpec h;
    h.endow_young = {1.0, 2.0};
    h.endow_old = {0.5, 0.5};
    h.utility = LogLinearUtility{{0.3, 0.2}, {0.25, 0.25}};
    GenerationSpec g;
    g.goods_young = g.goods_old = 2;
    g.households.push_back({h, 3});
    g.t = 0;
    e.prefix.push_back(g);
    e.tail = StationaryRepeat{g};
    PriceSequence p;
    p.prices.assign(7, {1.0, 1.3});
    CHECK(joint_excess(e, p).size() == 10);  // five cleared periods, two goods
    PriceSequence tiny;
    tiny.prices = {{1.0, 1.0}};
    CHECK_THROWS_AS(joint_excess(e, tiny), std::invalid_argument);
}

TEST_CASE("real savings of the benchmark household") {
    const HouseholdSpec h = benchmark_household();
    const std::vector<double> one{1.0};
    CHECK(real_savings(h, one, one) == doctest::Approx(1.0).epsilon(1e-14));

    // The savings function crosses zero at sqrt(3)/3.
    const double r = std::sqrt(3.0) / 3.0;
    CHECK(std::abs(real_savings(h, std::vector<double>{r}, one)) < 1e-12);
    CHECK(std::abs(example1::phi(r)) < 1e-12);
}

TEST_CASE("real savings agrees with the closed form on a grid and increases") {
    const HouseholdSpec h = benchmark_household();
    const std::vector<double> one{1.0};
    double prev = -1e300;
    for (int i = 0; i <= 100; ++i) {
        const double r = 0.3 + i * (3.0 - 0.3) / 100;
        const double s = real_savings(h, std::vector<double>{r}, one);
        CHECK(s == doctest::Approx(example1::phi(r)).epsilon(1e-12));
        CHECK(s > prev);
        prev = s;
    }
}

TEST_CASE("avg savings equals household savings for identical households and stays below e_max") {
    const EconomySpec e = example1::economy();
    const GenerationSpec gen = e.generation(0);
    const std::vector<double> one{1.0};
    CHECK(avg_savings(gen, one, one) == doctest::Approx(1.0));
    RandomHouseholds prices;
    for (int i = 0; i < 100; ++i) {
        const auto py = prices.box_prices(1, 0.3);
        const auto po = prices.box_prices(1, 0.3);
        CHECK(avg_savings(gen, py, po) <= e.bundle.e_max + 1e-12);
    }
}

TEST_CASE("closed-form demand jacobian matches finite differences") {
    RandomHouseholds gen;
    for (int trial = 0; trial < 60; ++trial) {
        const HouseholdSpec h = gen.next(trial % 2 == 0);
        const size_t ly = h.endow_young.size(), lo = h.endow_old.size(), n = ly + lo;
        auto py = gen.box_prices(ly, 0.4);
        auto po = gen.box_prices(lo, 0.4);
        const auto jac = demand_jacobian(h, py, po);
        const DemandResult d0 = ces_demand(h, py, po);
        const double step = 1e-7;
        for (size_t kcol = 0; kcol < n; ++kcol) {
            auto py2 = py;
            auto po2 = po;
            double* coord = kcol < ly ? &py2[kcol] : &po2[kcol - ly];
            const double hstep = step * std::max(1.0, std::abs(*coord));
            *coord += hstep;
            const DemandResult dp = ces_demand(h, py2, po2);
            for (size_t i = 0; i < n; ++i) {
                const double fd =
                    ((i < ly ? dp.young[i] : dp.old[i - ly]) -
                     (i < ly ? d0.young[i] : d0.old[i - ly])) /
                    hstep;
                CHECK(jac[i * n + kcol] == doctest::Approx(fd).epsilon(5e-5).scale(1.0));
            }
        }
    }
}

TEST_CASE("spend-all demand exhausts its wealth") {
    RandomHouseholds gen;
    for (int i = 0; i < 200; ++i) {
        const HouseholdSpec h = gen.next(i % 2 == 0);
        const auto p = gen.box_prices(h.endow_young.size(), 0.3);
        const double wealth = 1.0 + i * 0.01;
        const auto x = spend_all_demand(h.utility, p, wealth);
        CHECK(dot(p, x) == doctest::Approx(wealth).epsilon(1e-12));
    }
}
