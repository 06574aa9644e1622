#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>

#include "olg/diagnostics.hpp"
#include "olg/example1.hpp"
#include "olg/io.hpp"
#include "olg/solver.hpp"

using namespace olg;
using nlohmann::json;

namespace {

std::string repo_path(const char* rel) {
    // Tests run from the build tree; the data directory sits next to it.
    return std::string(OLG_SOURCE_DIR) + "/" + rel;
}

}  // namespace

TEST_CASE("format_double round-trips arbitrary doubles") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 2000; ++i) {
        const double v = std::exp(u(rng) / 1e5) * u(rng);
        CHECK(std::stod(format_double(v)) == v);
    }
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("economy specs survive a json round trip") {
    const EconomySpec e = example1::economy();
    const json j = economy_to_json(e);
    const EconomySpec back = economy_from_json(j);
    CHECK(economy_to_json(back).dump() == j.dump());
    CHECK(back.prefix.size() == e.prefix.size());
    CHECK(std::holds_alternative<StationaryRepeat>(back.tail));
    const auto& h = back.prefix[0].households[0].household;
    CHECK(std::get<CesUtility>(h.utility).mu[0] == std::sqrt(3.0 / 5.0));
}

TEST_CASE("tail rules serialize by kind") {
    EconomySpec e = example1::economy();
    e.tail = Theorem3Tail{7};
    EconomySpec t3 = economy_from_json(economy_to_json(e));
    CHECK(std::get<Theorem3Tail>(t3.tail).k == 7);
    e.tail = GaleTail{0.7};
    EconomySpec gale = economy_from_json(economy_to_json(e));
    CHECK(std::get<GaleTail>(gale.tail).w == 0.7);
    e.tail = std::monostate{};
    EconomySpec none = economy_from_json(economy_to_json(e));
    CHECK(std::holds_alternative<std::monostate>(none.tail));
}

TEST_CASE("the shipped benchmark economy file matches the built-in economy") {
    const EconomySpec shipped = load_economy(repo_path("data/example1.json"));
    CHECK(economy_to_json(shipped).dump() == economy_to_json(example1::economy()).dump());
    CHECK(validate_spec(shipped).ok());
}

TEST_CASE("parse failures carry the file name and offending field") {
    CHECK_THROWS_WITH_AS(load_economy(repo_path("does-not-exist.json")),
                         doctest::Contains("does-not-exist.json"), std::invalid_argument);
    const std::string bad = std::string(std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp") +
                            "/olg_bad_econ.json";
    write_file(bad, "{\"bundle\": {\"alpha_min\": 0.5}}");
    CHECK_THROWS_WITH_AS(load_economy(bad), doctest::Contains("alpha_max"),
                         std::invalid_argument);
    write_file(bad, "{ not json");
    CHECK_THROWS_WITH_AS(load_economy(bad), doctest::Contains(bad.c_str()),
                         std::invalid_argument);
}

TEST_CASE("price paths round trip through csv and json bit-exactly") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.01, 10.0);
    PriceSequence p;
    for (int t = 0; t < 9; ++t) {
        std::vector<double> block(1 + t % 3);
        for (auto& v : block) v = u(rng);
        p.prices.push_back(block);
    }
    const PriceSequence from_csv = path_from_csv(path_to_csv(p));
    REQUIRE(from_csv.periods() == p.periods());
    for (int t = 0; t < p.periods(); ++t)
        for (size_t i = 0; i < p.prices[t].size(); ++i)
            CHECK(from_csv.prices[t][i] == p.prices[t][i]);

    const PriceSequence from_json = path_from_json(path_to_json(p));
    for (int t = 0; t < p.periods(); ++t) CHECK(from_json.prices[t] == p.prices[t]);
}

TEST_CASE("csv parser tolerates headers and comment trailers") {
    const PriceSequence p =
        path_from_csv("t,i,price\n0,0,1\n1,0,0.5\n# residual = 1e-12\n");
    REQUIRE(p.periods() == 2);
    CHECK(p.prices[1][0] == 0.5);
    CHECK_THROWS_AS(path_from_csv("0,0\n"), std::invalid_argument);
}

TEST_CASE("diagnostics reports conform to the shipped schema") {
    const EconomySpec e = example1::economy();
    SolveOptions opts;
    const ShootResult shot = forward_shoot(e, {1.0}, {1.0}, 8, opts);
    const DiagnosticsReport rep = diagnose(e, shot.path);
    const json out = report_to_json(rep);
    const json schema = json::parse(read_file(repo_path("docs/report.schema.json")));

    for (const auto& key : schema.at("required"))
        CHECK(out.contains(key.get<std::string>()));
    // No extra keys beyond the schema's properties.
    for (const auto& [key, value] : out.items())
        CHECK(schema.at("properties").contains(key));
    CHECK(out.at("savings").is_array());
    CHECK(out.at("cass_partials").is_array());
    CHECK(out.at("verdict").is_string());
    bool verdict_allowed = false;
    for (const auto& v : schema.at("properties").at("verdict").at("enum"))
        verdict_allowed = verdict_allowed || v.get<std::string>() == out.at("verdict");
    CHECK(verdict_allowed);
    CHECK((out.at("prone_margin").is_number() || out.at("prone_margin").is_null()));
    CHECK(out.at("notes").is_array());
}

TEST_CASE("backward run serialization carries the trace columns") {
    const EconomySpec e = example1::economy();
    SolveOptions opts;
    const auto runs = run_backward(e, GaleTail{0.7}, 4, opts);
    REQUIRE(runs.size() == 1);
    const json j = backward_run_to_json(runs[0]);
    CHECK(j.at("k") == 4);
    CHECK(j.at("converged") == true);
    CHECK(j.at("returns").size() == runs[0].returns.size());
    const std::string csv = backward_runs_to_csv(runs);
    CHECK(csv.rfind("run,k,t,i,price,return", 0) == 0);
    // One row per price coordinate plus the header.
    size_t rows = 0;
    for (char c : csv) rows += c == '\n';
    CHECK(rows == 1 + 7);  // k + 3 periods, one good each
}
