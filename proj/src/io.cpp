#include "olg/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace olg {

using nlohmann::json;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

json utility_to_json(const UtilityParams& u) {
    json j;
    if (const auto* ces = std::get_if<CesUtility>(&u)) {
        j["kind"] = "ces";
        j["lambda"] = ces->lambda;
        j["mu"] = ces->mu;
        j["rho"] = ces->rho;
    } else {
        const auto& ll = std::get<LogLinearUtility>(u);
        j["kind"] = "loglinear";
        j["lambda"] = ll.lambda;
        j["mu"] = ll.mu;
    }
    return j;
}

UtilityParams utility_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "ces") {
        CesUtility u;
        u.lambda = j.at("lambda").get<std::vector<double>>();
        u.mu = j.at("mu").get<std::vector<double>>();
        u.rho = j.at("rho").get<double>();
        return u;
    }
    if (kind == "loglinear") {
        LogLinearUtility u;
        u.lambda = j.at("lambda").get<std::vector<double>>();
        u.mu = j.at("mu").get<std::vector<double>>();
        return u;
    }
    throw std::invalid_argument("unknown utility kind '" + kind + "'");
}

json generation_to_json(const GenerationSpec& g) {
    json j;
    j["t"] = g.t;
    j["goods_young"] = g.goods_young;
    j["goods_old"] = g.goods_old;
    j["households"] = json::array();
    for (const auto& grp : g.households) {
        json h;
        h["count"] = grp.count;
        h["endow_young"] = grp.household.endow_young;
        h["endow_old"] = grp.household.endow_old;
        h["utility"] = utility_to_json(grp.household.utility);
        j["households"].push_back(std::move(h));
    }
    return j;
}

GenerationSpec generation_from_json(const json& j) {
    GenerationSpec g;
    g.t = j.value("t", 0);
    g.goods_young = j.at("goods_young").get<int>();
    g.goods_old = j.at("goods_old").get<int>();
    for (const auto& h : j.at("households")) {
        HouseholdGroup grp;
        grp.count = h.value("count", 1);
        grp.household.endow_young = h.at("endow_young").get<std::vector<double>>();
        grp.household.endow_old = h.at("endow_old").get<std::vector<double>>();
        grp.household.utility = utility_from_json(h.at("utility"));
        g.households.push_back(std::move(grp));
    }
    return g;
}

}  // namespace

json economy_to_json(const EconomySpec& e) {
    json j;
    j["bundle"] = {{"alpha_min", e.bundle.alpha_min}, {"alpha_max", e.bundle.alpha_max},
                   {"e_max", e.bundle.e_max},         {"sigma", e.bundle.sigma},
                   {"epsilon", e.bundle.epsilon},     {"delta", e.bundle.delta}};
    j["resource_related"] = e.resource_related;
    j["prefix"] = json::array();
    for (const auto& g : e.prefix) j["prefix"].push_back(generation_to_json(g));
    if (std::holds_alternative<std::monostate>(e.tail)) {
        j["tail_rule"] = nullptr;
    } else if (const auto* rep = std::get_if<StationaryRepeat>(&e.tail)) {
        j["tail_rule"] = {{"kind", "stationary_repeat"},
                          {"generation", generation_to_json(rep->generation)}};
    } else if (const auto* t3 = std::get_if<Theorem3Tail>(&e.tail)) {
        j["tail_rule"] = {{"kind", "theorem3"}, {"k", t3->k}};
    } else {
        j["tail_rule"] = {{"kind", "gale"}, {"w", std::get<GaleTail>(e.tail).w}};
    }
    return j;
}

EconomySpec economy_from_json(const json& j) {
    EconomySpec e;
    const json& b = j.at("bundle");
    e.bundle.alpha_min = b.at("alpha_min").get<double>();
    e.bundle.alpha_max = b.at("alpha_max").get<double>();
    e.bundle.e_max = b.at("e_max").get<double>();
    e.bundle.sigma = b.at("sigma").get<double>();
    e.bundle.epsilon = b.at("epsilon").get<double>();
    e.bundle.delta = b.at("delta").get<double>();
    e.resource_related = j.value("resource_related", true);
    for (const auto& g : j.at("prefix")) e.prefix.push_back(generation_from_json(g));
    if (j.contains("tail_rule") && !j.at("tail_rule").is_null()) {
        const json& t = j.at("tail_rule");
        const std::string kind = t.at("kind").get<std::string>();
        if (kind == "stationary_repeat")
            e.tail = StationaryRepeat{generation_from_json(t.at("generation"))};
        else if (kind == "theorem3")
            e.tail = Theorem3Tail{t.at("k").get<int>()};
        else if (kind == "gale")
            e.tail = GaleTail{t.at("w").get<double>()};
        else
            throw std::invalid_argument("unknown tail_rule kind '" + kind + "'");
    }
    return e;
}

EconomySpec load_economy(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& err) {
        throw std::invalid_argument(path + ": " + err.what());
    }
    try {
        return economy_from_json(j);
    } catch (const json::exception& err) {
        throw std::invalid_argument(path + ": " + err.what());
    }
}

void save_economy(const EconomySpec& e, const std::string& path) {
    write_file(path, economy_to_json(e).dump(2) + "\n");
}

json path_to_json(const PriceSequence& p) {
    json j;
    j["prices"] = p.prices;
    return j;
}

PriceSequence path_from_json(const json& j) {
    PriceSequence p;
    p.prices = j.at("prices").get<std::vector<std::vector<double>>>();
    return p;
}

std::string path_to_csv(const PriceSequence& p) {
    std::string out = "t,i,price\n";
    for (int t = 0; t < p.periods(); ++t)
        for (size_t i = 0; i < p.prices[t].size(); ++i)
            out += std::to_string(t) + "," + std::to_string(i) + "," +
                   format_double(p.prices[t][i]) + "\n";
    return out;
}

PriceSequence path_from_csv(const std::string& text) {
    PriceSequence p;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("t,", 0) == 0) continue;
        std::istringstream row(line);
        std::string t_s, i_s, v_s;
        if (!std::getline(row, t_s, ',') || !std::getline(row, i_s, ',') ||
            !std::getline(row, v_s))
            throw std::invalid_argument("malformed csv row: " + line);
        const int t = std::stoi(t_s);
        const size_t i = static_cast<size_t>(std::stoul(i_s));
        if (t < 0) throw std::invalid_argument("negative period in csv row: " + line);
        if (static_cast<int>(p.prices.size()) <= t) p.prices.resize(t + 1);
        if (p.prices[t].size() <= i) p.prices[t].resize(i + 1);
        p.prices[t][i] = std::stod(v_s);
    }
    return p;
}

namespace {

bool has_suffix(const std::string& s, const std::string& suf) {
    return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

}  // namespace

PriceSequence load_path(const std::string& path) {
    const std::string text = read_file(path);
    if (has_suffix(path, ".json")) return path_from_json(json::parse(text));
    return path_from_csv(text);
}

void save_path(const PriceSequence& p, const std::string& path) {
    if (has_suffix(path, ".json"))
        write_file(path, path_to_json(p).dump(2) + "\n");
    else
        write_file(path, path_to_csv(p));
}

json report_to_json(const DiagnosticsReport& rep) {
    json j;
    j["savings"] = rep.savings;
    j["cass_partials"] = rep.cass_partials;
    j["verdict"] = to_string(rep.verdict);
    j["prone_margin"] = rep.prone_margin ? json(*rep.prone_margin) : json(nullptr);
    j["notes"] = rep.notes;
    return j;
}

json backward_run_to_json(const BackwardRun& run) {
    json j;
    j["k"] = run.k;
    j["converged"] = run.converged;
    j["truncated"] = run.truncated;
    j["residual"] = run.candidate.residual;
    j["boxes_ok"] = run.candidate.boxes_ok;
    j["tail_anchor"] = run.tail_anchor;
    j["returns"] = run.returns;
    j["prices"] = run.candidate.prices.prices;
    return j;
}

std::string backward_runs_to_csv(const std::vector<BackwardRun>& runs) {
    std::string out = "run,k,t,i,price,return\n";
    for (size_t r = 0; r < runs.size(); ++r) {
        const auto& p = runs[r].candidate.prices;
        for (int t = 0; t < p.periods(); ++t)
            for (size_t i = 0; i < p.prices[t].size(); ++i) {
                const std::string ret =
                    (i == 0 && t < static_cast<int>(runs[r].returns.size()))
                        ? format_double(runs[r].returns[t])
                        : "";
                out += std::to_string(r) + "," + std::to_string(runs[r].k) + "," +
                       std::to_string(t) + "," + std::to_string(i) + "," +
                       format_double(p.prices[t][i]) + "," + ret + "\n";
            }
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::invalid_argument("cannot write " + path);
    out << content;
}

}  // namespace olg
