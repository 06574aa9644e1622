// Command-line front end: parse economy files, run the solvers and the
// backward calculation, emit machine-readable traces. All randomness is
// derived from --seed; identical invocations produce byte-identical output.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "olg/backward.hpp"
#include "olg/diagnostics.hpp"
#include "olg/example1.hpp"
#include "olg/io.hpp"
#include "olg/solver.hpp"

namespace {

using namespace olg;

bool log_enabled() {
    const char* lvl = std::getenv("OLG_FORGE_LOG");
    return lvl && (std::string(lvl) == "debug" || std::string(lvl) == "info");
}

void log_line(const std::string& msg) {
    if (log_enabled()) std::cerr << "[olg-forge] " << msg << "\n";
}

void emit(const std::string& output, const std::string& content) {
    if (output.empty())
        std::cout << content;
    else
        write_file(output, content);
}

std::vector<int> parse_schedule(const std::string& text) {
    std::vector<int> out;
    size_t pos = 0;
    while (pos < text.size()) {
        size_t next = text.find(',', pos);
        if (next == std::string::npos) next = text.size();
        out.push_back(std::stoi(text.substr(pos, next - pos)));
        pos = next + 1;
    }
    return out;
}

std::string report_to_csv(const DiagnosticsReport& rep) {
    std::string out = "field,t,value\n";
    for (size_t t = 0; t < rep.savings.size(); ++t)
        out += "savings," + std::to_string(t) + "," + format_double(rep.savings[t]) + "\n";
    for (size_t t = 0; t < rep.cass_partials.size(); ++t)
        out += "cass_partial," + std::to_string(t) + "," + format_double(rep.cass_partials[t]) + "\n";
    out += std::string("verdict,,") + to_string(rep.verdict) + "\n";
    if (rep.prone_margin)
        out += "prone_margin,," + format_double(*rep.prone_margin) + "\n";
    return out;
}

TailSpec make_tail(const std::string& kind, double w, int k) {
    if (kind == "theorem3") return Theorem3Tail{k};
    if (kind == "gale") return GaleTail{w};
    throw std::invalid_argument("unknown tail kind '" + kind + "' (theorem3|gale)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Equilibrium solver for consumption-loan overlapping generations economies"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    std::string input, output, format = "json", start_path, tail_kind = "theorem3";
    std::string schedule_text = "10,20,30,40,50,60,70,80,90,100";
    std::string path_file;
    double w = 1.0, conv_tol = 1e-8, r0 = 1.0;
    int j_horizon = 1, T = 50, k = 50, jobs = 1;
    SolveOptions opts;

    app.add_option("--seed", opts.seed, "RNG seed for start sampling");
    app.add_option("--tol", opts.tol_residual, "residual tolerance");
    app.add_option("--jobs", jobs, "parallel worker bound");

    auto* validate = app.add_subcommand("validate", "check an economy file against the structural invariants");
    validate->add_option("--input", input, "economy spec file")->required();
    validate->add_option("--output", output, "write the violation report here");
    validate->add_option("--format", format, "json|csv");

    auto* jsighted = app.add_subcommand("solve-jsighted", "enumerate short-horizon equilibria");
    jsighted->add_option("--input", input)->required();
    jsighted->add_option("--j", j_horizon, "market-clearing horizon")->required();
    jsighted->add_option("--output", output);
    jsighted->add_option("--format", format);

    auto* shoot = app.add_subcommand("shoot", "extend a price pair forward period by period");
    shoot->add_option("--input", input)->required();
    shoot->add_option("--r0", r0, "initial return rate (scalar economies): p0=1, p1=1/r0");
    shoot->add_option("--start", start_path, "two-period price file to start from");
    shoot->add_option("--T", T, "number of extension steps");
    shoot->add_option("--output", output);
    shoot->add_option("--format", format);

    auto* backward = app.add_subcommand("backward", "backward calculation from a tail anchor");
    backward->add_option("--input", input)->required();
    backward->add_option("--k", k, "truncation horizon")->required();
    backward->add_option("--tail", tail_kind, "theorem3|gale");
    backward->add_option("--w", w, "return-rate parameter for the gale tail");
    backward->add_option("--output", output);
    backward->add_option("--format", format);

    auto* hpo = app.add_subcommand("approximate-hpo", "limit detection along a horizon schedule");
    hpo->add_option("--input", input)->required();
    hpo->add_option("--k-schedule", schedule_text, "comma-separated increasing horizons");
    hpo->add_option("--tail", tail_kind, "theorem3|gale");
    hpo->add_option("--w", w);
    hpo->add_option("--conv-tol", conv_tol, "componentwise convergence tolerance");
    hpo->add_option("--output", output);

    auto* diagnose_cmd = app.add_subcommand("diagnose", "savings diagnostics and efficiency verdict for a path");
    diagnose_cmd->add_option("--input", input)->required();
    diagnose_cmd->add_option("--path", path_file, "price path (csv or json)")->required();
    diagnose_cmd->add_option("--output", output);
    diagnose_cmd->add_option("--format", format);

    auto* ex1 = app.add_subcommand("example1", "built-in single-good benchmark economy");
    ex1->add_option("--w", w, "tail return-rate parameter")->required();
    ex1->add_option("--k", k, "truncation horizon");
    ex1->add_option("--output", output);
    ex1->add_option("--format", format);

    CLI11_PARSE(app, argc, argv);
    opts.jobs = jobs;

    try {
        if (*validate) {
            const EconomySpec e = load_economy(input);
            const ValidationReport rep = validate_spec(e);
            nlohmann::json out;
            out["violations"] = nlohmann::json::array();
            for (const auto& v : rep.violations)
                out["violations"].push_back({{"code", v.code}, {"period", v.period}, {"message", v.message}});
            out["warnings"] = nlohmann::json::array();
            for (const auto& v : rep.warnings)
                out["warnings"].push_back({{"code", v.code}, {"period", v.period}, {"message", v.message}});
            emit(output, out.dump(2) + "\n");
            if (!rep.ok()) {
                for (const auto& v : rep.violations)
                    std::cerr << "violation: " << v.code << " (t=" << v.period << "): " << v.message << "\n";
                return 1;
            }
            return 0;
        }
        if (*jsighted) {
            const EconomySpec e = load_economy(input);
            const auto paths = solve_j_sighted(e, j_horizon, opts);
            log_line("found " + std::to_string(paths.size()) + " candidate paths");
            if (format == "csv") {
                std::string out = "run,t,i,price,residual,boxes_ok\n";
                for (size_t r = 0; r < paths.size(); ++r)
                    for (int t = 0; t < paths[r].prices.periods(); ++t)
                        for (size_t i = 0; i < paths[r].prices.prices[t].size(); ++i)
                            out += std::to_string(r) + "," + std::to_string(t) + "," +
                                   std::to_string(i) + "," +
                                   format_double(paths[r].prices.prices[t][i]) + "," +
                                   format_double(paths[r].residual) + "," +
                                   (paths[r].boxes_ok ? "1" : "0") + "\n";
                emit(output, out);
            } else {
                nlohmann::json out = nlohmann::json::array();
                for (const auto& c : paths)
                    out.push_back({{"prices", c.prices.prices},
                                   {"residual", c.residual},
                                   {"boxes_ok", c.boxes_ok}});
                emit(output, out.dump(2) + "\n");
            }
            if (paths.empty()) {
                std::cerr << "no roots found within the solver budget\n";
                return 3;
            }
            return 0;
        }
        if (*shoot) {
            const EconomySpec e = load_economy(input);
            std::vector<double> p0, p1;
            if (!start_path.empty()) {
                const PriceSequence s = load_path(start_path);
                if (s.periods() < 2) throw std::invalid_argument("start file needs two periods");
                p0 = s.prices[0];
                p1 = s.prices[1];
            } else {
                if (e.generation(0).goods_young != 1)
                    throw std::invalid_argument("--r0 applies to scalar economies; use --start");
                p0 = {1.0};
                p1 = {1.0 / r0};
            }
            const ShootResult res = forward_shoot(e, p0, p1, T, opts);
            if (format == "csv") {
                std::string out = path_to_csv(res.path.prices);
                out += "# residual = " + format_double(res.path.residual) + "\n";
                if (!res.complete)
                    out += "# incomplete: stalled after " + std::to_string(res.steps_done) + " steps\n";
                emit(output, out);
            } else {
                nlohmann::json out = path_to_json(res.path.prices);
                out["residual"] = res.path.residual;
                out["boxes_ok"] = res.path.boxes_ok;
                out["complete"] = res.complete;
                out["steps_done"] = res.steps_done;
                emit(output, out.dump(2) + "\n");
            }
            return res.complete ? 0 : 3;
        }
        if (*backward) {
            const EconomySpec e = load_economy(input);
            const auto runs = run_backward(e, make_tail(tail_kind, w, k), k, opts);
            if (format == "csv") {
                emit(output, backward_runs_to_csv(runs));
            } else {
                nlohmann::json out = nlohmann::json::array();
                for (const auto& r : runs) out.push_back(backward_run_to_json(r));
                emit(output, out.dump(2) + "\n");
            }
            if (runs.empty()) {
                std::cerr << "all branches died; check the tail parameters or raise the budget\n";
                return 3;
            }
            return 0;
        }
        if (*hpo) {
            const EconomySpec e = load_economy(input);
            const std::vector<int> schedule = parse_schedule(schedule_text);
            const auto res = approximate_hpo(
                e, [&](int kk) { return make_tail(tail_kind, w, kk); }, schedule, conv_tol, opts);
            nlohmann::json out;
            out["converged"] = res.converged;
            out["limit"] = res.limit.prices;
            out["trace"] = nlohmann::json::array();
            for (const auto& tr : res.trace)
                out["trace"].push_back({{"k", tr.k},
                                        {"run_ok", tr.run_ok},
                                        {"p1", tr.p1},
                                        {"prefix_gap", tr.prefix_gap}});
            out["continuation_residual"] = res.continuation.path.residual;
            out["report"] = report_to_json(res.report);
            emit(output, out.dump(2) + "\n");
            if (!res.converged) {
                std::cerr << "no convergence detected over the schedule\n";
                return 3;
            }
            return 0;
        }
        if (*diagnose_cmd) {
            const EconomySpec e = load_economy(input);
            CandidatePath path;
            path.prices = load_path(path_file);
            path.residual = 0.0;
            for (double v : joint_excess(e, path.prices))
                path.residual = std::max(path.residual, std::abs(v));
            path.boxes_ok = path_boxes_ok(path.prices, e.bundle.sigma);
            const DiagnosticsReport rep = diagnose(e, path);
            emit(output, format == "csv" ? report_to_csv(rep)
                                         : report_to_json(rep).dump(2) + "\n");
            return 0;
        }
        if (*ex1) {
            const EconomySpec e = example1::economy();
            const auto runs = run_backward(e, GaleTail{w}, k, opts);
            if (runs.empty()) {
                std::cerr << "backward run produced no branches\n";
                return 3;
            }
            const BackwardRun& run = runs.front();
            const auto& p = run.candidate.prices;
            const double r0_gap = std::abs(run.returns.at(0) - 1.0);
            if (format == "csv") {
                std::string out = "k,t,r_t,p_t,savings_t\n";
                for (int t = 0; t + 1 < p.periods(); ++t) {
                    const double s =
                        avg_savings(e.generation(t), p.prices[t], p.prices[t + 1]);
                    out += std::to_string(k) + "," + std::to_string(t) + "," +
                           format_double(run.returns[t]) + "," +
                           format_double(p.prices[t][0]) + "," + format_double(s) + "\n";
                }
                out += "# |r_0 - 1| = " + format_double(r0_gap) + "\n";
                emit(output, out);
            } else {
                nlohmann::json out = backward_run_to_json(run);
                out["r0_gap"] = r0_gap;
                emit(output, out.dump(2) + "\n");
            }
            return 0;
        }
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 2;
    }
    return 0;
}
