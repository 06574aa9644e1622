#pragma once

#include <string>

#include <json.hpp>

#include "olg/backward.hpp"
#include "olg/diagnostics.hpp"
#include "olg/economy.hpp"

// File formats: economy specs as JSON documents, price paths as CSV or JSON,
// diagnostic reports as JSON. Floating point is rendered with 17 significant
// digits so emitted values round-trip exactly.

namespace olg {

std::string format_double(double v);

nlohmann::json economy_to_json(const EconomySpec& e);
EconomySpec economy_from_json(const nlohmann::json& j);
EconomySpec load_economy(const std::string& path);
void save_economy(const EconomySpec& e, const std::string& path);

nlohmann::json path_to_json(const PriceSequence& p);
PriceSequence path_from_json(const nlohmann::json& j);

// CSV rows "t,i,price", period-major then coordinate.
std::string path_to_csv(const PriceSequence& p);
PriceSequence path_from_csv(const std::string& text);

PriceSequence load_path(const std::string& path);  // dispatches on extension
void save_path(const PriceSequence& p, const std::string& path);

nlohmann::json report_to_json(const DiagnosticsReport& rep);
nlohmann::json backward_run_to_json(const BackwardRun& run);
std::string backward_runs_to_csv(const std::vector<BackwardRun>& runs);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace olg
