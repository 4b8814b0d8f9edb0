#pragma once

// JSON round-trip for simulation reports, and plot-ready CSV tables for
// metrics.

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "safercross/metrics.hpp"

namespace safercross::engine {

nlohmann::ordered_json report_to_json(const SimReport& r);
// Throws Error(ParseError) on malformed documents.
SimReport report_from_json(const nlohmann::json& doc);

std::string dump_report(const SimReport& r);
SimReport load_report(const std::filesystem::path& path);

nlohmann::ordered_json metrics_to_json(const Metrics& m);

// CSV tables for one metric name as (file name, contents) pairs. Throws
// Error(InvalidArgument) for unknown names.
std::vector<std::pair<std::string, std::string>> metric_tables(const Metrics& m, const std::string& name);

}  // namespace safercross::engine
