#pragma once

// Command-line front end: `run`, `metrics` and `preset` subcommands.
// Exit codes: 0 success, 1 usage error, 2 scenario/report input error,
// 3 runtime error.

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace safercross::cli {

enum ExitCode { kOk = 0, kUsage = 1, kInput = 2, kRuntime = 3 };

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

struct SweepSpec {
  std::string param;
  std::vector<nlohmann::json> values;
};

// Parses "param=v1,v2,..."; numeric values become numbers. Throws
// Error(InvalidArgument) when the value list is empty.
SweepSpec parse_sweep(const std::string& text);

// Applies one sweep value to a scenario document. Preset documents take
// plain names as preset parameters; dotted names address fields of the
// expanded scenario.
nlohmann::json apply_parameter(const nlohmann::json& doc, const std::string& param, const nlohmann::json& value);

}  // namespace safercross::cli
