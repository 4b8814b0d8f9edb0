#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "safercross/cli.hpp"
#include "safercross/error.hpp"

using namespace safercross;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result Cli(std::vector<std::string> args) {
  args.insert(args.begin(), "safercross");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path Tmp(const std::string& name) {
  const fs::path p = fs::path(SAFERCROSS_TEST_TMP) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> Lines(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string line;
  while (std::getline(ss, line)) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("preset and run write report and metrics") {
  const fs::path dir = Tmp("cli_run");
  REQUIRE(Cli({"preset", "crossing", "--out", (dir / "s.json").string()}).code == 0);
  const auto r = Cli({"run", "--scenario", (dir / "s.json").string(), "--seed", "7", "--out", (dir / "out").string()});
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "out" / "report.json"));
  CHECK(fs::exists(dir / "out" / "metrics.json"));
  CHECK(fs::exists(dir / "out" / "location_error_cdf.csv"));

  // Byte-stable outputs for the same scenario and seed.
  REQUIRE(Cli({"run", "--scenario", (dir / "s.json").string(), "--seed", "7", "--out", (dir / "again").string()}).code == 0);
  for (const auto& f : fs::directory_iterator(dir / "out")) {
    CHECK(Slurp(f.path()) == Slurp(dir / "again" / f.path().filename()));
  }
}

TEST_CASE("missing scenario file") {
  const auto r = Cli({"run", "--scenario", "/nonexistent/s.json", "--out", Tmp("cli_missing").string()});
  CHECK(r.code == cli::kInput);
  CHECK(r.err.find("ParseError") != std::string::npos);
}

TEST_CASE("invalid scenario exits with the scenario code") {
  const fs::path dir = Tmp("cli_invalid");
  std::ofstream(dir / "s.json") << R"({"map": {"segments": []}, "tick": -1})";
  CHECK(Cli({"run", "--scenario", (dir / "s.json").string(), "--out", dir.string()}).code == cli::kInput);
}

TEST_CASE("usage errors") {
  CHECK(Cli({}).code == cli::kUsage);
  CHECK(Cli({"run", "--out", "x"}).code == cli::kUsage);
  CHECK(Cli({"frobnicate"}).code == cli::kUsage);
  CHECK(Cli({"--help"}).code == cli::kOk);
}

TEST_CASE("metrics subcommand") {
  const fs::path dir = Tmp("cli_metrics");
  std::ofstream(dir / "s.json") << R"({"preset": "crossing", "params": {}})";
  REQUIRE(Cli({"run", "--scenario", (dir / "s.json").string(), "--out", dir.string()}).code == 0);
  const std::string report = (dir / "report.json").string();

  const auto cdf = Cli({"metrics", "--report", report, "--metrics", "location_error_cdf"});
  CHECK(cdf.code == 0);
  CHECK(cdf.out.find("error_m,cumulative_fraction") != std::string::npos);

  const auto all = Cli({"metrics", "--report", report, "--metrics", "all", "--out", (dir / "all").string()});
  CHECK(all.code == 0);
  for (const char* f : {"location_error_cdf.csv", "location_error_cdf_raw.csv", "mean_errors.csv", "energy.csv",
                        "viewing_accuracy.csv", "warning_time.csv", "speed_curves.csv", "wake_distances.csv"}) {
    CAPTURE(f);
    CHECK(fs::exists(dir / "all" / f));
  }

  const auto bad = Cli({"metrics", "--report", report, "--metrics", "bogus"});
  CHECK(bad.code == cli::kUsage);
  CHECK(bad.err.find("location_error_cdf") != std::string::npos);
  CHECK(Cli({"metrics", "--report", (dir / "none.json").string()}).code == cli::kInput);
}

TEST_CASE("speed sweep gives one row per speed with rising probability") {
  const fs::path dir = Tmp("cli_sweep");
  std::ofstream(dir / "s.json") << R"({"preset": "crossing", "params": {}})";
  const auto r = Cli({"run", "--scenario", (dir / "s.json").string(), "--out", dir.string(), "--sweep",
                      "vehicle_speed_kmh=20,30,40,50"});
  REQUIRE(r.code == 0);
  const auto lines = Lines(Slurp(dir / "sweep.csv"));
  REQUIRE(lines.size() == 5);
  std::vector<std::string> header;
  {
    std::stringstream ss(lines[0]);
    std::string c;
    while (std::getline(ss, c, ',')) header.push_back(c);
  }
  const auto col = std::find(header.begin(), header.end(), "mean_probability") - header.begin();
  double prev = -1.0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::stringstream ss(lines[i]);
    std::string c;
    for (long k = 0; k <= col; ++k) std::getline(ss, c, ',');
    const double p = std::stod(c);
    CHECK(p > prev);
    prev = p;
  }
}

TEST_CASE("sweep parsing") {
  const auto s = cli::parse_sweep("vehicle_speed_kmh=20,30.5,fast");
  CHECK(s.param == "vehicle_speed_kmh");
  REQUIRE(s.values.size() == 3);
  CHECK(s.values[0] == 20);
  CHECK(s.values[1] == 30.5);
  CHECK(s.values[2] == "fast");
  CHECK_THROWS_AS(cli::parse_sweep("speed="), Error);
  CHECK_THROWS_AS(cli::parse_sweep("novalues"), Error);

  const auto doc = cli::apply_parameter(nlohmann::json::parse(R"({"preset": "crossing"})"), "seed", 4);
  CHECK(doc["params"]["seed"] == 4);
  const auto dotted = cli::apply_parameter(nlohmann::json::parse(R"({"preset": "crossing"})"), "noise.gps_sigma", 3);
  CHECK(dotted["noise"]["gps_sigma"] == 3);
}
