#include <doctest.h>

#include "safercross/engine.hpp"
#include "safercross/error.hpp"
#include "safercross/presets.hpp"
#include "safercross/report_io.hpp"

using namespace safercross;
using namespace safercross::engine;
using nlohmann::json;

namespace {

Scenario Preset(const std::string& kind, json params = json::object()) {
  return parse_scenario(make_preset(kind, params));
}

}  // namespace

TEST_CASE("same seed gives byte-identical reports") {
  for (const auto& kind : {"crossing", "overhear"}) {
    CAPTURE(kind);
    const Scenario s = Preset(kind);
    CHECK(dump_report(run(s)) == dump_report(run(s)));
  }
}

TEST_CASE("different seeds differ") {
  const auto a = run(Preset("crossing", {{"seed", 1}}));
  const auto b = run(Preset("crossing", {{"seed", 2}}));
  CHECK(dump_report(a) != dump_report(b));
}

TEST_CASE("no vehicles means no alerts") {
  json doc = make_preset("crossing", json::object());
  doc["vehicles"] = json::array();
  const auto r = run(parse_scenario(doc));
  CHECK(r.warnings.empty());
  for (const auto& t : r.ticks) CHECK(t.action != risk::AlertAction::AlertDriver);
}

TEST_CASE("one pedestrian alert per approach at 30 km/h") {
  for (int seed = 1; seed <= 5; ++seed) {
    CAPTURE(seed);
    const auto r = run(Preset("crossing", {{"vehicle_speed_kmh", 30}, {"seed", seed}}));
    int alerts = 0;
    for (const auto& e : r.events) alerts += e.kind == "alert" ? 1 : 0;
    CHECK(alerts == 1);
    REQUIRE(r.warnings.size() == 1);
    CHECK(r.warnings[0].action == risk::AlertAction::AlertPedestrian);
  }
}

TEST_CASE("ignored alerts escalate to the driver") {
  const auto r = run(Preset("crossing", {{"vehicle_speed_kmh", 30}, {"ignore", 3}}));
  std::vector<risk::AlertAction> seq;
  for (const auto& w : r.warnings) seq.push_back(w.action);
  REQUIRE(seq.size() >= 4);
  for (int i = 0; i < 3; ++i) CHECK(seq[i] == risk::AlertAction::AlertPedestrian);
  CHECK(seq[3] == risk::AlertAction::AlertDriver);
}

TEST_CASE("duty cycling saves energy and GPS is active on zone entry") {
  const auto r = run(Preset("energy", {{"laps", 1}}));
  REQUIRE(r.pedestrians.size() == 1);
  CHECK(r.pedestrians[0].energy_duty_cycled < r.pedestrians[0].energy_always_on);
  REQUIRE_FALSE(r.zone_entries.empty());
  for (const auto& z : r.zone_entries) CHECK(z.gps_active);
  for (const auto& w : r.wakes) CHECK(w.distance_to_zone >= 0.0);
}

TEST_CASE("duty cycling off keeps the GPS on") {
  const auto r = run(Preset("energy", {{"laps", 1}, {"duty_cycling", false}}));
  CHECK(r.pedestrians[0].sleep_time == 0.0);
  CHECK(r.pedestrians[0].energy_duty_cycled == doctest::Approx(r.pedestrians[0].energy_always_on));
}

TEST_CASE("report JSON round trip") {
  const auto r = run(Preset("overhear"));
  const std::string text = dump_report(r);
  const auto back = report_from_json(json::parse(text));
  CHECK(dump_report(back) == text);
  CHECK_THROWS_AS(report_from_json(json::parse(R"({"scenario": 3})")), Error);
}

TEST_CASE("engine errors carry the actor and time") {
  json doc = make_preset("crossing", json::object());
  doc["pedestrians"][0]["accel"] = json::parse("[[0, 0, 0, 9.81]]");
  doc["context"] = {{"gamma", 0.3}};
  CHECK_NOTHROW(run(parse_scenario(doc)));
}
