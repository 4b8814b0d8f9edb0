#include "safercross/presets.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "safercross/error.hpp"
#include "safercross/geo.hpp"

namespace safercross::engine {

using nlohmann::json;

namespace {

const geo::GeoPoint kOrigin{40.0, -83.0};

json At(double east_m, double north_m) {
  const auto p = geo::offset(kOrigin, east_m, north_m);
  return json::array({p.lat, p.lon});
}

json Timed(double t, double east_m, double north_m) {
  const auto p = geo::offset(kOrigin, east_m, north_m);
  return json::array({t, p.lat, p.lon});
}

// Parameter bag with defaults; anything not declared is an error.
class Params {
 public:
  Params(std::string_view kind, const json& given, std::map<std::string, json> defaults)
      : values_(std::move(defaults)) {
    if (!given.is_object()) throw Error(ErrorCode::ParseError, "preset params must be an object");
    for (const auto& [k, v] : given.items()) {
      auto it = values_.find(k);
      if (it == values_.end()) {
        throw Error(ErrorCode::ParseError,
                    "unknown parameter '" + k + "' for preset " + std::string(kind));
      }
      if (it->second.is_number() && !v.is_number()) {
        throw Error(ErrorCode::ParseError, "parameter '" + k + "' must be a number");
      }
      it->second = v;
    }
  }
  double num(const std::string& k) const { return values_.at(k).get<double>(); }
  const json& raw(const std::string& k) const { return values_.at(k); }

 private:
  std::map<std::string, json> values_;
};

json Segment(int id, double x0, double y0, double x1, double y1) {
  return {{"id", id}, {"a", At(x0, y0)}, {"b", At(x1, y1)}, {"width", 2.0}};
}

// Vehicle that waits at the road start, accelerates uniformly over the
// acceleration zone, then cruises past the crossing at x = 0.
json VehicleRun(double launch, double start_x, double lane_y, double accel_m, double speed,
                double end_x) {
  json traj = json::array();
  if (launch > 0.0) traj.push_back(Timed(0.0, start_x, lane_y));
  const double accel = speed * speed / (2.0 * accel_m);
  const double t_acc = speed / accel;
  const int steps = std::max(1, static_cast<int>(std::ceil(t_acc / 0.1)));
  for (int i = 0; i <= steps; ++i) {
    const double tau = t_acc * i / steps;
    traj.push_back(Timed(launch + tau, start_x + 0.5 * accel * tau * tau, lane_y));
  }
  const double cruise_from = start_x + accel_m;
  traj.push_back(Timed(launch + t_acc + (end_x - cruise_from) / speed, end_x, lane_y));
  return traj;
}

json Crossing(const json& given) {
  Params p("crossing", given,
           {{"vehicle_speed_kmh", 30.0}, {"pedestrian_speed", 1.6}, {"approach_m", 40.0},
            {"zone_radius", 10.0}, {"marker_m", 52.0}, {"road_m", 75.0}, {"accel_zone_m", 20.0},
            {"lane_offset_m", 4.0}, {"gps_sigma", 1.0}, {"threshold", 0.001}, {"seed", 1},
            {"ignore", 0}, {"tail_s", 8.0}, {"decision_lag_s", 4.0}});
  const double v = p.num("vehicle_speed_kmh") / 3.6;
  const double vp = p.num("pedestrian_speed");
  const double approach = p.num("approach_m");
  const double radius = p.num("zone_radius");
  const double road = p.num("road_m");
  const double accel_zone = p.num("accel_zone_m");
  const double marker = std::min(p.num("marker_m"), road - accel_zone);
  const double lane = -p.num("lane_offset_m");
  if (!(v > 0.0) || !(vp > 0.0) || !(approach > radius) || !(road > accel_zone) || !(accel_zone > 0.0)) {
    throw Error(ErrorCode::ParseError, "crossing preset: inconsistent geometry or speeds");
  }

  // Nominal instant of the first risk decision: zone entry, then fix latency,
  // group formation and the first request round trip. The vehicle is timed to
  // be cruising `marker` meters short of the crossing at that instant.
  const double t_decide = (approach - radius) / vp + p.num("decision_lag_s");
  const double launch = std::max(0.0, t_decide - (2.0 * accel_zone + (road - accel_zone - marker)) / v);
  const json vehicle = VehicleRun(launch, -road, lane, accel_zone, v, 30.0);
  const double t_arrive = approach / vp;
  const double duration = std::max(t_arrive + p.num("tail_s"), vehicle.back()[0].get<double>());

  json ped = {{"id", "ped"},
              {"trajectory", json::array({Timed(0.0, approach, 0.0), Timed(t_arrive, 0.0, 0.0),
                                          Timed(duration, 0.0, 0.0)})},
              {"viewing", true},
              {"crossing", 0}};
  const int ignore = p.raw("ignore").get<int>();
  ped["policy"] = ignore > 0 ? json{{"ignore", ignore}} : json("comply");

  return {{"name", "crossing"},
          {"map",
           {{"segments", json::array({Segment(0, approach + 40.0, 0.0, 0.0, 0.0), Segment(1, 0.0, 0.0, -30.0, 0.0)})},
            {"crossings", json::array({At(0.0, 0.0)})},
            {"zone_radius", radius}}},
          {"pedestrians", json::array({ped})},
          {"vehicles", json::array({{{"id", "car"}, {"trajectory", vehicle}}})},
          {"noise", {{"gps_sigma", p.num("gps_sigma")}}},
          {"risk", {{"threshold", p.num("threshold")}}},
          {"duration", duration},
          {"seed", p.raw("seed")}};
}

json LoopPoint(double s, double w, double h) {
  const double perim = 2.0 * (w + h);
  s = std::fmod(s, perim);
  if (s < w) return At(s, 0.0);
  if (s < w + h) return At(w, s - w);
  if (s < 2.0 * w + h) return At(w - (s - w - h), h);
  return At(0.0, h - (s - 2.0 * w - h));
}

json Energy(const json& given) {
  Params p("energy", given,
           {{"laps", 5}, {"speed", 1.4}, {"zone_radius", 20.0}, {"zones", 8}, {"loop_width", 250.0},
            {"loop_height", 175.0}, {"gps_sigma", 1.0}, {"seed", 1}, {"duty_cycling", true}});
  const double w = p.num("loop_width");
  const double h = p.num("loop_height");
  const double speed = p.num("speed");
  const int laps = p.raw("laps").get<int>();
  const int zones = p.raw("zones").get<int>();
  if (laps < 1 || zones < 1 || !(speed > 0.0) || !(w > 0.0) || !(h > 0.0)) {
    throw Error(ErrorCode::ParseError, "energy preset: laps, zones, speed and size must be positive");
  }
  const double perim = 2.0 * (w + h);

  json crossings = json::array();
  for (int k = 0; k < zones; ++k) crossings.push_back(LoopPoint((k + 0.5) * perim / zones, w, h));

  const double corners[] = {0.0, w, w + h, 2.0 * w + h};
  json traj = json::array();
  for (int lap = 0; lap < laps; ++lap) {
    for (double c : corners) {
      const double s = lap * perim + c;
      const json pt = LoopPoint(c, w, h);
      traj.push_back(json::array({s / speed, pt[0], pt[1]}));
    }
  }
  const json start = LoopPoint(0.0, w, h);
  const double t_end = laps * perim / speed;
  traj.push_back(json::array({t_end, start[0], start[1]}));

  return {{"name", "energy"},
          {"map",
           {{"segments", json::array({Segment(0, 0, 0, w, 0), Segment(1, w, 0, w, h), Segment(2, w, h, 0, h),
                                      Segment(3, 0, h, 0, 0)})},
            {"crossings", crossings},
            {"zone_radius", p.num("zone_radius")}}},
          {"pedestrians", json::array({{{"id", "walker"}, {"trajectory", traj}, {"viewing", false}}})},
          {"noise", {{"gps_sigma", p.num("gps_sigma")}}},
          {"power", {{"duty_cycling", p.raw("duty_cycling")}}},
          {"duration", t_end},
          {"seed", p.raw("seed")}};
}

json MapMatch(const json& given) {
  Params p("mapmatch", given,
           {{"gps_sigma", 13.0}, {"fixes", 500}, {"speed", 1.4}, {"straight_m", 400.0},
            {"corner_m", 100.0}, {"seed", 1}, {"hmm_enabled", true}});
  const double straight = p.num("straight_m");
  const double corner = p.num("corner_m");
  const double speed = p.num("speed");
  const int fixes = p.raw("fixes").get<int>();
  if (fixes < 2 || !(speed > 0.0) || !(straight > 0.0) || !(corner > 0.0)) {
    throw Error(ErrorCode::ParseError, "mapmatch preset: fixes, speed and lengths must be positive");
  }
  // Out along the L, then back, for as long as the fixes last.
  const double leg = straight + corner;
  const double duration = fixes - 1;
  json traj = json::array();
  double t = 0.0;
  int trip = 0;
  while (true) {
    const bool out = trip % 2 == 0;
    traj.push_back(out ? Timed(t, 0, 0) : Timed(t, straight, corner));
    traj.push_back(Timed(t + (out ? straight : corner) / speed, straight, 0));
    t += leg / speed;
    if (t > duration) {
      traj.push_back(out ? Timed(t, straight, corner) : Timed(t, 0, 0));
      break;
    }
    ++trip;
  }
  // Consecutive trips share their turnaround point; drop the duplicate.
  json dedup = json::array();
  for (const auto& e : traj) {
    if (!dedup.empty() && dedup.back()[0] == e[0]) continue;
    dedup.push_back(e);
  }

  const double sigma = std::max(p.num("gps_sigma"), 1.0);
  return {{"name", "mapmatch"},
          {"map", {{"segments", json::array({Segment(0, 0, 0, straight, 0), Segment(1, straight, 0, straight, corner)})}}},
          {"pedestrians", json::array({{{"id", "walker"}, {"trajectory", dedup}, {"viewing", false}}})},
          {"noise", {{"gps_sigma", p.num("gps_sigma")}}},
          {"hmm", {{"enabled", p.raw("hmm_enabled")}, {"sigma_z", sigma}}},
          {"duration", duration},
          {"seed", p.raw("seed")}};
}

json Overhear(const json& given) {
  Params p("overhear", given,
           {{"vehicle_speed_kmh", 29.0}, {"zone_radius", 20.0}, {"gps_sigma", 1.0}, {"seed", 1},
            {"duration", 40.0}});
  const double v = p.num("vehicle_speed_kmh") / 3.6;
  const double duration = p.num("duration");
  if (!(v > 0.0) || !(duration > 0.0)) throw Error(ErrorCode::ParseError, "overhear preset: bad speed or duration");
  auto car = [&](const char* id, double start_x) {
    const double end_x = start_x + v * duration;
    return json{{"id", id}, {"trajectory", json::array({Timed(0.0, start_x, -4.0), Timed(duration, end_x, -4.0)})}};
  };
  auto walker = [&](const char* id, double start_x, double speed) {
    const double arrive = std::fabs(start_x) / speed;
    return json{{"id", id},
                {"trajectory", json::array({Timed(0.0, start_x, 0.0), Timed(arrive, 0.0, 0.0), Timed(duration, 0.0, 0.0)})},
                {"viewing", true},
                {"crossing", 0}};
  };
  return {{"name", "overhear"},
          {"map",
           {{"segments", json::array({Segment(0, 80, 0, 0, 0), Segment(1, 0, 0, -80, 0)})},
            {"crossings", json::array({At(0.0, 0.0)})},
            {"zone_radius", p.num("zone_radius")}}},
          {"pedestrians", json::array({walker("ped_a", 25.0, 1.4), walker("ped_b", -40.0, 1.4)})},
          {"vehicles", json::array({car("car_a", -200.0), car("car_b", -240.0)})},
          {"noise", {{"gps_sigma", p.num("gps_sigma")}}},
          {"duration", duration},
          {"seed", p.raw("seed")}};
}

}  // namespace

std::vector<std::string> preset_kinds() { return {"crossing", "energy", "mapmatch", "overhear"}; }

json make_preset(std::string_view kind, const json& params) {
  if (kind == "crossing") return Crossing(params);
  if (kind == "energy") return Energy(params);
  if (kind == "mapmatch") return MapMatch(params);
  if (kind == "overhear") return Overhear(params);
  std::string names;
  for (const auto& k : preset_kinds()) names += (names.empty() ? "" : ", ") + k;
  throw Error(ErrorCode::ParseError, "unknown preset '" + std::string(kind) + "' (valid: " + names + ")");
}

}  // namespace safercross::engine
