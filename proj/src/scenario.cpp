#include "safercross/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "safercross/error.hpp"
#include "safercross/presets.hpp"

namespace safercross::engine {

using nlohmann::json;

// ---- Trajectory ------------------------------------------------------------

Trajectory::Trajectory(std::vector<TimedPoint> points) : points_(std::move(points)) {
  cumulative_.reserve(points_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (i > 0) acc += geo::geodetic_distance(points_[i - 1].point, points_[i].point);
    cumulative_.push_back(acc);
  }
}

// Index i with points_[i].t <= t < points_[i+1].t, clamped to the valid range.
std::size_t Trajectory::segment_index(double t) const {
  auto it = std::upper_bound(points_.begin(), points_.end(), t,
                             [](double v, const TimedPoint& p) { return v < p.t; });
  if (it == points_.begin()) return 0;
  const auto i = static_cast<std::size_t>(it - points_.begin()) - 1;
  return std::min(i, points_.size() >= 2 ? points_.size() - 2 : 0);
}

geo::GeoPoint Trajectory::at(double t) const {
  if (points_.size() == 1 || t <= points_.front().t) return points_.front().point;
  if (t >= points_.back().t) return points_.back().point;
  const std::size_t i = segment_index(t);
  const auto& a = points_[i];
  const auto& b = points_[i + 1];
  const double f = (t - a.t) / (b.t - a.t);
  return {a.point.lat + f * (b.point.lat - a.point.lat), a.point.lon + f * (b.point.lon - a.point.lon)};
}

double Trajectory::speed_at(double t) const {
  if (points_.size() < 2 || t < points_.front().t || t >= points_.back().t) return 0.0;
  const std::size_t i = segment_index(t);
  return (cumulative_[i + 1] - cumulative_[i]) / (points_[i + 1].t - points_[i].t);
}

std::optional<double> Trajectory::heading_at(double t) const {
  if (points_.size() < 2) return std::nullopt;
  const double tc = std::clamp(t, points_.front().t, std::nextafter(points_.back().t, -1e300));
  const std::size_t i = segment_index(tc);
  if (cumulative_[i + 1] - cumulative_[i] <= 0.0) return std::nullopt;
  return geo::bearing_deg(points_[i].point, points_[i + 1].point);
}

double Trajectory::arc_length_at(double t) const {
  if (points_.size() < 2 || t <= points_.front().t) return 0.0;
  if (t >= points_.back().t) return cumulative_.back();
  const std::size_t i = segment_index(t);
  const double f = (t - points_[i].t) / (points_[i + 1].t - points_[i].t);
  return cumulative_[i] + f * (cumulative_[i + 1] - cumulative_[i]);
}

std::optional<double> Trajectory::next_pass(const geo::GeoPoint& p, double from,
                                            double tolerance) const {
  if (points_.size() < 2) {
    if (!points_.empty() && geo::geodetic_distance(points_[0].point, p) <= tolerance) return 0.0;
    return std::nullopt;
  }
  std::optional<double> best_arc;
  double best_d = std::numeric_limits<double>::infinity();
  bool in_run = false;
  for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
    const double len = cumulative_[i + 1] - cumulative_[i];
    if (cumulative_[i + 1] < from) continue;
    double arc = 0.0;
    double d = 0.0;
    if (len <= 0.0) {
      arc = cumulative_[i];
      d = geo::geodetic_distance(points_[i].point, p);
    } else {
      const geo::SidewalkSegment seg{0, points_[i].point, points_[i + 1].point};
      auto proj = geo::project_to_segment(p, seg);
      arc = cumulative_[i] + proj.fraction * len;
      // Closest approach already behind `from`: this segment is past the point.
      d = arc < from - 1e-9 ? std::numeric_limits<double>::infinity() : proj.distance;
    }
    if (d <= tolerance) {
      in_run = true;
      if (d < best_d) {
        best_d = d;
        best_arc = arc;
      }
    } else if (in_run) {
      break;
    }
  }
  return best_arc;
}

std::optional<double> Trajectory::time_at_arc_length(double s) const {
  if (points_.empty() || s > total_length()) return std::nullopt;
  if (s <= 0.0) return points_.front().t;
  auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), s);
  const auto j = static_cast<std::size_t>(it - cumulative_.begin());
  if (j == 0) return points_.front().t;
  const double len = cumulative_[j] - cumulative_[j - 1];
  const double f = len > 0.0 ? (s - cumulative_[j - 1]) / len : 1.0;
  return points_[j - 1].t + f * (points_[j].t - points_[j - 1].t);
}

bool Schedule::at(double t) const {
  return std::any_of(on.begin(), on.end(), [t](const Interval& iv) { return t >= iv.start && t < iv.end; });
}

// ---- JSON helpers ------------------------------------------------------------

namespace {

[[noreturn]] void Bad(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::ParseError, "field '" + field + "': " + what);
}

const json* Find(const json& obj, const char* key) {
  if (!obj.is_object()) return nullptr;
  auto it = obj.find(key);
  return it == obj.end() || it->is_null() ? nullptr : &*it;
}

std::string Join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

double Number(const json& v, const std::string& field) {
  if (!v.is_number()) Bad(field, "expected a number");
  return v.get<double>();
}

void Read(const json& obj, const std::string& path, const char* key, double& out) {
  if (const json* v = Find(obj, key)) out = Number(*v, Join(path, key));
}

void Read(const json& obj, const std::string& path, const char* key, bool& out) {
  if (const json* v = Find(obj, key)) {
    if (!v->is_boolean()) Bad(Join(path, key), "expected true or false");
    out = v->get<bool>();
  }
}

template <typename Int>
void ReadInt(const json& obj, const std::string& path, const char* key, Int& out) {
  if (const json* v = Find(obj, key)) {
    if (!v->is_number_integer()) Bad(Join(path, key), "expected an integer");
    if constexpr (std::is_unsigned_v<Int>) {
      if (v->get<std::int64_t>() < 0) Bad(Join(path, key), "expected a non-negative integer");
    }
    out = v->get<Int>();
  }
}

void ReadString(const json& obj, const std::string& path, const char* key, std::string& out) {
  if (const json* v = Find(obj, key)) {
    if (!v->is_string()) Bad(Join(path, key), "expected a string");
    out = v->get<std::string>();
  }
}

void CheckKeys(const json& obj, const std::string& path, std::initializer_list<const char*> known) {
  if (!obj.is_object()) Bad(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& [k, _] : obj.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* n) { return k == n; })) {
      Bad(Join(path, k), "unknown field");
    }
  }
}

geo::GeoPoint Point(const json& v, const std::string& field) {
  if (v.is_array()) {
    if (v.size() != 2) Bad(field, "expected [lat, lon]");
    return {Number(v[0], field + "[0]"), Number(v[1], field + "[1]")};
  }
  if (v.is_object()) {
    CheckKeys(v, field, {"lat", "lon"});
    const json* lat = Find(v, "lat");
    const json* lon = Find(v, "lon");
    if (!lat || !lon) Bad(field, "expected lat and lon");
    return {Number(*lat, field + ".lat"), Number(*lon, field + ".lon")};
  }
  Bad(field, "expected [lat, lon] or {\"lat\", \"lon\"}");
}

std::filesystem::path Resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::vector<std::vector<double>> ReadCsv(const std::filesystem::path& path, std::size_t columns) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (rows.empty() && line_no == 1) continue;  // header
      throw Error(ErrorCode::ParseError,
                  path.string() + ":" + std::to_string(line_no) + ": non-numeric value");
    }
    if (row.size() != columns) {
      throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(line_no) + ": expected " +
                                             std::to_string(columns) + " columns");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<TimedPoint> TimedPoints(const json& v, const std::string& field) {
  if (!v.is_array()) Bad(field, "expected an array of [t, lat, lon]");
  std::vector<TimedPoint> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string f = field + "[" + std::to_string(i) + "]";
    const json& e = v[i];
    if (e.is_array()) {
      if (e.size() != 3) Bad(f, "expected [t, lat, lon]");
      out.push_back({Number(e[0], f), {Number(e[1], f), Number(e[2], f)}});
    } else if (e.is_object()) {
      CheckKeys(e, f, {"t", "lat", "lon"});
      const json* t = Find(e, "t");
      if (!t) Bad(f, "missing t");
      out.push_back({Number(*t, f + ".t"), Point(json{{"lat", e.value("lat", json())}, {"lon", e.value("lon", json())}}, f)});
    } else {
      Bad(f, "expected [t, lat, lon]");
    }
  }
  return out;
}

// Constant-speed walk along waypoints, optionally starting late.
std::vector<TimedPoint> PathPoints(const json& v, const std::string& field) {
  CheckKeys(v, field, {"start_time", "speed", "waypoints"});
  double start = 0.0;
  double speed = 0.0;
  Read(v, field, "start_time", start);
  Read(v, field, "speed", speed);
  if (!(speed > 0.0)) Bad(field + ".speed", "must be > 0");
  const json* wps = Find(v, "waypoints");
  if (!wps || !wps->is_array() || wps->size() < 2) Bad(field + ".waypoints", "need at least two points");
  std::vector<TimedPoint> out;
  double t = start;
  for (std::size_t i = 0; i < wps->size(); ++i) {
    const auto p = Point((*wps)[i], field + ".waypoints[" + std::to_string(i) + "]");
    if (i > 0) t += geo::geodetic_distance(out.back().point, p) / speed;
    out.push_back({t, p});
  }
  return out;
}

std::vector<TimedPoint> TrajectoryField(const json& obj, const std::string& path,
                                        const std::filesystem::path& base) {
  const json* inline_pts = Find(obj, "trajectory");
  const json* csv = Find(obj, "trajectory_csv");
  const json* walk = Find(obj, "path");
  const int given = (inline_pts != nullptr) + (csv != nullptr) + (walk != nullptr);
  if (given != 1) Bad(path, "exactly one of trajectory, trajectory_csv, path is required");
  if (inline_pts) return TimedPoints(*inline_pts, Join(path, "trajectory"));
  if (walk) return PathPoints(*walk, Join(path, "path"));
  if (!csv->is_string()) Bad(Join(path, "trajectory_csv"), "expected a file name");
  return read_gps_csv(Resolve(base, csv->get<std::string>()));
}

Schedule ScheduleField(const json& obj, const std::string& path, const char* key, Schedule fallback) {
  const json* v = Find(obj, key);
  if (!v) return fallback;
  const std::string field = Join(path, key);
  if (v->is_boolean()) return v->get<bool>() ? Schedule::always() : Schedule::never();
  if (!v->is_array()) Bad(field, "expected true/false or a list of [start, end] intervals");
  Schedule s;
  for (std::size_t i = 0; i < v->size(); ++i) {
    const json& iv = (*v)[i];
    const std::string f = field + "[" + std::to_string(i) + "]";
    if (!iv.is_array() || iv.size() != 2) Bad(f, "expected [start, end]");
    s.on.push_back({Number(iv[0], f), Number(iv[1], f)});
  }
  return s;
}

void ParseMap(const json& m, Scenario& s) {
  CheckKeys(m, "map", {"segments", "crossings", "zones", "zone_radius"});
  std::vector<geo::SidewalkSegment> segments;
  const json* segs = Find(m, "segments");
  if (!segs || !segs->is_array()) Bad("map.segments", "expected an array");
  for (std::size_t i = 0; i < segs->size(); ++i) {
    const std::string f = "map.segments[" + std::to_string(i) + "]";
    const json& e = (*segs)[i];
    CheckKeys(e, f, {"id", "a", "b", "width"});
    geo::SidewalkSegment seg;
    ReadInt(e, f, "id", seg.id);
    if (!Find(e, "id")) seg.id = static_cast<int>(i);
    const json* a = Find(e, "a");
    const json* b = Find(e, "b");
    if (!a || !b) Bad(f, "segment needs a and b");
    seg.a = Point(*a, f + ".a");
    seg.b = Point(*b, f + ".b");
    Read(e, f, "width", seg.width);
    segments.push_back(seg);
  }
  std::vector<geo::GeoPoint> crossings;
  if (const json* cs = Find(m, "crossings")) {
    if (!cs->is_array()) Bad("map.crossings", "expected an array");
    for (std::size_t i = 0; i < cs->size(); ++i) {
      crossings.push_back(Point((*cs)[i], "map.crossings[" + std::to_string(i) + "]"));
    }
  }
  std::vector<geo::AlertZone> zones;
  if (const json* zs = Find(m, "zones")) {
    if (!zs->is_array()) Bad("map.zones", "expected an array");
    for (std::size_t i = 0; i < zs->size(); ++i) {
      const std::string f = "map.zones[" + std::to_string(i) + "]";
      const json& z = (*zs)[i];
      CheckKeys(z, f, {"crossing", "center", "radius"});
      geo::AlertZone zone;
      if (const json* c = Find(z, "crossing")) {
        if (!c->is_number_integer() || c->get<long long>() < 0 || c->get<std::size_t>() >= crossings.size()) {
          Bad(f + ".crossing", "expected a crossing index");
        }
        zone.crossing = crossings[c->get<std::size_t>()];
      } else if (const json* c2 = Find(z, "center")) {
        zone.crossing = Point(*c2, f + ".center");
      } else {
        Bad(f, "zone needs crossing or center");
      }
      Read(z, f, "radius", zone.radius);
      zones.push_back(zone);
    }
  } else if (const json* r = Find(m, "zone_radius")) {
    const double radius = Number(*r, "map.zone_radius");
    for (const auto& c : crossings) zones.push_back({c, radius});
  }
  s.map = geo::SidewalkGraph(std::move(segments), std::move(crossings), std::move(zones));
}

void ParseAccelSpec(const json& v, const std::string& f, context::SyntheticAccelSpec& a) {
  CheckKeys(v, f, {"gravity", "noise_std", "gait_amplitude", "gait_hz", "sample_rate"});
  Read(v, f, "gravity", a.gravity);
  Read(v, f, "noise_std", a.noise_std);
  Read(v, f, "gait_amplitude", a.gait_amplitude);
  Read(v, f, "gait_hz", a.gait_hz);
  Read(v, f, "sample_rate", a.sample_rate);
}

PedestrianSpec ParsePedestrian(const json& e, const std::string& f, const std::filesystem::path& base) {
  CheckKeys(e, f, {"id", "role", "trajectory", "trajectory_csv", "path", "accel", "accel_csv", "gps_csv",
                   "gps", "viewing", "screen_on", "safety_level", "policy", "crossing"});
  PedestrianSpec p;
  ReadString(e, f, "id", p.id);
  std::string role = "pedestrian";
  ReadString(e, f, "role", role);
  if (role != "pedestrian" && role != "driver") Bad(Join(f, "role"), "expected pedestrian or driver");
  p.is_pedestrian = role == "pedestrian";
  p.trajectory = Trajectory(TrajectoryField(e, f, base));
  if (const json* a = Find(e, "accel")) {
    if (a->is_string()) {
      if (a->get<std::string>() != "synthetic") Bad(Join(f, "accel"), "expected \"synthetic\" or samples");
    } else if (a->is_array()) {
      std::vector<context::AccelSample> samples;
      for (std::size_t i = 0; i < a->size(); ++i) {
        const json& s = (*a)[i];
        const std::string fi = Join(f, "accel") + "[" + std::to_string(i) + "]";
        if (!s.is_array() || s.size() != 4) Bad(fi, "expected [t, ax, ay, az]");
        samples.push_back({Number(s[0], fi), Number(s[1], fi), Number(s[2], fi), Number(s[3], fi)});
      }
      p.accel_trace = std::move(samples);
    } else {
      Bad(Join(f, "accel"), "expected \"synthetic\" or samples");
    }
  }
  if (const json* c = Find(e, "accel_csv")) {
    if (!c->is_string()) Bad(Join(f, "accel_csv"), "expected a file name");
    p.accel_trace = read_accel_csv(Resolve(base, c->get<std::string>()));
  }
  if (const json* g = Find(e, "gps")) p.gps_trace = TimedPoints(*g, Join(f, "gps"));
  if (const json* c = Find(e, "gps_csv")) {
    if (!c->is_string()) Bad(Join(f, "gps_csv"), "expected a file name");
    p.gps_trace = read_gps_csv(Resolve(base, c->get<std::string>()));
  }
  p.viewing = ScheduleField(e, f, "viewing", Schedule::always());
  p.screen_on = ScheduleField(e, f, "screen_on", Schedule::always());
  ReadInt(e, f, "safety_level", p.safety_level);
  if (const json* pol = Find(e, "policy")) {
    const std::string pf = Join(f, "policy");
    if (pol->is_string() && pol->get<std::string>() == "comply") {
      p.policy = ResponsePolicy::Comply;
    } else if (pol->is_object()) {
      CheckKeys(*pol, pf, {"ignore"});
      p.policy = ResponsePolicy::Ignore;
      ReadInt(*pol, pf, "ignore", p.ignore_count);
    } else {
      Bad(pf, "expected \"comply\" or {\"ignore\": N}");
    }
  }
  if (const json* c = Find(e, "crossing")) {
    if (!c->is_number_integer() || c->get<long long>() < 0) Bad(Join(f, "crossing"), "expected a crossing index");
    p.crossing = c->get<std::size_t>();
  }
  return p;
}

VehicleSpec ParseVehicle(const json& e, const std::string& f, const std::filesystem::path& base) {
  CheckKeys(e, f, {"id", "trajectory", "trajectory_csv", "path", "mass", "area", "drag", "mu_k", "f0", "rho"});
  VehicleSpec v;
  ReadString(e, f, "id", v.id);
  v.trajectory = Trajectory(TrajectoryField(e, f, base));
  Read(e, f, "mass", v.mass);
  Read(e, f, "area", v.area);
  Read(e, f, "drag", v.drag);
  Read(e, f, "mu_k", v.mu_k);
  Read(e, f, "f0", v.f0);
  Read(e, f, "rho", v.rho);
  return v;
}

void ParseSections(const json& doc, Scenario& s) {
  if (const json* n = Find(doc, "noise")) {
    CheckKeys(*n, "noise", {"gps_sigma", "accel"});
    Read(*n, "noise", "gps_sigma", s.noise.gps_sigma);
    if (const json* a = Find(*n, "accel")) ParseAccelSpec(*a, "noise.accel", s.noise.accel);
  }
  if (const json* c = Find(doc, "comms")) {
    CheckKeys(*c, "comms", {"pdr_near", "pdr_range", "pdr_far_slope", "delay_mean", "delay_jitter",
                            "formation", "autonomous_mean", "autonomous_std", "negotiated_min",
                            "negotiated_max", "req_interval", "rep_stale_after"});
    Read(*c, "comms", "pdr_near", s.comms.link.pdr_near);
    Read(*c, "comms", "pdr_range", s.comms.link.pdr_range);
    Read(*c, "comms", "pdr_far_slope", s.comms.link.pdr_far_slope);
    Read(*c, "comms", "delay_mean", s.comms.link.delay_mean);
    Read(*c, "comms", "delay_jitter", s.comms.link.delay_jitter);
    std::string mode = "autonomous";
    ReadString(*c, "comms", "formation", mode);
    if (mode == "autonomous") {
      s.comms.formation = p2p::FormationMode::Autonomous;
    } else if (mode == "negotiated") {
      s.comms.formation = p2p::FormationMode::Negotiated;
    } else {
      Bad("comms.formation", "expected autonomous or negotiated");
    }
    Read(*c, "comms", "autonomous_mean", s.comms.formation_params.autonomous_mean);
    Read(*c, "comms", "autonomous_std", s.comms.formation_params.autonomous_std);
    Read(*c, "comms", "negotiated_min", s.comms.formation_params.negotiated_min);
    Read(*c, "comms", "negotiated_max", s.comms.formation_params.negotiated_max);
    Read(*c, "comms", "req_interval", s.comms.req_interval);
    Read(*c, "comms", "rep_stale_after", s.comms.rep_stale_after);
  }
  if (const json* r = Find(doc, "risk")) {
    CheckKeys(*r, "risk", {"threshold", "pass_margin_s", "escalation_after", "brisk_speed",
                           "running_speed", "reaction_mu", "reaction_sigma"});
    Read(*r, "risk", "threshold", s.risk.policy.threshold);
    Read(*r, "risk", "pass_margin_s", s.risk.policy.pass_margin_s);
    ReadInt(*r, "risk", "escalation_after", s.risk.policy.escalation_after);
    Read(*r, "risk", "brisk_speed", s.risk.policy.brisk_speed);
    Read(*r, "risk", "running_speed", s.risk.policy.running_speed);
    Read(*r, "risk", "reaction_mu", s.risk.reaction.mu);
    Read(*r, "risk", "reaction_sigma", s.risk.reaction.sigma);
  }
  if (const json* p = Find(doc, "power")) {
    CheckKeys(*p, "power", {"active_watts", "sleep_watts", "startup_surge_joules", "duty_cycling",
                            "v_max", "reversal_threshold_deg", "reversal_ticks", "guard_m",
                            "min_sleep_s"});
    Read(*p, "power", "active_watts", s.power.model.active_watts);
    Read(*p, "power", "sleep_watts", s.power.model.sleep_watts);
    Read(*p, "power", "startup_surge_joules", s.power.model.startup_surge_joules);
    Read(*p, "power", "duty_cycling", s.power.duty_cycling);
    Read(*p, "power", "v_max", s.power.policy.v_max);
    Read(*p, "power", "reversal_threshold_deg", s.power.policy.reversal_threshold_deg);
    ReadInt(*p, "power", "reversal_ticks", s.power.policy.reversal_ticks);
    Read(*p, "power", "guard_m", s.power.policy.guard_m);
    Read(*p, "power", "min_sleep_s", s.power.policy.min_sleep_s);
  }
  if (const json* h = Find(doc, "hmm")) {
    CheckKeys(*h, "hmm", {"enabled", "sigma_z", "beta", "omega", "epsilon", "alpha", "v_max",
                          "reject_threshold", "adapt_sigma", "beta_warmup", "beta_floor",
                          "reanchor_after_rejects"});
    auto& m = s.mapmatch.model;
    Read(*h, "hmm", "enabled", s.mapmatch.enabled);
    Read(*h, "hmm", "sigma_z", m.sigma_z);
    Read(*h, "hmm", "beta", m.beta);
    ReadInt(*h, "hmm", "omega", m.omega);
    ReadInt(*h, "hmm", "epsilon", m.epsilon);
    Read(*h, "hmm", "alpha", m.alpha);
    Read(*h, "hmm", "v_max", m.v_max);
    Read(*h, "hmm", "reject_threshold", m.reject_threshold);
    auto& o = s.mapmatch.options;
    Read(*h, "hmm", "adapt_sigma", o.adapt_sigma);
    ReadInt(*h, "hmm", "beta_warmup", o.beta_warmup);
    Read(*h, "hmm", "beta_floor", o.beta_floor);
    ReadInt(*h, "hmm", "reanchor_after_rejects", o.reanchor_after_rejects);
  }
  if (const json* c = Find(doc, "context")) {
    CheckKeys(*c, "context", {"gamma", "filter_alpha", "window_span", "training_windows",
                              "stationary_below", "running_from", "speed_baseline_s"});
    if (const json* g = Find(*c, "gamma")) s.context.gamma = Number(*g, "context.gamma");
    Read(*c, "context", "filter_alpha", s.context.filter_alpha);
    Read(*c, "context", "window_span", s.context.window_span);
    ReadInt(*c, "context", "training_windows", s.context.training_windows);
    Read(*c, "context", "stationary_below", s.context.motion.stationary_below);
    Read(*c, "context", "running_from", s.context.motion.running_from);
    Read(*c, "context", "speed_baseline_s", s.context.speed_baseline_s);
  }
}

bool Sorted(const std::vector<TimedPoint>& pts) {
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (!(pts[i].t > pts[i - 1].t)) return false;
  }
  return true;
}

void Validate(const Scenario& s) {
  std::vector<std::string> v;
  auto check = [&](bool ok, const std::string& msg) {
    if (!ok) v.push_back(msg);
  };
  check(s.tick > 0.0, "tick must be > 0");
  check(s.gps_interval > 0.0, "gps_interval must be > 0");
  check(s.duration > 0.0, "duration must be > 0");
  check(!s.pedestrians.empty() || !s.vehicles.empty(), "scenario has no actors");
  std::vector<std::string> ids;
  for (const auto& p : s.pedestrians) {
    const std::string who = "pedestrian '" + p.id + "'";
    ids.push_back(p.id);
    check(!p.id.empty(), "pedestrian without id");
    check(!p.trajectory.empty(), who + ": empty trajectory");
    check(Sorted(p.trajectory.points()), who + ": trajectory is not time-sorted");
    if (p.gps_trace) check(Sorted(*p.gps_trace), who + ": gps trace is not time-sorted");
    if (p.accel_trace) {
      bool ok = true;
      for (std::size_t i = 1; i < p.accel_trace->size(); ++i) ok = ok && (*p.accel_trace)[i].t > (*p.accel_trace)[i - 1].t;
      check(ok, who + ": accel trace is not time-sorted");
    }
    check(p.safety_level >= 0 && p.safety_level <= 3, who + ": safety_level must be 0..3");
    check(p.ignore_count >= 0, who + ": ignore count must be >= 0");
    if (p.crossing) check(*p.crossing < s.map.crossings().size(), who + ": crossing index out of range");
    for (const auto& iv : p.viewing.on) check(iv.end >= iv.start, who + ": viewing interval ends before it starts");
    for (const auto& iv : p.screen_on.on) check(iv.end >= iv.start, who + ": screen_on interval ends before it starts");
  }
  for (const auto& veh : s.vehicles) {
    const std::string who = "vehicle '" + veh.id + "'";
    ids.push_back(veh.id);
    check(!veh.id.empty(), "vehicle without id");
    check(!veh.trajectory.empty(), who + ": empty trajectory");
    check(Sorted(veh.trajectory.points()), who + ": trajectory is not time-sorted");
    check(veh.mass > 0.0 && veh.area > 0.0, who + ": mass and area must be > 0");
    check(veh.mu_k > 0.0 && veh.drag >= 0.0 && veh.f0 >= 0.0 && veh.rho >= 0.0,
          who + ": resistance constants out of range");
  }
  std::sort(ids.begin(), ids.end());
  check(std::adjacent_find(ids.begin(), ids.end()) == ids.end(), "actor ids must be unique");
  if (std::any_of(s.pedestrians.begin(), s.pedestrians.end(),
                  [](const PedestrianSpec& p) { return p.is_pedestrian; })) {
    check(!s.map.segments().empty(), "map has no sidewalk segments");
  }
  check(s.noise.gps_sigma >= 0.0, "noise.gps_sigma must be >= 0");
  check(s.noise.accel.sample_rate > 0.0, "noise.accel.sample_rate must be > 0");
  check(s.comms.req_interval > 0.0 && s.comms.rep_stale_after > 0.0, "comms intervals must be > 0");
  check(s.risk.policy.threshold >= 0.0 && s.risk.policy.threshold <= 1.0, "risk.threshold must be in [0, 1]");
  check(s.risk.reaction.sigma > 0.0, "risk.reaction_sigma must be > 0");
  check(s.risk.policy.brisk_speed > 0.0 && s.risk.policy.running_speed > 0.0, "assumed speeds must be > 0");
  check(s.power.policy.v_max > 0.0, "power.v_max must be > 0");
  check(s.context.training_windows >= 2, "context.training_windows must be >= 2");
  check(s.context.speed_baseline_s > 0.0, "context.speed_baseline_s must be > 0");
  if (s.context.gamma) check(*s.context.gamma > 0.0, "context.gamma must be > 0");
  auto guarded = [&](const char* what, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      v.push_back(std::string(what) + ": " + e.detail());
    }
  };
  guarded("comms", [&] { s.comms.link.validate(); });
  guarded("power", [&] { s.power.model.validate(); });
  guarded("hmm", [&] { s.mapmatch.model.validate(); });
  guarded("context", [&] { context::LowPassFilter check_alpha(s.context.filter_alpha); });
  if (!v.empty()) {
    std::string msg;
    for (const auto& m : v) msg += (msg.empty() ? "" : "; ") + m;
    throw Error(ErrorCode::ValidationError, msg);
  }
}

}  // namespace

std::vector<TimedPoint> read_gps_csv(const std::filesystem::path& path) {
  std::vector<TimedPoint> out;
  for (const auto& r : ReadCsv(path, 3)) out.push_back({r[0], {r[1], r[2]}});
  return out;
}

std::vector<context::AccelSample> read_accel_csv(const std::filesystem::path& path) {
  std::vector<context::AccelSample> out;
  for (const auto& r : ReadCsv(path, 4)) out.push_back({r[0], r[1], r[2], r[3]});
  return out;
}

json expand_scenario_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("preset")) return doc;
  CheckKeys(doc, "", {"preset", "params"});
  if (!doc["preset"].is_string()) Bad("preset", "expected a preset name");
  json params = doc.value("params", json::object());
  if (!params.is_object()) Bad("params", "expected an object");
  return make_preset(doc["preset"].get<std::string>(), params);
}

json read_scenario_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open scenario file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  return expand_scenario_json(doc);
}

Scenario parse_scenario(const json& raw, const std::filesystem::path& base_dir) {
  const json doc = expand_scenario_json(raw);
  CheckKeys(doc, "", {"name", "map", "pedestrians", "vehicles", "noise", "comms", "risk", "power",
                      "hmm", "context", "tick", "gps_interval", "duration", "seed"});
  Scenario s;
  ReadString(doc, "", "name", s.name);
  const json* m = Find(doc, "map");
  if (!m) Bad("map", "required");
  try {
    ParseMap(*m, s);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ValidationError) throw;
    throw Error(ErrorCode::ValidationError, "map: " + e.detail());
  }
  if (const json* ps = Find(doc, "pedestrians")) {
    if (!ps->is_array()) Bad("pedestrians", "expected an array");
    for (std::size_t i = 0; i < ps->size(); ++i) {
      s.pedestrians.push_back(ParsePedestrian((*ps)[i], "pedestrians[" + std::to_string(i) + "]", base_dir));
    }
  }
  if (const json* vs = Find(doc, "vehicles")) {
    if (!vs->is_array()) Bad("vehicles", "expected an array");
    for (std::size_t i = 0; i < vs->size(); ++i) {
      s.vehicles.push_back(ParseVehicle((*vs)[i], "vehicles[" + std::to_string(i) + "]", base_dir));
    }
  }
  ParseSections(doc, s);
  Read(doc, "", "tick", s.tick);
  Read(doc, "", "gps_interval", s.gps_interval);
  s.mapmatch.model.gps_interval = s.gps_interval;
  ReadInt(doc, "", "seed", s.seed);
  if (const json* d = Find(doc, "duration")) {
    s.duration = Number(*d, "duration");
  } else {
    for (const auto& p : s.pedestrians) {
      if (!p.trajectory.empty()) s.duration = std::max(s.duration, p.trajectory.end_time());
    }
    for (const auto& v : s.vehicles) {
      if (!v.trajectory.empty()) s.duration = std::max(s.duration, v.trajectory.end_time());
    }
  }
  Validate(s);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  const json doc = read_scenario_json(path);
  return parse_scenario(doc, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

}  // namespace safercross::engine
