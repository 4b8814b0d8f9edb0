#include "safercross/report_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "safercross/error.hpp"

namespace safercross::engine {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

ordered_json Pt(const geo::GeoPoint& p) { return ordered_json::array({p.lat, p.lon}); }

geo::GeoPoint ReadPt(const json& v) { return {v.at(0).get<double>(), v.at(1).get<double>()}; }

template <typename T>
void PutOpt(ordered_json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

template <typename T>
std::optional<T> GetOpt(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

std::string_view OutcomeName(mapmatch::FixOutcome o) {
  switch (o) {
    case mapmatch::FixOutcome::Accepted: return "accepted";
    case mapmatch::FixOutcome::Projected: return "projected";
    case mapmatch::FixOutcome::Rejected: return "rejected";
  }
  return "accepted";
}

mapmatch::FixOutcome ParseOutcome(const std::string& s) {
  if (s == "projected") return mapmatch::FixOutcome::Projected;
  if (s == "rejected") return mapmatch::FixOutcome::Rejected;
  if (s == "accepted") return mapmatch::FixOutcome::Accepted;
  throw Error(ErrorCode::ParseError, "unknown fix outcome '" + s + "'");
}

risk::AlertAction ParseAction(const std::string& s) {
  if (s == "None") return risk::AlertAction::None;
  if (s == "AlertPedestrian") return risk::AlertAction::AlertPedestrian;
  if (s == "AlertDriver") return risk::AlertAction::AlertDriver;
  throw Error(ErrorCode::ParseError, "unknown alert action '" + s + "'");
}

ordered_json Rep(const p2p::RepMsg& r) {
  return {{"vehicle_id", r.vehicle_id}, {"v_c", r.v_c}, {"m_v", r.m_v},
          {"a_v", r.a_v},               {"t_c", r.t_c}, {"timestamp", r.timestamp}};
}

p2p::RepMsg ReadRep(const json& j) {
  return {j.at("vehicle_id").get<std::string>(), j.at("v_c").get<double>(), j.at("m_v").get<double>(),
          j.at("a_v").get<double>(), j.at("t_c").get<double>(), j.at("timestamp").get<double>()};
}

std::string Num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string Opt(const std::optional<double>& v) { return v ? Num(*v) : ""; }

}  // namespace

ordered_json report_to_json(const SimReport& r) {
  ordered_json j;
  j["scenario"] = r.scenario;
  j["seed"] = r.seed;
  j["tick"] = r.tick;
  j["duration"] = r.duration;
  j["gamma"] = r.gamma;
  j["power_model"] = {{"active_watts", r.power_model.active_watts},
                      {"sleep_watts", r.power_model.sleep_watts},
                      {"startup_surge_joules", r.power_model.startup_surge_joules}};
  ordered_json paths = ordered_json::object();
  for (const auto& [id, pts] : r.truth_paths) {
    ordered_json arr = ordered_json::array();
    for (const auto& p : pts) arr.push_back({p.t, p.point.lat, p.point.lon});
    paths[id] = std::move(arr);
  }
  j["truth_paths"] = std::move(paths);

  ordered_json ticks = ordered_json::array();
  for (const auto& t : r.ticks) {
    ordered_json e{{"t", t.t}, {"actor", t.actor}, {"truth", Pt(t.truth)}};
    if (t.pedestrian) {
      e["gps_active"] = t.gps_active;
      e["in_zone"] = t.in_zone;
      e["viewing_truth"] = t.viewing_truth;
      PutOpt(e, "viewing_detected", t.viewing_detected);
      if (t.action != risk::AlertAction::None) e["action"] = risk::to_string(t.action);
      PutOpt(e, "t_warning", t.t_warning);
      PutOpt(e, "probability", t.probability);
    }
    ticks.push_back(std::move(e));
  }
  j["ticks"] = std::move(ticks);

  ordered_json fixes = ordered_json::array();
  for (const auto& f : r.fixes) {
    ordered_json e{{"t", f.t}, {"actor", f.actor}, {"raw", Pt(f.raw)}, {"calibrated", Pt(f.calibrated)},
                   {"outcome", OutcomeName(f.outcome)}};
    PutOpt(e, "segment", f.segment);
    fixes.push_back(std::move(e));
  }
  j["fixes"] = std::move(fixes);

  ordered_json msgs = ordered_json::array();
  for (const auto& m : r.messages) {
    ordered_json e{{"sent_at", m.sent_at}, {"deliver_at", m.deliver_at}, {"kind", m.kind},
                   {"from", m.from},       {"to", m.to},                 {"delivered", m.delivered}};
    if (m.rep) e["rep"] = Rep(*m.rep);
    msgs.push_back(std::move(e));
  }
  j["messages"] = std::move(msgs);

  ordered_json events = ordered_json::array();
  for (const auto& e : r.events) {
    events.push_back({{"t", e.t}, {"kind", e.kind}, {"actor", e.actor}, {"detail", e.detail}});
  }
  j["events"] = std::move(events);

  ordered_json warnings = ordered_json::array();
  for (const auto& w : r.warnings) {
    ordered_json e{{"t", w.t}, {"pedestrian", w.pedestrian}, {"vehicle", w.vehicle},
                   {"action", risk::to_string(w.action)}};
    PutOpt(e, "t_warning", w.t_warning);
    PutOpt(e, "t_warning_gt", w.t_warning_gt);
    PutOpt(e, "probability", w.probability);
    PutOpt(e, "vehicle_speed_kmh", w.vehicle_speed_kmh);
    warnings.push_back(std::move(e));
  }
  j["warnings"] = std::move(warnings);

  ordered_json wakes = ordered_json::array();
  for (const auto& w : r.wakes) wakes.push_back({{"t", w.t}, {"pedestrian", w.pedestrian}, {"distance_to_zone", w.distance_to_zone}});
  j["wakes"] = std::move(wakes);

  ordered_json entries = ordered_json::array();
  for (const auto& z : r.zone_entries) entries.push_back({{"t", z.t}, {"pedestrian", z.pedestrian}, {"gps_active", z.gps_active}});
  j["zone_entries"] = std::move(entries);

  ordered_json peds = ordered_json::array();
  for (const auto& p : r.pedestrians) {
    ordered_json known = ordered_json::object();
    for (const auto& [id, kv] : p.known_vehicles) {
      known[id] = {{"rep", Rep(kv.rep)}, {"t_delay", kv.t_delay}, {"received_at", kv.received_at}};
    }
    ordered_json e{{"id", p.id},
                   {"energy_duty_cycled", p.energy_duty_cycled},
                   {"energy_always_on", p.energy_always_on},
                   {"active_time", p.active_time},
                   {"sleep_time", p.sleep_time},
                   {"known_vehicles", std::move(known)}};
    PutOpt(e, "t_delay", p.t_delay);
    peds.push_back(std::move(e));
  }
  j["pedestrians"] = std::move(peds);
  return j;
}

SimReport report_from_json(const json& j) {
  try {
    SimReport r;
    r.scenario = j.at("scenario").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.tick = j.at("tick").get<double>();
    r.duration = j.at("duration").get<double>();
    r.gamma = j.at("gamma").get<double>();
    const auto& pm = j.at("power_model");
    r.power_model = {pm.at("active_watts").get<double>(), pm.at("sleep_watts").get<double>(),
                     pm.at("startup_surge_joules").get<double>()};
    for (const auto& [id, arr] : j.at("truth_paths").items()) {
      auto& pts = r.truth_paths[id];
      for (const auto& e : arr) pts.push_back({e.at(0).get<double>(), {e.at(1).get<double>(), e.at(2).get<double>()}});
    }
    for (const auto& e : j.at("ticks")) {
      TickRecord t;
      t.t = e.at("t").get<double>();
      t.actor = e.at("actor").get<std::string>();
      t.truth = ReadPt(e.at("truth"));
      t.pedestrian = e.contains("gps_active");
      if (t.pedestrian) {
        t.gps_active = e.at("gps_active").get<bool>();
        t.in_zone = e.at("in_zone").get<bool>();
        t.viewing_truth = e.at("viewing_truth").get<bool>();
        t.viewing_detected = GetOpt<bool>(e, "viewing_detected");
        if (e.contains("action")) t.action = ParseAction(e.at("action").get<std::string>());
        t.t_warning = GetOpt<double>(e, "t_warning");
        t.probability = GetOpt<double>(e, "probability");
      }
      r.ticks.push_back(std::move(t));
    }
    for (const auto& e : j.at("fixes")) {
      FixRecord f;
      f.t = e.at("t").get<double>();
      f.actor = e.at("actor").get<std::string>();
      f.raw = ReadPt(e.at("raw"));
      f.calibrated = ReadPt(e.at("calibrated"));
      f.outcome = ParseOutcome(e.at("outcome").get<std::string>());
      f.segment = GetOpt<geo::SegmentId>(e, "segment");
      r.fixes.push_back(std::move(f));
    }
    for (const auto& e : j.at("messages")) {
      MessageRecord m;
      m.sent_at = e.at("sent_at").get<double>();
      m.deliver_at = e.at("deliver_at").get<double>();
      m.kind = e.at("kind").get<std::string>();
      m.from = e.at("from").get<std::string>();
      m.to = e.at("to").get<std::string>();
      m.delivered = e.at("delivered").get<bool>();
      if (e.contains("rep")) m.rep = ReadRep(e.at("rep"));
      r.messages.push_back(std::move(m));
    }
    for (const auto& e : j.at("events")) {
      r.events.push_back({e.at("t").get<double>(), e.at("kind").get<std::string>(), e.at("actor").get<std::string>(),
                          e.at("detail").get<std::string>()});
    }
    for (const auto& e : j.at("warnings")) {
      WarningRecord w;
      w.t = e.at("t").get<double>();
      w.pedestrian = e.at("pedestrian").get<std::string>();
      w.vehicle = e.at("vehicle").get<std::string>();
      w.action = ParseAction(e.at("action").get<std::string>());
      w.t_warning = GetOpt<double>(e, "t_warning");
      w.t_warning_gt = GetOpt<double>(e, "t_warning_gt");
      w.probability = GetOpt<double>(e, "probability");
      w.vehicle_speed_kmh = GetOpt<double>(e, "vehicle_speed_kmh");
      r.warnings.push_back(std::move(w));
    }
    for (const auto& e : j.at("wakes")) {
      r.wakes.push_back({e.at("t").get<double>(), e.at("pedestrian").get<std::string>(),
                         e.at("distance_to_zone").get<double>()});
    }
    for (const auto& e : j.at("zone_entries")) {
      r.zone_entries.push_back({e.at("t").get<double>(), e.at("pedestrian").get<std::string>(),
                                e.at("gps_active").get<bool>()});
    }
    for (const auto& e : j.at("pedestrians")) {
      PedestrianSummary p;
      p.id = e.at("id").get<std::string>();
      p.energy_duty_cycled = e.at("energy_duty_cycled").get<double>();
      p.energy_always_on = e.at("energy_always_on").get<double>();
      p.active_time = e.at("active_time").get<double>();
      p.sleep_time = e.at("sleep_time").get<double>();
      for (const auto& [id, kv] : e.at("known_vehicles").items()) {
        p.known_vehicles[id] = {ReadRep(kv.at("rep")), kv.at("t_delay").get<double>(), kv.at("received_at").get<double>()};
      }
      p.t_delay = GetOpt<double>(e, "t_delay");
      r.pedestrians.push_back(std::move(p));
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed report: ") + e.what());
  }
}

std::string dump_report(const SimReport& r) { return report_to_json(r).dump(1) + "\n"; }

SimReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open report " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  return report_from_json(doc);
}

ordered_json metrics_to_json(const Metrics& m) {
  ordered_json j;
  auto cdf = [](const std::vector<CdfPoint>& c) {
    ordered_json a = ordered_json::array();
    for (const auto& p : c) a.push_back({p.error_m, p.cumulative_fraction});
    return a;
  };
  j["location_error_cdf"] = {{"raw", cdf(m.raw_error_cdf)}, {"calibrated", cdf(m.calibrated_error_cdf)}};
  ordered_json me = ordered_json::object();
  PutOpt(me, "raw_mean_error_m", m.raw_mean_error);
  PutOpt(me, "calibrated_mean_error_m", m.calibrated_mean_error);
  j["mean_errors"] = std::move(me);
  ordered_json en{{"duty_cycled_j", m.energy_duty_cycled}, {"always_on_j", m.energy_always_on},
                  {"active_time_s", m.active_time},      {"sleep_time_s", m.sleep_time},
                  {"zone_entries", m.zone_entries}};
  PutOpt(en, "savings_fraction", m.energy_savings);
  PutOpt(en, "zone_entries_active_fraction", m.zone_entries_active_fraction);
  j["energy"] = std::move(en);
  ordered_json va{{"samples", m.viewing_samples}};
  PutOpt(va, "accuracy", m.viewing_accuracy);
  j["viewing_accuracy"] = std::move(va);
  ordered_json wt = ordered_json::object();
  ordered_json recs = ordered_json::array();
  for (const auto& w : m.warnings) {
    ordered_json e{{"t", w.t}, {"pedestrian", w.pedestrian}, {"vehicle", w.vehicle}, {"action", risk::to_string(w.action)}};
    PutOpt(e, "t_warning", w.t_warning);
    PutOpt(e, "t_warning_gt", w.t_warning_gt);
    PutOpt(e, "probability", w.probability);
    PutOpt(e, "vehicle_speed_kmh", w.vehicle_speed_kmh);
    recs.push_back(std::move(e));
  }
  wt["records"] = std::move(recs);
  PutOpt(wt, "mean_abs_error_s", m.warning_mean_abs_error);
  PutOpt(wt, "max_abs_error_s", m.warning_max_abs_error);
  j["warning_time"] = std::move(wt);
  ordered_json sc = ordered_json::array();
  for (const auto& c : m.speed_curves) {
    sc.push_back({{"speed_kmh", c.speed_kmh},
                  {"alerts", c.alerts},
                  {"mean_t_warning", c.mean_t_warning},
                  {"mean_t_warning_gt", c.mean_t_warning_gt},
                  {"mean_probability", c.mean_probability},
                  {"mean_abs_error", c.mean_abs_error}});
  }
  j["speed_curves"] = std::move(sc);
  j["wake_distances"] = m.wake_distances;
  return j;
}

std::vector<std::pair<std::string, std::string>> metric_tables(const Metrics& m, const std::string& name) {
  std::vector<std::pair<std::string, std::string>> out;
  if (name == "location_error_cdf") {
    auto table = [](const std::vector<CdfPoint>& c) {
      std::string s = "error_m,cumulative_fraction\n";
      for (const auto& p : c) s += Num(p.error_m) + "," + Num(p.cumulative_fraction) + "\n";
      return s;
    };
    out.emplace_back("location_error_cdf.csv", table(m.calibrated_error_cdf));
    out.emplace_back("location_error_cdf_raw.csv", table(m.raw_error_cdf));
  } else if (name == "mean_errors") {
    out.emplace_back("mean_errors.csv", "series,mean_error_m\nraw," + Opt(m.raw_mean_error) + "\ncalibrated," +
                                            Opt(m.calibrated_mean_error) + "\n");
  } else if (name == "energy") {
    std::string s = "duty_cycled_j,always_on_j,savings_fraction,active_time_s,sleep_time_s,zone_entries,"
                    "zone_entries_active_fraction\n";
    s += Num(m.energy_duty_cycled) + "," + Num(m.energy_always_on) + "," + Opt(m.energy_savings) + "," +
         Num(m.active_time) + "," + Num(m.sleep_time) + "," + std::to_string(m.zone_entries) + "," +
         Opt(m.zone_entries_active_fraction) + "\n";
    out.emplace_back("energy.csv", s);
  } else if (name == "viewing_accuracy") {
    out.emplace_back("viewing_accuracy.csv",
                     "accuracy,samples\n" + Opt(m.viewing_accuracy) + "," + std::to_string(m.viewing_samples) + "\n");
  } else if (name == "warning_time") {
    std::string s = "t,pedestrian,vehicle,action,t_warning,t_warning_gt,abs_error,probability,vehicle_speed_kmh\n";
    for (const auto& w : m.warnings) {
      std::optional<double> err;
      if (w.t_warning && w.t_warning_gt) err = std::fabs(*w.t_warning - *w.t_warning_gt);
      s += Num(w.t) + "," + w.pedestrian + "," + w.vehicle + "," + std::string(risk::to_string(w.action)) + "," +
           Opt(w.t_warning) + "," + Opt(w.t_warning_gt) + "," + Opt(err) + "," + Opt(w.probability) + "," +
           Opt(w.vehicle_speed_kmh) + "\n";
    }
    out.emplace_back("warning_time.csv", s);
  } else if (name == "speed_curves") {
    std::string s = "speed_kmh,alerts,mean_t_warning,mean_t_warning_gt,mean_probability,mean_abs_error\n";
    for (const auto& c : m.speed_curves) {
      s += Num(c.speed_kmh) + "," + std::to_string(c.alerts) + "," + Num(c.mean_t_warning) + "," +
           Num(c.mean_t_warning_gt) + "," + Num(c.mean_probability) + "," + Num(c.mean_abs_error) + "\n";
    }
    out.emplace_back("speed_curves.csv", s);
  } else if (name == "wake_distances") {
    std::string s = "distance_to_zone_m\n";
    for (double d : m.wake_distances) s += Num(d) + "\n";
    out.emplace_back("wake_distances.csv", s);
  } else {
    std::string valid;
    for (const auto& n : metric_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw Error(ErrorCode::InvalidArgument, "unknown metric '" + name + "' (valid: " + valid + ", all)");
  }
  return out;
}

}  // namespace safercross::engine
