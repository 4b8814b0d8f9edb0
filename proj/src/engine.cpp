#include "safercross/engine.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include "safercross/error.hpp"

namespace safercross::engine {
namespace {

constexpr double kPassTolerance = 15.0;  // m; how close a path must come to count as reaching a crossing
constexpr double kMinReplySpeed = 0.5;   // m/s; a parked vehicle is not approaching
constexpr double kEps = 1e-9;

enum Stream : std::uint64_t { kGps = 1, kAccel, kComms, kFormation, kContext };

std::mt19937_64 MakeRng(std::uint64_t seed, Stream stream, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index)};
  return std::mt19937_64(seq);
}

struct AlertLatch {
  int ignored = 0;
  bool latched = false;
  std::optional<double> last_rep_ts;  // REP timestamp behind the most recent alert
};

struct Pedestrian {
  const PedestrianSpec* spec = nullptr;
  std::size_t crossing = 0;
  std::string channel;
  std::mt19937_64 gps_rng;
  std::mt19937_64 accel_rng;
  std::optional<mapmatch::MapMatcher> matcher;
  std::optional<context::ViewingDetector> detector;
  std::optional<geo::GeoPoint> estimate;
  std::deque<TimedPoint> recent;  // calibrated positions for speed and direction
  power::GpsPowerState power;
  double last_fix_t = -std::numeric_limits<double>::infinity();
  std::size_t accel_next = 0;
  bool in_zone_truth = false;
  bool in_zone_est = false;
  // Communication state.
  bool in_group = false;
  bool owner = false;
  double formed_at = 0.0;
  double next_req_at = 0.0;
  std::optional<double> overhear_done_at;
  std::map<std::string, double> pending_req;  // vehicle -> REQ send time
  std::vector<double> round_trips;
  std::map<std::string, KnownVehicle> knowledge;
  std::map<std::string, AlertLatch> latches;
  bool standalone_active = false;
  std::vector<power::PowerInterval> timeline;
  double active_time = 0.0;
  double sleep_time = 0.0;
};

struct Vehicle {
  const VehicleSpec* spec = nullptr;
  std::optional<std::string> channel;
};

double NearestBoundary(const geo::GeoPoint& p, std::span<const geo::AlertZone> zones) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& z : zones) d = std::min(d, geo::distance_to_zone_boundary(p, z));
  return d;
}

bool InAnyZone(const geo::GeoPoint& p, std::span<const geo::AlertZone> zones) {
  return std::any_of(zones.begin(), zones.end(), [&](const geo::AlertZone& z) { return geo::in_alert_zone(p, z); });
}

std::size_t DefaultCrossing(const PedestrianSpec& p, const geo::SidewalkGraph& g) {
  const auto crossings = g.crossings();
  if (crossings.empty()) return 0;
  const geo::GeoPoint end = p.trajectory.points().back().point;
  std::size_t best = 0;
  for (std::size_t i = 1; i < crossings.size(); ++i) {
    if (geo::geodetic_distance(end, crossings[i]) < geo::geodetic_distance(end, crossings[best])) best = i;
  }
  return best;
}

// Time at which the actor next reaches the crossing, from ground truth.
std::optional<double> TrueArrival(const Trajectory& traj, const geo::GeoPoint& crossing, double now) {
  const auto s = traj.next_pass(crossing, traj.arc_length_at(now), kPassTolerance);
  if (!s) return std::nullopt;
  return traj.time_at_arc_length(*s);
}

class Simulation {
 public:
  explicit Simulation(const Scenario& s) : s_(s), registry_(s.comms.formation_params) {
    report_.scenario = s.name;
    report_.seed = s.seed;
    report_.tick = s.tick;
    report_.duration = s.duration;
    report_.power_model = s.power.model;

    auto ctx_rng = MakeRng(s.seed, kContext, 0);
    report_.gamma = s.context.gamma ? *s.context.gamma : train_gamma(s.context, s.noise.accel, ctx_rng);
    comms_rng_ = MakeRng(s.seed, kComms, 0);
    formation_rng_ = MakeRng(s.seed, kFormation, 0);

    for (std::size_t i = 0; i < s.pedestrians.size(); ++i) {
      const auto& spec = s.pedestrians[i];
      Pedestrian p;
      p.spec = &spec;
      p.gps_rng = MakeRng(s.seed, kGps, i);
      p.accel_rng = MakeRng(s.seed, kAccel, i);
      if (spec.is_pedestrian) {
        p.crossing = spec.crossing ? *spec.crossing : DefaultCrossing(spec, s.map);
        p.channel = "crossing-" + std::to_string(p.crossing);
        if (s.mapmatch.enabled) p.matcher.emplace(s.map, s.mapmatch.model, s.mapmatch.options);
        context::ViewingModel vm;
        vm.gamma = report_.gamma;
        vm.filter_alpha = s.context.filter_alpha;
        vm.window_span = s.context.window_span;
        vm.sample_rate = s.noise.accel.sample_rate;
        p.detector.emplace(vm);
      }
      report_.truth_paths[spec.id] = spec.trajectory.points();
      peds_.push_back(std::move(p));
    }
    for (const auto& v : s.vehicles) {
      vehicles_.push_back({&v, std::nullopt});
      report_.truth_paths[v.id] = v.trajectory.points();
    }
  }

  SimReport run() {
    const auto n = static_cast<std::size_t>(std::floor(s_.duration / s_.tick + kEps));
    for (std::size_t k = 0; k <= n; ++k) {
      const double now = static_cast<double>(k) * s_.tick;
      DrainBus(now);
      for (auto& p : peds_) Guard(now, p.spec->id, [&] { StepPedestrian(p, now); });
      for (auto& v : vehicles_) Guard(now, v.spec->id, [&] { StepVehicle(v, now); });
    }
    Finish();
    return std::move(report_);
  }

 private:
  template <typename Fn>
  void Guard(double now, const std::string& actor, Fn&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      std::ostringstream msg;
      msg << "t=" << now << "s actor=" << actor << ": " << e.what();
      throw Error(ErrorCode::RuntimeError, msg.str());
    }
  }

  const geo::GeoPoint& Crossing(const Pedestrian& p) const { return s_.map.crossings()[p.crossing]; }

  Pedestrian* FindPed(const std::string& id) {
    for (auto& p : peds_) {
      if (p.spec->id == id) return &p;
    }
    return nullptr;
  }

  Vehicle* FindVehicle(const std::string& id) {
    for (auto& v : vehicles_) {
      if (v.spec->id == id) return &v;
    }
    return nullptr;
  }

  geo::GeoPoint TruthOf(const std::string& id, double t) {
    if (auto* p = FindPed(id)) return p->spec->trajectory.at(t);
    return FindVehicle(id)->spec->trajectory.at(t);
  }

  // Sends over the lossy link; logs the attempt and queues the delivery.
  void Send(double t, const std::string& kind, const std::string& from, const std::string& to,
            p2p::Payload payload) {
    const auto d = p2p::deliver(TruthOf(from, t), TruthOf(to, t), s_.comms.link, comms_rng_);
    MessageRecord rec{t, d.delivered ? t + d.delay : t, kind, from, to, d.delivered, std::nullopt};
    if (auto* rep = std::get_if<p2p::RepMsg>(&payload)) rec.rep = *rep;
    if (auto* fwd = std::get_if<p2p::ForwardedRep>(&payload)) rec.rep = fwd->rep;
    report_.messages.push_back(rec);
    if (d.delivered) bus_.post(t, t + d.delay, from, to, std::move(payload));
  }

  void DrainBus(double now) {
    while (true) {
      auto due = bus_.pop_due(now);
      if (due.empty()) return;
      for (const auto& env : due) {
        Guard(env.deliver_at, env.to, [&] { Receive(env); });
      }
    }
  }

  void Receive(const p2p::Envelope& env) {
    const double t = env.deliver_at;
    if (const auto* req = std::get_if<p2p::ReqMsg>(&env.payload)) {
      Vehicle* v = FindVehicle(env.to);
      if (!v || s_.map.crossings().size() <= req->crossing) return;
      const auto& traj = v->spec->trajectory;
      const double speed = traj.speed_at(t);
      if (speed < kMinReplySpeed) return;
      const double s_now = traj.arc_length_at(t);
      const auto s_cross = traj.next_pass(s_.map.crossings()[req->crossing], s_now, kPassTolerance);
      if (!s_cross) return;  // already past the crossing
      p2p::RepMsg rep{v->spec->id, speed, v->spec->mass, v->spec->area, (*s_cross - s_now) / speed, t};
      Send(t, "rep", v->spec->id, req->sender, rep);
      return;
    }
    Pedestrian* p = FindPed(env.to);
    if (!p) return;
    if (const auto* rep = std::get_if<p2p::RepMsg>(&env.payload)) {
      auto it = p->pending_req.find(rep->vehicle_id);
      if (it != p->pending_req.end()) {
        p->round_trips.push_back(t - it->second);
        p->pending_req.erase(it);
      }
      const double t_delay = p->round_trips.empty() ? s_.comms.link.delay_mean
                                                    : p2p::measure_t_delay(p->round_trips);
      p->knowledge[rep->vehicle_id] = {*rep, t_delay, t};
      if (p->owner) {
        for (const auto& route : registry_.routes_from(p->spec->id)) {
          Send(t, "fwd", p->spec->id, route.member, p2p::ForwardedRep{*rep, p->spec->id, t_delay});
        }
      }
      return;
    }
    if (const auto* fwd = std::get_if<p2p::ForwardedRep>(&env.payload)) {
      p->knowledge[fwd->rep.vehicle_id] = {fwd->rep, fwd->t_delay, t};
    }
  }

  void Event(double t, std::string kind, const std::string& actor, std::string detail = {}) {
    report_.events.push_back({t, std::move(kind), actor, std::move(detail)});
  }

  void FeedAccel(Pedestrian& p, double now) {
    const auto& spec = *p.spec;
    if (spec.accel_trace) {
      const auto& trace = *spec.accel_trace;
      while (p.accel_next < trace.size() && trace[p.accel_next].t <= now + kEps) p.detector->push(trace[p.accel_next++]);
      return;
    }
    const double rate = s_.noise.accel.sample_rate;
    while (static_cast<double>(p.accel_next) / rate <= now + kEps) {
      const double t = static_cast<double>(p.accel_next) / rate;
      p.detector->push(context::synthesize_accel_sample(spec.viewing.at(t), t, s_.noise.accel, p.accel_rng));
      ++p.accel_next;
    }
  }

  geo::GeoPoint RawFix(Pedestrian& p, double now, const geo::GeoPoint& truth) {
    if (p.spec->gps_trace) {
      const auto& trace = *p.spec->gps_trace;
      auto it = std::upper_bound(trace.begin(), trace.end(), now + kEps,
                                 [](double v, const TimedPoint& tp) { return v < tp.t; });
      return it == trace.begin() ? trace.front().point : std::prev(it)->point;
    }
    if (s_.noise.gps_sigma <= 0.0) return truth;
    std::normal_distribution<double> noise(0.0, s_.noise.gps_sigma);
    const double east = noise(p.gps_rng);
    const double north = noise(p.gps_rng);
    return geo::offset(truth, east, north);
  }

  // Speed and direction of travel from calibrated positions.
  std::optional<std::pair<double, double>> Motion(const Pedestrian& p) const {
    if (p.recent.size() < 2) return std::nullopt;
    const auto& a = p.recent.front();
    const auto& b = p.recent.back();
    if (b.t - a.t < 1.0) return std::nullopt;
    return std::make_pair(geo::geodetic_distance(a.point, b.point) / (b.t - a.t),
                          geo::bearing_deg(a.point, b.point));
  }

  void StepPedestrian(Pedestrian& p, double now) {
    const auto& spec = *p.spec;
    const geo::GeoPoint truth = spec.trajectory.at(now);
    TickRecord rec;
    rec.t = now;
    rec.actor = spec.id;
    rec.truth = truth;
    if (!spec.is_pedestrian) {
      rec.pedestrian = false;
      report_.ticks.push_back(rec);
      return;
    }
    const auto zones = s_.map.zones();
    const auto heading = spec.trajectory.heading_at(now);
    const double direction = heading ? *heading : p.power.last_direction;

    FeedAccel(p, now);

    const bool duty = s_.power.duty_cycling && !zones.empty();
    if (duty && p.power.mode == power::GpsMode::Sleeping) {
      const auto ref = p.estimate ? *p.estimate : truth;
      p.power = power::step_power_state(p.power, now, direction, ref, zones, s_.power.policy);
      if (p.power.mode == power::GpsMode::Active) {
        report_.wakes.push_back({now, spec.id, NearestBoundary(truth, zones)});
        Event(now, "gps_wake", spec.id);
      }
    }

    bool fresh_fix = false;
    if (p.power.mode == power::GpsMode::Active && now - p.last_fix_t >= s_.gps_interval - kEps) {
      const geo::GeoPoint raw = RawFix(p, now, truth);
      FixRecord fr{now, spec.id, raw, raw, mapmatch::FixOutcome::Accepted, std::nullopt};
      if (p.matcher) {
        const auto cf = p.matcher->process({now, raw}, p.in_zone_est);
        fr.outcome = cf.outcome;
        fr.segment = cf.segment;
        if (cf.outcome != mapmatch::FixOutcome::Rejected) {
          p.estimate = cf.point;
        } else if (!p.estimate) {
          p.estimate = raw;
        }
      } else {
        p.estimate = raw;
      }
      fr.calibrated = *p.estimate;
      report_.fixes.push_back(fr);
      p.last_fix_t = now;
      fresh_fix = true;
      p.recent.push_back({now, *p.estimate});
      while (p.recent.size() > 1 && p.recent.front().t < now - s_.context.speed_baseline_s - kEps) {
        p.recent.pop_front();
      }
    }

    p.in_zone_est = p.estimate && InAnyZone(*p.estimate, zones);

    if (duty && fresh_fix && p.power.mode == power::GpsMode::Active) {
      p.power = power::step_power_state(p.power, now, direction, *p.estimate, zones, s_.power.policy);
      if (p.power.mode == power::GpsMode::Sleeping) {
        Event(now, "gps_sleep", spec.id, "wake_at=" + std::to_string(p.power.wake_at));
        p.recent.clear();
      }
    }
    const bool active = p.power.mode == power::GpsMode::Active;
    p.timeline.push_back({s_.tick, p.power.mode});
    (active ? p.active_time : p.sleep_time) += s_.tick;
    rec.gps_active = active;
    rec.in_zone = p.in_zone_est;

    const bool truth_in_zone = InAnyZone(truth, zones);
    if (truth_in_zone && !p.in_zone_truth) report_.zone_entries.push_back({now, spec.id, active});
    p.in_zone_truth = truth_in_zone;

    rec.viewing_truth = spec.viewing.at(now);
    rec.viewing_detected = p.detector->viewing();
    const bool viewing = rec.viewing_detected.value_or(false);

    const auto motion_fix = Motion(p);
    const auto motion = motion_fix ? context::classify_motion(motion_fix->first, s_.context.motion)
                                   : context::Motion::Stationary;

    if (spec.safety_level == 0) {
      UpdateGroup(p, now, viewing);
      if (p.in_zone_est) Decide(p, now, motion, viewing, rec);
    } else {
      risk::StandaloneInputs in;
      in.in_alert_zone = p.in_zone_est;
      in.screen_on = spec.screen_on.at(now);
      in.viewing = viewing;
      if (motion != context::Motion::Stationary && p.estimate && motion_fix) {
        const double to_crossing = geo::bearing_deg(*p.estimate, Crossing(p));
        in.walking_toward_crossing = geo::angular_difference_deg(motion_fix->second, to_crossing) < 90.0;
      }
      const bool alert = risk::standalone_alert(spec.safety_level, in);
      if (alert) rec.action = risk::AlertAction::AlertPedestrian;
      if (alert && !p.standalone_active) {
        report_.warnings.push_back({now, spec.id, "", risk::AlertAction::AlertPedestrian, std::nullopt,
                                    std::nullopt, std::nullopt, std::nullopt});
        Event(now, "alert", spec.id, "standalone level " + std::to_string(spec.safety_level));
      }
      p.standalone_active = alert;
    }
    report_.ticks.push_back(rec);
  }

  void Dissolve(Pedestrian& owner, double now) {
    const auto orphans = registry_.leave(owner.spec->id);
    Event(now, "group_dissolved", owner.spec->id, owner.channel);
    for (const auto& id : orphans) {
      if (auto* gm = FindPed(id)) {
        gm->in_group = false;
        gm->overhear_done_at.reset();
      }
      if (auto* v = FindVehicle(id)) v->channel.reset();
    }
    owner.in_group = false;
    owner.owner = false;
    owner.pending_req.clear();
  }

  void UpdateGroup(Pedestrian& p, double now, bool viewing) {
    const auto& id = p.spec->id;
    if (p.in_group && !p.in_zone_est) {
      if (p.owner) {
        Dissolve(p, now);
      } else {
        registry_.leave(id);
        p.in_group = false;
        Event(now, "group_left", id, p.channel);
      }
      return;
    }
    if (!p.in_group) {
      if (!p.in_zone_est || !viewing) {
        p.overhear_done_at.reset();
        return;
      }
      const p2p::Group* g = registry_.group_on(p.channel);
      if (p.overhear_done_at && now >= *p.overhear_done_at - kEps) {
        p.overhear_done_at.reset();
        try {
          registry_.overhear_and_join(id, p.channel);
          p.in_group = true;
          Event(now, "overheard", id, p.channel);
          return;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::NoGroupFound) throw;
          g = nullptr;
        }
      }
      if (g && g->owner_kind == p2p::DeviceKind::Pedestrian) {
        // Listen on the operating channel for one tick before joining.
        if (!p.overhear_done_at) p.overhear_done_at = now + s_.tick;
        return;
      }
      if (g) return;  // channel held by a non-pedestrian group; nothing to overhear
      const auto f = registry_.form_group(id, p2p::DeviceKind::Pedestrian, p.channel, s_.comms.formation,
                                          now, formation_rng_);
      p.in_group = true;
      p.owner = true;
      p.formed_at = f.group.formed_at;
      p.next_req_at = f.group.formed_at;
      Event(now, "group_forming", id, p.channel + " ready_at=" + std::to_string(f.group.formed_at));
      return;
    }
    if (p.owner && now >= p.formed_at - kEps && now >= p.next_req_at - kEps) {
      const p2p::Group* g = registry_.group_on(p.channel);
      bool sent = false;
      for (const auto& member : g->members) {
        if (!FindVehicle(member)) continue;
        p.pending_req[member] = now;
        Send(now, "req", id, member, p2p::ReqMsg{id, p.crossing, now});
        sent = true;
      }
      // With no vehicle in the group yet, ask again as soon as one joins.
      if (sent) p.next_req_at = now + s_.comms.req_interval;
    }
  }

  void Decide(Pedestrian& p, double now, context::Motion motion, bool viewing, TickRecord& rec) {
    std::vector<risk::VehicleKinematics> vehicles;
    double t_delay = s_.comms.link.delay_mean;
    std::optional<double> freshest;
    for (const auto& [vid, kv] : p.knowledge) {
      const double age = now - kv.rep.timestamp;
      if (age > s_.comms.rep_stale_after) continue;
      const double t_c = kv.rep.t_c - age;
      if (t_c < 0.0) continue;  // should have passed by now
      risk::VehicleKinematics k;
      k.id = vid;
      k.speed = kv.rep.v_c;
      k.mass = kv.rep.m_v;
      k.area = kv.rep.a_v;
      k.t_c = t_c;
      vehicles.push_back(k);
      if (!freshest || kv.received_at > *freshest) {
        freshest = kv.received_at;
        t_delay = kv.t_delay;
      }
    }
    if (vehicles.empty()) return;

    risk::PedestrianRiskState ped;
    ped.d_p = geo::geodetic_distance(*p.estimate, Crossing(p));
    ped.motion = motion;
    ped.v_p = risk::assumed_speed(motion, s_.risk.policy).value_or(0.0);
    ped.viewing = viewing;

    // Decide once to find the foremost vehicle, then apply that vehicle's
    // escalation history.
    auto decision = risk::decide_connected(ped, vehicles, t_delay, s_.risk.reaction, s_.risk.policy);
    if (!decision.probability) return;
    AlertLatch& latch = p.latches[decision.vehicle_id];
    decision.action = risk::action_for(*decision.probability, latch.ignored, s_.risk.policy);
    rec.t_warning = decision.t_warning;
    rec.probability = decision.probability;
    if (decision.action == risk::AlertAction::None || latch.latched) return;

    const double rep_ts = p.knowledge.at(decision.vehicle_id).rep.timestamp;
    if (latch.last_rep_ts && *latch.last_rep_ts >= rep_ts) return;  // no news since the last alert
    latch.last_rep_ts = rep_ts;
    rec.action = decision.action;

    WarningRecord w;
    w.t = now;
    w.pedestrian = p.spec->id;
    w.vehicle = decision.vehicle_id;
    w.action = decision.action;
    w.t_warning = decision.t_warning;
    w.probability = decision.probability;
    if (Vehicle* v = FindVehicle(decision.vehicle_id)) {
      const auto t_v = TrueArrival(v->spec->trajectory, Crossing(p), now);
      const auto t_p = TrueArrival(p.spec->trajectory, Crossing(p), now);
      if (t_v && t_p) w.t_warning_gt = *t_v - *t_p;
      w.vehicle_speed_kmh = v->spec->trajectory.speed_at(now) * 3.6;
    }
    report_.warnings.push_back(w);
    Event(now, "alert", p.spec->id, std::string(risk::to_string(decision.action)) + " vehicle=" + decision.vehicle_id);

    if (decision.action == risk::AlertAction::AlertDriver) {
      latch.latched = true;
    } else if (p.spec->policy == ResponsePolicy::Ignore && latch.ignored < p.spec->ignore_count) {
      ++latch.ignored;
    } else {
      latch.latched = true;
    }
  }

  void StepVehicle(Vehicle& v, double now) {
    const auto& id = v.spec->id;
    const geo::GeoPoint here = v.spec->trajectory.at(now);
    TickRecord rec;
    rec.t = now;
    rec.actor = id;
    rec.pedestrian = false;
    rec.truth = here;
    report_.ticks.push_back(rec);

    const double cutoff = s_.comms.link.cutoff();
    if (v.channel) {
      const p2p::Group* g = registry_.group_on(*v.channel);
      if (!g || geo::geodetic_distance(here, TruthOf(g->owner, now)) > cutoff) {
        if (g) registry_.leave(id);
        Event(now, "vehicle_left", id, *v.channel);
        v.channel.reset();
      }
      return;
    }
    for (const auto& p : peds_) {
      if (!p.owner || now < p.formed_at - kEps) continue;
      if (geo::geodetic_distance(here, p.spec->trajectory.at(now)) > cutoff) continue;
      registry_.join_group(id, p.channel);
      v.channel = p.channel;
      Event(now, "vehicle_joined", id, p.channel);
      return;
    }
  }

  void Finish() {
    const auto& pm = s_.power.model;
    for (const auto& p : peds_) {
      if (!p.spec->is_pedestrian) continue;
      PedestrianSummary sum;
      sum.id = p.spec->id;
      sum.energy_duty_cycled = power::energy_consumed(p.timeline, pm);
      const double total = p.active_time + p.sleep_time;
      const power::PowerInterval always[] = {{total, power::GpsMode::Active}};
      sum.energy_always_on = power::energy_consumed(always, pm);
      sum.active_time = p.active_time;
      sum.sleep_time = p.sleep_time;
      sum.known_vehicles = p.knowledge;
      if (!p.round_trips.empty()) sum.t_delay = p2p::measure_t_delay(p.round_trips);
      report_.pedestrians.push_back(std::move(sum));
    }
  }

  const Scenario& s_;
  SimReport report_;
  std::vector<Pedestrian> peds_;
  std::vector<Vehicle> vehicles_;
  p2p::GroupRegistry registry_;
  p2p::MessageBus bus_;
  std::mt19937_64 comms_rng_;
  std::mt19937_64 formation_rng_;
};

}  // namespace

double train_gamma(const ContextSpec& spec, const context::SyntheticAccelSpec& accel, std::mt19937_64& rng) {
  const auto corpus = context::build_corpus(spec.training_windows, spec.window_span, spec.filter_alpha, accel, rng);
  return context::train_threshold_truncating(corpus.viewing_mads, corpus.non_viewing_mads);
}

SimReport run(const Scenario& s) { return Simulation(s).run(); }

}  // namespace safercross::engine
