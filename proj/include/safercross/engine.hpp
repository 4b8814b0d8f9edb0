#pragma once

// Deterministic discrete-time simulation. Each pedestrian tick runs: GPS fix
// (noise-injected) -> map matching -> duty cycling -> alert-zone check ->
// viewing detection -> device-to-device exchange -> risk decision. Vehicles
// follow scripted trajectories and answer REQs with their kinematics.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "safercross/scenario.hpp"

namespace safercross::engine {

struct TickRecord {
  double t = 0.0;
  std::string actor;
  bool pedestrian = true;
  geo::GeoPoint truth;
  // Pedestrian-only fields below.
  bool gps_active = false;
  bool in_zone = false;  // estimated from the calibrated position
  bool viewing_truth = false;
  std::optional<bool> viewing_detected;
  risk::AlertAction action = risk::AlertAction::None;
  std::optional<double> t_warning;
  std::optional<double> probability;
};

struct FixRecord {
  double t = 0.0;
  std::string actor;
  geo::GeoPoint raw;
  geo::GeoPoint calibrated;  // held estimate when the fix was rejected
  mapmatch::FixOutcome outcome = mapmatch::FixOutcome::Accepted;
  std::optional<geo::SegmentId> segment;
};

struct MessageRecord {
  double sent_at = 0.0;
  double deliver_at = 0.0;  // equals sent_at when dropped
  std::string kind;         // req, rep, fwd
  std::string from;
  std::string to;
  bool delivered = false;
  std::optional<p2p::RepMsg> rep;
};

struct EventRecord {
  double t = 0.0;
  std::string kind;
  std::string actor;
  std::string detail;
};

struct WarningRecord {
  double t = 0.0;
  std::string pedestrian;
  std::string vehicle;
  risk::AlertAction action = risk::AlertAction::None;
  std::optional<double> t_warning;
  std::optional<double> t_warning_gt;
  std::optional<double> probability;
  std::optional<double> vehicle_speed_kmh;  // ground truth at the alert instant
};

struct WakeRecord {
  double t = 0.0;
  std::string pedestrian;
  double distance_to_zone = 0.0;  // true distance to the nearest zone boundary; <= 0 inside
};

struct ZoneEntryRecord {
  double t = 0.0;
  std::string pedestrian;
  bool gps_active = false;
};

struct KnownVehicle {
  p2p::RepMsg rep;
  double t_delay = 0.0;
  double received_at = 0.0;
};

struct PedestrianSummary {
  std::string id;
  double energy_duty_cycled = 0.0;  // J
  double energy_always_on = 0.0;    // J
  double active_time = 0.0;         // s
  double sleep_time = 0.0;          // s
  std::map<std::string, KnownVehicle> known_vehicles;
  std::optional<double> t_delay;  // own measured round trip, when this device owned a group
};

struct SimReport {
  std::string scenario;
  std::uint64_t seed = 0;
  double tick = 0.0;
  double duration = 0.0;
  double gamma = 0.0;
  power::PowerModel power_model;
  std::map<std::string, std::vector<TimedPoint>> truth_paths;
  std::vector<TickRecord> ticks;
  std::vector<FixRecord> fixes;
  std::vector<MessageRecord> messages;
  std::vector<EventRecord> events;
  std::vector<WarningRecord> warnings;
  std::vector<WakeRecord> wakes;
  std::vector<ZoneEntryRecord> zone_entries;
  std::vector<PedestrianSummary> pedestrians;
};

// Viewing threshold trained on a synthetic corpus drawn from `rng`.
double train_gamma(const ContextSpec& spec, const context::SyntheticAccelSpec& accel,
                   std::mt19937_64& rng);

// Errors from the modules are re-thrown as Error(RuntimeError) annotated with
// the tick time and actor.
SimReport run(const Scenario& s);

}  // namespace safercross::engine
