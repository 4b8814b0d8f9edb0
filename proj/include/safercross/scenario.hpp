#pragma once

// Scenario description consumed by the simulation engine, and its JSON
// loader. Trace channels can be inline or referenced as CSV files relative to
// the scenario file.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "safercross/context.hpp"
#include "safercross/geo.hpp"
#include "safercross/mapmatch.hpp"
#include "safercross/p2p.hpp"
#include "safercross/powermgr.hpp"
#include "safercross/risk.hpp"

namespace safercross::engine {

struct TimedPoint {
  double t = 0.0;
  geo::GeoPoint point;
};

// Piecewise-linear ground-truth motion. Before the first sample the actor
// sits at the first point, after the last it stays at the last.
class Trajectory {
 public:
  Trajectory() = default;
  explicit Trajectory(std::vector<TimedPoint> points);

  const std::vector<TimedPoint>& points() const { return points_; }
  bool empty() const { return points_.empty(); }
  double start_time() const { return points_.front().t; }
  double end_time() const { return points_.back().t; }

  geo::GeoPoint at(double t) const;
  double speed_at(double t) const;                     // m/s
  std::optional<double> heading_at(double t) const;    // degrees; nullopt when at rest
  double arc_length_at(double t) const;                // meters travelled since the start
  double total_length() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }

  // Arc length of the closest approach to `p` during the first pass within
  // `tolerance` meters at or beyond arc length `from`.
  std::optional<double> next_pass(const geo::GeoPoint& p, double from, double tolerance) const;
  // First time the actor has travelled `s` meters; nullopt if it never does.
  std::optional<double> time_at_arc_length(double s) const;

 private:
  std::size_t segment_index(double t) const;

  std::vector<TimedPoint> points_;
  std::vector<double> cumulative_;
};

struct Interval {
  double start = 0.0;
  double end = 0.0;
};

// Boolean channel over time: true inside any interval.
struct Schedule {
  std::vector<Interval> on;
  bool at(double t) const;
  static Schedule always() { return {{{-1e300, 1e300}}}; }
  static Schedule never() { return {}; }
};

enum class ResponsePolicy { Comply, Ignore };

struct PedestrianSpec {
  std::string id;
  bool is_pedestrian = true;  // false for a phone that rides in a vehicle
  Trajectory trajectory;
  std::optional<std::vector<context::AccelSample>> accel_trace;  // synthetic when absent
  std::optional<std::vector<TimedPoint>> gps_trace;               // noise-injected when absent
  Schedule viewing = Schedule::always();
  Schedule screen_on = Schedule::always();
  int safety_level = 0;  // 0 = connected, 1..3 = stand-alone
  ResponsePolicy policy = ResponsePolicy::Comply;
  int ignore_count = 0;  // alerts ignored before complying under Ignore
  std::optional<std::size_t> crossing;  // target crossing; nearest to the path end by default
};

struct VehicleSpec {
  std::string id;
  Trajectory trajectory;
  double mass = 1400.0;
  double area = 2.7;
  double drag = 0.25;
  double mu_k = 0.8;
  double f0 = 0.0;
  double rho = 1.23;
};

struct NoiseSpec {
  double gps_sigma = 1.0;  // meters, isotropic
  context::SyntheticAccelSpec accel;
};

struct CommsSpec {
  p2p::LinkModel link;
  p2p::FormationMode formation = p2p::FormationMode::Autonomous;
  p2p::FormationParams formation_params;
  double req_interval = 1.0;  // s between REQ rounds from a group owner
  double rep_stale_after = 3.0;
};

struct RiskSpec {
  risk::RiskPolicy policy;
  risk::ReactionModel reaction;
};

struct PowerSpec {
  power::PowerModel model;
  power::DutyCyclePolicy policy{2.0, 120.0, 2, 3.0, 2.0};
  bool duty_cycling = true;
};

struct MapMatchSpec {
  bool enabled = true;
  mapmatch::HmmModel model;
  mapmatch::MatcherOptions options;
};

struct ContextSpec {
  std::optional<double> gamma;  // trained from a synthetic corpus when absent
  double filter_alpha = 0.2;
  double window_span = 3.0;
  std::size_t training_windows = 200;
  context::MotionThresholds motion;
  double speed_baseline_s = 5.0;  // GPS displacement window for walking speed
};

struct Scenario {
  std::string name;
  geo::SidewalkGraph map;
  std::vector<PedestrianSpec> pedestrians;
  std::vector<VehicleSpec> vehicles;
  NoiseSpec noise;
  CommsSpec comms;
  RiskSpec risk;
  PowerSpec power;
  MapMatchSpec mapmatch;
  ContextSpec context;
  double tick = 0.1;
  double gps_interval = 1.0;
  double duration = 0.0;
  std::uint64_t seed = 0;
};

// Throws Error(ParseError) for malformed input (with the offending field),
// Error(ValidationError) listing every violated invariant.
Scenario parse_scenario(const nlohmann::json& doc,
                        const std::filesystem::path& base_dir = std::filesystem::path("."));
Scenario load_scenario(const std::filesystem::path& path);

// Reads the JSON document of a scenario file, expanding a preset reference.
nlohmann::json read_scenario_json(const std::filesystem::path& path);
// Expands {"preset": kind, "params": {...}} documents; other documents pass through.
nlohmann::json expand_scenario_json(const nlohmann::json& doc);

std::vector<TimedPoint> read_gps_csv(const std::filesystem::path& path);
std::vector<context::AccelSample> read_accel_csv(const std::filesystem::path& path);

}  // namespace safercross::engine
