#pragma once

// Collision-risk estimation for a pedestrian approaching a crossing:
// warning time from vehicle/pedestrian arrival times, braking time from a
// friction + drag resistance model, and a log-normal driver reaction time.

#include <optional>
#include <span>
#include <string>

#include "safercross/context.hpp"

namespace safercross::risk {

inline constexpr double kGravity = 9.81;

struct VehicleKinematics {
  std::string id;
  double speed = 0.0;   // m/s
  double mass = 1400.0; // kg
  double area = 2.7;    // m^2
  double t_c = 0.0;     // seconds until the vehicle reaches the crossing
  double drag = 0.25;
  double mu_k = 0.8;
  double f0 = 0.0;      // N
  double rho = 1.23;    // kg/m^3
};

struct ReactionModel {
  double mu = 1.14;     // mean of ln(reaction time)
  double sigma = 0.32;  // std-dev of ln(reaction time)
};

struct PedestrianRiskState {
  double d_p = 0.0;  // meters to the crossing
  double v_p = 0.0;  // m/s
  context::Motion motion = context::Motion::Stationary;
  bool viewing = false;
  int ignored_alert_count = 0;
};

enum class AlertAction { None, AlertPedestrian, AlertDriver };

std::string_view to_string(AlertAction a);

struct AlertDecision {
  AlertAction action = AlertAction::None;
  std::optional<double> t_warning;
  std::optional<double> probability;
  std::optional<double> t_p;
  std::string vehicle_id;  // vehicle with the smallest t_c, when one was used
};

// d_p / v_p. Throws Error(ZeroSpeed) when v_p <= 0.
double time_to_cross_ped(double d_p, double v_p);

// min(t_c) - t_p. Throws Error(NoVehicles) on an empty list.
double user_warning_time(std::span<const double> t_c, double t_p);

// mu_k*m*g + rho*A*C_d*v_r^2/2 + f0.
double resistance_force(const VehicleKinematics& k, double v_r);

struct SkidResult {
  double distance = 0.0;  // m
  double time = 0.0;      // s
};

// d_skid = m v^2 / (2 f), t_skid = d_skid / v, with v_r approximated by v.
// Throws Error(ZeroSpeed) when speed <= 0.
SkidResult skid(const VehicleKinematics& k);
double skid_time(const VehicleKinematics& k);

// Log-normal reaction-time density.
double reaction_density(double x, const ReactionModel& rm);

// P(t_react > x); 1 for x <= 0.
double reaction_exceedance(double x, const ReactionModel& rm);

// P(t_react > t_warning - t_delay - t_skid).
double collision_probability(double t_warning, double t_delay, double t_skid,
                             const ReactionModel& rm);

struct RiskPolicy {
  double threshold = 0.5;        // collision probability that triggers an alert
  double pass_margin_s = 5.0;    // t_p > max t_c + margin -> vehicles already passed
  int escalation_after = 3;      // ignored alerts before the driver is alerted
  double brisk_speed = 2.0;      // m/s substituted for Walking
  double running_speed = 3.0;    // m/s substituted for Running
};

// Walking speed used for t_p given the motion class; nullopt when Stationary.
std::optional<double> assumed_speed(context::Motion motion, const RiskPolicy& policy);

// Alert escalation for a probability: None at or below the threshold, the
// pedestrian first, the driver once enough alerts were ignored.
AlertAction action_for(double probability, int ignored_alert_count, const RiskPolicy& policy);

// Connected-mode decision. Returns None when the pedestrian is not moving
// while viewing, when there are no vehicles, or when every vehicle passes
// long before the pedestrian arrives.
AlertDecision decide_connected(const PedestrianRiskState& ped,
                               std::span<const VehicleKinematics> vehicles, double t_delay,
                               const ReactionModel& rm, const RiskPolicy& policy);

struct StandaloneInputs {
  bool in_alert_zone = false;
  bool screen_on = false;
  bool viewing = false;
  bool walking_toward_crossing = false;
};

// Nested stand-alone levels: 3 = in zone with screen on; 2 additionally
// viewing; 1 additionally walking toward the crossing.
bool standalone_alert(int level, const StandaloneInputs& in);

struct DecideInputs {
  PedestrianRiskState ped;
  std::span<const VehicleKinematics> vehicles;
  double t_delay = 0.0;
  int level = 0;  // 0 = connected, 1..3 = stand-alone
  StandaloneInputs standalone;
};

AlertDecision decide(const DecideInputs& in, const ReactionModel& rm, const RiskPolicy& policy);

}  // namespace safercross::risk
