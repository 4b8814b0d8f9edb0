#include "safercross/risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "safercross/error.hpp"

namespace safercross::risk {

std::string_view to_string(AlertAction a) {
  switch (a) {
    case AlertAction::None: return "None";
    case AlertAction::AlertPedestrian: return "AlertPedestrian";
    case AlertAction::AlertDriver: return "AlertDriver";
  }
  return "Unknown";
}

double time_to_cross_ped(double d_p, double v_p) {
  if (!(v_p > 0.0)) throw Error(ErrorCode::ZeroSpeed, "pedestrian speed must be > 0");
  return d_p / v_p;
}

double user_warning_time(std::span<const double> t_c, double t_p) {
  if (t_c.empty()) throw Error(ErrorCode::NoVehicles, "no approaching vehicles");
  return *std::min_element(t_c.begin(), t_c.end()) - t_p;
}

double resistance_force(const VehicleKinematics& k, double v_r) {
  return k.mu_k * k.mass * kGravity + 0.5 * k.rho * k.area * k.drag * v_r * v_r + k.f0;
}

SkidResult skid(const VehicleKinematics& k) {
  if (!(k.speed > 0.0)) throw Error(ErrorCode::ZeroSpeed, "vehicle speed must be > 0");
  const double f = resistance_force(k, k.speed);
  const double distance = k.mass * k.speed * k.speed / (2.0 * f);
  return {distance, distance / k.speed};
}

double skid_time(const VehicleKinematics& k) { return skid(k).time; }

double reaction_density(double x, const ReactionModel& rm) {
  if (!(x > 0.0)) return 0.0;
  const double z = (std::log(x) - rm.mu) / rm.sigma;
  return std::exp(-0.5 * z * z) / (x * rm.sigma * std::sqrt(2.0 * std::numbers::pi));
}

double reaction_exceedance(double x, const ReactionModel& rm) {
  if (!(x > 0.0)) return 1.0;
  const double z = (std::log(x) - rm.mu) / rm.sigma;
  return 0.5 * std::erfc(z / std::numbers::sqrt2);
}

double collision_probability(double t_warning, double t_delay, double t_skid,
                             const ReactionModel& rm) {
  return reaction_exceedance(t_warning - t_delay - t_skid, rm);
}

std::optional<double> assumed_speed(context::Motion motion, const RiskPolicy& policy) {
  switch (motion) {
    case context::Motion::Walking: return policy.brisk_speed;
    case context::Motion::Running: return policy.running_speed;
    case context::Motion::Stationary: return std::nullopt;
  }
  return std::nullopt;
}

AlertAction action_for(double probability, int ignored_alert_count, const RiskPolicy& policy) {
  if (!(probability > policy.threshold)) return AlertAction::None;
  return ignored_alert_count >= policy.escalation_after ? AlertAction::AlertDriver
                                                        : AlertAction::AlertPedestrian;
}

AlertDecision decide_connected(const PedestrianRiskState& ped,
                               std::span<const VehicleKinematics> vehicles, double t_delay,
                               const ReactionModel& rm, const RiskPolicy& policy) {
  AlertDecision out;
  if (ped.motion == context::Motion::Stationary || !ped.viewing) return out;
  if (vehicles.empty()) return out;
  if (!(ped.v_p > 0.0)) return out;

  const double t_p = time_to_cross_ped(ped.d_p, ped.v_p);
  out.t_p = t_p;
  double max_tc = -std::numeric_limits<double>::infinity();
  const VehicleKinematics* nearest = &vehicles.front();
  for (const auto& v : vehicles) {
    max_tc = std::max(max_tc, v.t_c);
    if (v.t_c < nearest->t_c) nearest = &v;
  }
  if (t_p > max_tc + policy.pass_margin_s) return out;

  std::vector<double> tcs;
  tcs.reserve(vehicles.size());
  for (const auto& v : vehicles) tcs.push_back(v.t_c);
  const double t_warning = user_warning_time(tcs, t_p);
  const double t_skid = nearest->speed > 0.0 ? skid_time(*nearest) : 0.0;
  const double p = collision_probability(t_warning, t_delay, t_skid, rm);
  out.t_warning = t_warning;
  out.probability = p;
  out.vehicle_id = nearest->id;
  out.action = action_for(p, ped.ignored_alert_count, policy);
  return out;
}

bool standalone_alert(int level, const StandaloneInputs& in) {
  if (level < 1 || level > 3) throw Error(ErrorCode::InvalidArgument, "safety level must be 1..3");
  bool alert = in.in_alert_zone && in.screen_on;
  if (level <= 2) alert = alert && in.viewing;
  if (level <= 1) alert = alert && in.walking_toward_crossing;
  return alert;
}

AlertDecision decide(const DecideInputs& in, const ReactionModel& rm, const RiskPolicy& policy) {
  if (in.level == 0) return decide_connected(in.ped, in.vehicles, in.t_delay, rm, policy);
  AlertDecision out;
  if (standalone_alert(in.level, in.standalone)) out.action = AlertAction::AlertPedestrian;
  return out;
}

}  // namespace safercross::risk
