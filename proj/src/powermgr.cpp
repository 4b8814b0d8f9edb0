#include "safercross/powermgr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "safercross/error.hpp"

namespace safercross::power {

void PowerModel::validate() const {
  if (!(active_watts > sleep_watts) || sleep_watts < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "power model requires active_watts > sleep_watts >= 0");
  }
  if (startup_surge_joules < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "startup_surge_joules must be >= 0");
  }
}

double next_wake_delay(const geo::GeoPoint& p, std::span<const geo::AlertZone> zones, double v_max) {
  if (zones.empty()) throw Error(ErrorCode::NoZones, "no alert zones to wake for");
  if (!(v_max > 0.0)) throw Error(ErrorCode::InvalidArgument, "v_max must be > 0");
  double d = std::numeric_limits<double>::infinity();
  for (const auto& z : zones) d = std::min(d, geo::distance_to_zone_boundary(p, z));
  return d / v_max;
}

GpsPowerState step_power_state(const GpsPowerState& s, double now, double heading_deg,
                               const geo::GeoPoint& p, std::span<const geo::AlertZone> zones,
                               const DutyCyclePolicy& policy) {
  GpsPowerState next = s;
  if (s.mode == GpsMode::Active) {
    next.last_direction = heading_deg;
    next.reversal_ticks = 0;
    if (zones.empty()) return next;
    const bool inside = std::any_of(zones.begin(), zones.end(),
                                    [&](const geo::AlertZone& z) { return geo::in_alert_zone(p, z); });
    if (inside) return next;
    double d = std::numeric_limits<double>::infinity();
    for (const auto& z : zones) d = std::min(d, geo::distance_to_zone_boundary(p, z));
    const double delay = std::max(0.0, d - policy.guard_m) / policy.v_max;
    if (delay > 0.0 && delay >= policy.min_sleep_s) {
      next.mode = GpsMode::Sleeping;
      next.wake_at = now + delay;
    }
    return next;
  }

  if (now >= s.wake_at) {
    next.mode = GpsMode::Active;
    next.reversal_ticks = 0;
    return next;
  }
  if (geo::angular_difference_deg(heading_deg, s.last_direction) > policy.reversal_threshold_deg) {
    next.reversal_ticks = s.reversal_ticks + 1;
    if (next.reversal_ticks >= policy.reversal_ticks) {
      next.mode = GpsMode::Active;
      next.reversal_ticks = 0;
    }
  } else {
    next.reversal_ticks = 0;
  }
  return next;
}

double energy_consumed(std::span<const PowerInterval> timeline, const PowerModel& model) {
  double joules = 0.0;
  bool previous_active = false;
  for (const auto& iv : timeline) {
    if (iv.duration < 0.0) throw Error(ErrorCode::InvalidArgument, "negative interval duration");
    const bool active = iv.mode == GpsMode::Active;
    joules += iv.duration * (active ? model.active_watts : model.sleep_watts);
    if (active && !previous_active) joules += model.startup_surge_joules;
    previous_active = active;
  }
  return joules;
}

}  // namespace safercross::power
