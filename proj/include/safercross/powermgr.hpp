#pragma once

// GPS duty cycling: sleep until the walker could first reach an alert zone at
// brisk walking speed; wake on that timer or on a sustained heading reversal.

#include <span>

#include "safercross/geo.hpp"

namespace safercross::power {

enum class GpsMode { Active, Sleeping };

struct GpsPowerState {
  GpsMode mode = GpsMode::Active;
  double wake_at = 0.0;         // seconds; meaningful while Sleeping
  double last_direction = 0.0;  // heading, degrees
  int reversal_ticks = 0;       // consecutive ticks beyond the reversal threshold
};

struct PowerModel {
  double active_watts = 1.5;
  double sleep_watts = 0.2;
  double startup_surge_joules = 0.0;  // charged on each entry into Active

  void validate() const;
};

struct DutyCyclePolicy {
  double v_max = 2.0;                    // m/s
  double reversal_threshold_deg = 120.0;
  int reversal_ticks = 2;
  // Distance subtracted from the boundary distance before computing the
  // delay; covers the error of the position the delay is based on.
  double guard_m = 0.0;
  // Delays shorter than this keep the GPS active.
  double min_sleep_s = 0.0;
};

// d / v_max with d the distance to the nearest zone boundary (0 inside).
// Throws Error(NoZones) or Error(InvalidArgument) for v_max <= 0.
double next_wake_delay(const geo::GeoPoint& p, std::span<const geo::AlertZone> zones, double v_max);

GpsPowerState step_power_state(const GpsPowerState& s, double now, double heading_deg,
                               const geo::GeoPoint& p, std::span<const geo::AlertZone> zones,
                               const DutyCyclePolicy& policy);

struct PowerInterval {
  double duration = 0.0;  // seconds
  GpsMode mode = GpsMode::Active;
};

// Sum of duration * mode watts, plus one startup surge per run of Active
// intervals. Throws Error(InvalidArgument) for negative durations.
double energy_consumed(std::span<const PowerInterval> timeline, const PowerModel& model);

}  // namespace safercross::power
