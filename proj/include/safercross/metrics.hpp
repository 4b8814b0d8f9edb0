#pragma once

// Metrics derived from a finished simulation report. Everything here is
// computed from the report alone, so saved reports can be re-analysed.

#include <optional>
#include <string>
#include <vector>

#include "safercross/engine.hpp"

namespace safercross::engine {

struct CdfPoint {
  double error_m = 0.0;
  double cumulative_fraction = 0.0;
};

struct SpeedCurvePoint {
  double speed_kmh = 0.0;  // rounded to the nearest km/h
  std::size_t alerts = 0;
  double mean_t_warning = 0.0;
  double mean_t_warning_gt = 0.0;
  double mean_probability = 0.0;
  double mean_abs_error = 0.0;
};

struct Metrics {
  std::vector<CdfPoint> raw_error_cdf;
  std::vector<CdfPoint> calibrated_error_cdf;
  std::optional<double> raw_mean_error;
  std::optional<double> calibrated_mean_error;

  double energy_duty_cycled = 0.0;
  double energy_always_on = 0.0;
  std::optional<double> energy_savings;  // 1 - duty/always, in [0, 1]
  double active_time = 0.0;
  double sleep_time = 0.0;
  std::size_t zone_entries = 0;
  std::optional<double> zone_entries_active_fraction;
  std::vector<double> wake_distances;

  std::optional<double> viewing_accuracy;
  std::size_t viewing_samples = 0;

  std::vector<WarningRecord> warnings;
  std::optional<double> warning_mean_abs_error;
  std::optional<double> warning_max_abs_error;
  std::vector<SpeedCurvePoint> speed_curves;
};

// Shortest distance from each point to the polyline through `path`.
std::vector<double> distances_to_path(const std::vector<geo::GeoPoint>& points,
                                      const std::vector<TimedPoint>& path);

Metrics compute_metrics(const SimReport& r);

// Metric names accepted by the metrics command, in output order.
const std::vector<std::string>& metric_names();

}  // namespace safercross::engine
