#include "safercross/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "safercross/kernels.hpp"

namespace safercross::engine {
namespace {

std::vector<CdfPoint> Cdf(std::vector<double> errors) {
  std::sort(errors.begin(), errors.end());
  std::vector<CdfPoint> out;
  out.reserve(errors.size());
  const double n = static_cast<double>(errors.size());
  for (std::size_t i = 0; i < errors.size(); ++i) out.push_back({errors[i], static_cast<double>(i + 1) / n});
  return out;
}

std::optional<double> Mean(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

std::vector<double> distances_to_path(const std::vector<geo::GeoPoint>& points,
                                      const std::vector<TimedPoint>& path) {
  std::vector<double> out(points.size(), std::numeric_limits<double>::infinity());
  if (points.empty() || path.empty()) return out;
  const geo::LocalFrame frame(path.front().point);
  std::vector<double> px(points.size()), py(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto v = frame.to_local(points[i]);
    px[i] = v.x;
    py[i] = v.y;
  }
  if (path.size() == 1) {
    kernels::min_point_segment_distance(px, py, 0.0, 0.0, 0.0, 0.0, out);
    return out;
  }
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const auto a = frame.to_local(path[i].point);
    const auto b = frame.to_local(path[i + 1].point);
    kernels::min_point_segment_distance(px, py, a.x, a.y, b.x, b.y, out);
  }
  return out;
}

Metrics compute_metrics(const SimReport& r) {
  Metrics m;

  std::map<std::string, std::pair<std::vector<geo::GeoPoint>, std::vector<geo::GeoPoint>>> by_actor;
  for (const auto& f : r.fixes) {
    auto& [raw, cal] = by_actor[f.actor];
    raw.push_back(f.raw);
    cal.push_back(f.calibrated);
  }
  std::vector<double> raw_err, cal_err;
  for (const auto& [actor, fixes] : by_actor) {
    auto path = r.truth_paths.find(actor);
    if (path == r.truth_paths.end()) continue;
    const auto a = distances_to_path(fixes.first, path->second);
    const auto b = distances_to_path(fixes.second, path->second);
    raw_err.insert(raw_err.end(), a.begin(), a.end());
    cal_err.insert(cal_err.end(), b.begin(), b.end());
  }
  m.raw_mean_error = Mean(raw_err);
  m.calibrated_mean_error = Mean(cal_err);
  m.raw_error_cdf = Cdf(std::move(raw_err));
  m.calibrated_error_cdf = Cdf(std::move(cal_err));

  for (const auto& p : r.pedestrians) {
    m.energy_duty_cycled += p.energy_duty_cycled;
    m.energy_always_on += p.energy_always_on;
    m.active_time += p.active_time;
    m.sleep_time += p.sleep_time;
  }
  if (m.energy_always_on > 0.0) {
    m.energy_savings = std::clamp(1.0 - m.energy_duty_cycled / m.energy_always_on, 0.0, 1.0);
  }
  m.zone_entries = r.zone_entries.size();
  if (!r.zone_entries.empty()) {
    const auto active = std::count_if(r.zone_entries.begin(), r.zone_entries.end(),
                                      [](const ZoneEntryRecord& z) { return z.gps_active; });
    m.zone_entries_active_fraction = static_cast<double>(active) / static_cast<double>(r.zone_entries.size());
  }
  for (const auto& w : r.wakes) m.wake_distances.push_back(w.distance_to_zone);

  std::size_t correct = 0;
  for (const auto& t : r.ticks) {
    if (!t.pedestrian || !t.viewing_detected) continue;
    ++m.viewing_samples;
    correct += *t.viewing_detected == t.viewing_truth ? 1 : 0;
  }
  if (m.viewing_samples > 0) m.viewing_accuracy = static_cast<double>(correct) / static_cast<double>(m.viewing_samples);

  m.warnings = r.warnings;
  std::vector<double> abs_err;
  struct Acc {
    std::vector<double> tw, gt, p, err;
  };
  std::map<long, Acc> curves;
  for (const auto& w : r.warnings) {
    if (w.t_warning && w.t_warning_gt) abs_err.push_back(std::fabs(*w.t_warning - *w.t_warning_gt));
    if (!w.vehicle_speed_kmh || !w.t_warning) continue;
    auto& acc = curves[std::lround(*w.vehicle_speed_kmh)];
    acc.tw.push_back(*w.t_warning);
    if (w.probability) acc.p.push_back(*w.probability);
    if (w.t_warning_gt) {
      acc.gt.push_back(*w.t_warning_gt);
      acc.err.push_back(std::fabs(*w.t_warning - *w.t_warning_gt));
    }
  }
  m.warning_mean_abs_error = Mean(abs_err);
  if (!abs_err.empty()) m.warning_max_abs_error = *std::max_element(abs_err.begin(), abs_err.end());
  for (const auto& [speed, acc] : curves) {
    m.speed_curves.push_back({static_cast<double>(speed), acc.tw.size(), Mean(acc.tw).value_or(0.0),
                              Mean(acc.gt).value_or(0.0), Mean(acc.p).value_or(0.0), Mean(acc.err).value_or(0.0)});
  }
  return m;
}

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = {"location_error_cdf", "mean_errors",   "energy",
                                                 "viewing_accuracy",   "warning_time",  "speed_curves",
                                                 "wake_distances"};
  return names;
}

}  // namespace safercross::engine
