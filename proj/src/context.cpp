#include "safercross/context.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "safercross/error.hpp"
#include "safercross/kernels.hpp"

namespace safercross::context {
namespace {

void CheckAlpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "filter_alpha must be in (0, 1]");
  }
}

void CheckPaired(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) throw Error(ErrorCode::Empty, "need at least one pair");
  if (x.size() != y.size()) {
    throw Error(ErrorCode::LengthMismatch, "viewing and non-viewing sets differ in size (" +
                                               std::to_string(x.size()) + " vs " +
                                               std::to_string(y.size()) + ")");
  }
}

}  // namespace

std::size_t ViewingModel::window_samples() const {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(window_span * sample_rate)));
}

LowPassFilter::LowPassFilter(double filter_alpha) : alpha_(filter_alpha) { CheckAlpha(alpha_); }

AccelSample LowPassFilter::push(const AccelSample& s) {
  if (!primed_) {
    state_ = s;
    primed_ = true;
    return state_;
  }
  state_.t = s.t;
  state_.ax = alpha_ * s.ax + (1.0 - alpha_) * state_.ax;
  state_.ay = alpha_ * s.ay + (1.0 - alpha_) * state_.ay;
  state_.az = alpha_ * s.az + (1.0 - alpha_) * state_.az;
  return state_;
}

std::vector<AccelSample> low_pass(std::span<const AccelSample> samples, double filter_alpha) {
  LowPassFilter filter(filter_alpha);
  std::vector<AccelSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(filter.push(s));
  return out;
}

double magnitude(double ax, double ay, double az) { return std::sqrt(ax * ax + ay * ay + az * az); }

std::vector<double> magnitudes(std::span<const AccelSample> samples) {
  std::vector<double> x(samples.size()), y(samples.size()), z(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    x[i] = samples[i].ax;
    y[i] = samples[i].ay;
    z[i] = samples[i].az;
  }
  std::vector<double> out(samples.size());
  kernels::magnitude3(x, y, z, out);
  return out;
}

double mad(std::span<const double> window) {
  if (window.empty()) throw Error(ErrorCode::EmptyWindow, "MAD of an empty window");
  return kernels::mean_abs_dev(window);
}

std::vector<double> sliding_mads(std::span<const double> mags, std::size_t window,
                                 std::size_t stride) {
  if (window == 0 || stride == 0) {
    throw Error(ErrorCode::InvalidArgument, "window and stride must be >= 1");
  }
  std::vector<double> out(kernels::sliding_window_count(mags.size(), window, stride));
  kernels::sliding_mad(mags, window, stride, out);
  return out;
}

double train_threshold(std::span<const double> viewing, std::span<const double> non_viewing) {
  CheckPaired(viewing, non_viewing);
  double acc = 0.0;
  for (std::size_t i = 0; i < viewing.size(); ++i) acc += 0.5 * (non_viewing[i] + viewing[i]);
  return acc / static_cast<double>(viewing.size());
}

double train_threshold_truncating(std::span<const double> viewing,
                                  std::span<const double> non_viewing) {
  const std::size_t n = std::min(viewing.size(), non_viewing.size());
  return train_threshold(viewing.first(n), non_viewing.first(n));
}

bool detect_viewing(double current_mad, double gamma) {
  if (!(gamma > 0.0)) throw Error(ErrorCode::Untrained, "viewing threshold has not been trained");
  return current_mad < gamma;
}

double delta_metric(std::span<const double> viewing, std::span<const double> non_viewing) {
  CheckPaired(viewing, non_viewing);
  double acc = 0.0;
  for (std::size_t i = 0; i < viewing.size(); ++i) acc += std::fabs(non_viewing[i] - viewing[i]);
  return acc / static_cast<double>(viewing.size());
}

Motion classify_motion(double speed, const MotionThresholds& thresholds) {
  if (speed < thresholds.stationary_below) return Motion::Stationary;
  if (speed < thresholds.running_from) return Motion::Walking;
  return Motion::Running;
}

ViewingDetector::ViewingDetector(const ViewingModel& model)
    : model_(model), filter_(model.filter_alpha), capacity_(model.window_samples()) {}

void ViewingDetector::push(const AccelSample& s) {
  window_.push_back(magnitude(filter_.push(s)));
  while (window_.size() > capacity_) window_.pop_front();
}

std::optional<double> ViewingDetector::current_mad() const {
  if (!window_full()) return std::nullopt;
  const std::vector<double> w(window_.begin(), window_.end());
  return mad(w);
}

std::optional<bool> ViewingDetector::viewing() const {
  const auto m = current_mad();
  if (!m) return std::nullopt;
  return detect_viewing(*m, model_.gamma);
}

AccelSample synthesize_accel_sample(bool viewing, double t, const SyntheticAccelSpec& spec,
                                    std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, spec.noise_std);
  double z = spec.gravity + noise(rng);
  if (!viewing) z += spec.gait_amplitude * std::sin(2.0 * std::numbers::pi * spec.gait_hz * t);
  return {t, 0.0, 0.0, z};
}

std::vector<AccelSample> synthesize_accel(bool viewing, double t0, double duration,
                                          const SyntheticAccelSpec& spec, std::mt19937_64& rng) {
  const auto n = static_cast<std::size_t>(std::lround(duration * spec.sample_rate));
  std::vector<AccelSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(synthesize_accel_sample(viewing, t0 + static_cast<double>(i) / spec.sample_rate,
                                          spec, rng));
  }
  return out;
}

ViewingCorpus build_corpus(std::size_t windows, double window_span, double filter_alpha,
                           const SyntheticAccelSpec& spec, std::mt19937_64& rng) {
  const auto window = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(window_span * spec.sample_rate)));
  const double duration = static_cast<double>(windows * window) / spec.sample_rate;
  auto mads_for = [&](bool viewing) {
    const auto raw = synthesize_accel(viewing, 0.0, duration, spec, rng);
    const auto filtered = low_pass(raw, filter_alpha);
    const auto mags = magnitudes(filtered);
    return sliding_mads(mags, window, window);
  };
  ViewingCorpus corpus;
  corpus.viewing_mads = mads_for(true);
  corpus.non_viewing_mads = mads_for(false);
  return corpus;
}

DetectionResult train_and_evaluate(const ViewingCorpus& corpus) {
  const std::size_t n = std::min(corpus.viewing_mads.size(), corpus.non_viewing_mads.size());
  if (n < 2) throw Error(ErrorCode::Empty, "need at least two windows per class");
  const std::size_t half = n / 2;
  const std::span<const double> x(corpus.viewing_mads);
  const std::span<const double> y(corpus.non_viewing_mads);

  DetectionResult r;
  r.gamma = train_threshold(x.first(half), y.first(half));
  std::size_t correct = 0;
  for (std::size_t i = half; i < n; ++i) {
    correct += detect_viewing(x[i], r.gamma) ? 1 : 0;
    correct += detect_viewing(y[i], r.gamma) ? 0 : 1;
  }
  r.tested = 2 * (n - half);
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.tested);
  return r;
}

}  // namespace safercross::context
