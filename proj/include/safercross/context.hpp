#pragma once

// Phone-viewing detection from 3-axis acceleration: low-pass filter, take the
// magnitude, and compare the mean absolute deviation over a sliding window
// against a trained threshold. A steadied phone shakes less than a swinging one.

#include <cstddef>
#include <deque>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace safercross::context {

struct AccelSample {
  double t = 0.0;
  double ax = 0.0;
  double ay = 0.0;
  double az = 0.0;
};

inline constexpr double kDefaultSampleRateHz = 50.0;

struct ViewingModel {
  double gamma = 0.0;          // MAD threshold; 0 means untrained
  double filter_alpha = 0.2;   // exponential smoothing factor in (0, 1]
  double window_span = 3.0;    // seconds
  double sample_rate = kDefaultSampleRateHz;

  bool trained() const { return gamma > 0.0; }
  std::size_t window_samples() const;
};

// y_t = alpha*x_t + (1-alpha)*y_{t-1}, y_0 = x_0, per axis.
// Throws Error(InvalidArgument) unless alpha is in (0, 1].
std::vector<AccelSample> low_pass(std::span<const AccelSample> samples, double filter_alpha);

class LowPassFilter {
 public:
  explicit LowPassFilter(double filter_alpha);
  AccelSample push(const AccelSample& s);
  void reset() { primed_ = false; }

 private:
  double alpha_;
  bool primed_ = false;
  AccelSample state_{};
};

double magnitude(double ax, double ay, double az);
inline double magnitude(const AccelSample& s) { return magnitude(s.ax, s.ay, s.az); }

// Magnitudes of a sample block (vectorized).
std::vector<double> magnitudes(std::span<const AccelSample> samples);

// Mean absolute deviation. Throws Error(EmptyWindow).
double mad(std::span<const double> window);

// MADs of consecutive windows of `window` samples, advanced by `stride`.
std::vector<double> sliding_mads(std::span<const double> mags, std::size_t window,
                                 std::size_t stride);

// Mean of pairwise midpoints (x_i + y_i) / 2.
// Throws Error(Empty) or Error(LengthMismatch).
double train_threshold(std::span<const double> viewing, std::span<const double> non_viewing);

// As train_threshold but truncates both sides to the shorter length first.
double train_threshold_truncating(std::span<const double> viewing,
                                  std::span<const double> non_viewing);

// current_mad < gamma. Throws Error(Untrained) when gamma <= 0.
bool detect_viewing(double current_mad, double gamma);

// Mean absolute pairwise difference |y_i - x_i|.
double delta_metric(std::span<const double> viewing, std::span<const double> non_viewing);

enum class Motion { Stationary, Walking, Running };

struct MotionThresholds {
  double stationary_below = 0.3;  // m/s
  double running_from = 2.5;      // m/s
};

Motion classify_motion(double speed, const MotionThresholds& thresholds = {});

// Streaming per-pedestrian detector: filter -> magnitude -> sliding window.
class ViewingDetector {
 public:
  explicit ViewingDetector(const ViewingModel& model);

  void push(const AccelSample& s);
  bool window_full() const { return window_.size() == capacity_; }
  // nullopt until the window holds window_samples() magnitudes.
  std::optional<double> current_mad() const;
  // nullopt until the window is full.
  std::optional<bool> viewing() const;

 private:
  ViewingModel model_;
  LowPassFilter filter_;
  std::size_t capacity_;
  std::deque<double> window_;
};

// Synthetic accelerometer traces. Viewing: gravity on z plus Gaussian noise
// (std noise_std). Walking without viewing: additionally a gait sinusoid of
// `gait_amplitude` at `gait_hz`.
struct SyntheticAccelSpec {
  double gravity = 9.81;
  double noise_std = 0.05;
  double gait_amplitude = 1.0;
  double gait_hz = 2.0;
  double sample_rate = kDefaultSampleRateHz;
};

std::vector<AccelSample> synthesize_accel(bool viewing, double t0, double duration,
                                          const SyntheticAccelSpec& spec, std::mt19937_64& rng);

// One sample at time t (for streaming generation inside the engine).
AccelSample synthesize_accel_sample(bool viewing, double t, const SyntheticAccelSpec& spec,
                                    std::mt19937_64& rng);

struct ViewingCorpus {
  std::vector<double> viewing_mads;
  std::vector<double> non_viewing_mads;
};

// MADs over tumbling windows of `window_span` seconds of filtered synthetic
// traces, `windows` per class.
ViewingCorpus build_corpus(std::size_t windows, double window_span, double filter_alpha,
                           const SyntheticAccelSpec& spec, std::mt19937_64& rng);

struct DetectionResult {
  double gamma = 0.0;
  double accuracy = 0.0;
  std::size_t tested = 0;
};

// Trains on the first half of each class and tests on the second half.
DetectionResult train_and_evaluate(const ViewingCorpus& corpus);

}  // namespace safercross::context
