#pragma once

// HMM map matching for slow-moving pedestrians: picks the current sidewalk
// segment from a sliding window of GPS fixes, then accepts, projects or
// rejects the newest fix against a speed-bounded valid region.

#include <cstddef>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "safercross/geo.hpp"

namespace safercross::mapmatch {

using geo::GeoPoint;
using geo::SegmentId;

struct HmmModel {
  double sigma_z = 5.0;           // GPS std-dev, meters
  double beta = 5.0;              // exponential scale of the transition density, meters
  std::size_t omega = 5;          // window size, fixes
  std::size_t epsilon = 3;        // look-back for the transition term, fixes
  double alpha = 2.0;             // valid-region tolerance
  double v_max = 2.0;             // brisk walking speed, m/s
  double gps_interval = 1.0;      // seconds between fixes
  double reject_threshold = 15.0; // meters

  // Throws Error(InvalidArgument) when any field is out of range.
  void validate() const;
  // Candidate radius around the newest fix: 3*sigma_z + 30 m.
  double search_radius() const { return 3.0 * sigma_z + 30.0; }
};

struct TimedFix {
  double t = 0.0;
  GeoPoint point;
};

// Sliding window of the most recent `capacity` fixes, oldest first.
class GpsWindow {
 public:
  explicit GpsWindow(std::size_t capacity);

  // Throws Error(InvalidArgument) unless t is strictly after the newest fix.
  void push(const TimedFix& fix);
  void clear() { fixes_.clear(); }

  std::size_t size() const { return fixes_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return fixes_.empty(); }
  const TimedFix& newest() const { return fixes_.back(); }
  // index 0 = newest, 1 = one fix back, ...
  const TimedFix& back(std::size_t steps) const { return fixes_[fixes_.size() - 1 - steps]; }
  const std::deque<TimedFix>& fixes() const { return fixes_; }

 private:
  std::size_t capacity_;
  std::deque<TimedFix> fixes_;
};

enum class FixOutcome { Accepted, Projected, Rejected };

struct CalibratedFix {
  GeoPoint raw;
  FixOutcome outcome = FixOutcome::Accepted;
  GeoPoint point;  // equal to raw when Accepted; meaningless when Rejected
  SegmentId segment = 0;
  double error_estimate = 0.0;  // meters between raw and the valid region
};

// Gaussian density of the distance from z to its closest point on r.
double observation_prob_point(const GeoPoint& z, const geo::SidewalkSegment& r, double sigma_z);
double observation_prob_distance(double distance, double sigma_z);

// Mean of the per-fix densities. Throws Error(EmptyWindow).
double observation_prob_window(std::span<const TimedFix> window, const geo::SidewalkSegment& r,
                               double sigma_z);
double observation_prob_window(const GpsWindow& window, const geo::SidewalkSegment& r,
                               double sigma_z);

// (1/beta) * exp(-delta/beta).
double transition_density(double delta, double beta);

// Density of |moving - geodetic| between two fixes, with both fixes snapped
// to their nearest segments. Propagates SnapFailure / Unreachable.
double transition_prob(const GeoPoint& z_now, const GeoPoint& z_past, const geo::SidewalkGraph& g,
                       double beta);

// Same difference with z_past pinned to segment `from` and z_now to segment
// `to`; nullopt when the two segments are disconnected.
std::optional<double> transition_delta(const GeoPoint& z_now, SegmentId to, const GeoPoint& z_past,
                                       SegmentId from, const geo::SidewalkGraph& g);

using Beliefs = std::map<SegmentId, double>;

struct SegmentEstimate {
  SegmentId segment = 0;
  Beliefs posterior;  // normalized over the candidate set
  // delta of the most probable transition into `segment`, when one was used
  std::optional<double> delta;
};

// One forward-filtering step. With an empty prior the posterior is
// pi * observation, pi being the observation density of the oldest fix in the
// window. Otherwise each candidate j scores
//   obs_j * sum_i prior_i * p(delta_ij)
// where delta_ij uses the fix `epsilon` steps back pinned to i and the newest
// fix pinned to j. Ties resolve to the smallest segment id.
// Throws Error(NoCandidates) when no segment lies within the search radius.
SegmentEstimate estimate_segment(const GpsWindow& window, const Beliefs& prior,
                                 const geo::SidewalkGraph& g, const HmmModel& m);

// Valid-region test against a rectangle centered on `anchor` (snapped to the
// segment line) and aligned with the segment: along-track extent
// alpha*v_max*gps_interval, cross-track extent alpha*width.
CalibratedFix calibrate(const GeoPoint& z, const geo::SidewalkSegment& seg, const GeoPoint& anchor,
                        const HmmModel& m);

inline constexpr std::size_t kSigmaMinSamples = 10;
inline constexpr std::size_t kSigmaHistory = 30;

// Sample standard deviation clamped to [1, 50] m.
// Throws Error(InsufficientSamples) below kSigmaMinSamples.
double update_sigma(std::span<const double> recent_errors);

struct MatcherOptions {
  bool adapt_sigma = true;
  std::size_t beta_warmup = 20;
  double beta_floor = 0.5;
  // Consecutive rejections after which the region re-anchors on the newest
  // fix's projection, so a lagging anchor cannot lock the matcher out.
  std::size_t reanchor_after_rejects = 3;
};

// Stateful per-pedestrian matcher (single writer).
class MapMatcher {
 public:
  MapMatcher(const geo::SidewalkGraph& graph, HmmModel model, MatcherOptions options = {});

  // Processes one fix. With `hold_segment` the segment estimate is frozen
  // (used inside alert zones) and only calibration runs.
  CalibratedFix process(const TimedFix& fix, bool hold_segment = false);

  const HmmModel& model() const { return model_; }
  std::optional<SegmentId> current_segment() const { return segment_; }
  std::optional<GeoPoint> last_position() const { return anchor_; }
  const Beliefs& beliefs() const { return beliefs_; }
  bool beta_calibrated() const { return beta_calibrated_; }

 private:
  const geo::SidewalkGraph* graph_;
  HmmModel model_;
  MatcherOptions options_;
  GpsWindow window_;
  Beliefs beliefs_;
  std::optional<SegmentId> segment_;
  std::optional<GeoPoint> anchor_;
  std::deque<double> recent_errors_;
  std::vector<double> warmup_deltas_;
  bool beta_calibrated_ = false;
  std::size_t consecutive_rejects_ = 0;
  std::optional<double> last_fix_t_;
};

}  // namespace safercross::mapmatch
