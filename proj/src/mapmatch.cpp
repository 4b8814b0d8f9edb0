#include "safercross/mapmatch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "safercross/error.hpp"
#include "safercross/kernels.hpp"

namespace safercross::mapmatch {

void HmmModel::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(sigma_z)) throw Error(ErrorCode::InvalidArgument, "sigma_z must be > 0");
  if (!positive(beta)) throw Error(ErrorCode::InvalidArgument, "beta must be > 0");
  if (omega < 1) throw Error(ErrorCode::InvalidArgument, "omega must be >= 1");
  if (epsilon < 1) throw Error(ErrorCode::InvalidArgument, "epsilon must be >= 1");
  if (!positive(alpha)) throw Error(ErrorCode::InvalidArgument, "alpha must be > 0");
  if (!positive(v_max)) throw Error(ErrorCode::InvalidArgument, "v_max must be > 0");
  if (!positive(gps_interval)) throw Error(ErrorCode::InvalidArgument, "gps_interval must be > 0");
  if (!positive(reject_threshold)) {
    throw Error(ErrorCode::InvalidArgument, "reject_threshold must be > 0");
  }
}

GpsWindow::GpsWindow(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw Error(ErrorCode::InvalidArgument, "window capacity must be >= 1");
}

void GpsWindow::push(const TimedFix& fix) {
  if (!fixes_.empty() && !(fix.t > fixes_.back().t)) {
    throw Error(ErrorCode::InvalidArgument, "fix timestamps must be strictly increasing");
  }
  fixes_.push_back(fix);
  while (fixes_.size() > capacity_) fixes_.pop_front();
}

double observation_prob_distance(double distance, double sigma_z) {
  const double u = distance / sigma_z;
  return std::exp(-0.5 * u * u) / (std::sqrt(2.0 * std::numbers::pi) * sigma_z);
}

double observation_prob_point(const GeoPoint& z, const geo::SidewalkSegment& r, double sigma_z) {
  return observation_prob_distance(geo::project_to_segment(z, r).distance, sigma_z);
}

double observation_prob_window(std::span<const TimedFix> window, const geo::SidewalkSegment& r,
                               double sigma_z) {
  if (window.empty()) throw Error(ErrorCode::EmptyWindow, "observation window has no fixes");
  std::vector<double> distances;
  distances.reserve(window.size());
  for (const auto& f : window) distances.push_back(geo::project_to_segment(f.point, r).distance);
  return kernels::gaussian_density_mean(distances, sigma_z);
}

double observation_prob_window(const GpsWindow& window, const geo::SidewalkSegment& r,
                               double sigma_z) {
  const std::vector<TimedFix> fixes(window.fixes().begin(), window.fixes().end());
  return observation_prob_window(std::span<const TimedFix>(fixes), r, sigma_z);
}

double transition_density(double delta, double beta) {
  return std::exp(-delta / beta) / beta;
}

double transition_prob(const GeoPoint& z_now, const GeoPoint& z_past, const geo::SidewalkGraph& g,
                       double beta) {
  const double moving = geo::moving_distance(z_past, z_now, g);
  const double direct = geo::geodetic_distance(z_past, z_now);
  return transition_density(std::fabs(moving - direct), beta);
}

std::optional<double> transition_delta(const GeoPoint& z_now, SegmentId to, const GeoPoint& z_past,
                                       SegmentId from, const geo::SidewalkGraph& g) {
  const auto now = geo::project_to_segment(z_now, g.segment(to));
  const auto past = geo::project_to_segment(z_past, g.segment(from));
  const auto moving = g.network_distance(from, past.fraction, to, now.fraction);
  if (!moving) return std::nullopt;
  return std::fabs(*moving - geo::geodetic_distance(z_past, z_now));
}

SegmentEstimate estimate_segment(const GpsWindow& window, const Beliefs& prior,
                                 const geo::SidewalkGraph& g, const HmmModel& m) {
  if (window.empty()) throw Error(ErrorCode::EmptyWindow, "observation window has no fixes");
  const GeoPoint& newest = window.newest().point;
  const auto candidates = g.segments_within(newest, m.search_radius());
  if (candidates.empty()) {
    throw Error(ErrorCode::NoCandidates,
                "no segment within " + std::to_string(m.search_radius()) + " m of the newest fix");
  }

  const std::vector<TimedFix> fixes(window.fixes().begin(), window.fixes().end());
  std::vector<double> obs;
  obs.reserve(candidates.size());
  for (SegmentId id : candidates) {
    obs.push_back(observation_prob_window(std::span<const TimedFix>(fixes), g.segment(id), m.sigma_z));
  }

  std::vector<double> score(candidates.size(), 0.0);
  std::vector<std::optional<double>> best_delta(candidates.size());
  if (prior.empty()) {
    const GeoPoint& first = fixes.front().point;
    for (std::size_t j = 0; j < candidates.size(); ++j) {
      score[j] = observation_prob_point(first, g.segment(candidates[j]), m.sigma_z) * obs[j];
    }
  } else if (window.size() < 2) {
    score = obs;
  } else {
    const std::size_t steps = std::min(m.epsilon, window.size() - 1);
    const GeoPoint& past = window.back(steps).point;
    for (std::size_t j = 0; j < candidates.size(); ++j) {
      double acc = 0.0;
      double best_term = -1.0;
      for (const auto& [from, belief] : prior) {
        if (belief <= 0.0 || g.find_segment(from) == nullptr) continue;
        const auto delta = transition_delta(newest, candidates[j], past, from, g);
        if (!delta) continue;
        const double term = belief * transition_density(*delta, m.beta);
        acc += term;
        if (term > best_term) {
          best_term = term;
          best_delta[j] = delta;
        }
      }
      score[j] = obs[j] * acc;
    }
  }

  double total = std::accumulate(score.begin(), score.end(), 0.0);
  if (!(total > 0.0) || !std::isfinite(total)) {
    score = obs;
    total = std::accumulate(score.begin(), score.end(), 0.0);
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    // Every density underflowed; fall back to the geometrically nearest segment.
    std::fill(score.begin(), score.end(), 0.0);
    double nearest = std::numeric_limits<double>::infinity();
    std::size_t pick = 0;
    for (std::size_t j = 0; j < candidates.size(); ++j) {
      const double d = geo::project_to_segment(newest, g.segment(candidates[j])).distance;
      if (d < nearest) {
        nearest = d;
        pick = j;
      }
    }
    score[pick] = 1.0;
    total = 1.0;
  }

  SegmentEstimate out;
  std::size_t best = 0;
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    const double p = score[j] / total;
    out.posterior[candidates[j]] = p;
    if (score[j] > score[best]) best = j;  // candidates are id-sorted, so ties keep the smaller id
  }
  out.segment = candidates[best];
  out.delta = best_delta[best];
  return out;
}

CalibratedFix calibrate(const GeoPoint& z, const geo::SidewalkSegment& seg, const GeoPoint& anchor,
                        const HmmModel& m) {
  const GeoPoint center = geo::project_to_segment(anchor, seg).point;
  const geo::LocalFrame frame(center);
  const geo::Vec2 a = frame.to_local(seg.a);
  const geo::Vec2 b = frame.to_local(seg.b);
  const double len = std::hypot(b.x - a.x, b.y - a.y);
  const double ux = (b.x - a.x) / len;
  const double uy = (b.y - a.y) / len;

  const geo::Vec2 q = frame.to_local(z);
  const double along = q.x * ux + q.y * uy;
  const double cross = -q.x * uy + q.y * ux;
  const double half_along = 0.5 * m.alpha * m.v_max * m.gps_interval;
  const double half_cross = 0.5 * m.alpha * seg.width;

  CalibratedFix out;
  out.raw = z;
  out.segment = seg.id;
  if (std::fabs(along) <= half_along && std::fabs(cross) <= half_cross) {
    out.outcome = FixOutcome::Accepted;
    out.point = z;
    out.error_estimate = 0.0;
    return out;
  }
  const double ca = std::clamp(along, -half_along, half_along);
  const double cc = std::clamp(cross, -half_cross, half_cross);
  const GeoPoint edge = frame.to_geo({ca * ux - cc * uy, ca * uy + cc * ux});
  out.error_estimate = geo::geodetic_distance(z, edge);
  if (out.error_estimate > m.reject_threshold) {
    out.outcome = FixOutcome::Rejected;
    out.point = z;
  } else {
    out.outcome = FixOutcome::Projected;
    out.point = edge;
  }
  return out;
}

double update_sigma(std::span<const double> recent_errors) {
  if (recent_errors.size() < kSigmaMinSamples) {
    throw Error(ErrorCode::InsufficientSamples,
                "need at least " + std::to_string(kSigmaMinSamples) + " samples, got " +
                    std::to_string(recent_errors.size()));
  }
  const double n = static_cast<double>(recent_errors.size());
  const double mean = std::accumulate(recent_errors.begin(), recent_errors.end(), 0.0) / n;
  double ss = 0.0;
  for (double e : recent_errors) ss += (e - mean) * (e - mean);
  return std::clamp(std::sqrt(ss / (n - 1.0)), 1.0, 50.0);
}

MapMatcher::MapMatcher(const geo::SidewalkGraph& graph, HmmModel model, MatcherOptions options)
    : graph_(&graph), model_(model), options_(options), window_(model.omega) {
  model_.validate();
}

CalibratedFix MapMatcher::process(const TimedFix& fix, bool hold_segment) {
  // Fixes from before a GPS sleep describe where the walker was, not the
  // segment they are on now.
  if (last_fix_t_ && fix.t - *last_fix_t_ > 2.0 * model_.gps_interval) window_.clear();
  window_.push(fix);

  // A held segment is released once the fix runs off either end of it, so a
  // walker turning a corner inside a zone is not pinned to the old segment.
  if (hold_segment && segment_) {
    const auto& held = graph_->segment(*segment_);
    const auto p = geo::project_to_segment(fix.point, held);
    const bool off_end = p.fraction <= 0.0 || p.fraction >= 1.0;
    if (off_end && p.distance > 0.5 * model_.alpha * held.width) hold_segment = false;
  }

  if (!hold_segment || !segment_) {
    try {
      auto est = estimate_segment(window_, beliefs_, *graph_, model_);
      beliefs_ = std::move(est.posterior);
      segment_ = est.segment;
      if (!beta_calibrated_ && est.delta) {
        warmup_deltas_.push_back(*est.delta);
        if (warmup_deltas_.size() >= options_.beta_warmup) {
          const double mean = std::accumulate(warmup_deltas_.begin(), warmup_deltas_.end(), 0.0) /
                              static_cast<double>(warmup_deltas_.size());
          model_.beta = std::max(mean, options_.beta_floor);
          beta_calibrated_ = true;
        }
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoCandidates) throw;
      if (!segment_) {
        const auto far = graph_->snap(fix.point, std::numeric_limits<double>::infinity());
        if (!far) throw;
        CalibratedFix out;
        out.raw = fix.point;
        out.outcome = FixOutcome::Rejected;
        out.point = fix.point;
        out.segment = far->segment;
        out.error_estimate = far->projection.distance;
        return out;
      }
      // Keep the previous segment when the fix lands far from every segment.
    }
  }

  const auto& seg = graph_->segment(*segment_);
  const auto proj = geo::project_to_segment(fix.point, seg);
  if (!anchor_) anchor_ = proj.point;

  // After a GPS sleep the walker may have covered several intervals' worth of
  // sidewalk, so the region grows with the actual gap.
  HmmModel region_model = model_;
  if (last_fix_t_) region_model.gps_interval = std::max(model_.gps_interval, fix.t - *last_fix_t_);
  last_fix_t_ = fix.t;
  CalibratedFix out = calibrate(fix.point, seg, *anchor_, region_model);
  if (out.outcome == FixOutcome::Rejected) {
    if (++consecutive_rejects_ >= options_.reanchor_after_rejects) {
      anchor_ = proj.point;
      consecutive_rejects_ = 0;
    }
  } else {
    anchor_ = out.point;
    consecutive_rejects_ = 0;
  }

  recent_errors_.push_back(proj.distance);
  while (recent_errors_.size() > kSigmaHistory) recent_errors_.pop_front();
  if (options_.adapt_sigma && recent_errors_.size() >= kSigmaMinSamples) {
    const std::vector<double> errs(recent_errors_.begin(), recent_errors_.end());
    model_.sigma_z = update_sigma(errs);
  }
  return out;
}

}  // namespace safercross::mapmatch
