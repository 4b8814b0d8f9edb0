#include "safercross/geo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <string>

#include "safercross/error.hpp"

namespace safercross::geo {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kNodeMergeM = 0.05;
constexpr double kCrossingOnNetworkM = 1.0;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string Describe(const GeoPoint& p) {
  return "(" + std::to_string(p.lat) + ", " + std::to_string(p.lon) + ")";
}

}  // namespace

bool is_valid(const GeoPoint& p) {
  return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 && p.lat <= 90.0 &&
         p.lon >= -180.0 && p.lon <= 180.0;
}

double geodetic_distance(const GeoPoint& a, const GeoPoint& b) {
  const double lat1 = a.lat * kDegToRad;
  const double lat2 = b.lat * kDegToRad;
  const double dlat = lat2 - lat1;
  const double dlon = (b.lon - a.lon) * kDegToRad;
  const double s_lat = std::sin(dlat / 2.0);
  const double s_lon = std::sin(dlon / 2.0);
  const double h = s_lat * s_lat + std::cos(lat1) * std::cos(lat2) * s_lon * s_lon;
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

double bearing_deg(const GeoPoint& a, const GeoPoint& b) {
  const double lat1 = a.lat * kDegToRad;
  const double lat2 = b.lat * kDegToRad;
  const double dlon = (b.lon - a.lon) * kDegToRad;
  const double y = std::sin(dlon) * std::cos(lat2);
  const double x = std::cos(lat1) * std::sin(lat2) - std::sin(lat1) * std::cos(lat2) * std::cos(dlon);
  double deg = std::atan2(y, x) / kDegToRad;
  if (deg < 0.0) deg += 360.0;
  if (deg >= 360.0) deg -= 360.0;
  return deg;
}

double angular_difference_deg(double a, double b) {
  double d = std::fmod(std::fabs(a - b), 360.0);
  return d > 180.0 ? 360.0 - d : d;
}

LocalFrame::LocalFrame(const GeoPoint& origin) : LocalFrame(origin, origin.lat) {}

LocalFrame::LocalFrame(const GeoPoint& origin, double reference_lat)
    : origin_(origin),
      meters_per_deg_lat_(kEarthRadiusM * kDegToRad),
      meters_per_deg_lon_(kEarthRadiusM * kDegToRad * std::cos(reference_lat * kDegToRad)) {}

Vec2 LocalFrame::to_local(const GeoPoint& p) const {
  return {(p.lon - origin_.lon) * meters_per_deg_lon_, (p.lat - origin_.lat) * meters_per_deg_lat_};
}

GeoPoint LocalFrame::to_geo(const Vec2& v) const {
  return {origin_.lat + v.y / meters_per_deg_lat_, origin_.lon + v.x / meters_per_deg_lon_};
}

GeoPoint offset(const GeoPoint& from, double east_m, double north_m) {
  return LocalFrame(from).to_geo({east_m, north_m});
}

SegmentProjection project_to_segment(const GeoPoint& z, const SidewalkSegment& r) {
  const LocalFrame frame(r.a, 0.5 * (r.a.lat + r.b.lat));
  const Vec2 b = frame.to_local(r.b);
  const Vec2 q = frame.to_local(z);
  const double len2 = b.x * b.x + b.y * b.y;
  double t = len2 > 0.0 ? (q.x * b.x + q.y * b.y) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  GeoPoint point;
  if (t == 0.0) {
    point = r.a;
  } else if (t == 1.0) {
    point = r.b;
  } else {
    point = frame.to_geo({t * b.x, t * b.y});
  }
  return {point, geodetic_distance(z, point), t};
}

GeoPoint point_on_segment(const SidewalkSegment& r, double fraction) {
  if (fraction <= 0.0) return r.a;
  if (fraction >= 1.0) return r.b;
  const LocalFrame frame(r.a, 0.5 * (r.a.lat + r.b.lat));
  const Vec2 b = frame.to_local(r.b);
  return frame.to_geo({fraction * b.x, fraction * b.y});
}

bool in_alert_zone(const GeoPoint& p, const AlertZone& zone) {
  return geodetic_distance(p, zone.crossing) <= zone.radius;
}

double distance_to_zone_boundary(const GeoPoint& p, const AlertZone& zone) {
  return std::max(0.0, geodetic_distance(p, zone.crossing) - zone.radius);
}

SidewalkGraph::SidewalkGraph(std::vector<SidewalkSegment> segments, std::vector<GeoPoint> crossings,
                             std::vector<AlertZone> zones)
    : segments_(std::move(segments)), crossings_(std::move(crossings)), zones_(std::move(zones)) {
  std::vector<std::string> problems;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& s = segments_[i];
    const std::string tag = "segment " + std::to_string(s.id);
    if (!is_valid(s.a) || !is_valid(s.b)) problems.push_back(tag + ": invalid coordinates");
    if (!(s.width > 0.0)) problems.push_back(tag + ": width must be > 0");
    if (geodetic_distance(s.a, s.b) < kNodeMergeM) problems.push_back(tag + ": endpoints coincide");
    for (std::size_t j = 0; j < i; ++j) {
      if (segments_[j].id == s.id) problems.push_back(tag + ": duplicate id");
    }
  }
  for (const auto& z : zones_) {
    if (!(z.radius > 0.0)) problems.push_back("zone at " + Describe(z.crossing) + ": radius must be > 0");
    if (!is_valid(z.crossing)) problems.push_back("zone: invalid crossing coordinates");
  }
  if (!problems.empty()) {
    std::string msg;
    for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p;
    throw Error(ErrorCode::ValidationError, msg);
  }

  auto node_for = [this](const GeoPoint& p) {
    for (std::size_t n = 0; n < nodes_.size(); ++n) {
      if (geodetic_distance(nodes_[n], p) <= kNodeMergeM) return n;
    }
    nodes_.push_back(p);
    return nodes_.size() - 1;
  };
  for (const auto& s : segments_) {
    const std::size_t u = node_for(s.a);
    const std::size_t v = node_for(s.b);
    segment_nodes_.emplace_back(u, v);
    segment_lengths_.push_back(s.length());
  }
  adjacency_.assign(nodes_.size(), {});
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto [u, v] = segment_nodes_[i];
    adjacency_[u].push_back({v, segment_lengths_[i]});
    adjacency_[v].push_back({u, segment_lengths_[i]});
  }

  for (const auto& c : crossings_) {
    if (!is_valid(c)) throw Error(ErrorCode::ValidationError, "crossing: invalid coordinates");
    const auto s = snap(c, kCrossingOnNetworkM);
    if (!s) {
      throw Error(ErrorCode::ValidationError, "crossing " + Describe(c) + " is not on any segment");
    }
  }
}

std::size_t SidewalkGraph::segment_index(SegmentId id) const {
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    if (segments_[i].id == id) return i;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown segment id " + std::to_string(id));
}

const SidewalkSegment& SidewalkGraph::segment(SegmentId id) const {
  return segments_[segment_index(id)];
}

const SidewalkSegment* SidewalkGraph::find_segment(SegmentId id) const {
  for (const auto& s : segments_) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

std::optional<SidewalkGraph::Snap> SidewalkGraph::snap(const GeoPoint& p, double radius) const {
  std::optional<Snap> best;
  for (const auto& s : segments_) {
    const auto proj = project_to_segment(p, s);
    if (proj.distance > radius) continue;
    if (!best || proj.distance < best->projection.distance ||
        (proj.distance == best->projection.distance && s.id < best->segment)) {
      best = Snap{s.id, proj};
    }
  }
  return best;
}

std::vector<SegmentId> SidewalkGraph::segments_within(const GeoPoint& p, double radius) const {
  std::vector<SegmentId> out;
  for (const auto& s : segments_) {
    if (project_to_segment(p, s).distance <= radius) out.push_back(s.id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool SidewalkGraph::nodes_adjacent(std::size_t u, std::size_t v) const {
  return std::any_of(adjacency_.at(u).begin(), adjacency_.at(u).end(),
                     [v](const Edge& e) { return e.to == v; });
}

std::vector<double> SidewalkGraph::shortest_from(std::size_t source) const {
  std::vector<double> dist(nodes_.size(), kInf);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[source] = 0.0;
  queue.emplace(0.0, source);
  while (!queue.empty()) {
    const auto [d, u] = queue.top();
    queue.pop();
    if (d > dist[u]) continue;
    for (const auto& e : adjacency_[u]) {
      const double nd = d + e.length;
      if (nd < dist[e.to]) {
        dist[e.to] = nd;
        queue.emplace(nd, e.to);
      }
    }
  }
  return dist;
}

std::optional<double> SidewalkGraph::network_distance(SegmentId seg_a, double frac_a,
                                                      SegmentId seg_b, double frac_b) const {
  const std::size_t ia = segment_index(seg_a);
  const std::size_t ib = segment_index(seg_b);
  frac_a = std::clamp(frac_a, 0.0, 1.0);
  frac_b = std::clamp(frac_b, 0.0, 1.0);
  const double len_a = segment_lengths_[ia];
  const double len_b = segment_lengths_[ib];

  double best = kInf;
  if (ia == ib) best = std::fabs(frac_a - frac_b) * len_a;

  const auto [a0, a1] = segment_nodes_[ia];
  const auto [b0, b1] = segment_nodes_[ib];
  const double to_a0 = frac_a * len_a;
  const double to_a1 = (1.0 - frac_a) * len_a;
  const double from_b0 = frac_b * len_b;
  const double from_b1 = (1.0 - frac_b) * len_b;
  const auto d0 = shortest_from(a0);
  const auto d1 = shortest_from(a1);
  best = std::min({best, to_a0 + d0[b0] + from_b0, to_a0 + d0[b1] + from_b1,
                   to_a1 + d1[b0] + from_b0, to_a1 + d1[b1] + from_b1});
  if (!std::isfinite(best)) return std::nullopt;
  return best;
}

double moving_distance(const GeoPoint& a, const GeoPoint& b, const SidewalkGraph& g,
                       double snap_radius) {
  const auto sa = g.snap(a, snap_radius);
  if (!sa) throw Error(ErrorCode::SnapFailure, "no segment within snap radius of " + Describe(a));
  const auto sb = g.snap(b, snap_radius);
  if (!sb) throw Error(ErrorCode::SnapFailure, "no segment within snap radius of " + Describe(b));
  const auto d = g.network_distance(sa->segment, sa->projection.fraction, sb->segment,
                                    sb->projection.fraction);
  if (!d) throw Error(ErrorCode::Unreachable, "points lie in disconnected components");
  return *d;
}

}  // namespace safercross::geo
