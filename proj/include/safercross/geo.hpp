#pragma once

#include <optional>
#include <span>
#include <vector>

namespace safercross::geo {

inline constexpr double kEarthRadiusM = 6371000.0;

struct GeoPoint {
  double lat = 0.0;  // degrees
  double lon = 0.0;  // degrees

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

bool is_valid(const GeoPoint& p);

// Great-circle (haversine) distance on a sphere of radius kEarthRadiusM.
double geodetic_distance(const GeoPoint& a, const GeoPoint& b);

// Initial bearing from a to b, degrees in [0, 360).
double bearing_deg(const GeoPoint& a, const GeoPoint& b);

// Smallest absolute difference between two headings, degrees in [0, 180].
double angular_difference_deg(double a, double b);

struct Vec2 {
  double x = 0.0;  // east, meters
  double y = 0.0;  // north, meters
};

// Equirectangular tangent plane anchored at `origin`. Accurate to well under
// a centimeter over the sub-kilometer extents used here.
class LocalFrame {
 public:
  explicit LocalFrame(const GeoPoint& origin);
  LocalFrame(const GeoPoint& origin, double reference_lat);

  Vec2 to_local(const GeoPoint& p) const;
  GeoPoint to_geo(const Vec2& v) const;
  const GeoPoint& origin() const { return origin_; }

 private:
  GeoPoint origin_;
  double meters_per_deg_lat_;
  double meters_per_deg_lon_;
};

// `from` displaced by east/north meters in its tangent plane.
GeoPoint offset(const GeoPoint& from, double east_m, double north_m);

using SegmentId = int;

struct SidewalkSegment {
  SegmentId id = 0;
  GeoPoint a;
  GeoPoint b;
  double width = 2.0;  // meters

  double length() const { return geodetic_distance(a, b); }
};

struct SegmentProjection {
  GeoPoint point;
  double distance = 0.0;  // geodetic distance from the query to `point`
  double fraction = 0.0;  // position along a->b in [0, 1]
};

SegmentProjection project_to_segment(const GeoPoint& z, const SidewalkSegment& r);

// Point at `fraction` along the segment.
GeoPoint point_on_segment(const SidewalkSegment& r, double fraction);

struct AlertZone {
  GeoPoint crossing;
  double radius = 30.0;  // meters
};

bool in_alert_zone(const GeoPoint& p, const AlertZone& zone);

// Distance from p to the zone boundary, zero when inside.
double distance_to_zone_boundary(const GeoPoint& p, const AlertZone& zone);

inline constexpr double kDefaultSnapRadiusM = 50.0;

class SidewalkGraph {
 public:
  SidewalkGraph() = default;
  // Throws Error(ValidationError) on duplicate ids, degenerate segments,
  // non-positive widths, invalid coordinates, crossings off the network or
  // zones with non-positive radius.
  SidewalkGraph(std::vector<SidewalkSegment> segments, std::vector<GeoPoint> crossings,
                std::vector<AlertZone> zones);

  std::span<const SidewalkSegment> segments() const { return segments_; }
  std::span<const GeoPoint> crossings() const { return crossings_; }
  std::span<const AlertZone> zones() const { return zones_; }

  const SidewalkSegment& segment(SegmentId id) const;
  const SidewalkSegment* find_segment(SegmentId id) const;

  struct Snap {
    SegmentId segment;
    SegmentProjection projection;
  };
  // Nearest segment within `radius`; ties go to the smallest id.
  std::optional<Snap> snap(const GeoPoint& p, double radius = kDefaultSnapRadiusM) const;

  // Segments whose closest point is within `radius` of p, sorted by id.
  std::vector<SegmentId> segments_within(const GeoPoint& p, double radius) const;

  // Shortest along-network distance between two on-network positions.
  // Returns nullopt when the positions lie in disconnected components.
  std::optional<double> network_distance(SegmentId seg_a, double frac_a, SegmentId seg_b,
                                         double frac_b) const;

  // Nodes are merged segment endpoints; exposed for tests.
  std::size_t node_count() const { return nodes_.size(); }
  bool nodes_adjacent(std::size_t u, std::size_t v) const;

 private:
  struct Edge {
    std::size_t to;
    double length;
  };

  std::size_t segment_index(SegmentId id) const;
  std::vector<double> shortest_from(std::size_t source) const;

  std::vector<SidewalkSegment> segments_;
  std::vector<GeoPoint> crossings_;
  std::vector<AlertZone> zones_;
  std::vector<GeoPoint> nodes_;
  std::vector<std::pair<std::size_t, std::size_t>> segment_nodes_;
  std::vector<double> segment_lengths_;
  std::vector<std::vector<Edge>> adjacency_;
};

// Shortest distance along the sidewalk network after snapping a and b to
// their nearest segments. Throws Error(SnapFailure) when either point has no
// segment within `snap_radius`, Error(Unreachable) for disconnected components.
double moving_distance(const GeoPoint& a, const GeoPoint& b, const SidewalkGraph& g,
                       double snap_radius = kDefaultSnapRadiusM);

}  // namespace safercross::geo
