#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "safercross/error.hpp"
#include "safercross/geo.hpp"

using namespace safercross;
using namespace safercross::geo;

namespace {

const GeoPoint kOrigin{40.0, -83.0};

GeoPoint At(double east, double north) { return offset(kOrigin, east, north); }

SidewalkSegment Seg(SegmentId id, double ax, double ay, double bx, double by, double width = 2.0) {
  return {id, At(ax, ay), At(bx, by), width};
}

ErrorCode CodeOf(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::RuntimeError;
}

}  // namespace

TEST_CASE("geodetic distance") {
  CHECK(geodetic_distance({44.31, -96.79}, {44.31, -96.79}) == 0.0);
  // One degree of arc on the equator.
  const double arc = kEarthRadiusM * std::numbers::pi / 180.0;
  CHECK(geodetic_distance({0, 0}, {0, 1}) == doctest::Approx(arc).epsilon(1e-12));
  CHECK(std::fabs(geodetic_distance({0, 0}, {0, 1}) - 111195.0) < 5.0);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> lat(-80, 80), lon(-179, 179);
  for (int i = 0; i < 100; ++i) {
    const GeoPoint a{lat(rng), lon(rng)}, b{lat(rng), lon(rng)};
    CHECK(geodetic_distance(a, b) == geodetic_distance(b, a));
  }
}

TEST_CASE("local frame round trip and offsets") {
  const LocalFrame f(kOrigin);
  const GeoPoint p = At(123.0, -45.0);
  const Vec2 v = f.to_local(p);
  CHECK(v.x == doctest::Approx(123.0).epsilon(1e-9));
  CHECK(v.y == doctest::Approx(-45.0).epsilon(1e-9));
  const GeoPoint back = f.to_geo(v);
  CHECK(geodetic_distance(back, p) < 1e-6);
  CHECK(geodetic_distance(kOrigin, At(300.0, 400.0)) == doctest::Approx(500.0).epsilon(1e-4));
}

TEST_CASE("bearings") {
  CHECK(bearing_deg(kOrigin, At(0, 100)) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(bearing_deg(kOrigin, At(100, 0)) == doctest::Approx(90.0).epsilon(1e-4));
  CHECK(angular_difference_deg(350, 10) == doctest::Approx(20.0));
  CHECK(angular_difference_deg(0, 180) == doctest::Approx(180.0));
}

TEST_CASE("projection onto a segment") {
  const auto s = Seg(1, 0, 0, 100, 0);
  SUBCASE("on the segment") {
    const auto p = project_to_segment(At(40, 0), s);
    CHECK(p.distance < 1e-6);
    CHECK(p.fraction == doctest::Approx(0.4).epsilon(1e-6));
  }
  SUBCASE("beyond an endpoint clamps to it") {
    const auto p = project_to_segment(At(130, 0), s);
    CHECK(p.fraction == 1.0);
    CHECK(geodetic_distance(p.point, s.b) < 1e-9);
    CHECK(p.distance == doctest::Approx(geodetic_distance(At(130, 0), s.b)));
  }
  SUBCASE("perpendicular off the midpoint") {
    const auto p = project_to_segment(At(50, 10), s);
    CHECK(std::fabs(p.distance - 10.0) < 0.1);
    CHECK(geodetic_distance(p.point, At(50, 0)) < 0.01);
  }
}

TEST_CASE("alert zone membership is boundary inclusive") {
  const GeoPoint c = At(10, 10);
  const AlertZone z{c, 30.0};
  CHECK(in_alert_zone(c, z));
  const GeoPoint edge = At(10, 40);
  const AlertZone exact{c, geodetic_distance(c, edge)};
  CHECK(in_alert_zone(edge, exact));
  CHECK_FALSE(in_alert_zone(At(10, 41), z));
  CHECK(distance_to_zone_boundary(At(10, 50), z) == doctest::Approx(10.0).epsilon(1e-4));
  CHECK(distance_to_zone_boundary(c, z) == 0.0);
}

TEST_CASE("moving distance along the network") {
  SUBCASE("same straight segment") {
    const SidewalkGraph g({Seg(1, 0, 0, 100, 0)}, {}, {});
    const GeoPoint a = At(10, 0), b = At(70, 0);
    CHECK(std::fabs(moving_distance(a, b, g) - geodetic_distance(a, b)) < 0.1);
  }
  SUBCASE("L-shaped path") {
    const SidewalkGraph g({Seg(1, 0, 0, 30, 0), Seg(2, 30, 0, 30, 40)}, {}, {});
    CHECK(std::fabs(moving_distance(At(0, 0), At(30, 40), g) - 70.0) < 0.2);
  }
  SUBCASE("disconnected components") {
    const SidewalkGraph g({Seg(1, 0, 0, 30, 0), Seg(2, 0, 20, 30, 20)}, {}, {});
    CHECK(CodeOf([&] { moving_distance(At(5, 0), At(5, 20), g); }) == ErrorCode::Unreachable);
  }
  SUBCASE("snap failure") {
    const SidewalkGraph g({Seg(1, 0, 0, 30, 0)}, {}, {});
    CHECK(CodeOf([&] { moving_distance(At(5, 500), At(5, 0), g); }) == ErrorCode::SnapFailure);
  }
}

TEST_CASE("graph validation") {
  CHECK(CodeOf([] { SidewalkGraph({Seg(1, 0, 0, 10, 0), Seg(1, 10, 0, 20, 0)}, {}, {}); }) ==
        ErrorCode::ValidationError);
  CHECK(CodeOf([] { SidewalkGraph({Seg(1, 0, 0, 0, 0)}, {}, {}); }) == ErrorCode::ValidationError);
  CHECK(CodeOf([] { SidewalkGraph({Seg(1, 0, 0, 10, 0, 0.0)}, {}, {}); }) == ErrorCode::ValidationError);
  const SidewalkGraph g({Seg(1, 0, 0, 10, 0), Seg(2, 10, 0, 10, 10)}, {}, {});
  CHECK(g.node_count() == 3);
}

TEST_CASE("snap picks the nearest segment") {
  const SidewalkGraph g({Seg(1, 0, 0, 100, 0), Seg(2, 0, 20, 100, 20)}, {}, {});
  const auto s = g.snap(At(50, 15));
  REQUIRE(s);
  CHECK(s->segment == 2);
  CHECK_FALSE(g.snap(At(50, 500)));
  CHECK(g.segments_within(At(50, 10), 10.5) == std::vector<SegmentId>{1, 2});
}
