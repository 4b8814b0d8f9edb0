#include <doctest.h>

#include <sstream>

#include "safercross/error.hpp"
#include "safercross/metrics.hpp"
#include "safercross/presets.hpp"
#include "safercross/report_io.hpp"

using namespace safercross;
using namespace safercross::engine;
using nlohmann::json;

TEST_CASE("distance to a polyline") {
  const geo::GeoPoint o{40.0, -83.0};
  const std::vector<TimedPoint> path = {{0, o}, {1, geo::offset(o, 100, 0)}, {2, geo::offset(o, 100, 100)}};
  const std::vector<geo::GeoPoint> pts = {geo::offset(o, 50, 5), geo::offset(o, 110, 50), geo::offset(o, -3, -4)};
  const auto d = distances_to_path(pts, path);
  CHECK(d[0] == doctest::Approx(5.0).epsilon(1e-4));
  CHECK(d[1] == doctest::Approx(10.0).epsilon(1e-4));
  CHECK(d[2] == doctest::Approx(5.0).epsilon(1e-4));
}

TEST_CASE("zero GPS noise gives near-zero location error") {
  const auto r = run(parse_scenario(make_preset("mapmatch", {{"gps_sigma", 0}, {"fixes", 100}})));
  const auto m = compute_metrics(r);
  REQUIRE(m.raw_mean_error);
  CHECK(*m.raw_mean_error < 1e-6);
  CHECK(*m.calibrated_mean_error < 1e-6);
}

TEST_CASE("viewing accuracy and CDF shape") {
  const auto m = compute_metrics(run(parse_scenario(make_preset("crossing", json::object()))));
  REQUIRE(m.viewing_accuracy);
  CHECK(*m.viewing_accuracy == 1.0);
  REQUIRE_FALSE(m.calibrated_error_cdf.empty());
  CHECK(m.calibrated_error_cdf.back().cumulative_fraction == 1.0);
  for (std::size_t i = 1; i < m.calibrated_error_cdf.size(); ++i) {
    CHECK(m.calibrated_error_cdf[i].error_m >= m.calibrated_error_cdf[i - 1].error_m);
  }
}

TEST_CASE("metric tables") {
  const auto m = compute_metrics(run(parse_scenario(make_preset("crossing", json::object()))));
  const auto cdf = metric_tables(m, "location_error_cdf");
  REQUIRE(cdf.size() == 2);
  CHECK(cdf[0].first == "location_error_cdf.csv");
  CHECK(cdf[0].second.rfind("error_m,cumulative_fraction\n", 0) == 0);
  for (const auto& name : metric_names()) CHECK_FALSE(metric_tables(m, name).empty());
  CHECK_THROWS_AS(metric_tables(m, "bogus"), Error);
}
