#pragma once

// Brute-force reference for the HMM forward filter, shared by the unit tests
// and the acceptance run.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "safercross/geo.hpp"
#include "safercross/mapmatch.hpp"

namespace safercross::testing {

using geo::GeoPoint;
using geo::SidewalkSegment;

inline GeoPoint GridAt(double east, double north) { return geo::offset({40.0, -83.0}, east, north); }

// Brute-force oracle: enumerate every segment sequence over the fixes and sum
// path weights. Network distances come from Floyd-Warshall over grid nodes.
namespace oracle {

using geo::geodetic_distance;
using geo::project_to_segment;
using mapmatch::HmmModel;

inline double Gauss(double d, double sigma) {
  return std::exp(-0.5 * (d / sigma) * (d / sigma)) / (sigma * std::sqrt(2.0 * M_PI));
}

struct GridGraph {
  std::vector<SidewalkSegment> segs;
  std::vector<std::pair<int, int>> ends;  // node indices
  std::vector<std::vector<double>> dist;  // node to node
};

inline GridGraph RandomGraph(std::mt19937_64& rng) {
  // 3x3 grid of nodes 15 m apart; edges between 8-neighbours.
  std::vector<std::pair<int, int>> candidates;
  for (int a = 0; a < 9; ++a) {
    for (int b = a + 1; b < 9; ++b) {
      const int dx = std::abs(a % 3 - b % 3), dy = std::abs(a / 3 - b / 3);
      if (dx <= 1 && dy <= 1) candidates.push_back({a, b});
    }
  }
  std::shuffle(candidates.begin(), candidates.end(), rng);
  const int k = 1 + static_cast<int>(rng() % 4);
  GridGraph g;
  for (int i = 0; i < k; ++i) {
    const auto [a, b] = candidates[i];
    g.segs.push_back(SidewalkSegment{10 + i, GridAt(15.0 * (a % 3), 15.0 * (a / 3)), GridAt(15.0 * (b % 3), 15.0 * (b / 3)), 2.0});
    g.ends.push_back({a, b});
  }
  const double inf = std::numeric_limits<double>::infinity();
  g.dist.assign(9, std::vector<double>(9, inf));
  for (int n = 0; n < 9; ++n) g.dist[n][n] = 0.0;
  for (std::size_t i = 0; i < g.segs.size(); ++i) {
    const double len = geodetic_distance(g.segs[i].a, g.segs[i].b);
    auto [a, b] = g.ends[i];
    g.dist[a][b] = g.dist[b][a] = std::min(g.dist[a][b], len);
  }
  for (int m = 0; m < 9; ++m)
    for (int a = 0; a < 9; ++a)
      for (int b = 0; b < 9; ++b) g.dist[a][b] = std::min(g.dist[a][b], g.dist[a][m] + g.dist[m][b]);
  return g;
}

inline double NetworkDistance(const GridGraph& g, std::size_t i, double fi, std::size_t j, double fj) {
  const double li = geodetic_distance(g.segs[i].a, g.segs[i].b);
  const double lj = geodetic_distance(g.segs[j].a, g.segs[j].b);
  double best = i == j ? std::fabs(fi - fj) * li : std::numeric_limits<double>::infinity();
  const double out_i[2] = {fi * li, (1 - fi) * li};
  const double in_j[2] = {fj * lj, (1 - fj) * lj};
  const int ni[2] = {g.ends[i].first, g.ends[i].second};
  const int nj[2] = {g.ends[j].first, g.ends[j].second};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) best = std::min(best, out_i[a] + g.dist[ni[a]][nj[b]] + in_j[b]);
  return best;
}

inline std::vector<double> BruteForcePosterior(const GridGraph& g, const std::vector<GeoPoint>& fixes,
                                        const HmmModel& m) {
  const std::size_t S = g.segs.size(), T = fixes.size();
  auto obs_window = [&](std::size_t t, std::size_t j) {
    const std::size_t from = t + 1 >= m.omega ? t + 1 - m.omega : 0;
    double acc = 0.0;
    for (std::size_t k = from; k <= t; ++k) acc += Gauss(project_to_segment(fixes[k], g.segs[j]).distance, m.sigma_z);
    return acc / static_cast<double>(t - from + 1);
  };
  auto trans = [&](std::size_t t, std::size_t i, std::size_t j) {
    const std::size_t from = t + 1 >= m.omega ? t + 1 - m.omega : 0;
    const std::size_t steps = std::min<std::size_t>(m.epsilon, t - from);
    const GeoPoint& past = fixes[t - steps];
    const auto pi = project_to_segment(past, g.segs[i]);
    const auto pj = project_to_segment(fixes[t], g.segs[j]);
    const double moving = NetworkDistance(g, i, pi.fraction, j, pj.fraction);
    if (!std::isfinite(moving)) return 0.0;
    const double delta = std::fabs(moving - geodetic_distance(past, fixes[t]));
    return std::exp(-delta / m.beta) / m.beta;
  };

  std::vector<double> end(S, 0.0);
  std::vector<std::size_t> path(T, 0);
  std::size_t total_paths = 1;
  for (std::size_t t = 0; t < T; ++t) total_paths *= S;
  for (std::size_t code = 0; code < total_paths; ++code) {
    std::size_t c = code;
    for (std::size_t t = 0; t < T; ++t) {
      path[t] = c % S;
      c /= S;
    }
    double w = Gauss(project_to_segment(fixes[0], g.segs[path[0]]).distance, m.sigma_z) * obs_window(0, path[0]);
    for (std::size_t t = 1; t < T && w > 0.0; ++t) w *= trans(t, path[t - 1], path[t]) * obs_window(t, path[t]);
    end[path[T - 1]] += w;
  }
  double total = 0.0;
  for (double v : end) total += v;
  for (double& v : end) v /= total;
  return end;
}

}  // namespace oracle


// Runs the library filter over random graphs and fixes and compares the final
// posterior with enumeration. Returns the number of mismatching trials.
inline int CompareFilterWithEnumeration(int trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(0.0, 30.0);
  mapmatch::HmmModel m;
  m.sigma_z = 5.0;
  m.beta = 4.0;
  m.omega = 3;
  m.epsilon = 2;
  int bad = 0;
  for (int trial = 0; trial < trials; ++trial) {
    const oracle::GridGraph gg = oracle::RandomGraph(rng);
    const geo::SidewalkGraph g(gg.segs, {}, {});
    const std::size_t T = 2 + rng() % 5;
    std::vector<GeoPoint> fixes;
    for (std::size_t t = 0; t < T; ++t) fixes.push_back(GridAt(coord(rng), coord(rng)));
    mapmatch::GpsWindow w(m.omega);
    mapmatch::Beliefs prior;
    for (std::size_t t = 0; t < T; ++t) {
      w.push({double(t), fixes[t]});
      prior = mapmatch::estimate_segment(w, prior, g, m).posterior;
    }
    const auto expected = oracle::BruteForcePosterior(gg, fixes, m);
    for (std::size_t j = 0; j < gg.segs.size(); ++j) {
      const double got = prior.at(gg.segs[j].id);
      if (std::fabs(got - expected[j]) > 1e-9 * std::max(1.0, expected[j])) {
        ++bad;
        break;
      }
    }
  }
  return bad;
}

}  // namespace safercross::testing
