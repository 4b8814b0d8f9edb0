#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "safercross/kernels.hpp"

using namespace safercross::kernels;

namespace {

std::vector<double> Random(std::size_t n, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

void CheckClose(double a, double b) {
  const double scale = std::max({std::fabs(a), std::fabs(b), 1e-300});
  CHECK(std::fabs(a - b) / scale <= 1e-12);
}

// Reference values written out longhand, independent of either table.
double NaiveMad(const std::vector<double>& x, std::size_t from, std::size_t n) {
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += x[from + i];
  mean /= static_cast<double>(n);
  double dev = 0.0;
  for (std::size_t i = 0; i < n; ++i) dev += std::fabs(x[from + i] - mean);
  return dev / static_cast<double>(n);
}

}  // namespace

TEST_CASE("scalar kernels against longhand loops") {
  const auto& k = scalar_table();
  std::mt19937_64 rng(3);
  const auto x = Random(37, -5, 5, rng);
  double s = 0.0;
  for (double v : x) s += v;
  CheckClose(k.sum(x.data(), x.size()), s);
  CheckClose(k.mean_abs_dev(x.data(), x.size()), NaiveMad(x, 0, x.size()));

  const std::vector<double> d = {0.0, 5.0};
  const double expected = (1.0 / (5.0 * std::sqrt(2.0 * M_PI))) * (1.0 + std::exp(-0.5)) / 2.0;
  CheckClose(k.gaussian_density_mean(d.data(), d.size(), 5.0), expected);

  std::vector<double> out(3, 1e9);
  const std::vector<double> px = {5, 15, -3}, py = {4, 0, -4};
  k.min_point_segment_distance(px.data(), py.data(), 3, 0, 0, 10, 0, out.data());
  CheckClose(out[0], 4.0);
  CheckClose(out[1], 5.0);
  CheckClose(out[2], 5.0);
}

TEST_CASE("dispatch honours forced ISA") {
  force_isa(Isa::Scalar);
  CHECK(active_isa() == Isa::Scalar);
  reset_isa();
  CHECK(isa_supported(Isa::Scalar));
}

#if defined(SAFERCROSS_HAVE_AVX2)
TEST_CASE("AVX2 kernels match scalar within 1e-12 relative") {
  if (!isa_supported(Isa::Avx2)) {
    MESSAGE("host lacks AVX2; equivalence not exercised");
    return;
  }
  const auto& a = scalar_table();
  const auto& b = avx2_table();
  std::mt19937_64 rng(17);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 63u, 150u, 1001u}) {
    CAPTURE(n);
    const auto x = Random(n, -20, 20, rng);
    const auto y = Random(n, -20, 20, rng);
    const auto z = Random(n, 5, 15, rng);
    CheckClose(a.sum(x.data(), n), b.sum(x.data(), n));
    if (n > 0) {
      CheckClose(a.mean_abs_dev(x.data(), n), b.mean_abs_dev(x.data(), n));
      CheckClose(a.gaussian_density_mean(x.data(), n, 7.5), b.gaussian_density_mean(x.data(), n, 7.5));
    }
    std::vector<double> ma(n), mb(n);
    a.magnitude3(x.data(), y.data(), z.data(), ma.data(), n);
    b.magnitude3(x.data(), y.data(), z.data(), mb.data(), n);
    for (std::size_t i = 0; i < n; ++i) CheckClose(ma[i], mb[i]);

    std::vector<double> da(n, 1e9), db(n, 1e9);
    for (int s = 0; s < 3; ++s) {
      const auto seg = Random(4, -10, 10, rng);
      a.min_point_segment_distance(x.data(), y.data(), n, seg[0], seg[1], seg[2], seg[3], da.data());
      b.min_point_segment_distance(x.data(), y.data(), n, seg[0], seg[1], seg[2], seg[3], db.data());
    }
    for (std::size_t i = 0; i < n; ++i) CheckClose(da[i], db[i]);

    for (std::size_t window : {1u, 4u, 10u}) {
      for (std::size_t stride : {1u, 3u, 10u}) {
        const std::size_t count = sliding_window_count(n, window, stride);
        std::vector<double> sa(count), sb(count);
        a.sliding_mad(x.data(), n, window, stride, sa.data());
        b.sliding_mad(x.data(), n, window, stride, sb.data());
        for (std::size_t i = 0; i < count; ++i) {
          CheckClose(sa[i], sb[i]);
          CheckClose(sa[i], NaiveMad(x, i * stride, window));
        }
      }
    }
  }
}

TEST_CASE("AVX2 handles the degenerate segment") {
  if (!isa_supported(Isa::Avx2)) return;
  const std::vector<double> px = {3, -1, 0, 2, 7}, py = {4, 0, 0, 2, 1};
  std::vector<double> da(5, 1e9), db(5, 1e9);
  scalar_table().min_point_segment_distance(px.data(), py.data(), 5, 0, 0, 0, 0, da.data());
  avx2_table().min_point_segment_distance(px.data(), py.data(), 5, 0, 0, 0, 0, db.data());
  for (int i = 0; i < 5; ++i) CheckClose(da[i], db[i]);
  CheckClose(da[0], 5.0);
}
#endif
