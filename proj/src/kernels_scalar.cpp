#include <cmath>
#include <numbers>

#include "safercross/kernels.hpp"

namespace safercross::kernels {
namespace {

double SumScalar(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

double MeanAbsDevScalar(const double* x, std::size_t n) {
  if (n == 0) return 0.0;
  const double mean = SumScalar(x, n) / static_cast<double>(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += std::fabs(x[i] - mean);
  return acc / static_cast<double>(n);
}

void Magnitude3Scalar(const double* x, const double* y, const double* z, double* out,
                      std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::sqrt(x[i] * x[i] + y[i] * y[i] + z[i] * z[i]);
}

double GaussianDensityMeanScalar(const double* d, std::size_t n, double sigma) {
  if (n == 0) return 0.0;
  const double inv_sigma = 1.0 / sigma;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = d[i] * inv_sigma;
    acc += std::exp(-0.5 * u * u);
  }
  const double norm = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * sigma);
  return norm * acc / static_cast<double>(n);
}

void MinPointSegmentDistanceScalar(const double* px, const double* py, std::size_t n, double ax,
                                   double ay, double bx, double by, double* out) {
  const double dx = bx - ax;
  const double dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  const double inv_len2 = len2 > 0.0 ? 1.0 / len2 : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double rx = px[i] - ax;
    const double ry = py[i] - ay;
    double t = (rx * dx + ry * dy) * inv_len2;
    t = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
    const double ex = rx - t * dx;
    const double ey = ry - t * dy;
    const double dist = std::sqrt(ex * ex + ey * ey);
    if (dist < out[i]) out[i] = dist;
  }
}

void SlidingMadScalar(const double* x, std::size_t n, std::size_t window, std::size_t stride,
                      double* out) {
  if (window == 0 || stride == 0 || n < window) return;
  std::size_t k = 0;
  for (std::size_t start = 0; start + window <= n; start += stride) {
    out[k++] = MeanAbsDevScalar(x + start, window);
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{
      &SumScalar,
      &MeanAbsDevScalar,
      &Magnitude3Scalar,
      &GaussianDensityMeanScalar,
      &MinPointSegmentDistanceScalar,
      &SlidingMadScalar,
  };
  return table;
}

}  // namespace safercross::kernels
