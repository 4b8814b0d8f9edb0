// AVX2 + FMA variants of the kernels in kernels_scalar.cpp. This translation
// unit is compiled with -mavx2 -mfma and must only be entered after the
// runtime CPU check in kernels_dispatch.cpp.

#include <immintrin.h>

#include <cmath>
#include <numbers>

#include "safercross/kernels.hpp"

namespace safercross::kernels {
namespace {

constexpr std::size_t kLanes = 4;

inline double HorizontalSum(__m256d v) {
  __m128d low = _mm256_castpd256_pd128(v);
  __m128d high = _mm256_extractf128_pd(v, 1);
  low = _mm_add_pd(low, high);
  __m128d shuffled = _mm_unpackhi_pd(low, low);
  return _mm_cvtsd_f64(_mm_add_sd(low, shuffled));
}

inline __m256d Abs(__m256d v) {
  return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v);
}

// exp(x) by range reduction x = n*ln2 + r, |r| <= ln2/2, and a degree-13
// Taylor polynomial in r. Truncation error is below 1e-17 relative. Inputs
// below -708 flush to zero (std::exp returns a subnormal there).
inline __m256d Exp(__m256d x) {
  const __m256d lower = _mm256_set1_pd(-708.0);
  const __m256d upper = _mm256_set1_pd(709.0);
  const __m256d underflow = _mm256_cmp_pd(x, lower, _CMP_LT_OQ);
  x = _mm256_max_pd(_mm256_min_pd(x, upper), lower);

  const __m256d log2e = _mm256_set1_pd(1.4426950408889634);
  const __m256d ln2_hi = _mm256_set1_pd(6.93145751953125e-1);
  const __m256d ln2_lo = _mm256_set1_pd(1.42860682030941723212e-6);
  const __m256d n =
      _mm256_round_pd(_mm256_mul_pd(x, log2e), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, ln2_hi, x);
  r = _mm256_fnmadd_pd(n, ln2_lo, r);

  static constexpr double kCoeffs[] = {
      1.0 / 6227020800.0,  // 1/13!
      1.0 / 479001600.0,   // 1/12!
      1.0 / 39916800.0,    // 1/11!
      1.0 / 3628800.0,     // 1/10!
      1.0 / 362880.0,      // 1/9!
      1.0 / 40320.0,       // 1/8!
      1.0 / 5040.0,        // 1/7!
      1.0 / 720.0,         // 1/6!
      1.0 / 120.0,         // 1/5!
      1.0 / 24.0,          // 1/4!
      1.0 / 6.0,           // 1/3!
      0.5,                 // 1/2!
      1.0,                 // 1/1!
      1.0,                 // 1/0!
  };
  __m256d p = _mm256_set1_pd(kCoeffs[0]);
  for (std::size_t k = 1; k < std::size(kCoeffs); ++k) {
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(kCoeffs[k]));
  }

  // 2^n built directly in the exponent field.
  const __m256d magic = _mm256_set1_pd(4503599627370496.0);  // 2^52
  const __m256d biased = _mm256_add_pd(_mm256_add_pd(n, _mm256_set1_pd(1023.0)), magic);
  const __m256i bits = _mm256_slli_epi64(_mm256_castpd_si256(biased), 52);
  const __m256d scale = _mm256_castsi256_pd(bits);
  const __m256d result = _mm256_mul_pd(p, scale);
  return _mm256_andnot_pd(underflow, result);
}

double SumAvx2(const double* x, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 2 * kLanes <= n; i += 2 * kLanes) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
    acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(x + i + kLanes));
  }
  for (; i + kLanes <= n; i += kLanes) acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
  double total = HorizontalSum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) total += x[i];
  return total;
}

double MeanAbsDevAvx2(const double* x, std::size_t n) {
  if (n == 0) return 0.0;
  const double mean = SumAvx2(x, n) / static_cast<double>(n);
  const __m256d vmean = _mm256_set1_pd(mean);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    acc = _mm256_add_pd(acc, Abs(_mm256_sub_pd(_mm256_loadu_pd(x + i), vmean)));
  }
  double total = HorizontalSum(acc);
  for (; i < n; ++i) total += std::fabs(x[i] - mean);
  return total / static_cast<double>(n);
}

void Magnitude3Avx2(const double* x, const double* y, const double* z, double* out,
                    std::size_t n) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d vx = _mm256_loadu_pd(x + i);
    const __m256d vy = _mm256_loadu_pd(y + i);
    const __m256d vz = _mm256_loadu_pd(z + i);
    __m256d s = _mm256_mul_pd(vx, vx);
    s = _mm256_fmadd_pd(vy, vy, s);
    s = _mm256_fmadd_pd(vz, vz, s);
    _mm256_storeu_pd(out + i, _mm256_sqrt_pd(s));
  }
  for (; i < n; ++i) out[i] = std::sqrt(x[i] * x[i] + y[i] * y[i] + z[i] * z[i]);
}

double GaussianDensityMeanAvx2(const double* d, std::size_t n, double sigma) {
  if (n == 0) return 0.0;
  const double inv_sigma = 1.0 / sigma;
  const __m256d vinv = _mm256_set1_pd(inv_sigma);
  const __m256d neg_half = _mm256_set1_pd(-0.5);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d u = _mm256_mul_pd(_mm256_loadu_pd(d + i), vinv);
    acc = _mm256_add_pd(acc, Exp(_mm256_mul_pd(neg_half, _mm256_mul_pd(u, u))));
  }
  double total = HorizontalSum(acc);
  for (; i < n; ++i) {
    const double u = d[i] * inv_sigma;
    total += std::exp(-0.5 * u * u);
  }
  const double norm = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * sigma);
  return norm * total / static_cast<double>(n);
}

void MinPointSegmentDistanceAvx2(const double* px, const double* py, std::size_t n, double ax,
                                 double ay, double bx, double by, double* out) {
  const double dx = bx - ax;
  const double dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  const double inv_len2 = len2 > 0.0 ? 1.0 / len2 : 0.0;
  const __m256d vax = _mm256_set1_pd(ax);
  const __m256d vay = _mm256_set1_pd(ay);
  const __m256d vdx = _mm256_set1_pd(dx);
  const __m256d vdy = _mm256_set1_pd(dy);
  const __m256d vinv = _mm256_set1_pd(inv_len2);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d rx = _mm256_sub_pd(_mm256_loadu_pd(px + i), vax);
    const __m256d ry = _mm256_sub_pd(_mm256_loadu_pd(py + i), vay);
    __m256d t = _mm256_mul_pd(_mm256_fmadd_pd(rx, vdx, _mm256_mul_pd(ry, vdy)), vinv);
    t = _mm256_min_pd(_mm256_max_pd(t, zero), one);
    const __m256d ex = _mm256_fnmadd_pd(t, vdx, rx);
    const __m256d ey = _mm256_fnmadd_pd(t, vdy, ry);
    const __m256d dist = _mm256_sqrt_pd(_mm256_fmadd_pd(ex, ex, _mm256_mul_pd(ey, ey)));
    _mm256_storeu_pd(out + i, _mm256_min_pd(dist, _mm256_loadu_pd(out + i)));
  }
  for (; i < n; ++i) {
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

void SlidingMadAvx2(const double* x, std::size_t n, std::size_t window, std::size_t stride,
                    double* out) {
  if (window == 0 || stride == 0 || n < window) return;
  std::size_t k = 0;
  for (std::size_t start = 0; start + window <= n; start += stride) {
    out[k++] = MeanAbsDevAvx2(x + start, window);
  }
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{
      &SumAvx2,
      &MeanAbsDevAvx2,
      &Magnitude3Avx2,
      &GaussianDensityMeanAvx2,
      &MinPointSegmentDistanceAvx2,
      &SlidingMadAvx2,
  };
  return table;
}

}  // namespace safercross::kernels
