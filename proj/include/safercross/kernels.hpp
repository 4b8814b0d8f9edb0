#pragma once

// Data-parallel inner loops used by the map matcher, the viewing detector and
// the metrics pass. Each kernel has a scalar reference implementation and,
// on x86-64, an AVX2+FMA variant. The variant is picked once at startup from
// CPUID; `force_isa` pins it (tests use this to compare the two paths).

#include <cstddef>
#include <span>
#include <string_view>

namespace safercross::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa);

struct KernelTable {
  double (*sum)(const double* x, std::size_t n);
  // mean |x_i - mean(x)|
  double (*mean_abs_dev)(const double* x, std::size_t n);
  // out_i = sqrt(x_i^2 + y_i^2 + z_i^2)
  void (*magnitude3)(const double* x, const double* y, const double* z, double* out,
                     std::size_t n);
  // mean over i of N(d_i; 0, sigma) density
  double (*gaussian_density_mean)(const double* d, std::size_t n, double sigma);
  // out_i = min(out_i, planar distance from (px_i, py_i) to segment a-b)
  void (*min_point_segment_distance)(const double* px, const double* py, std::size_t n,
                                     double ax, double ay, double bx, double by, double* out);
  // out_k = mean_abs_dev(x[k*stride .. k*stride+window)) for every full window
  void (*sliding_mad)(const double* x, std::size_t n, std::size_t window, std::size_t stride,
                      double* out);
};

const KernelTable& scalar_table();
#if defined(SAFERCROSS_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

bool isa_supported(Isa isa);
const KernelTable& table(Isa isa);

Isa active_isa();
const KernelTable& active();
// Throws Error(InvalidArgument) if the ISA is not supported on this host.
void force_isa(Isa isa);
void reset_isa();

// Span conveniences over the active table.
double sum(std::span<const double> x);
double mean_abs_dev(std::span<const double> x);
void magnitude3(std::span<const double> x, std::span<const double> y, std::span<const double> z,
                std::span<double> out);
double gaussian_density_mean(std::span<const double> d, double sigma);
void min_point_segment_distance(std::span<const double> px, std::span<const double> py, double ax,
                                double ay, double bx, double by, std::span<double> out);
std::size_t sliding_window_count(std::size_t n, std::size_t window, std::size_t stride);
void sliding_mad(std::span<const double> x, std::size_t window, std::size_t stride,
                 std::span<double> out);

}  // namespace safercross::kernels
