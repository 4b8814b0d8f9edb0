#include <atomic>
#include <string>

#include "safercross/error.hpp"
#include "safercross/kernels.hpp"

namespace safercross::kernels {
namespace {

bool HostHasAvx2() {
#if defined(SAFERCROSS_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa DetectIsa() { return HostHasAvx2() ? Isa::Avx2 : Isa::Scalar; }

std::atomic<Isa>& CurrentIsa() {
  static std::atomic<Isa> isa{DetectIsa()};
  return isa;
}

void CheckSizes(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw Error(ErrorCode::LengthMismatch, what);
}

}  // namespace

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "unknown";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2: return HostHasAvx2();
  }
  return false;
}

const KernelTable& table(Isa isa) {
  if (!isa_supported(isa)) {
    throw Error(ErrorCode::InvalidArgument,
                "kernel ISA not supported on this host: " + std::string(to_string(isa)));
  }
#if defined(SAFERCROSS_HAVE_AVX2)
  if (isa == Isa::Avx2) return avx2_table();
#endif
  return scalar_table();
}

Isa active_isa() { return CurrentIsa().load(std::memory_order_relaxed); }

const KernelTable& active() { return table(active_isa()); }

void force_isa(Isa isa) {
  table(isa);  // validates
  CurrentIsa().store(isa, std::memory_order_relaxed);
}

void reset_isa() { CurrentIsa().store(DetectIsa(), std::memory_order_relaxed); }

double sum(std::span<const double> x) { return active().sum(x.data(), x.size()); }

double mean_abs_dev(std::span<const double> x) {
  return active().mean_abs_dev(x.data(), x.size());
}

void magnitude3(std::span<const double> x, std::span<const double> y, std::span<const double> z,
                std::span<double> out) {
  CheckSizes(x.size(), y.size(), "magnitude3: y size");
  CheckSizes(x.size(), z.size(), "magnitude3: z size");
  CheckSizes(x.size(), out.size(), "magnitude3: out size");
  active().magnitude3(x.data(), y.data(), z.data(), out.data(), x.size());
}

double gaussian_density_mean(std::span<const double> d, double sigma) {
  return active().gaussian_density_mean(d.data(), d.size(), sigma);
}

void min_point_segment_distance(std::span<const double> px, std::span<const double> py, double ax,
                                double ay, double bx, double by, std::span<double> out) {
  CheckSizes(px.size(), py.size(), "min_point_segment_distance: py size");
  CheckSizes(px.size(), out.size(), "min_point_segment_distance: out size");
  active().min_point_segment_distance(px.data(), py.data(), px.size(), ax, ay, bx, by,
                                      out.data());
}

std::size_t sliding_window_count(std::size_t n, std::size_t window, std::size_t stride) {
  if (window == 0 || stride == 0 || n < window) return 0;
  return (n - window) / stride + 1;
}

void sliding_mad(std::span<const double> x, std::size_t window, std::size_t stride,
                 std::span<double> out) {
  CheckSizes(out.size(), sliding_window_count(x.size(), window, stride), "sliding_mad: out size");
  active().sliding_mad(x.data(), x.size(), window, stride, out.data());
}

}  // namespace safercross::kernels
