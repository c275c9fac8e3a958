#pragma once

// Data-parallel inner loops shared by the DSP, speaker and resampling code.
//
// Every kernel has a scalar reference and ISA variants (AVX2 on x86-64,
// NEON on aarch64) selected once at startup. Reductions use a fixed lane
// layout (4 x f64 / 8 x f32, striped by index) and a fixed combine tree,
// and no variant uses fused multiply-add, so all variants produce
// bit-identical results. tests/unit/test_simd.cpp enforces this.

#include <cstddef>
#include <span>
#include <string_view>

namespace afro::simd {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa);

// Best ISA supported by this CPU and build. AFRO_SIMD=scalar forces the
// reference kernels.
Isa detect_isa();
Isa active_isa();
bool isa_available(Isa isa);

struct KernelTable {
  // sum_i a[i]*b[i]
  double (*dot_f64)(const double* a, const double* b, std::size_t n);
  // sum_i x[i]*h[i] in single precision (FIR taps)
  float (*dot_f32)(const float* x, const float* h, std::size_t n);
  // sum_i double(x[i])^2
  double (*sum_squares_f32)(const float* x, std::size_t n);
  // y[i] += a*x[i]
  void (*axpy_f64)(double a, const double* x, double* y, std::size_t n);
  // out[i] = clamp(float(double(in[i])*gain), -1, 1); returns #clipped
  std::size_t (*scale_clip_f32)(const float* in, double gain, float* out,
                                std::size_t n);
};

const KernelTable& kernels(Isa isa);
const KernelTable& kernels();  // active ISA

inline double dot(std::span<const double> a, std::span<const double> b) {
  return kernels().dot_f64(a.data(), b.data(), a.size());
}

inline float dot(std::span<const float> x, std::span<const float> h) {
  return kernels().dot_f32(x.data(), h.data(), x.size());
}

inline double sum_squares(std::span<const float> x) {
  return kernels().sum_squares_f32(x.data(), x.size());
}

inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  kernels().axpy_f64(a, x.data(), y.data(), x.size());
}

inline std::size_t scale_clip(std::span<const float> in, double gain,
                              std::span<float> out) {
  return kernels().scale_clip_f32(in.data(), gain, out.data(), in.size());
}

namespace detail {
extern const KernelTable scalar_table;
#if defined(__x86_64__) || defined(_M_X64)
extern const KernelTable avx2_table;
#endif
#if defined(__aarch64__)
extern const KernelTable neon_table;
#endif
}  // namespace detail

}  // namespace afro::simd
