#include <algorithm>
#include <cmath>

#include "afro/simd/kernels.hpp"

// Reference kernels. The striped accumulators and the combine order are the
// contract the vector variants reproduce exactly.

namespace afro::simd {
namespace {

double dot_f64(const double* a, const double* b, std::size_t n) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) acc[i & 3] += a[i] * b[i];
  return (acc[0] + acc[2]) + (acc[1] + acc[3]);
}

float dot_f32(const float* x, const float* h, std::size_t n) {
  float acc[8] = {0.f, 0.f, 0.f, 0.f, 0.f, 0.f, 0.f, 0.f};
  for (std::size_t i = 0; i < n; ++i) acc[i & 7] += x[i] * h[i];
  float s[4];
  for (int j = 0; j < 4; ++j) s[j] = acc[j] + acc[j + 4];
  return (s[0] + s[2]) + (s[1] + s[3]);
}

double sum_squares_f32(const float* x, std::size_t n) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    const double v = x[i];
    acc[i & 3] += v * v;
  }
  return (acc[0] + acc[2]) + (acc[1] + acc[3]);
}

void axpy_f64(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

std::size_t scale_clip_f32(const float* in, double gain, float* out,
                           std::size_t n) {
  std::size_t clipped = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const float y = static_cast<float>(static_cast<double>(in[i]) * gain);
    if (y > 1.0f || y < -1.0f) ++clipped;
    out[i] = std::clamp(y, -1.0f, 1.0f);
  }
  return clipped;
}

}  // namespace

namespace detail {
const KernelTable scalar_table = {dot_f64, dot_f32, sum_squares_f32, axpy_f64,
                                  scale_clip_f32};
}  // namespace detail

}  // namespace afro::simd
