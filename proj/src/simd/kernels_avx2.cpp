// Compiled with -mavx2 (no -mfma); only reached after a runtime CPU check.

#include <immintrin.h>

#include <algorithm>

#include "afro/simd/kernels.hpp"

namespace afro::simd {
namespace {

double reduce4(__m256d acc, const double* a, const double* b, std::size_t i,
               std::size_t n) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  for (; i < n; ++i) lanes[i & 3] += a[i] * b[i];
  return (lanes[0] + lanes[2]) + (lanes[1] + lanes[3]);
}

double dot_f64(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d p = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, p);
  }
  return reduce4(acc, a, b, i, n);
}

float dot_f32(const float* x, const float* h, std::size_t n) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 p = _mm256_mul_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(h + i));
    acc = _mm256_add_ps(acc, p);
  }
  alignas(32) float lanes[8];
  _mm256_store_ps(lanes, acc);
  for (; i < n; ++i) lanes[i & 7] += x[i] * h[i];
  float s[4];
  for (int j = 0; j < 4; ++j) s[j] = lanes[j] + lanes[j + 4];
  return (s[0] + s[2]) + (s[1] + s[3]);
}

double sum_squares_f32(const float* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_cvtps_pd(_mm_loadu_ps(x + i));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(v, v));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  for (; i < n; ++i) {
    const double v = x[i];
    lanes[i & 3] += v * v;
  }
  return (lanes[0] + lanes[2]) + (lanes[1] + lanes[3]);
}

void axpy_f64(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d p = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), p));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

std::size_t scale_clip_f32(const float* in, double gain, float* out,
                           std::size_t n) {
  const __m256d g = _mm256_set1_pd(gain);
  const __m128 hi = _mm_set1_ps(1.0f);
  const __m128 lo = _mm_set1_ps(-1.0f);
  std::size_t clipped = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_mul_pd(_mm256_cvtps_pd(_mm_loadu_ps(in + i)), g);
    const __m128 y = _mm256_cvtpd_ps(v);
    const __m128 over = _mm_or_ps(_mm_cmpgt_ps(y, hi), _mm_cmplt_ps(y, lo));
    clipped += static_cast<std::size_t>(__builtin_popcount(_mm_movemask_ps(over)));
    _mm_storeu_ps(out + i, _mm_min_ps(_mm_max_ps(y, lo), hi));
  }
  for (; i < n; ++i) {
    const float y = static_cast<float>(static_cast<double>(in[i]) * gain);
    if (y > 1.0f || y < -1.0f) ++clipped;
    out[i] = std::clamp(y, -1.0f, 1.0f);
  }
  return clipped;
}

}  // namespace

namespace detail {
const KernelTable avx2_table = {dot_f64, dot_f32, sum_squares_f32, axpy_f64,
                                scale_clip_f32};
}  // namespace detail

}  // namespace afro::simd
