#include <arm_neon.h>

#include <algorithm>

#include "afro/simd/kernels.hpp"

// Two q-registers emulate the 4 x f64 / 8 x f32 lane layout of the
// reference kernels. Multiply and add stay separate (no vfma/vmla).

namespace afro::simd {
namespace {

double dot_f64(const double* a, const double* b, std::size_t n) {
  float64x2_t acc01 = vdupq_n_f64(0.0);
  float64x2_t acc23 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc01 = vaddq_f64(acc01, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    acc23 = vaddq_f64(acc23, vmulq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2)));
  }
  double lanes[4];
  vst1q_f64(lanes, acc01);
  vst1q_f64(lanes + 2, acc23);
  for (; i < n; ++i) lanes[i & 3] += a[i] * b[i];
  return (lanes[0] + lanes[2]) + (lanes[1] + lanes[3]);
}

float dot_f32(const float* x, const float* h, std::size_t n) {
  float32x4_t acc_lo = vdupq_n_f32(0.f);
  float32x4_t acc_hi = vdupq_n_f32(0.f);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc_lo = vaddq_f32(acc_lo, vmulq_f32(vld1q_f32(x + i), vld1q_f32(h + i)));
    acc_hi = vaddq_f32(acc_hi, vmulq_f32(vld1q_f32(x + i + 4), vld1q_f32(h + i + 4)));
  }
  float lanes[8];
  vst1q_f32(lanes, acc_lo);
  vst1q_f32(lanes + 4, acc_hi);
  for (; i < n; ++i) lanes[i & 7] += x[i] * h[i];
  float s[4];
  for (int j = 0; j < 4; ++j) s[j] = lanes[j] + lanes[j + 4];
  return (s[0] + s[2]) + (s[1] + s[3]);
}

double sum_squares_f32(const float* x, std::size_t n) {
  float64x2_t acc01 = vdupq_n_f64(0.0);
  float64x2_t acc23 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float32x4_t v = vld1q_f32(x + i);
    const float64x2_t v01 = vcvt_f64_f32(vget_low_f32(v));
    const float64x2_t v23 = vcvt_high_f64_f32(v);
    acc01 = vaddq_f64(acc01, vmulq_f64(v01, v01));
    acc23 = vaddq_f64(acc23, vmulq_f64(v23, v23));
  }
  double lanes[4];
  vst1q_f64(lanes, acc01);
  vst1q_f64(lanes + 2, acc23);
  for (; i < n; ++i) {
    const double v = x[i];
    lanes[i & 3] += v * v;
  }
  return (lanes[0] + lanes[2]) + (lanes[1] + lanes[3]);
}

void axpy_f64(double a, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
  for (; i < n; ++i) y[i] += a * x[i];
}

std::size_t scale_clip_f32(const float* in, double gain, float* out,
                           std::size_t n) {
  const float64x2_t g = vdupq_n_f64(gain);
  std::size_t clipped = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float32x4_t v = vld1q_f32(in + i);
    const float32x2_t y01 = vcvt_f32_f64(vmulq_f64(vcvt_f64_f32(vget_low_f32(v)), g));
    const float32x2_t y23 = vcvt_f32_f64(vmulq_f64(vcvt_high_f64_f32(v), g));
    const float32x4_t y = vcombine_f32(y01, y23);
    const uint32x4_t over = vcagtq_f32(y, vdupq_n_f32(1.0f));
    clipped += vaddvq_u32(vshrq_n_u32(over, 31));
    vst1q_f32(out + i, vminq_f32(vmaxq_f32(y, vdupq_n_f32(-1.0f)), vdupq_n_f32(1.0f)));
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
const KernelTable neon_table = {dot_f64, dot_f32, sum_squares_f32, axpy_f64,
                                scale_clip_f32};
}  // namespace detail

}  // namespace afro::simd
