#include <cmath>
#include <numeric>
#include <span>
#include <string>

#include "afro/dsp.hpp"
#include "afro/error.hpp"
#include "afro/simd/kernels.hpp"

namespace afro::dsp {
namespace {

constexpr double kKaiserBeta = 8.0;
constexpr double kZeroCrossings = 32.0;
constexpr double kRolloff = 0.95;
constexpr std::uint64_t kMaxTabulatedPhases = 4096;

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = M_PI * x;
  return std::sin(px) / px;
}

class Kernel {
 public:
  Kernel(std::uint64_t up, std::uint64_t down) : up_(up) {
    scale_ = std::min(1.0, static_cast<double>(up) / static_cast<double>(down)) * kRolloff;
    half_width_ = kZeroCrossings / scale_;
    radius_ = static_cast<std::size_t>(std::ceil(half_width_));
    i0_beta_ = std::cyl_bessel_i(0.0, kKaiserBeta);
    if (up <= kMaxTabulatedPhases) {
      table_.resize(up * taps());
      for (std::uint64_t p = 0; p < up; ++p) fill(p, std::span<float>(table_.data() + p * taps(), taps()));
    }
  }

  std::size_t radius() const { return radius_; }
  std::size_t taps() const { return 2 * radius_; }

  // Coefficients for input indices base-radius+1 .. base+radius.
  std::span<const float> phase(std::uint64_t p, std::vector<float>& scratch) const {
    if (!table_.empty()) return {table_.data() + p * taps(), taps()};
    scratch.resize(taps());
    fill(p, scratch);
    return scratch;
  }

 private:
  double tap(double d) const {
    const double x = d / half_width_;
    if (std::abs(x) >= 1.0) return 0.0;
    const double w = std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - x * x)) / i0_beta_;
    return scale_ * sinc(scale_ * d) * w;
  }

  void fill(std::uint64_t p, std::span<float> out) const {
    const double frac = static_cast<double>(p) / static_cast<double>(up_);
    for (std::size_t m = 0; m < out.size(); ++m) {
      const double d = frac + static_cast<double>(radius_) - 1.0 - static_cast<double>(m);
      out[m] = static_cast<float>(tap(d));
    }
  }

  std::uint64_t up_;
  double scale_ = 1.0;
  double half_width_ = 1.0;
  double i0_beta_ = 1.0;
  std::size_t radius_ = 1;
  std::vector<float> table_;
};

}  // namespace

AudioBuffer resample(const AudioBuffer& a, int target_hz) {
  if (target_hz <= 0) throw Error("target rate must be positive, got " + std::to_string(target_hz));
  if (a.sample_rate_hz <= 0) throw Error("source rate must be positive");
  if (target_hz == a.sample_rate_hz) return a;

  const auto src = static_cast<std::uint64_t>(a.sample_rate_hz);
  const auto dst = static_cast<std::uint64_t>(target_hz);
  const std::uint64_t g = std::gcd(src, dst);
  const std::uint64_t up = dst / g;
  const std::uint64_t down = src / g;
  const std::uint64_t n_in = a.samples.size();
  const std::uint64_t n_out = (n_in * up + down / 2) / down;

  const Kernel kernel(up, down);
  const std::size_t r = kernel.radius();
  std::vector<float> padded(n_in + 2 * r + 1, 0.0f);
  std::copy(a.samples.begin(), a.samples.end(), padded.begin() + static_cast<std::ptrdiff_t>(r));

  AudioBuffer out;
  out.sample_rate_hz = target_hz;
  out.samples.resize(n_out);
  std::vector<float> scratch;
  for (std::uint64_t n = 0; n < n_out; ++n) {
    const std::uint64_t pos = n * down;
    const std::uint64_t base = pos / up;
    const auto coef = kernel.phase(pos % up, scratch);
    // padded[base + 1] is input sample base - r + 1
    std::span<const float> window(padded.data() + base + 1, coef.size());
    out.samples[n] = simd::dot(window, coef);
  }
  return out;
}

}  // namespace afro::dsp
