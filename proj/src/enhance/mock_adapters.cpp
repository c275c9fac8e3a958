#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <string>

#include "afro/error.hpp"
#include "afro/mock_adapters.hpp"
#include "afro/simd/kernels.hpp"
#include "json.hpp"

namespace afro::enhance::mock {
namespace {

constexpr std::size_t kFrame = 512;
constexpr std::size_t kHop = 256;
constexpr std::size_t kBins = kFrame / 2;  // bins 1..256, DC dropped
constexpr double kSilentRms = 1e-4;

// FFTW planning is not thread-safe; execution on separate plans is.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

class PowerSpectrum {
 public:
  PowerSpectrum() {
    in_ = fftw_alloc_real(kFrame);
    out_ = fftw_alloc_complex(kFrame / 2 + 1);
    std::lock_guard lock(plan_mutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(kFrame), in_, out_, FFTW_ESTIMATE);
    window_.resize(kFrame);
    for (std::size_t i = 0; i < kFrame; ++i)
      window_[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(i) / kFrame);
  }
  ~PowerSpectrum() {
    {
      std::lock_guard lock(plan_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  PowerSpectrum(const PowerSpectrum&) = delete;
  PowerSpectrum& operator=(const PowerSpectrum&) = delete;

  // Frames starting at 0, kHop, ...; a short tail is zero-padded. Returns
  // false for silent frames.
  bool frame(const std::vector<float>& x, std::size_t start, std::vector<double>& power) {
    double energy = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < kFrame; ++i) {
      const double v = start + i < x.size() ? x[start + i] : 0.0;
      if (start + i < x.size()) ++n;
      energy += v * v;
      in_[i] = v * window_[i];
    }
    if (n == 0 || std::sqrt(energy / static_cast<double>(n)) < kSilentRms) return false;
    fftw_execute(plan_);
    power.resize(kBins);
    for (std::size_t k = 1; k <= kBins; ++k)
      power[k - 1] = out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1];
    return true;
  }

  static std::size_t frame_count(std::size_t n) { return n <= kFrame ? 1 : 1 + (n - kFrame + kHop - 1) / kHop; }

 private:
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_;
  std::vector<double> window_;
};

const std::vector<float>& fir_taps(int mode) {
  static const std::vector<float> taps[3] = {
      {0.25f, 0.5f, 0.25f},
      {-0.125f, 1.25f, -0.125f},
      {0.0625f, 0.25f, 0.375f, 0.25f, 0.0625f},
  };
  if (mode < 0 || mode > 2) throw AdapterError("restorer mode must be 0, 1 or 2, got " + std::to_string(mode));
  return taps[mode];
}

std::vector<std::uint8_t> json_bytes(const nlohmann::json& j) {
  const std::string s = j.dump() + "\n";
  return {s.begin(), s.end()};
}

}  // namespace

AudioBuffer identity(const AudioBuffer& in) { return in; }

AudioBuffer fir_restorer(const AudioBuffer& in, int mode) {
  const auto& h = fir_taps(mode);
  const std::size_t r = h.size() / 2;
  std::vector<float> padded(in.samples.size() + 2 * r, 0.0f);
  std::copy(in.samples.begin(), in.samples.end(), padded.begin() + static_cast<std::ptrdiff_t>(r));
  AudioBuffer out;
  out.sample_rate_hz = in.sample_rate_hz;
  out.samples.resize(in.samples.size());
  for (std::size_t i = 0; i < out.samples.size(); ++i)
    out.samples[i] = simd::dot(std::span<const float>(padded.data() + i, h.size()), std::span<const float>(h));
  return out;
}

double flatness_mos(const AudioBuffer& in) {
  PowerSpectrum ps;
  std::vector<double> power;
  double sum = 0.0;
  std::size_t frames = 0;
  const std::size_t total = PowerSpectrum::frame_count(in.samples.size());
  for (std::size_t f = 0; f < total; ++f) {
    if (!ps.frame(in.samples, f * kHop, power)) continue;
    double log_sum = 0.0, lin_sum = 0.0;
    for (double p : power) {
      log_sum += std::log(p + 1e-12);
      lin_sum += p + 1e-12;
    }
    const double flat = std::exp(log_sum / kBins) / (lin_sum / kBins);
    sum += std::clamp(flat, 0.0, 1.0);
    ++frames;
  }
  if (frames == 0) return 1.0;
  return std::clamp(1.0 + 4.0 * (1.0 - sum / static_cast<double>(frames)), 1.0, 5.0);
}

std::vector<double> spectral_embedding(const AudioBuffer& in) {
  PowerSpectrum ps;
  std::vector<double> power, acc(kBins, 0.0);
  std::size_t frames = 0;
  const std::size_t total = PowerSpectrum::frame_count(in.samples.size());
  for (std::size_t f = 0; f < total; ++f) {
    if (!ps.frame(in.samples, f * kHop, power)) continue;
    for (std::size_t k = 0; k < kBins; ++k) acc[k] += std::log(power[k] + 1e-12);
    ++frames;
  }
  if (frames == 0) throw AdapterError("embedder: silent input");
  double mean = 0.0;
  for (double& v : acc) {
    v /= static_cast<double>(frames);
    mean += v;
  }
  mean /= kBins;
  for (double& v : acc) v -= mean;
  return acc;
}

std::vector<std::uint8_t> run_builtin(std::string_view name, std::span<const std::uint8_t> wav,
                                      int mode) {
  const AudioBuffer in = decode_wav(wav);
  if (name == "identity") return encode_wav(identity(in));
  if (name == "fir") return encode_wav(fir_restorer(in, mode));
  if (name == "flatness") return json_bytes({{"score", flatness_mos(in)}});
  if (name == "embedder") return json_bytes({{"vector", spectral_embedding(in)}});
  throw AdapterError("unknown builtin adapter \"" + std::string(name) + "\"");
}

}  // namespace afro::enhance::mock
