#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>

#include "afro/dsp.hpp"
#include "afro/error.hpp"
#include "afro/simd/kernels.hpp"

namespace afro::dsp {
namespace {

// Presets indexed by aggressiveness: frames quieter than the energy floor
// are silence; frames with a noise-like zero-crossing rate are silence
// unless they clear the floor by kNoiseMarginDb.
constexpr std::array<double, 4> kEnergyFloorDbfs = {-60.0, -52.0, -46.0, -40.0};
constexpr std::array<double, 4> kNoiseZcr = {1.01, 0.50, 0.40, 0.30};
constexpr double kNoiseMarginDb = 12.0;

bool supported_rate(int hz) {
  return hz == 8000 || hz == 16000 || hz == 32000 || hz == 48000;
}

}  // namespace

void VadConfig::validate() const {
  if (frame_ms != 10 && frame_ms != 20 && frame_ms != 30)
    throw ValidationError("frame_ms must be 10, 20 or 30, got " + std::to_string(frame_ms));
  if (aggressiveness < 0 || aggressiveness > 3)
    throw ValidationError("aggressiveness must be in 0..3, got " + std::to_string(aggressiveness));
  if (max_pause_ms < 0) throw ValidationError("max_pause_ms must be nonnegative");
}

std::vector<bool> classify_frames(const AudioBuffer& a, const VadConfig& cfg) {
  cfg.validate();
  if (!supported_rate(a.sample_rate_hz))
    throw Error("unsupported sample rate for VAD: " + std::to_string(a.sample_rate_hz) + " Hz");
  const std::size_t frame = static_cast<std::size_t>(a.sample_rate_hz) * cfg.frame_ms / 1000;
  const std::size_t n = a.samples.size();
  std::vector<bool> voiced;
  voiced.reserve(n / frame + 1);
  const auto aggr = static_cast<std::size_t>(cfg.aggressiveness);
  for (std::size_t start = 0; start < n; start += frame) {
    const std::size_t len = std::min(frame, n - start);
    std::span<const float> f(a.samples.data() + start, len);
    const double ms = simd::sum_squares(f) / static_cast<double>(len);
    const double db = ms > 0.0 ? 10.0 * std::log10(ms) : -INFINITY;
    std::size_t crossings = 0;
    for (std::size_t i = 1; i < len; ++i)
      if ((f[i - 1] >= 0.0f) != (f[i] >= 0.0f)) ++crossings;
    const double zcr = len > 1 ? static_cast<double>(crossings) / static_cast<double>(len - 1) : 0.0;
    bool speech = db > kEnergyFloorDbfs[aggr];
    if (speech && zcr > kNoiseZcr[aggr] && db < kEnergyFloorDbfs[aggr] + kNoiseMarginDb)
      speech = false;
    voiced.push_back(speech);
  }
  return voiced;
}

TrimResult trim_pauses(const AudioBuffer& a, const VadConfig& cfg) {
  const auto voiced = classify_frames(a, cfg);
  const std::size_t frame = static_cast<std::size_t>(a.sample_rate_hz) * cfg.frame_ms / 1000;
  const std::size_t keep =
      static_cast<std::size_t>(a.sample_rate_hz) * static_cast<std::size_t>(cfg.max_pause_ms) / 1000;
  const std::size_t n = a.samples.size();
  TrimResult r;
  r.audio.sample_rate_hz = a.sample_rate_hz;
  r.audio.samples.reserve(n);
  const auto& x = a.samples;
  std::size_t f = 0;
  while (f < voiced.size()) {
    const std::size_t begin = f * frame;
    std::size_t g = f;
    while (g < voiced.size() && voiced[g] == voiced[f]) ++g;
    const std::size_t end = std::min(n, g * frame);
    if (voiced[f] || end - begin <= keep) {
      r.audio.samples.insert(r.audio.samples.end(), x.begin() + begin, x.begin() + end);
    } else {
      const std::size_t head = keep / 2;
      const std::size_t tail = keep - head;
      r.audio.samples.insert(r.audio.samples.end(), x.begin() + begin, x.begin() + begin + head);
      r.audio.samples.insert(r.audio.samples.end(), x.begin() + end - tail, x.begin() + end);
      r.removed_samples += end - begin - keep;
    }
    f = g;
  }
  return r;
}

}  // namespace afro::dsp
