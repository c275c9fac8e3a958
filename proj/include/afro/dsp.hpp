#pragma once

#include <cstddef>
#include <vector>

#include "afro/audio.hpp"
#include "afro/corpus.hpp"

namespace afro::dsp {

inline constexpr double kDefaultTargetDbfs = -27.0;

// RMS level in dBFS over the whole buffer (full-scale sine = -3.01).
double rms_dbfs(const AudioBuffer& a);

struct NormalizeResult {
  AudioBuffer audio;
  double gain = 1.0;
  std::size_t clipped = 0;  // samples hard-clipped to +/-1 after scaling
};

// Single scalar gain to reach target_dbfs. Throws afro::Error on silent input.
NormalizeResult rms_normalize(const AudioBuffer& a, double target_dbfs = kDefaultTargetDbfs);

struct VadConfig {
  int frame_ms = 30;        // 10, 20 or 30
  int aggressiveness = 2;   // 0..3
  int max_pause_ms = 500;

  void validate() const;
};

// Per-frame speech decision. The last frame may be shorter than frame_ms.
std::vector<bool> classify_frames(const AudioBuffer& a, const VadConfig& cfg);

struct TrimResult {
  AudioBuffer audio;
  std::size_t removed_samples = 0;
};

// Shortens every silence run longer than max_pause_ms to exactly max_pause_ms
// (head and tail of the run are kept). Speech frames are copied verbatim.
TrimResult trim_pauses(const AudioBuffer& a, const VadConfig& cfg);

// Kaiser-windowed sinc, polyphase. Output length round(n * target / source);
// identical rates return the input unchanged.
AudioBuffer resample(const AudioBuffer& a, int target_hz);

enum class Eligibility { eligible, too_long_audio, too_long_text };

inline constexpr double kMaxDurationS = 50.0;
inline constexpr std::size_t kMaxTextChars = 400;

const char* to_string(Eligibility e);

// Audio limit first, then text length in Unicode scalar values of the raw
// transcript. Both bounds are inclusive.
Eligibility check_eligibility(const UtteranceRecord& r);

}  // namespace afro::dsp
