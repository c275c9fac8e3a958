#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace afro {

// Mono float buffer. Samples nominally in [-1, 1].
struct AudioBuffer {
  std::vector<float> samples;
  int sample_rate_hz = 16000;

  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
  bool empty() const { return samples.empty(); }
};

struct WavInfo {
  int sample_rate_hz = 0;
  int channels = 0;
  int bits_per_sample = 0;
  bool is_float = false;
  std::size_t frames = 0;

  double duration_s() const {
    return sample_rate_hz > 0 ? static_cast<double>(frames) / sample_rate_hz : 0.0;
  }
};

// RIFF/WAVE parsing. Accepts PCM 16-bit and IEEE float 32-bit; mono only
// for decoding. Throws afro::Error on malformed input.
WavInfo parse_wav_header(std::span<const std::uint8_t> bytes);
WavInfo read_wav_info(const std::filesystem::path& path);

AudioBuffer decode_wav(std::span<const std::uint8_t> bytes);
AudioBuffer read_wav(const std::filesystem::path& path);

// Little-endian PCM 16-bit mono. Samples are clamped to [-1, 1] and
// rounded to the nearest code.
std::vector<std::uint8_t> encode_wav(const AudioBuffer& audio);
void write_wav(const std::filesystem::path& path, const AudioBuffer& audio);

}  // namespace afro
