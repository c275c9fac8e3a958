#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "afro/audio.hpp"

namespace afro::testing {

class TempDir {
 public:
  explicit TempDir(const std::string& tag = "afro") {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(rd()) + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline AudioBuffer sine(double freq_hz, double seconds, int rate, double amplitude = 1.0,
                        double phase = 0.0) {
  AudioBuffer a;
  a.sample_rate_hz = rate;
  const auto n = static_cast<std::size_t>(std::llround(seconds * rate));
  a.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    a.samples[i] = static_cast<float>(
        amplitude * std::sin(2.0 * M_PI * freq_hz * static_cast<double>(i) / rate + phase));
  return a;
}

inline AudioBuffer silence(double seconds, int rate) {
  AudioBuffer a;
  a.sample_rate_hz = rate;
  a.samples.assign(static_cast<std::size_t>(std::llround(seconds * rate)), 0.0f);
  return a;
}

inline AudioBuffer concat(std::initializer_list<AudioBuffer> parts) {
  AudioBuffer out;
  out.sample_rate_hz = parts.begin()->sample_rate_hz;
  for (const auto& p : parts) out.samples.insert(out.samples.end(), p.samples.begin(), p.samples.end());
  return out;
}

// Plain double-precision RMS, independent of the SIMD kernels.
inline double reference_rms(const AudioBuffer& a) {
  long double acc = 0.0L;
  for (float s : a.samples) acc += static_cast<long double>(s) * s;
  return std::sqrt(static_cast<double>(acc / a.samples.size()));
}

}  // namespace afro::testing

namespace afro::testing {

inline AudioBuffer noise(double seconds, int rate, double amplitude, std::uint64_t seed) {
  AudioBuffer a;
  a.sample_rate_hz = rate;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-amplitude, amplitude);
  a.samples.resize(static_cast<std::size_t>(std::llround(seconds * rate)));
  for (auto& s : a.samples) s = static_cast<float>(u(rng));
  return a;
}

}  // namespace afro::testing
