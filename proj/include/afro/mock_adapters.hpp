#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "afro/audio.hpp"

// Deterministic stand-ins for the neural tools, usable in-process
// ("builtin:<name>") or through tools/mock_adapter.
namespace afro::enhance::mock {

// identity denoiser
AudioBuffer identity(const AudioBuffer& in);

// Fixed symmetric FIR per mode 0..2.
AudioBuffer fir_restorer(const AudioBuffer& in, int mode);

// 1 + 4 * (1 - mean spectral flatness) over non-silent 512-sample frames,
// in [1, 5]. Tonal audio scores high, white noise low, silence 1.
double flatness_mos(const AudioBuffer& in);

// 256 mean-removed log band powers (512-point frames). Throws on silence.
std::vector<double> spectral_embedding(const AudioBuffer& in);

// Dispatch by builtin name. Result bytes follow the adapter wire format.
std::vector<std::uint8_t> run_builtin(std::string_view name, std::span<const std::uint8_t> wav,
                                      int mode);

}  // namespace afro::enhance::mock
