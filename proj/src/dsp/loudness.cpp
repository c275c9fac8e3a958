#include <cmath>

#include "afro/dsp.hpp"
#include "afro/error.hpp"
#include "afro/simd/kernels.hpp"

namespace afro::dsp {

double rms_dbfs(const AudioBuffer& a) {
  if (a.samples.empty()) return -INFINITY;
  const double ms = simd::sum_squares(a.samples) / static_cast<double>(a.samples.size());
  return 10.0 * std::log10(ms);
}

NormalizeResult rms_normalize(const AudioBuffer& a, double target_dbfs) {
  if (a.samples.empty()) throw Error("empty input, gain undefined");
  const double energy = simd::sum_squares(a.samples);
  if (!std::isfinite(energy)) throw Error("non-finite samples in input");
  if (energy == 0.0) throw Error("silent input, gain undefined");
  const double current = 10.0 * std::log10(energy / static_cast<double>(a.samples.size()));
  NormalizeResult r;
  r.gain = std::pow(10.0, (target_dbfs - current) / 20.0);
  r.audio.sample_rate_hz = a.sample_rate_hz;
  r.audio.samples.resize(a.samples.size());
  r.clipped = simd::scale_clip(a.samples, r.gain, r.audio.samples);
  return r;
}

}  // namespace afro::dsp
