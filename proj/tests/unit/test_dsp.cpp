#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <random>

#include "afro/dsp.hpp"
#include "afro/error.hpp"
#include "test_support.hpp"

using namespace afro;
using namespace afro::dsp;
using afro::testing::concat;
using afro::testing::reference_rms;
using afro::testing::silence;
using afro::testing::sine;

namespace {

double to_db(double rms) { return 20.0 * std::log10(rms); }

// Energy-threshold oracle: frame is speech iff its mean square exceeds the
// floor. Only valid for signals that are either loud tones or exact zeros.
std::size_t oracle_trimmed_length(const AudioBuffer& a, int frame_ms, int max_pause_ms) {
  const std::size_t frame = static_cast<std::size_t>(a.sample_rate_hz) * frame_ms / 1000;
  const std::size_t keep = static_cast<std::size_t>(a.sample_rate_hz) * max_pause_ms / 1000;
  std::vector<bool> speech;
  for (std::size_t s = 0; s < a.samples.size(); s += frame) {
    double e = 0;
    const std::size_t len = std::min(frame, a.samples.size() - s);
    for (std::size_t i = 0; i < len; ++i) e += double(a.samples[s + i]) * a.samples[s + i];
    speech.push_back(e / len > 1e-6);
  }
  std::size_t total = 0;
  for (std::size_t f = 0; f < speech.size();) {
    std::size_t g = f;
    while (g < speech.size() && speech[g] == speech[f]) ++g;
    const std::size_t len = std::min(a.samples.size(), g * frame) - f * frame;
    total += speech[f] ? len : std::min(len, keep);
    f = g;
  }
  return total;
}

double dft_magnitude(const std::vector<float>& x, std::size_t bin) {
  std::complex<double> acc = 0;
  const double w = -2.0 * M_PI * static_cast<double>(bin) / static_cast<double>(x.size());
  for (std::size_t n = 0; n < x.size(); ++n)
    acc += static_cast<double>(x[n]) * std::polar(1.0, w * static_cast<double>(n));
  return std::abs(acc);
}

}  // namespace

TEST_CASE("rms_normalize: full-scale sine to -27 dBFS") {
  const auto a = sine(1000.0, 1.0, 16000);
  CHECK(reference_rms(a) == doctest::Approx(0.70711).epsilon(1e-4));
  const auto r = rms_normalize(a, -27.0);
  CHECK(r.gain == doctest::Approx(0.06317).epsilon(1e-3));
  CHECK(reference_rms(r.audio) == doctest::Approx(0.04467).epsilon(1e-3));
  CHECK(to_db(reference_rms(r.audio)) == doctest::Approx(-27.0).epsilon(1e-4));
  CHECK(r.clipped == 0);
  // Closed form g = 10^((target - current)/20)
  CHECK(r.gain == doctest::Approx(std::pow(10.0, (-27.0 - to_db(reference_rms(a))) / 20.0)).epsilon(1e-9));
}

TEST_CASE("rms_normalize: fixed point and silent input") {
  auto a = sine(440.0, 0.5, 16000, 0.04467 * std::sqrt(2.0));
  const auto r = rms_normalize(a);
  CHECK(r.gain == doctest::Approx(1.0).epsilon(1e-3));
  AudioBuffer zeros = silence(0.1, 16000);
  CHECK_THROWS_WITH_AS(rms_normalize(zeros), "silent input, gain undefined", afro::Error);
}

TEST_CASE("rms_normalize reports clipping") {
  AudioBuffer a;
  a.sample_rate_hz = 16000;
  a.samples.assign(1000, 0.001f);
  a.samples[10] = 0.9f;  // crest factor far above the headroom at -3 dBFS
  const auto r = rms_normalize(a, -3.0);
  CHECK(r.clipped == 1);
  CHECK(r.audio.samples[10] == 1.0f);
}

TEST_CASE("rms_normalize absorbs input scale") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0.0, 0.05);
  for (int t = 0; t < 20; ++t) {
    AudioBuffer x;
    x.sample_rate_hz = 16000;
    for (int i = 0; i < 4000; ++i) x.samples.push_back(static_cast<float>(g(rng)));
    AudioBuffer cx = x;
    const double c = 0.5 + t * 0.37;
    for (auto& s : cx.samples) s = static_cast<float>(s * c);
    const auto a = rms_normalize(x).audio;
    const auto b = rms_normalize(cx).audio;
    for (std::size_t i = 0; i < a.samples.size(); ++i)
      REQUIRE(std::abs(a.samples[i] - b.samples[i]) <= 1e-6);
  }
}

TEST_CASE("trim_pauses: tone + 3 s silence + tone") {
  const auto a = concat({sine(440.0, 1.0, 16000, 0.5), silence(3.0, 16000), sine(440.0, 1.0, 16000, 0.5)});
  VadConfig cfg;
  cfg.max_pause_ms = 500;
  const auto r = trim_pauses(a, cfg);
  const std::size_t expected = oracle_trimmed_length(a, cfg.frame_ms, cfg.max_pause_ms);
  CHECK(r.audio.samples.size() == expected);
  CHECK(r.audio.duration_s() == doctest::Approx(2.5).epsilon(0.03));
  CHECK(r.removed_samples == a.samples.size() - expected);
}

TEST_CASE("trim_pauses: nothing to trim and all silence") {
  VadConfig cfg;
  const auto tone = sine(300.0, 2.0, 48000, 0.3);
  const auto r = trim_pauses(tone, cfg);
  CHECK(r.audio.samples == tone.samples);

  const auto quiet = silence(4.0, 16000);
  const auto q = trim_pauses(quiet, cfg);
  CHECK(q.audio.samples.size() == 8000);  // 500 ms at 16 kHz
  CHECK(q.audio.samples.size() == oracle_trimmed_length(quiet, cfg.frame_ms, cfg.max_pause_ms));

  cfg.max_pause_ms = 0;
  CHECK(trim_pauses(quiet, cfg).audio.samples.empty());
}

TEST_CASE("trim_pauses keeps speech frames verbatim and in order") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    AudioBuffer a;
    a.sample_rate_hz = trial % 2 ? 16000 : 8000;
    for (int seg = 0; seg < 6; ++seg) {
      const double secs = 0.05 + (rng() % 100) / 100.0;
      const auto part = seg % 2 ? silence(secs, a.sample_rate_hz)
                                : sine(200.0 + 50 * seg, secs, a.sample_rate_hz, 0.2 + 0.1 * seg);
      a.samples.insert(a.samples.end(), part.samples.begin(), part.samples.end());
    }
    VadConfig cfg;
    cfg.frame_ms = 10 * (1 + trial % 3);
    cfg.aggressiveness = trial % 4;
    cfg.max_pause_ms = 100 + 50 * (trial % 5);
    const auto voiced = classify_frames(a, cfg);
    const std::size_t frame = static_cast<std::size_t>(a.sample_rate_hz) * cfg.frame_ms / 1000;
    std::vector<float> in_speech;
    for (std::size_t f = 0; f < voiced.size(); ++f) {
      if (!voiced[f]) continue;
      const std::size_t s = f * frame, e = std::min(a.samples.size(), s + frame);
      in_speech.insert(in_speech.end(), a.samples.begin() + s, a.samples.begin() + e);
    }
    const auto out = trim_pauses(a, cfg).audio;
    CHECK(out.samples.size() <= a.samples.size());
    CHECK(out.samples.size() == oracle_trimmed_length(a, cfg.frame_ms, cfg.max_pause_ms));
    // speech samples appear in the output as an ordered subsequence
    std::size_t k = 0;
    for (float s : out.samples)
      if (k < in_speech.size() && s == in_speech[k]) ++k;
    CHECK(k == in_speech.size());
  }
}

TEST_CASE("trim_pauses validates its inputs") {
  VadConfig cfg;
  CHECK_THROWS_AS(trim_pauses(sine(100, 0.1, 44100), cfg), afro::Error);
  cfg.frame_ms = 25;
  CHECK_THROWS_AS(trim_pauses(sine(100, 0.1, 16000), cfg), afro::ValidationError);
  cfg.frame_ms = 30;
  cfg.aggressiveness = 4;
  CHECK_THROWS_AS(trim_pauses(sine(100, 0.1, 16000), cfg), afro::ValidationError);
}

TEST_CASE("resample: length, identity and spectral peak") {
  AudioBuffer a = sine(1000.0, 1.0, 48000, 0.5);
  REQUIRE(a.samples.size() == 48000);
  const auto down = resample(a, 16000);
  CHECK(down.samples.size() == 16000);
  CHECK(down.sample_rate_hz == 16000);

  const auto same = resample(a, 48000);
  CHECK(same.samples == a.samples);

  // 1600-point DFT of the middle of the output: 10 Hz bins, 1 kHz at bin 100.
  std::vector<float> mid(down.samples.begin() + 8000, down.samples.begin() + 9600);
  std::size_t best = 0;
  double best_mag = -1;
  for (std::size_t bin = 1; bin < 800; ++bin) {
    const double m = dft_magnitude(mid, bin);
    if (m > best_mag) {
      best_mag = m;
      best = bin;
    }
  }
  CHECK(best >= 99);
  CHECK(best <= 101);
}

TEST_CASE("resample: output length formula across rates") {
  const int rates[] = {8000, 16000, 22050, 24000, 32000, 44100, 48000};
  for (int src : rates)
    for (int dst : rates)
      for (std::size_t n : {0u, 1u, 7u, 1000u, 4411u}) {
        AudioBuffer a;
        a.sample_rate_hz = src;
        a.samples.assign(n, 0.1f);
        const auto out = resample(a, dst);
        const auto expect = static_cast<std::size_t>(std::llround(static_cast<double>(n) * dst / src));
        CHECK(out.samples.size() == expect);
      }
  CHECK_THROWS_AS(resample(sine(1, 0.01, 16000), 0), afro::Error);
}

TEST_CASE("resample: 16 -> 48 -> 16 kHz round trip keeps band-limited tones") {
  for (double f : {250.0, 1000.0, 2500.0, 3900.0}) {
    CAPTURE(f);
    const auto x = sine(f, 0.5, 16000, 0.5, 0.3);
    const auto y = resample(resample(x, 48000), 16000);
    REQUIRE(y.samples.size() == x.samples.size());
    double sig = 0, err = 0;
    for (std::size_t i = 400; i + 400 < x.samples.size(); ++i) {  // skip edge transients
      sig += double(x.samples[i]) * x.samples[i];
      const double d = double(x.samples[i]) - y.samples[i];
      err += d * d;
    }
    CHECK(10.0 * std::log10(sig / err) > 40.0);
  }
}

TEST_CASE("check_eligibility thresholds") {
  UtteranceRecord r;
  r.duration_s = 55;
  r.text = "short";
  CHECK(check_eligibility(r) == Eligibility::too_long_audio);
  r.duration_s = 10;
  r.text = std::string(450, 'a');
  CHECK(check_eligibility(r) == Eligibility::too_long_text);
  r.text = std::string(100, 'a');
  CHECK(check_eligibility(r) == Eligibility::eligible);
  r.duration_s = 50.0;
  CHECK(check_eligibility(r) == Eligibility::eligible);
  r.duration_s = 50.01;
  CHECK(check_eligibility(r) == Eligibility::too_long_audio);
  r.duration_s = 10;
  std::string accented;
  for (int i = 0; i < 400; ++i) accented += "é";  // 800 bytes, 400 scalars
  r.text = accented;
  CHECK(check_eligibility(r) == Eligibility::eligible);
  r.text += "ọ";
  CHECK(check_eligibility(r) == Eligibility::too_long_text);
  // audio verdict wins when both bounds fail
  r.duration_s = 60;
  CHECK(check_eligibility(r) == Eligibility::too_long_audio);
}
