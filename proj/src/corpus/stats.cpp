#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <thread>

#include "afro/audio.hpp"
#include "afro/corpus.hpp"
#include "afro/error.hpp"

namespace afro {

std::size_t CorpusStats::total_samples() const {
  std::size_t n = 0;
  for (const auto& r : rows) n += r.n_samples;
  return n;
}

double CorpusStats::total_hours() const {
  double h = 0.0;
  for (const auto& r : rows) h += r.duration_h;
  return h;
}

CorpusStats compute_stats(const Manifest& m) {
  struct Acc {
    std::size_t n = 0;
    std::set<std::string> speakers;
    std::set<std::string> accents;
    std::vector<double> durations;
  };
  std::map<std::string, Acc> by_country;
  for (const auto& r : m.records()) {
    auto& a = by_country[r.country];
    ++a.n;
    a.speakers.insert(r.speaker_id);
    a.accents.insert(r.accent);
    a.durations.push_back(r.duration_s);
  }
  CorpusStats stats;
  for (auto& [country, a] : by_country) {
    // Sorted summation keeps the result independent of record order.
    std::sort(a.durations.begin(), a.durations.end());
    double seconds = 0.0;
    for (double d : a.durations) seconds += d;
    stats.rows.push_back({country, a.n, a.speakers.size(), a.accents.size(), seconds / 3600.0});
  }
  std::stable_sort(stats.rows.begin(), stats.rows.end(),
                   [](const CountryStats& x, const CountryStats& y) {
                     return x.n_samples > y.n_samples;
                   });
  return stats;
}

std::string stats_table(const CorpusStats& s) {
  std::string out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-8s %10s %10s %9s %12s\n", "Country", "# Samples",
                "# Speakers", "# Accents", "Duration (h)");
  out += buf;
  std::size_t speakers = 0;
  for (const auto& r : s.rows) {
    std::snprintf(buf, sizeof buf, "%-8s %10zu %10zu %9zu %12.2f\n", r.country.c_str(),
                  r.n_samples, r.n_speakers, r.n_accents, r.duration_h);
    out += buf;
    speakers += r.n_speakers;
  }
  std::snprintf(buf, sizeof buf, "%-8s %10zu %10zu %9s %12.2f\n", "Total", s.total_samples(),
                speakers, "", s.total_hours());
  out += buf;
  return out;
}

nlohmann::ordered_json stats_json(const CorpusStats& s) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : s.rows) {
    rows.push_back({{"country", r.country},
                    {"n_samples", r.n_samples},
                    {"n_speakers", r.n_speakers},
                    {"n_accents", r.n_accents},
                    {"duration_h", r.duration_h}});
  }
  return {{"rows", rows},
          {"total_samples", s.total_samples()},
          {"total_duration_h", s.total_hours()}};
}

namespace {

AudioCheck check_one(const Manifest& m, const UtteranceRecord& r) {
  AudioCheck c{r.utterance_id, false, {}};
  const auto path = m.audio_path(r);
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    c.reason = "missing file";
    return c;
  }
  WavInfo info;
  try {
    info = read_wav_info(path);
  } catch (const Error& e) {
    c.reason = std::string("undecodable header: ") + e.what();
    return c;
  }
  if (info.sample_rate_hz != r.sample_rate_hz) {
    c.reason = "sample rate mismatch: header " + std::to_string(info.sample_rate_hz) +
               " Hz, metadata " + std::to_string(r.sample_rate_hz) + " Hz";
    return c;
  }
  const double decoded = info.duration_s();
  if (std::abs(decoded - r.duration_s) > 0.01 * r.duration_s) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "duration mismatch: decoded %.3f s, metadata %.3f s",
                  decoded, r.duration_s);
    c.reason = buf;
    return c;
  }
  c.pass = true;
  return c;
}

}  // namespace

std::vector<AudioCheck> validate_audio(const Manifest& m, unsigned workers) {
  const auto& recs = m.records();
  std::vector<AudioCheck> out(recs.size());
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, std::max<std::size_t>(1, recs.size()));
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < recs.size(); i += workers) out[i] = check_one(m, recs[i]);
    });
  }
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace afro
