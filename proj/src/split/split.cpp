#include <algorithm>
#include <random>

#include "afro/error.hpp"
#include "afro/split.hpp"

namespace afro::split {
namespace {

std::size_t draw_below(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>((static_cast<unsigned __int128>(rng()) * n) >> 64);
}

// Fisher-Yates with a portable index draw.
template <class T>
void seeded_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[draw_below(rng, i)]);
}

std::string group_key(const UtteranceRecord& r) { return r.speaker_id + "|" + r.accent; }

Manifest subset(const Manifest& m, const std::vector<char>& take) {
  std::vector<UtteranceRecord> recs;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (take[i]) recs.push_back(m.records()[i]);
  Manifest out(std::move(recs), m.source_uri());
  out.set_base_dir(m.base_dir());
  return out;
}

}  // namespace

void SplitConfig::validate() const {
  if (!(test_min_group_minutes > 0.0)) throw ValidationError("test_min_group_minutes must be > 0");
}

nlohmann::ordered_json SplitReport::to_json() const {
  nlohmann::ordered_json groups = nlohmann::ordered_json::object();
  for (const auto& [k, minutes] : eligible_groups) {
    auto it = test_per_group.find(k);
    groups[k] = {{"minutes", minutes}, {"test", it == test_per_group.end() ? 0 : it->second}};
  }
  return {{"train", train}, {"dev", dev}, {"test", test}, {"test_groups", groups}};
}

Splits make_splits(const Manifest& m, const SplitConfig& cfg) {
  cfg.validate();
  const auto& recs = m.records();
  std::map<std::string, std::vector<std::size_t>> groups;
  std::map<std::string, double> seconds;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    groups[group_key(recs[i])].push_back(i);
    seconds[group_key(recs[i])] += recs[i].duration_s;
  }

  Splits out;
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::string> eligible;
  std::size_t pool = 0;
  for (const auto& [key, secs] : seconds) {
    if (secs > cfg.test_min_group_minutes * 60.0) {
      eligible.push_back(key);
      out.report.eligible_groups[key] = secs / 60.0;
      pool += groups[key].size();
    }
  }
  if (cfg.test_size > pool)
    throw ValidationError("test_size " + std::to_string(cfg.test_size) + " exceeds the " +
                          std::to_string(pool) + " samples in groups above " +
                          std::to_string(cfg.test_min_group_minutes) + " minutes");

  seeded_shuffle(eligible, rng);
  for (const auto& key : eligible) seeded_shuffle(groups[key], rng);

  std::vector<char> in_test(recs.size(), 0);
  std::size_t picked = 0;
  for (std::size_t round = 0; picked < cfg.test_size; ++round) {
    for (const auto& key : eligible) {
      if (picked == cfg.test_size) break;
      const auto& members = groups[key];
      if (round >= members.size()) continue;
      in_test[members[round]] = 1;
      ++out.report.test_per_group[key];
      ++picked;
    }
  }

  std::vector<std::size_t> remainder;
  for (std::size_t i = 0; i < recs.size(); ++i)
    if (!in_test[i]) remainder.push_back(i);
  if (cfg.dev_size > remainder.size())
    throw ValidationError("dev_size " + std::to_string(cfg.dev_size) + " exceeds the remaining " +
                          std::to_string(remainder.size()) + " samples");
  seeded_shuffle(remainder, rng);
  std::vector<char> in_dev(recs.size(), 0);
  for (std::size_t k = 0; k < cfg.dev_size; ++k) in_dev[remainder[k]] = 1;
  std::vector<char> in_train(recs.size(), 0);
  for (std::size_t i = 0; i < recs.size(); ++i) in_train[i] = !in_test[i] && !in_dev[i];

  out.test = subset(m, in_test);
  out.dev = subset(m, in_dev);
  out.train = subset(m, in_train);
  out.report.train = out.train.size();
  out.report.dev = out.dev.size();
  out.report.test = out.test.size();
  return out;
}

nlohmann::ordered_json BalanceReport::to_json() const {
  nlohmann::ordered_json speakers = nlohmann::ordered_json::object();
  for (const auto& [s, k] : multiplier)
    speakers[s] = {{"multiplier", k},
                   {"minutes_before", minutes_before.at(s)},
                   {"minutes_after", minutes_after.at(s)}};
  return {{"speakers", speakers}};
}

Balanced balance_duplicate(const Manifest& train, const BalanceConfig& cfg) {
  if (!(cfg.target_minutes_per_speaker > 0.0))
    throw ValidationError("target_minutes_per_speaker must be > 0");
  const double target_s = cfg.target_minutes_per_speaker * 60.0;
  std::map<std::string, double> seconds;
  for (const auto& r : train.records()) seconds[r.speaker_id] += r.duration_s;

  Balanced out;
  std::size_t max_copies = 1;
  for (const auto& [speaker, secs] : seconds) {
    if (!(secs > 0.0)) throw ValidationError("speaker \"" + speaker + "\" has zero total duration");
    std::size_t k = 1;
    while (static_cast<double>(k) * secs < target_s) ++k;
    out.report.multiplier[speaker] = k;
    out.report.minutes_before[speaker] = secs / 60.0;
    out.report.minutes_after[speaker] = static_cast<double>(k) * secs / 60.0;
    max_copies = std::max(max_copies, k);
  }

  std::vector<UtteranceRecord> recs = train.records();
  for (std::size_t replica = 1; replica < max_copies; ++replica) {
    for (const auto& r : train.records()) {
      if (out.report.multiplier[r.speaker_id] <= replica) continue;
      UtteranceRecord copy = r;
      copy.replica = static_cast<int>(replica);
      copy.source_utterance_id = r.replica > 0 ? r.source_utterance_id : r.utterance_id;
      copy.utterance_id = r.utterance_id + "#" + std::to_string(replica);
      recs.push_back(std::move(copy));
    }
  }
  out.manifest = Manifest(std::move(recs), train.source_uri());
  out.manifest.set_base_dir(train.base_dir());
  return out;
}

}  // namespace afro::split
