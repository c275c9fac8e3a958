#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "afro/corpus.hpp"
#include "json.hpp"

namespace afro::split {

struct SplitConfig {
  double test_min_group_minutes = 20.0;
  std::size_t test_size = 736;
  std::size_t dev_size = 200;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SplitReport {
  // "speaker|accent" -> minutes, for groups above the test threshold
  std::map<std::string, double> eligible_groups;
  std::map<std::string, std::size_t> test_per_group;
  std::size_t train = 0, dev = 0, test = 0;

  nlohmann::ordered_json to_json() const;
};

struct Splits {
  Manifest train, dev, test;  // each in input order
  SplitReport report;
};

// Test: seeded round-robin over (speaker, accent) groups longer than
// test_min_group_minutes. Dev: seeded uniform draw from the remainder.
// Train: everything else. Throws ValidationError when sizes cannot be met.
Splits make_splits(const Manifest& m, const SplitConfig& cfg);

struct BalanceConfig {
  double target_minutes_per_speaker = 10.0;
};

struct BalanceReport {
  std::map<std::string, std::size_t> multiplier;  // total copies per speaker
  std::map<std::string, double> minutes_before;
  std::map<std::string, double> minutes_after;

  nlohmann::ordered_json to_json() const;
};

struct Balanced {
  Manifest manifest;
  BalanceReport report;
};

// Speakers under the target get their whole set repeated until the total
// reaches it; replicas are appended after the originals with ids
// "<utterance_id>#<replica>".
Balanced balance_duplicate(const Manifest& train, const BalanceConfig& cfg);

}  // namespace afro::split
