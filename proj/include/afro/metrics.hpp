#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace afro::metrics {

// ---- WER -------------------------------------------------------------

struct WerBreakdown {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t ref_words = 0;
  double wer = 0.0;  // (S + D + I) / ref_words
};

using WordNormalizer = std::function<std::vector<std::string>(std::string_view)>;

// ASCII-lowercase, drop ASCII punctuation, split on whitespace.
std::vector<std::string> wer_tokens(std::string_view text);

// Minimum edit distance alignment with unit costs. Throws afro::Error when
// the normalized reference is empty.
WerBreakdown wer(std::string_view ref, std::string_view hyp, const WordNormalizer& norm = wer_tokens);
WerBreakdown wer(const std::vector<std::string>& ref, const std::vector<std::string>& hyp);

// Pooled corpus WER: summed edits over summed reference words.
WerBreakdown corpus_wer(std::span<const WerBreakdown> utterances);

// ---- EER -------------------------------------------------------------

struct ScoreTrials {
  std::vector<double> genuine;
  std::vector<double> impostor;
};

// Accept iff score > threshold. Thresholds: below all scores, every midpoint
// between adjacent distinct scores, above all scores. Returns the rate where
// false-accept and false-reject cross, interpolating linearly between the
// two operating points that bracket the crossing.
double eer(const ScoreTrials& t);

// ---- MOS -------------------------------------------------------------

struct MosSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double ci95_half_width = 0.0;  // 1.96 * s / sqrt(n), s = sample std dev
};

// Ratings must be integers 1..5.
MosSummary aggregate_mos(std::span<const int> ratings);

// ---- bootstrap -------------------------------------------------------

struct BootstrapResult {
  double mean_diff = 0.0;  // mean(a) - mean(b)
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool significant = false;  // CI excludes 0
};

inline constexpr std::size_t kDefaultResamples = 10000;

// Percentile bootstrap on mean(a) - mean(b). Resample r draws from its own
// generator seeded by (seed, r), so the result does not depend on `workers`.
BootstrapResult bootstrap_diff(std::span<const double> a, std::span<const double> b,
                               std::size_t resamples = kDefaultResamples,
                               std::uint64_t seed = 0, unsigned workers = 1);

// ---- preference ------------------------------------------------------

struct LeaderboardEntry {
  std::string model;
  std::size_t wins = 0;
  std::size_t rank = 0;  // 1-based, ties share a rank
};

std::vector<LeaderboardEntry> preference_ranking(const std::map<std::string, std::size_t>& votes);
std::string ordinal_label(std::size_t rank);  // 1 -> "1st"

// ---- reports ---------------------------------------------------------

// One Likert judgment with its grouping attributes (model, country, ...).
struct RatingRow {
  std::map<std::string, std::string> attributes;
  std::string dimension;
  int value = 0;
};

struct MosReportRow {
  std::vector<std::string> group;  // values in group_by order
  std::string dimension;
  MosSummary summary;
};

struct MetricReport {
  std::vector<std::string> group_by;
  std::vector<MosReportRow> rows;  // sorted by group then dimension
  std::vector<LeaderboardEntry> leaderboard;

  nlohmann::ordered_json to_json() const;
  std::string to_table() const;
};

MetricReport build_report(std::span<const RatingRow> ratings, const std::vector<std::string>& group_by,
                          const std::map<std::string, std::size_t>& preference_votes = {});

}  // namespace afro::metrics
