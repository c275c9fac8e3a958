#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace afro {

enum class Gender { female, male, unspecified };

std::string_view to_string(Gender g);
// Anything other than "female"/"male" (case-insensitive) is unspecified.
Gender parse_gender(std::string_view s);

bool is_iso_country(std::string_view code);

struct UtteranceRecord {
  std::string utterance_id;
  std::string speaker_id;
  std::string country;
  std::string accent;
  Gender gender = Gender::unspecified;
  std::string age_group;
  std::string text;
  std::string audio_path;
  double duration_s = 0.0;
  int sample_rate_hz = 0;

  // Set only on rows produced by balance_duplicate: replica > 0 and the
  // utterance_id of the original row.
  int replica = 0;
  std::string source_utterance_id;

  bool operator==(const UtteranceRecord&) const = default;
};

nlohmann::ordered_json to_json(const UtteranceRecord& r);
UtteranceRecord record_from_json(const nlohmann::json& j);

// Throws ValidationError on a broken record invariant.
void validate_record(const UtteranceRecord& r);

class Manifest {
 public:
  Manifest() = default;
  // Validates every record and rejects duplicate utterance ids.
  explicit Manifest(std::vector<UtteranceRecord> records, std::string source_uri = {});

  const std::vector<UtteranceRecord>& records() const { return records_; }
  const std::string& source_uri() const { return source_uri_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  // Relative audio paths resolve against the manifest's directory.
  std::filesystem::path audio_path(const UtteranceRecord& r) const;
  const std::filesystem::path& base_dir() const { return base_dir_; }
  void set_base_dir(std::filesystem::path dir) { base_dir_ = std::move(dir); }

  bool operator==(const Manifest& o) const { return records_ == o.records_; }

 private:
  std::vector<UtteranceRecord> records_;
  std::string source_uri_;
  std::filesystem::path base_dir_;
};

enum class ManifestFormat { jsonl, csv };

ManifestFormat format_from_path(const std::filesystem::path& path);

Manifest parse_manifest(std::string_view content, ManifestFormat format,
                        std::string source_uri = {});
Manifest load_manifest(const std::filesystem::path& path, ManifestFormat format);
Manifest load_manifest(const std::filesystem::path& path);

std::string serialize_manifest(const Manifest& m);
void write_manifest(const std::filesystem::path& path, const Manifest& m);

struct CountryStats {
  std::string country;
  std::size_t n_samples = 0;
  std::size_t n_speakers = 0;
  std::size_t n_accents = 0;
  double duration_h = 0.0;
};

struct CorpusStats {
  std::vector<CountryStats> rows;  // n_samples descending, then country

  std::size_t total_samples() const;
  double total_hours() const;
};

CorpusStats compute_stats(const Manifest& m);
std::string stats_table(const CorpusStats& s);
nlohmann::ordered_json stats_json(const CorpusStats& s);

struct AudioCheck {
  std::string utterance_id;
  bool pass = false;
  std::string reason;  // empty on pass
};

// Per-record check of file existence, header, sample rate and duration
// (1 % tolerance). Never throws for per-record problems.
std::vector<AudioCheck> validate_audio(const Manifest& m, unsigned workers = 0);

}  // namespace afro
