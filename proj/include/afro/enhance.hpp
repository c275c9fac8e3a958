#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "afro/audio.hpp"
#include "afro/corpus.hpp"
#include "json.hpp"

namespace afro::enhance {

enum class AdapterKind { denoiser, restorer, quality_estimator, asr, embedder };

const char* to_string(AdapterKind k);
AdapterKind parse_adapter_kind(std::string_view s);

// endpoint forms:
//   builtin:<name>        in-process mock (see mock_adapters.hpp)
//   exec:<argv...>        subprocess; WAV on stdin, result on stdout.
//                         "{mode}" in argv is replaced by the restorer mode,
//                         otherwise "--mode N" is appended for restorers.
//   http://host:port/path POST audio/wav; restorer mode as ?mode=N
struct EnhancerAdapter {
  std::string name;
  AdapterKind kind = AdapterKind::denoiser;
  std::string endpoint;
  double timeout_s = 60.0;

  void validate() const;
};

inline constexpr const char* kTimeoutEnv = "AFROFORGE_ADAPTER_TIMEOUT_S";

class AdapterRegistry {
 public:
  AdapterRegistry() = default;
  explicit AdapterRegistry(std::vector<EnhancerAdapter> adapters);

  const std::vector<EnhancerAdapter>& adapters() const { return adapters_; }
  const EnhancerAdapter* find(std::string_view name) const;
  // First adapter of that kind in declaration order.
  const EnhancerAdapter* first_of(AdapterKind kind) const;
  const EnhancerAdapter& require(AdapterKind kind) const;

  // Replaces every timeout; used for the environment override.
  void override_timeout(double seconds);

 private:
  std::vector<EnhancerAdapter> adapters_;
};

// {"adapters":[{name, kind, endpoint, timeout_s}, ...]} or a bare array.
// Applies AFROFORGE_ADAPTER_TIMEOUT_S when set.
AdapterRegistry parse_registry(std::string_view json_text);
AdapterRegistry load_registry(const std::filesystem::path& path);

// Raw call. mode < 0 means "no mode". Throws AdapterTimeout when the
// adapter exceeds timeout_s and AdapterError for any other failure.
std::vector<std::uint8_t> invoke(const EnhancerAdapter& a, std::span<const std::uint8_t> input,
                                 int mode = -1);

// Typed wrappers around invoke.
AudioBuffer run_audio(const EnhancerAdapter& a, const AudioBuffer& in, int mode = -1);
double run_score(const EnhancerAdapter& a, const AudioBuffer& in);
std::vector<double> run_embedder(const EnhancerAdapter& a, const AudioBuffer& in);
std::string run_asr(const EnhancerAdapter& a, const AudioBuffer& in);

inline constexpr std::array<std::string_view, 4> kCandidateLabels = {"denoised", "mode0", "mode1",
                                                                     "mode2"};

struct Candidate {
  std::string label;
  std::optional<std::filesystem::path> audio;  // absent when the adapter failed
  std::optional<double> predicted_mos;
  std::string note;                            // failure reason, if any

  bool present() const { return audio.has_value(); }
};

struct EnhancementCandidateSet {
  std::string utterance_id;
  std::array<Candidate, 4> candidates;  // kCandidateLabels order

  nlohmann::ordered_json to_json(const std::filesystem::path& relative_to = {}) const;
};

// Writes <out_dir>/<utterance_id>/<label>.wav for each candidate produced.
// Throws when the denoiser fails; restorer failures become absent candidates.
EnhancementCandidateSet produce_candidates(const UtteranceRecord& u,
                                           const std::filesystem::path& source_audio,
                                           const AdapterRegistry& registry,
                                           const std::filesystem::path& out_dir);

// Scores every present candidate. A failed score leaves predicted_mos empty.
EnhancementCandidateSet score_candidates(EnhancementCandidateSet c, const EnhancerAdapter& q);

struct Selection {
  std::string label;
  std::filesystem::path audio;
  double predicted_mos = 0.0;
};

// Highest predicted_mos; ties go to the earliest label. Throws when
// nothing is scored.
Selection select_best(const EnhancementCandidateSet& c);

struct UtteranceOutcome {
  std::string utterance_id;
  std::optional<EnhancementCandidateSet> candidates;
  std::optional<Selection> selection;
  std::string error;
};

struct EnhanceRun {
  Manifest enhanced;  // selected audio, paths relative to out_dir
  std::vector<UtteranceOutcome> outcomes;  // input order

  std::size_t failures() const;
  nlohmann::ordered_json report(const std::filesystem::path& out_dir) const;
};

// Full chain per utterance over a bounded worker pool. Failed utterances
// are reported and left out of the enhanced manifest.
EnhanceRun enhance_manifest(const Manifest& m, const AdapterRegistry& registry,
                            const std::filesystem::path& out_dir, unsigned workers = 1);

}  // namespace afro::enhance
