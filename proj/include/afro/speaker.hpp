#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "afro/corpus.hpp"
#include "json.hpp"

namespace afro::speaker {

inline constexpr std::size_t kEmbeddingDim = 256;

struct SpeakerMeta {
  Gender gender = Gender::unspecified;
  std::string country;
  std::string accent;

  auto operator<=>(const SpeakerMeta&) const = default;
};

struct SpeakerEmbedding {
  std::string speaker_id;
  std::vector<double> vector;  // kEmbeddingDim components, unit l2 norm
  SpeakerMeta meta;
};

double l2_norm(const std::vector<double>& v);

// Speaker id -> embedding. Read-only once built.
class EmbeddingStore {
 public:
  // Renormalizes to unit length. Throws ValidationError on wrong dimension,
  // non-finite or zero vectors, and duplicate ids.
  void add(SpeakerEmbedding e);

  const SpeakerEmbedding* find(std::string_view id) const;
  const SpeakerEmbedding& at(std::string_view id) const;
  std::size_t size() const { return by_id_.size(); }
  bool empty() const { return by_id_.empty(); }

  // Sorted by speaker id.
  std::vector<const SpeakerEmbedding*> all() const;

 private:
  std::map<std::string, SpeakerEmbedding, std::less<>> by_id_;
};

// JSONL: {speaker_id, gender, country, accent, vector: [256 reals]}
EmbeddingStore parse_embeddings(std::string_view jsonl);
EmbeddingStore import_embeddings(const std::filesystem::path& path);
nlohmann::ordered_json to_json(const SpeakerEmbedding& e);

// Dot product of unit vectors, clamped to [-1, 1].
double cosine_similarity(const SpeakerEmbedding& a, const SpeakerEmbedding& b);
double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

struct PersonaSpec {
  std::string new_speaker_id;
  std::vector<std::string> sources;  // 2 or 3 ids
  std::vector<double> weights;       // one per source, >= 0, summing to 1

  void validate() const;
};

// Pairwise blend alpha*S1 + (1 - alpha)*S2.
PersonaSpec pair_spec(std::string new_id, std::string s1, std::string s2, double alpha);

struct InterpolationOptions {
  // Blending across (gender, country, accent) groups is off by default.
  bool allow_cross_group = false;
};

// Weighted sum of the source vectors, renormalized to unit length. A spec
// that puts all weight on one source returns that source's vector exactly.
SpeakerEmbedding interpolate(const PersonaSpec& spec, const EmbeddingStore& store,
                             const InterpolationOptions& opts = {});

struct Persona {
  PersonaSpec spec;
  SpeakerEmbedding embedding;
};

nlohmann::ordered_json to_json(const Persona& p);

// Every 2-subset, then every 3-subset (equal weights) of each
// (gender, country, accent) group; groups and subsets in lexicographic
// order; ids "blend::<a>+<b>[+<c>]". Stops after `cap` personas.
std::vector<Persona> generate_personas(const EmbeddingStore& store, std::size_t max_sources = 3,
                                       double alpha = 0.5,
                                       std::optional<std::size_t> cap = std::nullopt);

}  // namespace afro::speaker
