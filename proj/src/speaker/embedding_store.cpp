#include <cmath>
#include <sstream>

#include "afro/error.hpp"
#include "afro/simd/kernels.hpp"
#include "afro/speaker.hpp"
#include "afro/util.hpp"

namespace afro::speaker {

double l2_norm(const std::vector<double>& v) { return std::sqrt(simd::dot(v, v)); }

void EmbeddingStore::add(SpeakerEmbedding e) {
  if (e.speaker_id.empty()) throw ValidationError("empty speaker_id");
  if (e.vector.size() != kEmbeddingDim)
    throw ValidationError("speaker " + e.speaker_id + ": dimension " +
                          std::to_string(e.vector.size()) + " ≠ " + std::to_string(kEmbeddingDim));
  for (double x : e.vector)
    if (!std::isfinite(x))
      throw ValidationError("speaker " + e.speaker_id + ": non-finite component");
  const double norm = l2_norm(e.vector);
  if (norm == 0.0) throw ValidationError("speaker " + e.speaker_id + ": zero vector");
  for (double& x : e.vector) x /= norm;
  if (by_id_.count(e.speaker_id))
    throw ValidationError("duplicate speaker_id \"" + e.speaker_id + "\"");
  std::string id = e.speaker_id;
  by_id_.emplace(std::move(id), std::move(e));
}

const SpeakerEmbedding* EmbeddingStore::find(std::string_view id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &it->second;
}

const SpeakerEmbedding& EmbeddingStore::at(std::string_view id) const {
  if (const auto* e = find(id)) return *e;
  throw ValidationError("unknown speaker \"" + std::string(id) + "\"");
}

std::vector<const SpeakerEmbedding*> EmbeddingStore::all() const {
  std::vector<const SpeakerEmbedding*> out;
  out.reserve(by_id_.size());
  for (const auto& [id, e] : by_id_) out.push_back(&e);
  return out;
}

EmbeddingStore parse_embeddings(std::string_view jsonl) {
  EmbeddingStore store;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    std::size_t nl = jsonl.find('\n', pos);
    if (nl == std::string_view::npos) nl = jsonl.size();
    const auto line = jsonl.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      SpeakerEmbedding e;
      e.speaker_id = j.at("speaker_id").get<std::string>();
      e.meta.gender = parse_gender(j.value("gender", ""));
      e.meta.country = j.value("country", "");
      e.meta.accent = j.value("accent", "");
      const auto& v = j.at("vector");
      if (!v.is_array()) throw Error("\"vector\" must be an array");
      e.vector.reserve(v.size());
      for (const auto& x : v) {
        if (!x.is_number()) throw ValidationError("speaker " + e.speaker_id + ": non-finite component");
        e.vector.push_back(x.get<double>());
      }
      store.add(std::move(e));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("malformed embedding record: ") + e.what(), line_no);
    } catch (const Error& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return store;
}

EmbeddingStore import_embeddings(const std::filesystem::path& path) {
  return parse_embeddings(read_file(path));
}

nlohmann::ordered_json to_json(const SpeakerEmbedding& e) {
  return {{"speaker_id", e.speaker_id},
          {"gender", std::string(to_string(e.meta.gender))},
          {"country", e.meta.country},
          {"accent", e.meta.accent},
          {"vector", e.vector}};
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ValidationError("embedding dimensions differ");
  const double c = simd::dot(a, b);
  return std::fmax(-1.0, std::fmin(1.0, c));
}

double cosine_similarity(const SpeakerEmbedding& a, const SpeakerEmbedding& b) {
  return cosine_similarity(a.vector, b.vector);
}

}  // namespace afro::speaker
