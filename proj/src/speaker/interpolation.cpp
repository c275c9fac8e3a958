#include <algorithm>
#include <cmath>
#include <set>

#include "afro/error.hpp"
#include "afro/simd/kernels.hpp"
#include "afro/speaker.hpp"

namespace afro::speaker {

void PersonaSpec::validate() const {
  if (sources.size() < 2 || sources.size() > 3)
    throw ValidationError("persona " + new_speaker_id + ": needs 2 or 3 sources, got " +
                          std::to_string(sources.size()));
  if (weights.size() != sources.size())
    throw ValidationError("persona " + new_speaker_id + ": one weight per source required");
  if (std::set<std::string>(sources.begin(), sources.end()).size() != sources.size())
    throw ValidationError("persona " + new_speaker_id + ": repeated source");
  double sum = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0)
      throw ValidationError("persona " + new_speaker_id + ": weights must be nonnegative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw ValidationError("persona " + new_speaker_id + ": weights sum to " + std::to_string(sum));
}

PersonaSpec pair_spec(std::string new_id, std::string s1, std::string s2, double alpha) {
  return {std::move(new_id), {std::move(s1), std::move(s2)}, {alpha, 1.0 - alpha}};
}

SpeakerEmbedding interpolate(const PersonaSpec& spec, const EmbeddingStore& store,
                             const InterpolationOptions& opts) {
  spec.validate();
  std::vector<const SpeakerEmbedding*> src;
  for (const auto& id : spec.sources) {
    const auto* e = store.find(id);
    if (!e) throw ValidationError("persona " + spec.new_speaker_id + ": unknown source \"" + id + "\"");
    src.push_back(e);
  }
  if (!opts.allow_cross_group) {
    for (const auto* e : src)
      if (e->meta != src.front()->meta)
        throw ValidationError("persona " + spec.new_speaker_id +
                              ": sources differ in gender, country or accent (" +
                              src.front()->speaker_id + " vs " + e->speaker_id + ")");
  }

  SpeakerEmbedding out;
  out.speaker_id = spec.new_speaker_id;
  out.meta = src.front()->meta;
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (spec.weights[i] == 1.0) {
      out.vector = src[i]->vector;
      return out;
    }
  }
  out.vector.assign(kEmbeddingDim, 0.0);
  for (std::size_t i = 0; i < src.size(); ++i) simd::axpy(spec.weights[i], src[i]->vector, out.vector);
  const double norm = l2_norm(out.vector);
  if (norm < 1e-12)
    throw ValidationError("persona " + spec.new_speaker_id + ": blend cancels to the zero vector");
  for (double& x : out.vector) x /= norm;
  return out;
}

nlohmann::ordered_json to_json(const Persona& p) {
  auto j = to_json(p.embedding);
  j["sources"] = p.spec.sources;
  j["weights"] = p.spec.weights;
  j["renormalized"] = true;
  return j;
}

std::vector<Persona> generate_personas(const EmbeddingStore& store, std::size_t max_sources,
                                       double alpha, std::optional<std::size_t> cap) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
  if (max_sources < 2) return {};
  std::map<SpeakerMeta, std::vector<std::string>> groups;
  for (const auto* e : store.all()) groups[e->meta].push_back(e->speaker_id);  // ids arrive sorted

  std::vector<Persona> out;
  const std::size_t limit = cap.value_or(static_cast<std::size_t>(-1));
  auto emit = [&](PersonaSpec spec) {
    if (out.size() >= limit) return false;
    auto emb = interpolate(spec, store);
    out.push_back({std::move(spec), std::move(emb)});
    return true;
  };
  for (const auto& [meta, ids] : groups) {
    const std::size_t n = ids.size();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (!emit(pair_spec("blend::" + ids[i] + "+" + ids[j], ids[i], ids[j], alpha))) return out;
    if (max_sources < 3) continue;
    const double third = 1.0 / 3.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        for (std::size_t k = j + 1; k < n; ++k) {
          PersonaSpec spec{"blend::" + ids[i] + "+" + ids[j] + "+" + ids[k],
                           {ids[i], ids[j], ids[k]},
                           {third, third, 1.0 - 2.0 * third}};
          if (!emit(std::move(spec))) return out;
        }
  }
  return out;
}

}  // namespace afro::speaker
