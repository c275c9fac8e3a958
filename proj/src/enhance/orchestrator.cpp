#include <atomic>
#include <thread>

#include "afro/enhance.hpp"
#include "afro/error.hpp"

namespace afro::enhance {
namespace fs = std::filesystem;

namespace {

void check_id_is_dirname(const std::string& id) {
  if (id.empty() || id == "." || id == ".." || id.find_first_of("/\\") != std::string::npos)
    throw ValidationError("utterance_id \"" + id + "\" cannot be used as a directory name");
}

std::string path_string(const fs::path& p, const fs::path& base) {
  return base.empty() ? p.generic_string() : p.lexically_relative(base).generic_string();
}

}  // namespace

nlohmann::ordered_json EnhancementCandidateSet::to_json(const fs::path& relative_to) const {
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  for (const auto& c : candidates) {
    nlohmann::ordered_json e;
    e["label"] = c.label;
    e["audio"] = c.audio ? nlohmann::ordered_json(path_string(*c.audio, relative_to)) : nullptr;
    e["predicted_mos"] = c.predicted_mos ? nlohmann::ordered_json(*c.predicted_mos) : nullptr;
    if (!c.note.empty()) e["note"] = c.note;
    list.push_back(std::move(e));
  }
  return {{"utterance_id", utterance_id}, {"candidates", list}};
}

EnhancementCandidateSet produce_candidates(const UtteranceRecord& u, const fs::path& source_audio,
                                           const AdapterRegistry& registry, const fs::path& out_dir) {
  check_id_is_dirname(u.utterance_id);
  const auto& denoiser = registry.require(AdapterKind::denoiser);
  const auto& restorer = registry.require(AdapterKind::restorer);

  EnhancementCandidateSet set;
  set.utterance_id = u.utterance_id;
  for (std::size_t i = 0; i < kCandidateLabels.size(); ++i) set.candidates[i].label = kCandidateLabels[i];

  const AudioBuffer source = read_wav(source_audio);
  const fs::path dir = out_dir / u.utterance_id;
  AudioBuffer denoised;
  try {
    denoised = run_audio(denoiser, source);
  } catch (const AdapterTimeout& e) {
    throw AdapterTimeout("denoiser " + denoiser.name + " on " + u.utterance_id + ": " + e.what());
  } catch (const Error& e) {
    throw AdapterError("denoiser " + denoiser.name + " on " + u.utterance_id + ": " + e.what());
  }
  const fs::path denoised_path = dir / "denoised.wav";
  write_wav(denoised_path, denoised);
  set.candidates[0].audio = denoised_path;

  for (int mode = 0; mode < 3; ++mode) {
    auto& c = set.candidates[static_cast<std::size_t>(mode) + 1];
    try {
      const AudioBuffer restored = run_audio(restorer, denoised, mode);
      const fs::path p = dir / (c.label + ".wav");
      write_wav(p, restored);
      c.audio = p;
    } catch (const Error& e) {
      c.note = e.what();
    }
  }
  return set;
}

EnhancementCandidateSet score_candidates(EnhancementCandidateSet c, const EnhancerAdapter& q) {
  bool any = false;
  for (auto& cand : c.candidates) {
    if (!cand.present()) continue;
    any = true;
    try {
      cand.predicted_mos = run_score(q, read_wav(*cand.audio));
    } catch (const Error& e) {
      cand.predicted_mos.reset();
      cand.note = std::string("score: ") + e.what();
    }
  }
  if (!any) throw ValidationError("utterance " + c.utterance_id + " has no candidates to score");
  return c;
}

Selection select_best(const EnhancementCandidateSet& c) {
  const Candidate* best = nullptr;
  for (const auto& cand : c.candidates) {
    if (!cand.present() || !cand.predicted_mos) continue;
    if (!best || *cand.predicted_mos > *best->predicted_mos) best = &cand;
  }
  if (!best) throw ValidationError("utterance " + c.utterance_id + " has no scored candidate");
  return {best->label, *best->audio, *best->predicted_mos};
}

std::size_t EnhanceRun::failures() const {
  std::size_t n = 0;
  for (const auto& o : outcomes) n += !o.error.empty();
  return n;
}

nlohmann::ordered_json EnhanceRun::report(const fs::path& out_dir) const {
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  for (const auto& o : outcomes) {
    nlohmann::ordered_json e;
    e["utterance_id"] = o.utterance_id;
    e["selected"] = o.selection ? nlohmann::ordered_json(o.selection->label) : nullptr;
    if (o.candidates) e["candidates"] = o.candidates->to_json(out_dir)["candidates"];
    if (!o.error.empty()) e["error"] = o.error;
    list.push_back(std::move(e));
  }
  return {{"utterances", list}, {"failures", failures()}};
}

EnhanceRun enhance_manifest(const Manifest& m, const AdapterRegistry& registry, const fs::path& out_dir,
                            unsigned workers) {
  registry.require(AdapterKind::denoiser);
  registry.require(AdapterKind::restorer);
  const auto& estimator = registry.require(AdapterKind::quality_estimator);

  const auto& recs = m.records();
  EnhanceRun run;
  run.outcomes.resize(recs.size());
  std::vector<std::optional<UtteranceRecord>> selected(recs.size());

  auto one = [&](std::size_t i) {
    auto& o = run.outcomes[i];
    o.utterance_id = recs[i].utterance_id;
    try {
      o.candidates = score_candidates(produce_candidates(recs[i], m.audio_path(recs[i]), registry, out_dir),
                                      estimator);
      o.selection = select_best(*o.candidates);
      const AudioBuffer best = read_wav(o.selection->audio);
      UtteranceRecord r = recs[i];
      r.audio_path = path_string(o.selection->audio, out_dir);
      r.duration_s = best.duration_s();
      r.sample_rate_hz = best.sample_rate_hz;
      selected[i] = std::move(r);
    } catch (const std::exception& e) {
      o.error = e.what();
    }
  };

  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(1, recs.size()))));
  std::atomic<std::size_t> next{0};
  auto drain = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < recs.size();) one(i);
  };
  if (workers == 1) {
    drain();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(drain);
    for (auto& t : pool) t.join();
  }

  std::vector<UtteranceRecord> kept;
  for (auto& r : selected)
    if (r) kept.push_back(std::move(*r));
  run.enhanced = Manifest(std::move(kept), m.source_uri());
  run.enhanced.set_base_dir(out_dir);
  return run;
}

}  // namespace afro::enhance
