#include "stages.hpp"

#include <atomic>
#include <iostream>
#include <map>
#include <thread>

#include "afro/dsp.hpp"
#include "afro/enhance.hpp"
#include "afro/error.hpp"
#include "afro/speaker.hpp"
#include "afro/split.hpp"
#include "afro/text_norm.hpp"
#include "afro/util.hpp"

namespace afro::cli {
namespace {

Manifest input_manifest(const Settings& s, StageRun& run) {
  const fs::path p = s.existing_path("manifest");
  run.input(p);
  return load_manifest(p);
}

void write_stage_manifest(const fs::path& path, const Manifest& m) {
  write_manifest(path, rebased(m, path.parent_path()));
}

// Calls fn(i) for i in [0, n) on a pool; fn must only touch slot i.
template <class Fn>
void parallel_for(std::size_t n, unsigned workers, Fn fn) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  std::atomic<std::size_t> next{0};
  auto drain = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) fn(i);
  };
  if (workers == 1) return drain();
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(drain);
  for (auto& t : pool) t.join();
}

text::NormalizationRules rules_for(const Settings& s, StageRun* run) {
  if (!s.has("rules")) return text::NormalizationRules::defaults();
  const fs::path p = s.existing_path("rules");
  if (run) run->input(p);
  return text::load_rules(p);
}

}  // namespace

int stage_ingest(const Settings& s) {
  StageRun run("ingest", s);
  return run.execute([&] {
    const Manifest m = input_manifest(s, run);
    const bool check_audio = s.get<bool>("check_audio", true);
    const bool filter = s.get<bool>("filter_eligibility", true);

    std::vector<AudioCheck> checks;
    if (check_audio) checks = validate_audio(m, s.workers());
    std::vector<UtteranceRecord> kept;
    nlohmann::ordered_json rejected = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < m.size(); ++i) {
      const auto& r = m.records()[i];
      std::string reason;
      if (check_audio && !checks[i].pass) reason = checks[i].reason;
      else if (filter) {
        const auto e = dsp::check_eligibility(r);
        if (e != dsp::Eligibility::eligible) reason = dsp::to_string(e);
      }
      if (reason.empty()) kept.push_back(r);
      else rejected.push_back({{"utterance_id", r.utterance_id}, {"reason", reason}});
    }
    Manifest out(std::move(kept), m.source_uri());
    out.set_base_dir(m.base_dir());
    write_stage_manifest(run.dir() / "manifest.jsonl", out);
    std::string rej;
    for (const auto& r : rejected) rej += r.dump() + "\n";
    write_file_atomic(run.dir() / "rejected.jsonl", rej);
    const auto stats = compute_stats(out);
    write_json(run.dir() / "stats.json", stats_json(stats));
    write_file_atomic(run.dir() / "stats.txt", stats_table(stats));
    std::cerr << "ingest: kept " << out.size() << " of " << m.size() << " utterances\n";
  });
}

int stage_normalize_text(const Settings& s, std::istream& in, std::ostream& out) {
  if (!s.has("manifest")) {
    // filter mode: one line in, one line out
    const auto rules = rules_for(s, nullptr);
    for (std::string line; std::getline(in, line);) out << text::normalize_text(line, rules) << "\n";
    return 0;
  }
  StageRun run("normalize-text", s);
  return run.execute([&] {
    const auto rules = rules_for(s, &run);
    const Manifest m = input_manifest(s, run);
    std::vector<UtteranceRecord> recs = m.records();
    for (auto& r : recs) r.text = text::normalize_text(r.text, rules);
    Manifest outm(std::move(recs), m.source_uri());
    outm.set_base_dir(m.base_dir());
    write_stage_manifest(run.dir() / "manifest.jsonl", outm);
  });
}

int stage_preprocess(const Settings& s) {
  dsp::VadConfig vad;
  vad.frame_ms = s.get<int>("frame_ms", vad.frame_ms);
  vad.aggressiveness = s.get<int>("vad_aggressiveness", vad.aggressiveness);
  vad.max_pause_ms = s.get<int>("max_pause_ms", vad.max_pause_ms);
  try {
    vad.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  const double target = s.get<double>("target_dbfs", dsp::kDefaultTargetDbfs);
  const int rate = s.get<int>("resample_hz", 16000);
  if (rate <= 0) throw ConfigError("resample_hz must be positive");

  StageRun run("preprocess", s);
  return run.execute([&] {
    const Manifest m = input_manifest(s, run);
    const auto& recs = m.records();
    std::vector<std::optional<UtteranceRecord>> done(recs.size());
    std::vector<nlohmann::ordered_json> notes(recs.size());
    std::vector<std::string> errors(recs.size());
    fs::create_directories(run.dir() / "wav");

    parallel_for(recs.size(), s.workers(), [&](std::size_t i) {
      const auto& r = recs[i];
      try {
        const AudioBuffer in = read_wav(m.audio_path(r));
        const auto norm = dsp::rms_normalize(in, target);
        const auto trimmed = dsp::trim_pauses(norm.audio, vad);
        const AudioBuffer out = dsp::resample(trimmed.audio, rate);
        UtteranceRecord o = r;
        o.audio_path = "wav/" + r.utterance_id + ".wav";
        o.duration_s = out.duration_s();
        o.sample_rate_hz = out.sample_rate_hz;
        validate_record(o);
        write_wav(run.dir() / o.audio_path, out);
        notes[i] = {{"utterance_id", r.utterance_id},
                    {"gain", norm.gain},
                    {"clipped", norm.clipped},
                    {"removed_s", static_cast<double>(trimmed.removed_samples) / in.sample_rate_hz},
                    {"duration_in_s", in.duration_s()},
                    {"duration_out_s", out.duration_s()}};
        done[i] = std::move(o);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    });

    std::vector<UtteranceRecord> kept;
    nlohmann::ordered_json report = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < recs.size(); ++i) {
      if (!errors[i].empty()) {
        run.error(recs[i].utterance_id, errors[i]);
        continue;
      }
      kept.push_back(std::move(*done[i]));
      report.push_back(std::move(notes[i]));
    }
    Manifest out(std::move(kept), m.source_uri());
    out.set_base_dir(run.dir());
    write_manifest(run.dir() / "manifest.jsonl", out);
    write_json(run.dir() / "report.json",
               {{"target_dbfs", target},
                {"vad", {{"frame_ms", vad.frame_ms}, {"aggressiveness", vad.aggressiveness}, {"max_pause_ms", vad.max_pause_ms}}},
                {"resample_hz", rate},
                {"utterances", report}});
  });
}

int stage_enhance(const Settings& s) {
  const fs::path reg_path = s.existing_path("registry");
  enhance::AdapterRegistry reg;
  try {
    reg = enhance::load_registry(reg_path);
  } catch (const ValidationError& e) {
    throw ConfigError(reg_path.string() + ": " + e.what());
  }
  StageRun run("enhance", s);
  return run.execute([&] {
    run.input(reg_path);
    const Manifest m = input_manifest(s, run);
    const auto result = enhance::enhance_manifest(m, reg, run.dir(), s.workers());
    for (const auto& o : result.outcomes)
      if (!o.error.empty()) run.error(o.utterance_id, o.error);
    write_manifest(run.dir() / "manifest.jsonl", result.enhanced);
    write_json(run.dir() / "report.json", result.report(run.dir()));
  });
}

int stage_split(const Settings& s) {
  split::SplitConfig cfg;
  const auto seed = s.seed();
  if (!seed) throw ConfigError("missing config field \"seed\" (split needs an explicit seed; pass --seed)");
  cfg.seed = *seed;
  cfg.test_min_group_minutes = s.get<double>("test_min_group_minutes", cfg.test_min_group_minutes);
  cfg.test_size = s.get<std::size_t>("test_size", cfg.test_size);
  cfg.dev_size = s.get<std::size_t>("dev_size", cfg.dev_size);

  StageRun run("split", s);
  return run.execute([&] {
    const Manifest m = input_manifest(s, run);
    try {
      const auto parts = split::make_splits(m, cfg);
      write_stage_manifest(run.dir() / "train.jsonl", parts.train);
      write_stage_manifest(run.dir() / "dev.jsonl", parts.dev);
      write_stage_manifest(run.dir() / "test.jsonl", parts.test);
      auto report = parts.report.to_json();
      report["seed"] = cfg.seed;
      write_json(run.dir() / "split_report.json", report);
    } catch (const ValidationError& e) {
      run.error("", e.what());
    }
  });
}

int stage_balance(const Settings& s) {
  split::BalanceConfig cfg;
  cfg.target_minutes_per_speaker = s.get<double>("target_minutes_per_speaker", cfg.target_minutes_per_speaker);
  if (!(cfg.target_minutes_per_speaker > 0)) throw ConfigError("target_minutes_per_speaker must be > 0");
  StageRun run("balance", s);
  return run.execute([&] {
    const Manifest m = input_manifest(s, run);
    try {
      const auto b = split::balance_duplicate(m, cfg);
      write_stage_manifest(run.dir() / "manifest.jsonl", b.manifest);
      auto report = b.report.to_json();
      report["target_minutes_per_speaker"] = cfg.target_minutes_per_speaker;
      write_json(run.dir() / "balance_report.json", report);
    } catch (const ValidationError& e) {
      run.error("", e.what());
    }
  });
}

int stage_embed(const Settings& s) {
  const fs::path reg_path = s.existing_path("registry");
  enhance::AdapterRegistry reg;
  try {
    reg = enhance::load_registry(reg_path);
    reg.require(enhance::AdapterKind::embedder);
  } catch (const ValidationError& e) {
    throw ConfigError(reg_path.string() + ": " + e.what());
  }
  const auto& embedder = reg.require(enhance::AdapterKind::embedder);
  StageRun run("embed", s);
  return run.execute([&] {
    run.input(reg_path);
    const Manifest m = input_manifest(s, run);
    const auto& recs = m.records();
    std::vector<std::vector<double>> vecs(recs.size());
    std::vector<std::string> errors(recs.size());
    parallel_for(recs.size(), s.workers(), [&](std::size_t i) {
      try {
        vecs[i] = enhance::run_embedder(embedder, read_wav(m.audio_path(recs[i])));
        if (vecs[i].size() != speaker::kEmbeddingDim)
          throw AdapterError("embedder returned " + std::to_string(vecs[i].size()) + " dimensions, expected " +
                             std::to_string(speaker::kEmbeddingDim));
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    });

    // Mean of the utterance vectors per speaker, in manifest order.
    std::map<std::string, speaker::SpeakerEmbedding> acc;
    for (std::size_t i = 0; i < recs.size(); ++i) {
      if (!errors[i].empty()) {
        run.error(recs[i].utterance_id, errors[i]);
        continue;
      }
      auto [it, fresh] = acc.try_emplace(recs[i].speaker_id);
      auto& e = it->second;
      if (fresh) {
        e.speaker_id = recs[i].speaker_id;
        e.vector.assign(speaker::kEmbeddingDim, 0.0);
        e.meta = {recs[i].gender, recs[i].country, recs[i].accent};
      }
      for (std::size_t k = 0; k < speaker::kEmbeddingDim; ++k) e.vector[k] += vecs[i][k];
    }
    speaker::EmbeddingStore store;
    for (auto& [id, e] : acc) {
      try {
        store.add(std::move(e));
      } catch (const ValidationError& ex) {
        run.error(id, ex.what());
      }
    }
    std::string out;
    for (const auto* e : store.all()) out += speaker::to_json(*e).dump() + "\n";
    write_file_atomic(run.dir() / "embeddings.jsonl", out);
  });
}

int stage_interpolate(const Settings& s) {
  const fs::path emb_path = s.existing_path("embeddings");
  const auto max_sources = s.get<std::size_t>("max_sources", 3);
  const double alpha = s.get<double>("alpha", 0.5);
  std::optional<std::size_t> cap;
  if (s.has("max_personas")) cap = s.get<std::size_t>("max_personas", 0);
  speaker::InterpolationOptions opts;
  opts.allow_cross_group = s.get<bool>("allow_cross_group", false);

  StageRun run("interpolate", s);
  return run.execute([&] {
    run.input(emb_path);
    const auto store = speaker::import_embeddings(emb_path);
    std::vector<speaker::Persona> personas;
    try {
      if (s.has("sources")) {
        // one explicit blend
        speaker::PersonaSpec spec;
        spec.new_speaker_id = s.require<std::string>("new_speaker_id");
        spec.sources = s.get<std::vector<std::string>>("sources", {});
        spec.weights = s.get<std::vector<double>>("weights", {});
        if (spec.weights.empty() && spec.sources.size() == 2) spec.weights = {alpha, 1.0 - alpha};
        personas.push_back({spec, speaker::interpolate(spec, store, opts)});
      } else {
        if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
        personas = speaker::generate_personas(store, max_sources, alpha, cap);
      }
    } catch (const ValidationError& e) {
      run.error("", e.what());
    }
    std::string out;
    for (const auto& p : personas) out += speaker::to_json(p).dump() + "\n";
    write_file_atomic(run.dir() / "personas.jsonl", out);
    std::cerr << "interpolate: " << personas.size() << " personas\n";
  });
}

}  // namespace afro::cli
