#include "cli.hpp"

#include <functional>
#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include "afro/enhance.hpp"
#include "stages.hpp"

namespace afro::cli {
namespace {

// Flag values that override config fields when given.
class Overrides {
 public:
  explicit Overrides(CLI::App* app) : app_(app) {}

  template <class T>
  Overrides& opt(const std::string& name, const std::string& key, const std::string& help) {
    auto value = std::make_shared<T>();
    CLI::Option* o = app_->add_option(name, *value, help);
    apply_.push_back([value, o, key](Settings& s) {
      if (o->count()) s.set(key, *value);
    });
    return *this;
  }

  // Comma-separated list stored as a JSON array.
  template <class T>
  Overrides& list(const std::string& name, const std::string& key, const std::string& help) {
    auto value = std::make_shared<std::string>();
    CLI::Option* o = app_->add_option(name, *value, help);
    apply_.push_back([value, o, key](Settings& s) {
      if (!o->count()) return;
      std::vector<T> items;
      for (const auto& item : split_csv(*value)) {
        if constexpr (std::is_same_v<T, double>) items.push_back(std::stod(item));
        else items.push_back(item);
      }
      s.set(key, items);
    });
    return *this;
  }

  Overrides& flag(const std::string& name, const std::string& key, bool value, const std::string& help) {
    CLI::Option* o = app_->add_flag(name, help);
    apply_.push_back([o, key, value](Settings& s) {
      if (o->count()) s.set(key, value);
    });
    return *this;
  }

  // Options every pipeline stage accepts.
  Overrides& common() {
    app_->add_option("--config", config_, "pipeline config (JSON)")->check(CLI::ExistingFile);
    return opt<std::string>("--out-dir", "output_dir", "output directory")
        .opt<std::string>("--manifest", "manifest", "input manifest (JSONL or CSV)")
        .opt<std::uint64_t>("--seed", "seed", "random seed")
        .opt<int>("--workers", "workers", "worker threads (0 = all cores)");
  }

  Settings settings(const std::string& stage) const {
    Settings s = Settings::load(config_.empty() ? std::nullopt : std::optional<fs::path>(config_), stage);
    for (const auto& f : apply_) f(s);
    return s;
  }

 private:
  CLI::App* app_;
  std::string config_;
  std::vector<std::function<void(Settings&)>> apply_;
};

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"afroforge: accented TTS corpus and evaluation toolchain"};
  app.require_subcommand(1);
  std::vector<std::pair<CLI::App*, std::unique_ptr<Overrides>>> subs;
  auto sub = [&](const std::string& name, const std::string& help) -> Overrides& {
    CLI::App* a = app.add_subcommand(name, help);
    subs.emplace_back(a, std::make_unique<Overrides>(a));
    return *subs.back().second;
  };

  sub("ingest", "validate a manifest, check audio, apply eligibility filters, write stats")
      .common()
      .flag("--no-audio-check", "check_audio", false, "skip opening the audio files")
      .flag("--keep-ineligible", "filter_eligibility", false, "do not drop over-long audio or text");
  sub("normalize-text", "normalize transcripts (stdin to stdout unless --manifest is given)")
      .common()
      .opt<std::string>("--rules", "rules", "rule tables (JSON)");
  sub("preprocess", "loudness normalization, pause trimming and resampling")
      .common()
      .opt<double>("--target-dbfs", "target_dbfs", "RMS target in dBFS")
      .opt<int>("--vad-aggr", "vad_aggressiveness", "VAD aggressiveness 0-3")
      .opt<int>("--max-pause-ms", "max_pause_ms", "longest pause kept")
      .opt<int>("--frame-ms", "frame_ms", "VAD frame length")
      .opt<int>("--resample", "resample_hz", "output sample rate");
  sub("enhance", "denoise, restore, score and keep the best candidate per utterance")
      .common()
      .opt<std::string>("--registry", "registry", "adapter registry (JSON)");
  sub("split", "train/dev/test partition")
      .common()
      .opt<std::size_t>("--test-size", "test_size", "test samples")
      .opt<std::size_t>("--dev-size", "dev_size", "dev samples")
      .opt<double>("--test-min-group-minutes", "test_min_group_minutes", "minimum (speaker, accent) minutes for test");
  sub("balance", "repeat short speakers up to the target duration")
      .common()
      .opt<double>("--target-minutes", "target_minutes_per_speaker", "per-speaker target");
  sub("embed", "speaker embeddings through the embedder adapter")
      .common()
      .opt<std::string>("--registry", "registry", "adapter registry (JSON)");
  sub("interpolate", "blend speaker embeddings into new personas")
      .common()
      .opt<std::string>("--embeddings", "embeddings", "speaker embeddings (JSONL)")
      .opt<std::size_t>("--max-sources", "max_sources", "2 or 3")
      .opt<double>("--alpha", "alpha", "pair weight")
      .opt<std::size_t>("--max-personas", "max_personas", "stop after this many")
      .flag("--allow-cross-group", "allow_cross_group", true, "blend across gender/country/accent")
      .list<std::string>("--sources", "sources", "explicit blend: speaker ids")
      .list<double>("--weights", "weights", "explicit blend: weights")
      .opt<std::string>("--new-id", "new_speaker_id", "explicit blend: persona id");

  CLI::App* eval = app.add_subcommand("eval", "objective and subjective metrics");
  eval->require_subcommand(1);
  std::vector<std::pair<CLI::App*, std::unique_ptr<Overrides>>> evals;
  auto metric = [&](const std::string& name, const std::string& help) -> Overrides& {
    CLI::App* a = eval->add_subcommand(name, help);
    evals.emplace_back(a, std::make_unique<Overrides>(a));
    return evals.back().second->common();
  };
  metric("wer", "word error rate").opt<std::string>("--refs", "refs", "references (JSONL)")
      .opt<std::string>("--hyps", "hyps", "hypotheses (JSONL)");
  metric("eer", "equal error rate").opt<std::string>("--trials", "trials", "scored trials (JSON)");
  metric("mos", "MOS with 95% CI per group")
      .opt<std::string>("--ratings", "ratings", "ratings (JSONL)")
      .opt<std::string>("--group-by", "group_by", "comma-separated attributes")
      .opt<std::string>("--votes", "votes", "preference votes per model (JSON)");
  metric("bootstrap", "bootstrap CI on a MOS difference")
      .opt<std::string>("--ratings", "ratings", "ratings (JSONL)")
      .opt<std::string>("--dimension", "dimension", "rating dimension")
      .opt<std::string>("--compare-by", "compare_by", "attribute holding a and b")
      .opt<std::string>("--a", "a", "first system")
      .opt<std::string>("--b", "b", "second system")
      .opt<std::size_t>("--resamples", "resamples", "bootstrap resamples");
  metric("cos", "cosine similarity between matching speakers")
      .opt<std::string>("--embeddings", "embeddings", "embeddings (JSONL)")
      .opt<std::string>("--against", "against", "embeddings to compare with (JSONL)");

  sub("serve", "listening-test HTTP service")
      .common()
      .opt<int>("--port", "port", "TCP port")
      .opt<std::string>("--host", "host", "bind address")
      .opt<std::string>("--tasks", "tasks", "rating tasks (JSONL)")
      .opt<std::string>("--log", "log", "append-only event log (JSONL)")
      .opt<std::string>("--static", "static_dir", "static assets for the rater UI");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    for (auto& [a, o] : evals)
      if (a->parsed()) return stage_eval(a->get_name(), o->settings("eval"), std::cout);
    for (auto& [a, o] : subs) {
      if (!a->parsed()) continue;
      const std::string name = a->get_name();
      const Settings s = o->settings(name);
      if (name == "ingest") return stage_ingest(s);
      if (name == "normalize-text") return stage_normalize_text(s, std::cin, std::cout);
      if (name == "preprocess") return stage_preprocess(s);
      if (name == "enhance") return stage_enhance(s);
      if (name == "split") return stage_split(s);
      if (name == "balance") return stage_balance(s);
      if (name == "embed") return stage_embed(s);
      if (name == "interpolate") return stage_interpolate(s);
      if (name == "serve") return stage_serve(s, std::cout);
    }
  } catch (const ConfigError& e) {
    std::cerr << "afroforge: config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "afroforge: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

int run(int argc, char** argv) { return run(std::vector<std::string>(argv, argv + argc)); }

}  // namespace afro::cli
