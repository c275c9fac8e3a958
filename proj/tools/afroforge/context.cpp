#include "context.hpp"

#include <algorithm>
#include <iostream>
#include <set>
#include <thread>

#include "afro/util.hpp"

namespace afro::cli {
namespace {

const std::set<std::string> kStages = {"ingest", "normalize-text", "normalize_text", "preprocess", "enhance",
                                       "split",  "balance",        "embed",          "interpolate", "eval",
                                       "serve"};
const std::set<std::string> kPathKeys = {"manifest", "registry", "rules", "output_dir", "embeddings", "tasks",
                                         "log",      "static_dir", "refs", "hyps",      "trials",     "ratings",
                                         "votes"};

void merge_resolved(nlohmann::json& into, const nlohmann::json& from, const fs::path& base) {
  for (const auto& [k, v] : from.items()) {
    if (v.is_object() && kStages.count(k)) continue;
    if (kPathKeys.count(k) && v.is_string() && !base.empty() && fs::path(v.get<std::string>()).is_relative())
      into[k] = (base / v.get<std::string>()).lexically_normal().generic_string();
    else
      into[k] = v;
  }
}

}  // namespace

Settings Settings::load(const std::optional<fs::path>& config, const std::string& stage) {
  Settings s;
  if (!config) return s;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(*config));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + config->string() + ": " + e.what());
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (!j.is_object()) throw ConfigError("config " + config->string() + " must be a JSON object");
  const fs::path base = config->parent_path();
  merge_resolved(s.j_, j, base);
  std::string alt = stage;
  std::replace(alt.begin(), alt.end(), '-', '_');
  for (const auto& name : {stage, alt})
    if (j.contains(name) && j[name].is_object()) merge_resolved(s.j_, j[name], base);
  return s;
}

std::string Settings::flag(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

fs::path Settings::existing_path(const std::string& key) const {
  const fs::path p = require<std::string>(key);
  if (!fs::exists(p)) throw ConfigError("config field \"" + key + "\": " + p.string() + " does not exist");
  return p;
}

std::optional<std::uint64_t> Settings::seed() const {
  if (!has("seed")) return std::nullopt;
  return get<std::uint64_t>("seed", 0);
}

unsigned Settings::workers() const {
  const int w = get<int>("workers", 0);
  if (w < 0) throw ConfigError("workers must be >= 0");
  return w > 0 ? static_cast<unsigned>(w) : std::max(1u, std::thread::hardware_concurrency());
}

std::string Settings::hash() const {
  nlohmann::json canon = j_;
  canon.erase("workers");  // parallelism never changes outputs
  return sha256_hex(canon.dump());
}

StageRun::StageRun(std::string stage, const Settings& settings, bool owns_dir)
    : stage_(std::move(stage)), config_hash_(settings.hash()), seed_(settings.seed()), out_(settings.output_dir()) {
  dir_ = out_ / stage_;
  if (owns_dir) {
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
}

void StageRun::input(const fs::path& p) { inputs_.push_back(p); }
void StageRun::output(const fs::path& p) { extra_outputs_.push_back(p); }

void StageRun::error(const std::string& context, const std::string& msg) {
  std::string line = "[" + stage_ + "] " + (context.empty() ? "" : context + ": ") + msg;
  std::cerr << "afroforge: " << line << "\n";
  errors_.push_back(std::move(line));
}

std::string StageRun::display(const fs::path& p) const {
  const fs::path abs = fs::absolute(p).lexically_normal();
  const fs::path out_abs = fs::absolute(out_).lexically_normal();
  const fs::path rel = abs.lexically_relative(out_abs);
  if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
  return p.generic_string();
}

int StageRun::finish() {
  nlohmann::ordered_json entry;
  entry["config_hash"] = config_hash_;
  entry["seed"] = seed_ ? nlohmann::ordered_json(*seed_) : nullptr;
  entry["status"] = errors_.empty() ? "ok" : "error";
  nlohmann::ordered_json ins = nlohmann::ordered_json::object();
  for (const auto& p : inputs_) ins[display(p)] = fs::is_regular_file(p) ? sha256_file(p) : "missing";
  entry["inputs"] = ins;

  std::vector<fs::path> files = extra_outputs_;
  if (fs::exists(dir_))
    for (const auto& e : fs::recursive_directory_iterator(dir_))
      if (e.is_regular_file()) files.push_back(e.path());
  std::vector<std::pair<std::string, fs::path>> named;
  for (const auto& f : files) named.emplace_back(display(f), f);
  std::sort(named.begin(), named.end());
  nlohmann::ordered_json outs = nlohmann::ordered_json::object();
  for (const auto& [name, f] : named) outs[name] = sha256_file(f);
  entry["outputs"] = outs;
  entry["errors"] = errors_;

  const fs::path manifest_path = out_ / "run_manifest.json";
  nlohmann::ordered_json run;
  if (fs::exists(manifest_path)) {
    try {
      run = nlohmann::ordered_json::parse(read_file(manifest_path));
    } catch (const nlohmann::json::exception&) {
      run = nullptr;
    }
  }
  if (!run.is_object() || !run.contains("stages") || !run["stages"].is_object())
    run = {{"tool", "afroforge"}, {"stages", nlohmann::ordered_json::object()}};
  run["stages"][stage_] = std::move(entry);
  write_json(manifest_path, run);
  return errors_.empty() ? 0 : 1;
}

Manifest rebased(const Manifest& m, const fs::path& new_base) {
  const fs::path base_abs = fs::absolute(new_base).lexically_normal();
  std::vector<UtteranceRecord> recs = m.records();
  for (auto& r : recs) {
    const fs::path abs = fs::absolute(m.audio_path(r)).lexically_normal();
    const fs::path rel = abs.lexically_relative(base_abs);
    r.audio_path = rel.empty() ? abs.generic_string() : rel.generic_string();
  }
  Manifest out(std::move(recs), m.source_uri());
  out.set_base_dir(new_base);
  return out;
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

}  // namespace afro::cli
