#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "afro/corpus.hpp"
#include "json.hpp"

namespace afro::cli {

namespace fs = std::filesystem;

// Raised for bad or missing configuration; maps to exit status 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Effective settings for one stage: top-level config keys, then the
// stage's own section, then command-line overrides.
class Settings {
 public:
  static Settings load(const std::optional<fs::path>& config, const std::string& stage);

  void set(const std::string& key, nlohmann::json value) { j_[key] = std::move(value); }
  bool has(const std::string& key) const { return j_.contains(key) && !j_[key].is_null(); }

  template <class T>
  T get(const std::string& key, T fallback) const {
    if (!has(key)) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("config field \"" + key + "\" has the wrong type: " + j_.at(key).dump());
    }
  }
  template <class T>
  T require(const std::string& key) const {
    if (!has(key)) throw ConfigError("missing config field \"" + key + "\" (set it in the config or pass --" + flag(key) + ")");
    return get<T>(key, T{});
  }
  // Required path that must exist.
  fs::path existing_path(const std::string& key) const;
  std::optional<std::uint64_t> seed() const;
  unsigned workers() const;
  fs::path output_dir() const { return get<std::string>("output_dir", "afroforge-out"); }

  std::string hash() const;
  const nlohmann::json& json() const { return j_; }

  static std::string flag(std::string key);

 private:
  nlohmann::json j_ = nlohmann::json::object();
};

// Bookkeeping for one stage invocation; writes <out>/run_manifest.json.
class StageRun {
 public:
  // Clears <out>/<stage>/ unless `owns_dir` is false.
  StageRun(std::string stage, const Settings& settings, bool owns_dir = true);

  const fs::path& dir() const { return dir_; }
  const fs::path& out_dir() const { return out_; }

  void input(const fs::path& p);
  void output(const fs::path& p);  // only needed for files outside dir()
  void error(const std::string& context, const std::string& msg);
  std::size_t errors() const { return errors_.size(); }

  // Digests inputs and every file under dir(), writes the run manifest
  // entry and returns the exit status.
  int finish();

  // Runs body, turning anything but a ConfigError into a recorded stage
  // error, then finish().
  template <class F>
  int execute(F&& body) {
    try {
      body();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      error("", e.what());
    }
    return finish();
  }

 private:
  std::string display(const fs::path& p) const;

  std::string stage_;
  std::string config_hash_;
  std::optional<std::uint64_t> seed_;
  fs::path out_, dir_;
  std::vector<fs::path> inputs_, extra_outputs_;
  std::vector<std::string> errors_;
};

// Copy of m whose relative audio paths resolve from new_base.
Manifest rebased(const Manifest& m, const fs::path& new_base);
void write_json(const fs::path& path, const nlohmann::ordered_json& j);

}  // namespace afro::cli
