#include <cmath>
#include <cstdlib>
#include <set>

#include "afro/enhance.hpp"
#include "afro/error.hpp"
#include "afro/mock_adapters.hpp"
#include "afro/util.hpp"
#include "transport.hpp"

namespace afro::enhance {
namespace {

constexpr std::string_view kBuiltin = "builtin:";
constexpr std::string_view kExec = "exec:";
constexpr std::string_view kHttp = "http://";

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }

nlohmann::json parse_reply(const EnhancerAdapter& a, const std::vector<std::uint8_t>& bytes) {
  try {
    return nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw AdapterError(a.name + ": malformed JSON reply: " + e.what());
  }
}

}  // namespace

const char* to_string(AdapterKind k) {
  switch (k) {
    case AdapterKind::denoiser: return "denoiser";
    case AdapterKind::restorer: return "restorer";
    case AdapterKind::quality_estimator: return "quality_estimator";
    case AdapterKind::asr: return "asr";
    case AdapterKind::embedder: return "embedder";
  }
  return "?";
}

AdapterKind parse_adapter_kind(std::string_view s) {
  for (auto k : {AdapterKind::denoiser, AdapterKind::restorer, AdapterKind::quality_estimator,
                 AdapterKind::asr, AdapterKind::embedder})
    if (s == to_string(k)) return k;
  throw ValidationError("unknown adapter kind \"" + std::string(s) + "\"");
}

void EnhancerAdapter::validate() const {
  if (name.empty()) throw ValidationError("adapter name is empty");
  if (!(timeout_s > 0.0) || !std::isfinite(timeout_s))
    throw ValidationError("adapter " + name + ": timeout_s must be positive");
  if (!starts_with(endpoint, kBuiltin) && !starts_with(endpoint, kExec) && !starts_with(endpoint, kHttp))
    throw ValidationError("adapter " + name + ": endpoint must start with builtin:, exec: or http://");
  if (starts_with(endpoint, kExec) && split_whitespace(endpoint.substr(kExec.size())).empty())
    throw ValidationError("adapter " + name + ": empty exec command");
}

AdapterRegistry::AdapterRegistry(std::vector<EnhancerAdapter> adapters) : adapters_(std::move(adapters)) {
  std::set<std::string> seen;
  for (const auto& a : adapters_) {
    a.validate();
    if (!seen.insert(a.name).second) throw ValidationError("duplicate adapter name \"" + a.name + "\"");
  }
}

const EnhancerAdapter* AdapterRegistry::find(std::string_view name) const {
  for (const auto& a : adapters_)
    if (a.name == name) return &a;
  return nullptr;
}

const EnhancerAdapter* AdapterRegistry::first_of(AdapterKind kind) const {
  for (const auto& a : adapters_)
    if (a.kind == kind) return &a;
  return nullptr;
}

const EnhancerAdapter& AdapterRegistry::require(AdapterKind kind) const {
  if (const auto* a = first_of(kind)) return *a;
  throw ValidationError(std::string("registry has no ") + to_string(kind) + " adapter");
}

void AdapterRegistry::override_timeout(double seconds) {
  if (!(seconds > 0.0) || !std::isfinite(seconds))
    throw ValidationError("adapter timeout override must be positive");
  for (auto& a : adapters_) a.timeout_s = seconds;
}

AdapterRegistry parse_registry(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("adapter registry: ") + e.what());
  }
  const nlohmann::json& list = j.is_object() && j.contains("adapters") ? j.at("adapters") : j;
  if (!list.is_array()) throw ValidationError("adapter registry: expected an array of adapters");
  std::vector<EnhancerAdapter> adapters;
  for (const auto& e : list) {
    try {
      EnhancerAdapter a;
      a.name = e.at("name").get<std::string>();
      a.kind = parse_adapter_kind(e.at("kind").get<std::string>());
      a.endpoint = e.at("endpoint").get<std::string>();
      if (e.contains("timeout_s")) a.timeout_s = e.at("timeout_s").get<double>();
      adapters.push_back(std::move(a));
    } catch (const nlohmann::json::exception& ex) {
      throw ValidationError(std::string("adapter registry entry: ") + ex.what());
    }
  }
  AdapterRegistry reg(std::move(adapters));
  if (const char* env = std::getenv(kTimeoutEnv); env && *env) {
    char* end = nullptr;
    const double v = std::strtod(env, &end);
    if (end == env || *end != '\0') throw ValidationError(std::string(kTimeoutEnv) + " is not a number: " + env);
    reg.override_timeout(v);
  }
  return reg;
}

AdapterRegistry load_registry(const std::filesystem::path& path) { return parse_registry(read_file(path)); }

std::vector<std::uint8_t> invoke(const EnhancerAdapter& a, std::span<const std::uint8_t> input, int mode) {
  const std::string_view ep = a.endpoint;
  try {
    if (starts_with(ep, kBuiltin)) return mock::run_builtin(ep.substr(kBuiltin.size()), input, mode);
    if (starts_with(ep, kExec)) {
      auto argv = split_whitespace(ep.substr(kExec.size()));
      bool substituted = false;
      for (auto& arg : argv) {
        if (const auto pos = arg.find("{mode}"); pos != std::string::npos) {
          arg.replace(pos, 6, std::to_string(mode));
          substituted = true;
        }
      }
      if (mode >= 0 && !substituted) {
        argv.push_back("--mode");
        argv.push_back(std::to_string(mode));
      }
      return detail::run_subprocess(argv, input, a.timeout_s);
    }
    std::string url(ep);
    if (mode >= 0) url += (url.find('?') == std::string::npos ? "?mode=" : "&mode=") + std::to_string(mode);
    return detail::http_post(url, input, "audio/wav", a.timeout_s);
  } catch (const AdapterError&) {
    throw;
  } catch (const std::exception& e) {
    throw AdapterError(a.name + ": " + e.what());
  }
}

AudioBuffer run_audio(const EnhancerAdapter& a, const AudioBuffer& in, int mode) {
  const auto reply = invoke(a, encode_wav(in), mode);
  try {
    return decode_wav(reply);
  } catch (const Error& e) {
    throw AdapterError(a.name + ": reply is not a WAV: " + e.what());
  }
}

double run_score(const EnhancerAdapter& a, const AudioBuffer& in) {
  const auto j = parse_reply(a, invoke(a, encode_wav(in)));
  if (!j.is_object() || !j.contains("score") || !j["score"].is_number())
    throw AdapterError(a.name + ": reply lacks a numeric \"score\"");
  const double s = j["score"].get<double>();
  if (!std::isfinite(s)) throw AdapterError(a.name + ": non-finite score");
  return s;
}

std::vector<double> run_embedder(const EnhancerAdapter& a, const AudioBuffer& in) {
  const auto j = parse_reply(a, invoke(a, encode_wav(in)));
  if (!j.is_object() || !j.contains("vector") || !j["vector"].is_array())
    throw AdapterError(a.name + ": reply lacks a \"vector\" array");
  try {
    return j["vector"].get<std::vector<double>>();
  } catch (const nlohmann::json::exception&) {
    throw AdapterError(a.name + ": \"vector\" must hold numbers");
  }
}

std::string run_asr(const EnhancerAdapter& a, const AudioBuffer& in) {
  const auto j = parse_reply(a, invoke(a, encode_wav(in)));
  if (!j.is_object() || !j.contains("text") || !j["text"].is_string())
    throw AdapterError(a.name + ": reply lacks a \"text\" string");
  return j["text"].get<std::string>();
}

}  // namespace afro::enhance
