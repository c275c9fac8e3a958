#include <algorithm>
#include <cctype>
#include <set>

#include "afro/error.hpp"
#include "afro/service.hpp"
#include "afro/util.hpp"

namespace afro::service {
namespace {

constexpr std::string_view kDims[] = {"overall",      "naturalness",   "accentedness",
                                      "accent_match", "country_match", "gender_match"};

std::string str_field(const nlohmann::json& j, const char* key, bool required = true) {
  if (!j.contains(key)) {
    if (required) throw ValidationError(std::string("missing field \"") + key + "\"");
    return {};
  }
  if (!j.at(key).is_string()) throw ValidationError(std::string("field \"") + key + "\" must be a string");
  return j.at(key).get<std::string>();
}

bool valid_token(std::string_view s) {
  if (s.empty() || s.size() > 64) return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-' || c == '.';
  });
}

}  // namespace

const char* to_string(TaskKind k) {
  switch (k) {
    case TaskKind::mos: return "mos";
    case TaskKind::accent_match: return "accent_match";
    case TaskKind::preference: return "preference";
  }
  return "?";
}

TaskKind parse_task_kind(std::string_view s) {
  for (auto k : {TaskKind::mos, TaskKind::accent_match, TaskKind::preference})
    if (s == to_string(k)) return k;
  throw ValidationError("unknown task kind \"" + std::string(s) + "\"");
}

bool is_dimension(std::string_view d) { return std::find(std::begin(kDims), std::end(kDims), d) != std::end(kDims); }

void RatingTask::validate() const {
  if (task_id.empty()) throw ValidationError("task_id is empty");
  const std::string ctx = "task " + task_id + ": ";
  const std::size_t want = kind == TaskKind::preference ? 2 : 1;
  if (utterances.size() != want)
    throw ValidationError(ctx + to_string(kind) + " tasks need " + std::to_string(want) + " utterance(s), got " +
                          std::to_string(utterances.size()));
  if (dimensions.empty()) throw ValidationError(ctx + "dimensions must not be empty");
  std::set<std::string> seen;
  for (const auto& d : dimensions) {
    if (!is_dimension(d)) throw ValidationError(ctx + "unknown dimension \"" + d + "\"");
    if (!seen.insert(d).second) throw ValidationError(ctx + "dimension \"" + d + "\" listed twice");
  }
  for (const auto& u : utterances) {
    if (u.utterance_id.empty() || u.model.empty() || u.audio_path.empty())
      throw ValidationError(ctx + "utterances need utterance_id, model and audio_path");
    if (!is_iso_country(u.country)) throw ValidationError(ctx + "unknown country code \"" + u.country + "\"");
  }
  if (kind == TaskKind::preference) {
    if (utterances[0].model == utterances[1].model)
      throw ValidationError(ctx + "preference pair must come from two different models");
    if (utterances[0].text != utterances[1].text)
      throw ValidationError(ctx + "preference pair must share the same text");
  }
}

RatingTask task_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("task must be a JSON object");
  RatingTask t;
  t.task_id = str_field(j, "task_id");
  t.kind = parse_task_kind(str_field(j, "kind"));
  if (!j.contains("utterances") || !j["utterances"].is_array()) throw ValidationError("missing \"utterances\" array");
  for (const auto& u : j["utterances"]) {
    TaskUtterance x;
    x.utterance_id = str_field(u, "utterance_id");
    x.model = str_field(u, "model");
    x.text = str_field(u, "text", false);
    x.country = str_field(u, "country");
    x.accent = str_field(u, "accent", false);
    x.gender = parse_gender(str_field(u, "gender", false));
    x.audio_path = str_field(u, "audio_path");
    t.utterances.push_back(std::move(x));
  }
  if (!j.contains("dimensions") || !j["dimensions"].is_array()) throw ValidationError("missing \"dimensions\" array");
  for (const auto& d : j["dimensions"]) {
    if (!d.is_string()) throw ValidationError("dimensions must be strings");
    t.dimensions.push_back(d.get<std::string>());
  }
  t.validate();
  return t;
}

nlohmann::ordered_json to_json(const RatingTask& t) {
  nlohmann::ordered_json us = nlohmann::ordered_json::array();
  for (const auto& u : t.utterances)
    us.push_back({{"utterance_id", u.utterance_id}, {"model", u.model},       {"text", u.text},
                  {"country", u.country},           {"accent", u.accent},     {"gender", to_string(u.gender)},
                  {"audio_path", u.audio_path}});
  return {{"task_id", t.task_id}, {"kind", to_string(t.kind)}, {"utterances", us}, {"dimensions", t.dimensions}};
}

std::vector<RatingTask> parse_tasks(std::string_view jsonl) {
  std::vector<RatingTask> out;
  std::set<std::string> ids;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    const std::size_t nl = jsonl.find('\n', pos);
    std::string_view line = jsonl.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? jsonl.size() : nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      auto t = task_from_json(nlohmann::json::parse(line));
      if (!ids.insert(t.task_id).second) throw ValidationError("duplicate task_id \"" + t.task_id + "\"");
      out.push_back(std::move(t));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(e.what(), line_no);
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return out;
}

std::vector<RatingTask> load_tasks(const std::filesystem::path& path) { return parse_tasks(read_file(path)); }

std::string audio_key(std::string_view utterance_id) { return "a" + sha256_hex(utterance_id).substr(0, 16); }

nlohmann::ordered_json public_payload(const RatingTask& t) {
  nlohmann::ordered_json items = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < t.utterances.size(); ++i) {
    const auto& u = t.utterances[i];
    nlohmann::ordered_json item;
    if (t.kind == TaskKind::preference) item["side"] = i == 0 ? "left" : "right";
    item["audio"] = "/api/audio/" + audio_key(u.utterance_id);
    item["text"] = u.text;
    if (t.kind != TaskKind::preference)
      item["reference"] = {{"country", u.country}, {"accent", u.accent}, {"gender", to_string(u.gender)}};
    items.push_back(std::move(item));
  }
  return {{"task_id", t.task_id}, {"kind", to_string(t.kind)}, {"dimensions", t.dimensions}, {"items", items}};
}

RatingEvent event_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("rating must be a JSON object");
  RatingEvent e;
  e.task_id = str_field(j, "task_id");
  e.rater_id = str_field(j, "rater_id");
  if (j.contains("rater_meta")) {
    const auto& m = j["rater_meta"];
    if (!m.is_object()) throw ValidationError("rater_meta must be an object");
    e.rater_meta = {str_field(m, "country", false), str_field(m, "accent", false), str_field(m, "gender", false)};
  }
  if (j.contains("values")) {
    if (!j["values"].is_object()) throw ValidationError("values must be an object");
    for (const auto& [dim, v] : j["values"].items()) {
      if (!v.is_number_integer())
        throw ValidationError("value for " + dim + " must be an integer 1-5, got " + v.dump());
      const auto x = v.get<long long>();
      if (x < 1 || x > 5) throw ValidationError("value for " + dim + " out of range 1-5: " + std::to_string(x));
      e.values[dim] = static_cast<int>(x);
    }
  }
  if (j.contains("chosen_side") && !j["chosen_side"].is_null()) e.chosen_side = str_field(j, "chosen_side");
  e.timestamp = str_field(j, "timestamp", false);
  return e;
}

nlohmann::ordered_json to_json(const RatingEvent& e) {
  nlohmann::ordered_json j;
  j["task_id"] = e.task_id;
  j["rater_id"] = e.rater_id;
  j["rater_meta"] = {{"country", e.rater_meta.country}, {"accent", e.rater_meta.accent}, {"gender", e.rater_meta.gender}};
  nlohmann::ordered_json values = nlohmann::ordered_json::object();
  for (const auto& [d, v] : e.values) values[d] = v;
  j["values"] = values;
  if (e.chosen_side) j["chosen_side"] = *e.chosen_side;
  j["timestamp"] = e.timestamp;
  return j;
}

void validate_event(const RatingEvent& e, const RatingTask& t) {
  if (!valid_token(e.rater_id)) throw ValidationError("rater_id must be 1-64 characters of [A-Za-z0-9_.-]");
  const std::string ctx = "task " + t.task_id + ": ";
  if (t.kind == TaskKind::preference) {
    if (!e.chosen_side) throw ValidationError(ctx + "preference rating needs chosen_side");
    if (*e.chosen_side != "left" && *e.chosen_side != "right")
      throw ValidationError(ctx + "chosen_side must be \"left\" or \"right\"");
    if (!e.values.empty()) throw ValidationError(ctx + "preference ratings carry no Likert values");
    return;
  }
  if (e.chosen_side) throw ValidationError(ctx + "chosen_side is only valid for preference tasks");
  if (e.values.empty()) throw ValidationError(ctx + "no rating values");
  for (const auto& [d, v] : e.values) {
    if (std::find(t.dimensions.begin(), t.dimensions.end(), d) == t.dimensions.end())
      throw ValidationError(ctx + "dimension \"" + d + "\" is not asked by this task");
    if (v < 1 || v > 5) throw ValidationError(ctx + "value for " + d + " out of range 1-5");
  }
}

std::vector<std::string> parse_group_by(std::string_view csv) {
  static const std::set<std::string, std::less<>> allowed = {"model", "country", "accent", "gender"};
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= csv.size() && !csv.empty()) {
    const std::size_t comma = std::min(csv.find(',', pos), csv.size());
    std::string name(csv.substr(pos, comma - pos));
    name.erase(0, name.find_first_not_of(' '));
    name.erase(name.find_last_not_of(' ') + 1);
    if (!allowed.count(name)) throw ValidationError("cannot group by \"" + name + "\"");
    if (std::find(out.begin(), out.end(), name) != out.end())
      throw ValidationError("group_by lists \"" + name + "\" twice");
    out.push_back(std::move(name));
    pos = comma + 1;
  }
  return out;
}

}  // namespace afro::service
