#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>
#include <unordered_map>

#include "afro/corpus.hpp"
#include "afro/error.hpp"
#include "afro/util.hpp"

namespace afro {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Gender g) {
  switch (g) {
    case Gender::female: return "female";
    case Gender::male: return "male";
    case Gender::unspecified: return "unspecified";
  }
  return "unspecified";
}

Gender parse_gender(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "female") return Gender::female;
  if (lower == "male") return Gender::male;
  return Gender::unspecified;
}

ordered_json to_json(const UtteranceRecord& r) {
  ordered_json j;
  j["utterance_id"] = r.utterance_id;
  j["speaker_id"] = r.speaker_id;
  j["country"] = r.country;
  j["accent"] = r.accent;
  j["gender"] = std::string(to_string(r.gender));
  j["age_group"] = r.age_group;
  j["text"] = r.text;
  j["audio_path"] = r.audio_path;
  j["duration_s"] = r.duration_s;
  j["sample_rate_hz"] = r.sample_rate_hz;
  if (r.replica > 0) {
    j["replica"] = r.replica;
    j["source_utterance_id"] = r.source_utterance_id;
  }
  return j;
}

namespace {

std::string require_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw Error(std::string("missing field \"") + key + "\"");
  if (!it->is_string()) throw Error(std::string("field \"") + key + "\" must be a string");
  return it->get<std::string>();
}

std::string optional_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return {};
  if (!it->is_string()) throw Error(std::string("field \"") + key + "\" must be a string");
  return it->get<std::string>();
}

double parse_real(std::string_view s, const char* key) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end)
    throw Error(std::string("field \"") + key + "\" is not a number: \"" + std::string(s) + "\"");
  return v;
}

double number_field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw Error(std::string("missing field \"") + key + "\"");
  if (it->is_number()) return it->get<double>();
  if (it->is_string()) return parse_real(it->get<std::string>(), key);
  throw Error(std::string("field \"") + key + "\" must be a number");
}

}  // namespace

UtteranceRecord record_from_json(const json& j) {
  if (!j.is_object()) throw Error("record is not a JSON object");
  UtteranceRecord r;
  r.utterance_id = require_string(j, "utterance_id");
  r.speaker_id = require_string(j, "speaker_id");
  r.country = require_string(j, "country");
  r.accent = require_string(j, "accent");
  r.gender = parse_gender(optional_string(j, "gender"));
  r.age_group = optional_string(j, "age_group");
  r.text = require_string(j, "text");
  r.audio_path = require_string(j, "audio_path");
  r.duration_s = number_field(j, "duration_s");
  const double rate = number_field(j, "sample_rate_hz");
  if (rate != std::floor(rate) || rate > 1e9)
    throw Error("field \"sample_rate_hz\" must be an integer");
  r.sample_rate_hz = static_cast<int>(rate);
  if (j.contains("replica")) {
    r.replica = static_cast<int>(number_field(j, "replica"));
    r.source_utterance_id = optional_string(j, "source_utterance_id");
  }
  return r;
}

void validate_record(const UtteranceRecord& r) {
  if (r.utterance_id.empty()) throw ValidationError("empty utterance_id");
  if (r.speaker_id.empty()) throw ValidationError("empty speaker_id for " + r.utterance_id);
  if (!is_iso_country(r.country))
    throw ValidationError("unknown country code \"" + r.country + "\"");
  if (r.accent.empty()) throw ValidationError("empty accent for " + r.utterance_id);
  if (!std::isfinite(r.duration_s) || r.duration_s <= 0.0) {
    std::ostringstream msg;
    msg << "duration_s must be positive (nonnegative-duration violation): " << r.duration_s;
    throw ValidationError(msg.str());
  }
  if (r.sample_rate_hz <= 0)
    throw ValidationError("sample_rate_hz must be positive for " + r.utterance_id);
  if (r.replica < 0) throw ValidationError("negative replica index for " + r.utterance_id);
}

Manifest::Manifest(std::vector<UtteranceRecord> records, std::string source_uri)
    : records_(std::move(records)), source_uri_(std::move(source_uri)) {
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    validate_record(records_[i]);
    auto [it, inserted] = seen.emplace(records_[i].utterance_id, i);
    if (!inserted)
      throw ValidationError("duplicate utterance_id \"" + records_[i].utterance_id +
                            "\" at rows " + std::to_string(it->second + 1) + " and " +
                            std::to_string(i + 1));
  }
}

std::filesystem::path Manifest::audio_path(const UtteranceRecord& r) const {
  std::filesystem::path p(r.audio_path);
  if (p.is_absolute() || base_dir_.empty()) return p;
  return base_dir_ / p;
}

ManifestFormat format_from_path(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".csv" ? ManifestFormat::csv : ManifestFormat::jsonl;
}

namespace {

// RFC 4180 rows with their starting line numbers.
std::vector<std::pair<std::size_t, std::vector<std::string>>> parse_csv(std::string_view text) {
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t line = 1;
  std::size_t row_line = 1;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    const bool blank = row.size() == 1 && row[0].empty();
    if (!blank) rows.emplace_back(row_line, std::move(row));
    row.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r') {
      // tolerated before \n
    } else if (c == '\n') {
      end_row();
      ++line;
      row_line = line;
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (quoted) throw ParseError("unterminated quoted field", row_line);
  if (field_started || !field.empty() || !row.empty()) end_row();
  return rows;
}

struct Row {
  std::size_t line;
  UtteranceRecord record;
};

Manifest finish(std::vector<Row> rows, std::string source_uri) {
  std::unordered_map<std::string, std::size_t> seen;
  std::vector<UtteranceRecord> records;
  records.reserve(rows.size());
  for (auto& row : rows) {
    try {
      validate_record(row.record);
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), row.line);
    }
    auto [it, inserted] = seen.emplace(row.record.utterance_id, row.line);
    if (!inserted)
      throw ValidationError("duplicate utterance_id \"" + row.record.utterance_id +
                            "\" on lines " + std::to_string(it->second) + " and " +
                            std::to_string(row.line));
    records.push_back(std::move(row.record));
  }
  return Manifest(std::move(records), std::move(source_uri));
}

}  // namespace

Manifest parse_manifest(std::string_view content, ManifestFormat format,
                        std::string source_uri) {
  std::vector<Row> rows;
  if (format == ManifestFormat::jsonl) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= content.size()) {
      std::size_t nl = content.find('\n', pos);
      if (nl == std::string_view::npos) nl = content.size();
      std::string_view line = content.substr(pos, nl - pos);
      ++line_no;
      pos = nl + 1;
      if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
      try {
        rows.push_back({line_no, record_from_json(json::parse(line))});
      } catch (const json::exception& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
      } catch (const ParseError&) {
        throw;
      } catch (const Error& e) {
        throw ParseError(e.what(), line_no);
      }
    }
  } else {
    auto csv = parse_csv(content);
    if (csv.empty()) return Manifest({}, std::move(source_uri));
    const auto& header = csv.front().second;
    for (std::size_t r = 1; r < csv.size(); ++r) {
      const auto& [line, fields] = csv[r];
      if (fields.size() != header.size())
        throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                             std::to_string(fields.size()),
                         line);
      json obj = json::object();
      for (std::size_t c = 0; c < header.size(); ++c) obj[header[c]] = fields[c];
      try {
        rows.push_back({line, record_from_json(obj)});
      } catch (const Error& e) {
        throw ParseError(e.what(), line);
      }
    }
  }
  return finish(std::move(rows), std::move(source_uri));
}

Manifest load_manifest(const std::filesystem::path& path, ManifestFormat format) {
  Manifest m = parse_manifest(read_file(path), format, path.string());
  m.set_base_dir(path.parent_path());
  return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
  return load_manifest(path, format_from_path(path));
}

std::string serialize_manifest(const Manifest& m) {
  std::string out;
  for (const auto& r : m.records()) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, const Manifest& m) {
  write_file_atomic(path, serialize_manifest(m));
}

}  // namespace afro
