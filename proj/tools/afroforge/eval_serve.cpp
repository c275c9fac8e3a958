#include <signal.h>

#include <atomic>
#include <cstdio>
#include <iostream>
#include <map>
#include <thread>

#include "afro/error.hpp"
#include "afro/metrics.hpp"
#include "afro/service.hpp"
#include "afro/speaker.hpp"
#include "afro/util.hpp"
#include "stages.hpp"

namespace afro::cli {
namespace {

std::vector<nlohmann::json> read_jsonl(const fs::path& p) {
  std::vector<nlohmann::json> out;
  const std::string content = read_file(p);
  std::size_t pos = 0, line_no = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string::npos) nl = content.size();
    const std::string_view line(content.data() + pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(p.string() + ": " + e.what(), line_no);
    }
  }
  return out;
}

std::string text_of(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string()) throw ValidationError(std::string("missing string field \"") + key + "\"");
  return j[key].get<std::string>();
}

char fmt_buf[64];
const char* fixed(double v, int digits) {
  std::snprintf(fmt_buf, sizeof fmt_buf, "%.*f", digits, v);
  return fmt_buf;
}

int eval_wer(const Settings& s, StageRun& run, std::ostream& out) {
  const fs::path refs_p = s.existing_path("refs"), hyps_p = s.existing_path("hyps");
  run.input(refs_p);
  run.input(hyps_p);
  std::map<std::string, std::string> refs;
  for (const auto& j : read_jsonl(refs_p)) refs[text_of(j, "utterance_id")] = text_of(j, "text");

  // model -> utterance -> breakdown
  std::map<std::string, std::map<std::string, metrics::WerBreakdown>> per_model;
  for (const auto& j : read_jsonl(hyps_p)) {
    const std::string id = text_of(j, "utterance_id");
    const std::string model = j.value("model", "default");
    auto it = refs.find(id);
    if (it == refs.end()) {
      run.error(id, "hypothesis has no reference");
      continue;
    }
    try {
      per_model[model][id] = metrics::wer(it->second, text_of(j, "text"));
    } catch (const Error& e) {
      run.error(id, e.what());
    }
  }

  nlohmann::ordered_json models = nlohmann::ordered_json::object();
  std::string table = "model                 utts   ref_words  S      D      I      WER\n";
  for (const auto& [model, utts] : per_model) {
    for (const auto& [id, _] : refs)
      if (!utts.count(id)) run.error(model + "/" + id, "missing hypothesis");
    std::vector<metrics::WerBreakdown> all;
    nlohmann::ordered_json rows = nlohmann::ordered_json::object();
    for (const auto& [id, b] : utts) {
      all.push_back(b);
      rows[id] = {{"wer", b.wer}, {"S", b.substitutions}, {"D", b.deletions}, {"I", b.insertions}, {"ref_words", b.ref_words}};
    }
    const auto c = metrics::corpus_wer(all);
    models[model] = {{"wer", c.wer}, {"S", c.substitutions}, {"D", c.deletions}, {"I", c.insertions},
                     {"ref_words", c.ref_words}, {"utterances", rows}};
    char line[200];
    std::snprintf(line, sizeof line, "%-20s  %-6zu %-10zu %-6zu %-6zu %-6zu %.4f\n", model.c_str(), utts.size(),
                  c.ref_words, c.substitutions, c.deletions, c.insertions, c.wer);
    table += line;
  }
  write_json(run.dir() / "wer.json", {{"models", models}});
  write_file_atomic(run.dir() / "wer.txt", table);
  out << table;
  return 0;
}

metrics::ScoreTrials load_trials(const fs::path& p) {
  const auto j = nlohmann::json::parse(read_file(p));
  metrics::ScoreTrials t;
  try {
    if (j.is_object()) {
      t.genuine = j.at("genuine").get<std::vector<double>>();
      t.impostor = j.at("impostor").get<std::vector<double>>();
    } else if (j.is_array()) {
      for (const auto& e : j) (e.at("target").get<bool>() ? t.genuine : t.impostor).push_back(e.at("score").get<double>());
    } else {
      throw ValidationError("trials must be an object or an array");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(p.string() + ": " + e.what());
  }
  return t;
}

int eval_eer(const Settings& s, StageRun& run, std::ostream& out) {
  const fs::path p = s.existing_path("trials");
  run.input(p);
  const auto t = load_trials(p);
  const double e = metrics::eer(t);
  write_json(run.dir() / "eer.json", {{"eer", e}, {"genuine", t.genuine.size()}, {"impostor", t.impostor.size()}});
  out << "EER " << fixed(100.0 * e, 2) << "% (" << t.genuine.size() << " genuine, " << t.impostor.size()
      << " impostor)\n";
  return 0;
}

std::vector<metrics::RatingRow> load_ratings(const fs::path& p) {
  std::vector<metrics::RatingRow> rows;
  std::size_t n = 0;
  for (const auto& j : read_jsonl(p)) {
    ++n;
    std::map<std::string, std::string> attrs;
    std::map<std::string, nlohmann::json> values;
    for (const auto& [k, v] : j.items()) {
      if (k == "values" && v.is_object()) {
        for (const auto& [d, x] : v.items()) values[d] = x;
      } else if (k == "dimension" || k == "value") {
        continue;
      } else if (v.is_string()) {
        attrs[k] = v.get<std::string>();
      }
    }
    if (j.contains("dimension")) values[text_of(j, "dimension")] = j.value("value", nlohmann::json());
    if (values.empty()) throw ParseError(p.string() + ": rating has no values", n);
    for (const auto& [d, x] : values) {
      if (!x.is_number_integer() || x.get<long long>() < 1 || x.get<long long>() > 5)
        throw ParseError(p.string() + ": " + d + " must be an integer 1-5, got " + x.dump(), n);
      rows.push_back({attrs, d, x.get<int>()});
    }
  }
  return rows;
}

int eval_mos(const Settings& s, StageRun& run, std::ostream& out) {
  const fs::path p = s.existing_path("ratings");
  run.input(p);
  std::vector<std::string> group_by;
  for (const auto& g : split_csv(s.get<std::string>("group_by", "model"))) group_by.push_back(g);
  std::map<std::string, std::size_t> votes;
  if (s.has("votes")) {
    const fs::path vp = s.existing_path("votes");
    run.input(vp);
    votes = nlohmann::json::parse(read_file(vp)).get<std::map<std::string, std::size_t>>();
  }
  const auto report = metrics::build_report(load_ratings(p), group_by, votes);
  write_json(run.dir() / "mos.json", report.to_json());
  write_file_atomic(run.dir() / "mos.txt", report.to_table());
  out << report.to_table();
  return 0;
}

int eval_bootstrap(const Settings& s, StageRun& run, std::ostream& out) {
  const fs::path p = s.existing_path("ratings");
  run.input(p);
  const auto seed = s.seed();
  if (!seed) throw ConfigError("missing config field \"seed\" (bootstrap needs an explicit seed; pass --seed)");
  const std::string dim = s.get<std::string>("dimension", "overall");
  const std::string attr = s.get<std::string>("compare_by", "model");
  const std::string a = s.require<std::string>("a"), b = s.require<std::string>("b");
  std::vector<double> xa, xb;
  for (const auto& r : load_ratings(p)) {
    if (r.dimension != dim) continue;
    auto it = r.attributes.find(attr);
    if (it == r.attributes.end()) continue;
    if (it->second == a) xa.push_back(r.value);
    if (it->second == b) xb.push_back(r.value);
  }
  const auto res = metrics::bootstrap_diff(xa, xb, s.get<std::size_t>("resamples", metrics::kDefaultResamples), *seed,
                                           s.workers());
  write_json(run.dir() / "bootstrap.json", {{"a", a}, {"b", b}, {"dimension", dim}, {"n_a", xa.size()},
                                            {"n_b", xb.size()}, {"mean_diff", res.mean_diff}, {"ci_low", res.ci_low},
                                            {"ci_high", res.ci_high}, {"significant", res.significant}});
  out << a << " - " << b << " on " << dim << ": " << fixed(res.mean_diff, 3);
  out << " [" << fixed(res.ci_low, 3);
  out << ", " << fixed(res.ci_high, 3) << "]" << (res.significant ? " significant" : " not significant") << "\n";
  return 0;
}

int eval_cos(const Settings& s, StageRun& run, std::ostream& out) {
  const fs::path pa = s.existing_path("embeddings"), pb = s.existing_path("against");
  run.input(pa);
  run.input(pb);
  const auto a = speaker::import_embeddings(pa), b = speaker::import_embeddings(pb);
  nlohmann::ordered_json rows = nlohmann::ordered_json::object();
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto* e : a.all()) {
    const auto* other = b.find(e->speaker_id);
    if (!other) continue;
    const double c = speaker::cosine_similarity(*e, *other);
    rows[e->speaker_id] = c;
    sum += c;
    ++n;
  }
  if (n == 0) run.error("", "no speaker appears in both embedding files");
  const double mean = n ? sum / static_cast<double>(n) : 0.0;
  write_json(run.dir() / "cos.json", {{"mean", mean}, {"speakers", rows}});
  out << "mean cos-sim " << fixed(mean, 4) << " over " << n << " speakers\n";
  return 0;
}

}  // namespace

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size() && !s.empty()) {
    const std::size_t comma = std::min(s.find(',', pos), s.size());
    std::string item = s.substr(pos, comma - pos);
    item.erase(0, item.find_first_not_of(' '));
    item.erase(item.find_last_not_of(' ') + 1);
    if (!item.empty()) out.push_back(item);
    pos = comma + 1;
  }
  return out;
}

int stage_eval(const std::string& metric, const Settings& s, std::ostream& out) {
  StageRun run("eval/" + metric, s);
  return run.execute([&] {
    if (metric == "wer") eval_wer(s, run, out);
    else if (metric == "eer") eval_eer(s, run, out);
    else if (metric == "mos") eval_mos(s, run, out);
    else if (metric == "bootstrap") eval_bootstrap(s, run, out);
    else if (metric == "cos") eval_cos(s, run, out);
    else throw ConfigError("unknown metric " + metric);
  });
}

int stage_serve(const Settings& s, std::ostream& out) {
  const fs::path tasks_path = s.existing_path("tasks");
  const fs::path log_path = s.require<std::string>("log");
  const int port = s.get<int>("port", 8080);
  const std::string host = s.get<std::string>("host", "127.0.0.1");
  std::optional<fs::path> static_dir;
  if (s.has("static_dir")) static_dir = s.existing_path("static_dir");

  // Block the stop signals before any thread starts so only the waiter sees them.
  sigset_t stop_set;
  sigemptyset(&stop_set);
  sigaddset(&stop_set, SIGINT);
  sigaddset(&stop_set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &stop_set, nullptr);

  service::EvalService svc(service::load_tasks(tasks_path), log_path);
  svc.set_audio_root(tasks_path.parent_path());
  service::HttpApi api(svc, static_dir);
  const int bound = api.bind(host, port);
  out << "afroforge: serving " << svc.tasks().size() << " tasks on http://" << host << ":" << bound << " ("
      << svc.event_count() << " events replayed)" << std::endl;

  std::atomic<bool> done{false};
  std::thread waiter([&] {
    const timespec tick{0, 200'000'000};
    while (!done) {
      if (sigtimedwait(&stop_set, nullptr, &tick) > 0) {
        api.stop();
        return;
      }
    }
  });
  api.listen();
  done = true;
  waiter.join();
  pthread_sigmask(SIG_UNBLOCK, &stop_set, nullptr);
  return 0;
}

}  // namespace afro::cli
