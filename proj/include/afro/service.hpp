#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "afro/corpus.hpp"
#include "afro/metrics.hpp"
#include "json.hpp"

namespace afro::service {

enum class TaskKind { mos, accent_match, preference };

const char* to_string(TaskKind k);
TaskKind parse_task_kind(std::string_view s);

bool is_dimension(std::string_view d);  // overall, naturalness, accentedness, *_match

struct TaskUtterance {
  std::string utterance_id;
  std::string model;
  std::string text;
  std::string country;
  std::string accent;
  Gender gender = Gender::unspecified;
  std::string audio_path;  // relative to the task file
};

struct RatingTask {
  std::string task_id;
  TaskKind kind = TaskKind::mos;
  std::vector<TaskUtterance> utterances;  // 1, or 2 for preference (left, right)
  std::vector<std::string> dimensions;

  void validate() const;
};

RatingTask task_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const RatingTask& t);
std::vector<RatingTask> parse_tasks(std::string_view jsonl);
std::vector<RatingTask> load_tasks(const std::filesystem::path& path);

// Opaque audio key used in rater-facing payloads instead of the utterance id.
std::string audio_key(std::string_view utterance_id);

// What a rater sees: no model names, no utterance ids.
nlohmann::ordered_json public_payload(const RatingTask& t);

struct RaterMeta {
  std::string country;
  std::string accent;
  std::string gender;

  bool operator==(const RaterMeta&) const = default;
};

struct RatingEvent {
  std::string task_id;
  std::string rater_id;
  RaterMeta rater_meta;
  std::map<std::string, int> values;   // Likert 1..5
  std::optional<std::string> chosen_side;  // "left" / "right", preference only
  std::string timestamp;

  bool operator==(const RatingEvent&) const = default;
};

// Strict: Likert values must be integral numbers (4.5 is rejected).
RatingEvent event_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const RatingEvent& e);

// Checks the event against its task. Throws ValidationError.
void validate_event(const RatingEvent& e, const RatingTask& t);

struct Ack {
  std::uint64_t sequence = 0;  // 1-based line in the event log
  bool replaced = false;
};

// Event-sourced rating store. All aggregates are recomputed from the
// accepted events; the log on disk is the source of truth.
class EvalService {
 public:
  // Replays log_path if it exists. A torn final line (no newline) is
  // dropped and truncated away; any other bad line is a ParseError.
  EvalService(std::vector<RatingTask> tasks, std::filesystem::path log_path,
              std::filesystem::path audit_path = {});
  ~EvalService();
  EvalService(const EvalService&) = delete;
  EvalService& operator=(const EvalService&) = delete;

  const std::vector<RatingTask>& tasks() const { return tasks_; }
  const RatingTask* find_task(std::string_view task_id) const;

  // Least-rated eligible task, oldest first on ties; nullopt when none.
  std::optional<RatingTask> next_task(std::string_view rater_id, const RaterMeta& meta) const;

  // Validates, appends, fsyncs, then applies. Throws ValidationError
  // (bad values) or std::out_of_range (unknown task).
  Ack submit(RatingEvent e);

  metrics::MetricReport results(const std::vector<std::string>& group_by) const;
  std::string results_json(const std::vector<std::string>& group_by) const;

  // Server-issued anonymous rater token.
  std::string register_rater(const RaterMeta& meta);
  std::optional<RaterMeta> rater_meta(std::string_view rater_id) const;

  // Audio file for an utterance id or its audio_key.
  std::optional<std::filesystem::path> audio_for(std::string_view id_or_key) const;
  void set_audio_root(std::filesystem::path root) { audio_root_ = std::move(root); }

  std::size_t ratings_for(std::string_view task_id) const;
  std::size_t event_count() const;

 private:
  void apply(const RatingEvent& e, std::uint64_t seq, bool* replaced);

  std::vector<RatingTask> tasks_;
  std::map<std::string, std::size_t, std::less<>> task_index_;
  std::map<std::string, std::filesystem::path, std::less<>> audio_;
  std::filesystem::path audio_root_;
  std::filesystem::path log_path_, audit_path_;
  int log_fd_ = -1;
  int audit_fd_ = -1;

  mutable std::shared_mutex mu_;
  std::uint64_t lines_ = 0;
  // (task index, rater) -> latest event
  std::map<std::pair<std::size_t, std::string>, RatingEvent> current_;
  std::vector<std::size_t> count_;  // distinct raters per task
  std::map<std::string, RaterMeta, std::less<>> raters_;
};

std::vector<std::string> parse_group_by(std::string_view csv);  // validates names

// HTTP front end over an EvalService.
class HttpApi {
 public:
  explicit HttpApi(EvalService& svc, std::optional<std::filesystem::path> static_dir = {});
  ~HttpApi();

  // Returns the bound port (port 0 picks a free one); throws on failure.
  int bind(const std::string& host, int port);
  void listen();  // blocks until stop()
  void stop();
  void wait_until_ready();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace afro::service
