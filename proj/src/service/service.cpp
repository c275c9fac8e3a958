#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <mutex>
#include <ctime>
#include <random>
#include <stdexcept>

#include "afro/error.hpp"
#include "afro/service.hpp"
#include "afro/util.hpp"

namespace afro::service {
namespace fs = std::filesystem;

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

int open_append(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  const int fd = ::open(p.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) throw Error("cannot open " + p.string() + ": " + std::strerror(errno));
  return fd;
}

void append_durably(int fd, const std::string& line, const fs::path& p) {
  std::size_t done = 0;
  while (done < line.size()) {
    const ssize_t n = ::write(fd, line.data() + done, line.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error("write to " + p.string() + " failed: " + std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0) throw Error("fsync of " + p.string() + " failed: " + std::strerror(errno));
}

bool meta_empty(const RaterMeta& m) { return m.country.empty() && m.accent.empty() && m.gender.empty(); }

}  // namespace

EvalService::EvalService(std::vector<RatingTask> tasks, fs::path log_path, fs::path audit_path)
    : tasks_(std::move(tasks)), log_path_(std::move(log_path)), audit_path_(std::move(audit_path)) {
  if (audit_path_.empty()) audit_path_ = log_path_.string() + ".audit.jsonl";
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    tasks_[i].validate();
    if (!task_index_.emplace(tasks_[i].task_id, i).second)
      throw ValidationError("duplicate task_id \"" + tasks_[i].task_id + "\"");
    for (const auto& u : tasks_[i].utterances) {
      audio_[u.utterance_id] = u.audio_path;
      audio_[audio_key(u.utterance_id)] = u.audio_path;
    }
  }
  count_.assign(tasks_.size(), 0);

  if (fs::exists(log_path_)) {
    const std::string content = read_file(log_path_);
    std::size_t pos = 0, line_no = 0;
    while (pos < content.size()) {
      const std::size_t nl = content.find('\n', pos);
      if (nl == std::string::npos) {
        // torn append from a crash; it was never acknowledged
        fs::resize_file(log_path_, pos);
        break;
      }
      const std::string_view line(content.data() + pos, nl - pos);
      pos = nl + 1;
      ++line_no;
      try {
        RatingEvent e = event_from_json(nlohmann::json::parse(line));
        const auto* t = find_task(e.task_id);
        if (!t) throw ValidationError("unknown task \"" + e.task_id + "\"");
        validate_event(e, *t);
        apply(e, line_no, nullptr);
      } catch (const nlohmann::json::exception& ex) {
        throw ParseError(log_path_.string() + ": " + ex.what(), line_no);
      } catch (const ValidationError& ex) {
        throw ParseError(log_path_.string() + ": " + ex.what(), line_no);
      }
    }
    lines_ = line_no;
  }
  log_fd_ = open_append(log_path_);
  audit_fd_ = open_append(audit_path_);
}

EvalService::~EvalService() {
  if (log_fd_ >= 0) ::close(log_fd_);
  if (audit_fd_ >= 0) ::close(audit_fd_);
}

const RatingTask* EvalService::find_task(std::string_view task_id) const {
  auto it = task_index_.find(task_id);
  return it == task_index_.end() ? nullptr : &tasks_[it->second];
}

void EvalService::apply(const RatingEvent& e, std::uint64_t, bool* replaced) {
  const std::size_t idx = task_index_.find(e.task_id)->second;
  auto [it, inserted] = current_.insert_or_assign({idx, e.rater_id}, e);
  if (inserted) ++count_[idx];
  if (replaced) *replaced = !inserted;
  if (!meta_empty(e.rater_meta)) raters_[e.rater_id] = e.rater_meta;
}

std::optional<RatingTask> EvalService::next_task(std::string_view rater_id, const RaterMeta& meta) const {
  std::shared_lock lock(mu_);
  const std::string rater(rater_id);
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    const auto& t = tasks_[i];
    if (t.kind == TaskKind::accent_match && (meta.country.empty() || meta.country != t.utterances[0].country))
      continue;
    if (current_.count({i, rater})) continue;
    if (!best || count_[i] < count_[*best]) best = i;
  }
  if (!best) return std::nullopt;
  return tasks_[*best];
}

Ack EvalService::submit(RatingEvent e) {
  std::unique_lock lock(mu_);
  const auto* t = find_task(e.task_id);
  if (!t) throw std::out_of_range("unknown task \"" + e.task_id + "\"");
  if (meta_empty(e.rater_meta))
    if (auto it = raters_.find(e.rater_id); it != raters_.end()) e.rater_meta = it->second;
  validate_event(e, *t);
  if (e.timestamp.empty()) e.timestamp = utc_now();

  append_durably(log_fd_, to_json(e).dump() + "\n", log_path_);
  Ack ack;
  ack.sequence = ++lines_;
  apply(e, ack.sequence, &ack.replaced);
  if (ack.replaced) {
    nlohmann::ordered_json audit = {{"event", "resubmission"}, {"task_id", e.task_id}, {"rater_id", e.rater_id},
                                    {"sequence", ack.sequence}, {"timestamp", e.timestamp}};
    append_durably(audit_fd_, audit.dump() + "\n", audit_path_);
  }
  return ack;
}

metrics::MetricReport EvalService::results(const std::vector<std::string>& group_by) const {
  std::shared_lock lock(mu_);
  std::vector<metrics::RatingRow> rows;
  std::map<std::string, std::size_t> votes;
  for (const auto& [key, e] : current_) {
    const auto& t = tasks_[key.first];
    if (t.kind == TaskKind::preference) {
      votes.try_emplace(t.utterances[0].model, 0);
      votes.try_emplace(t.utterances[1].model, 0);
      ++votes[t.utterances[*e.chosen_side == "left" ? 0 : 1].model];
      continue;
    }
    const auto& u = t.utterances[0];
    std::map<std::string, std::string> attrs = {
        {"model", u.model}, {"country", u.country}, {"accent", u.accent}, {"gender", std::string(to_string(u.gender))}};
    for (const auto& [dim, v] : e.values) rows.push_back({attrs, dim, v});
  }
  return metrics::build_report(rows, group_by, votes);
}

std::string EvalService::results_json(const std::vector<std::string>& group_by) const {
  return results(group_by).to_json().dump(2) + "\n";
}

std::string EvalService::register_rater(const RaterMeta& meta) {
  static thread_local std::mt19937_64 rng(std::random_device{}());
  std::unique_lock lock(mu_);
  std::string token;
  do {
    char buf[40];
    std::snprintf(buf, sizeof buf, "r%016llx%08llx", static_cast<unsigned long long>(rng()),
                  static_cast<unsigned long long>(rng() & 0xffffffffULL));
    token = buf;
  } while (raters_.count(token));
  raters_[token] = meta;
  return token;
}

std::optional<RaterMeta> EvalService::rater_meta(std::string_view rater_id) const {
  std::shared_lock lock(mu_);
  auto it = raters_.find(rater_id);
  if (it == raters_.end()) return std::nullopt;
  return it->second;
}

std::optional<fs::path> EvalService::audio_for(std::string_view id_or_key) const {
  auto it = audio_.find(id_or_key);
  if (it == audio_.end()) return std::nullopt;
  return audio_root_.empty() ? it->second : audio_root_ / it->second;
}

std::size_t EvalService::ratings_for(std::string_view task_id) const {
  std::shared_lock lock(mu_);
  auto it = task_index_.find(task_id);
  return it == task_index_.end() ? 0 : count_[it->second];
}

std::size_t EvalService::event_count() const {
  std::shared_lock lock(mu_);
  return lines_;
}

}  // namespace afro::service
