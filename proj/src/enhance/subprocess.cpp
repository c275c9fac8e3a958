#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <mutex>

#include "afro/error.hpp"
#include "transport.hpp"

extern char** environ;

namespace afro::enhance::detail {
namespace {

struct Fd {
  int fd = -1;
  ~Fd() { reset(); }
  void reset() {
    if (fd >= 0) ::close(fd);
    fd = -1;
  }
};

void make_pipe(Fd& r, Fd& w) {
  int p[2];
  if (::pipe2(p, O_CLOEXEC) != 0) throw AdapterError(std::string("pipe: ") + std::strerror(errno));
  r.fd = p[0];
  w.fd = p[1];
}

std::string tail(const std::vector<std::uint8_t>& bytes, std::size_t n = 400) {
  const std::size_t from = bytes.size() > n ? bytes.size() - n : 0;
  std::string s(bytes.begin() + static_cast<std::ptrdiff_t>(from), bytes.end());
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

}  // namespace

std::vector<std::uint8_t> run_subprocess(const std::vector<std::string>& argv,
                                         std::span<const std::uint8_t> input, double timeout_s) {
  if (argv.empty()) throw AdapterError("empty command");
  static std::once_flag sigpipe_once;
  std::call_once(sigpipe_once, [] { ::signal(SIGPIPE, SIG_IGN); });

  Fd in_r, in_w, out_r, out_w, err_r, err_w;
  make_pipe(in_r, in_w);
  make_pipe(out_r, out_w);
  make_pipe(err_r, err_w);

  posix_spawn_file_actions_t fa;
  posix_spawn_file_actions_init(&fa);
  posix_spawn_file_actions_adddup2(&fa, in_r.fd, 0);
  posix_spawn_file_actions_adddup2(&fa, out_w.fd, 1);
  posix_spawn_file_actions_adddup2(&fa, err_w.fd, 2);
  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);
  pid_t pid = 0;
  const int rc = ::posix_spawnp(&pid, args[0], &fa, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&fa);
  if (rc != 0) throw AdapterError("cannot start " + argv[0] + ": " + std::strerror(rc));
  in_r.reset();
  out_w.reset();
  err_w.reset();

  for (Fd* f : {&in_w, &out_r, &err_r}) ::fcntl(f->fd, F_SETFL, ::fcntl(f->fd, F_GETFL) | O_NONBLOCK);
  if (input.empty()) in_w.reset();

  using clock = std::chrono::steady_clock;
  const auto deadline = clock::now() + std::chrono::duration<double>(timeout_s);
  std::vector<std::uint8_t> out, err;
  std::size_t written = 0;
  bool timed_out = false;
  std::uint8_t buf[65536];

  while (out_r.fd >= 0 || err_r.fd >= 0) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now()).count();
    if (left <= 0) {
      timed_out = true;
      break;
    }
    pollfd fds[3];
    int nfds = 0;
    if (in_w.fd >= 0) fds[nfds++] = {in_w.fd, POLLOUT, 0};
    if (out_r.fd >= 0) fds[nfds++] = {out_r.fd, POLLIN, 0};
    if (err_r.fd >= 0) fds[nfds++] = {err_r.fd, POLLIN, 0};
    const int ready = ::poll(fds, static_cast<nfds_t>(nfds), static_cast<int>(std::min<long long>(left, 1000)));
    if (ready < 0 && errno != EINTR) break;
    if (ready <= 0) continue;
    for (int i = 0; i < nfds; ++i) {
      if (!fds[i].revents) continue;
      if (fds[i].fd == in_w.fd) {
        const ssize_t n = ::write(in_w.fd, input.data() + written, input.size() - written);
        if (n > 0) written += static_cast<std::size_t>(n);
        if (n < 0 && errno != EAGAIN) in_w.reset();  // child stopped reading
        else if (written == input.size()) in_w.reset();
      } else {
        Fd& f = fds[i].fd == out_r.fd ? out_r : err_r;
        auto& sink = fds[i].fd == out_r.fd ? out : err;
        const ssize_t n = ::read(f.fd, buf, sizeof buf);
        if (n > 0) sink.insert(sink.end(), buf, buf + n);
        else if (n == 0 || errno != EAGAIN) f.reset();
      }
    }
  }

  int status = 0;
  if (timed_out) {
    ::kill(pid, SIGKILL);
    ::waitpid(pid, &status, 0);
    throw AdapterTimeout(argv[0] + " timed out after " + std::to_string(timeout_s) + " s");
  }
  // stdout closed; the child may still be exiting
  while (true) {
    const pid_t w = ::waitpid(pid, &status, WNOHANG);
    if (w == pid) break;
    if (w < 0 && errno != EINTR) break;
    if (clock::now() >= deadline) {
      ::kill(pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      throw AdapterTimeout(argv[0] + " timed out after " + std::to_string(timeout_s) + " s");
    }
    ::usleep(1000);
  }
  if (WIFSIGNALED(status))
    throw AdapterError(argv[0] + " killed by signal " + std::to_string(WTERMSIG(status)));
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
    throw AdapterError(argv[0] + " exited with status " + std::to_string(WEXITSTATUS(status)) +
                       (err.empty() ? "" : ": " + tail(err)));
  return out;
}

}  // namespace afro::enhance::detail
