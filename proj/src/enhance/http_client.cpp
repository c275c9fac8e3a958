#include <chrono>
#include <regex>

#include "afro/error.hpp"
#include "httplib.h"
#include "transport.hpp"

namespace afro::enhance::detail {

std::vector<std::uint8_t> http_post(const std::string& url, std::span<const std::uint8_t> body,
                                    const std::string& content_type, double timeout_s) {
  static const std::regex re(R"(^http://([^/:]+)(?::(\d+))?(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw AdapterError("unsupported URL " + url);
  const int port = m[2].matched ? std::stoi(m[2]) : 80;
  const std::string path = m[3].matched ? m[3].str() : "/";

  httplib::Client cli(m[1].str(), port);
  const auto sec = static_cast<time_t>(timeout_s);
  const auto usec = static_cast<time_t>((timeout_s - static_cast<double>(sec)) * 1e6);
  cli.set_connection_timeout(sec, usec);
  cli.set_read_timeout(sec, usec);
  cli.set_write_timeout(sec, usec);

  const auto start = std::chrono::steady_clock::now();
  auto res = cli.Post(path, reinterpret_cast<const char*>(body.data()), body.size(), content_type);
  if (!res) {
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (res.error() == httplib::Error::ConnectionTimeout ||
        (res.error() == httplib::Error::Read && elapsed >= timeout_s * 0.95))
      throw AdapterTimeout(url + " timed out after " + std::to_string(timeout_s) + " s");
    throw AdapterError(url + ": " + httplib::to_string(res.error()));
  }
  if (res->status != 200)
    throw AdapterError(url + " returned HTTP " + std::to_string(res->status) +
                       (res->body.empty() ? "" : ": " + res->body.substr(0, 400)));
  return {res->body.begin(), res->body.end()};
}

}  // namespace afro::enhance::detail
