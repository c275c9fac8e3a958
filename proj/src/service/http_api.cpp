#include <stdexcept>

#include "afro/error.hpp"
#include "afro/service.hpp"
#include "afro/util.hpp"
#include "httplib.h"

namespace afro::service {

struct HttpApi::Impl {
  EvalService& svc;
  httplib::Server srv;
  explicit Impl(EvalService& s) : svc(s) {}
};

namespace {

void send_json(httplib::Response& res, int status, const nlohmann::ordered_json& body) {
  res.status = status;
  res.set_content(body.dump() + "\n", "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& msg) {
  send_json(res, status, {{"error", msg}});
}

RaterMeta meta_from_query(const httplib::Request& req, RaterMeta base) {
  if (req.has_param("country")) base.country = req.get_param_value("country");
  if (req.has_param("accent")) base.accent = req.get_param_value("accent");
  if (req.has_param("gender")) base.gender = req.get_param_value("gender");
  return base;
}

}  // namespace

HttpApi::HttpApi(EvalService& svc, std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>(svc)) {
  auto& srv = impl_->srv;

  srv.Get("/api/tasks/next", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string rater = req.get_param_value("rater");
    if (rater.empty()) return send_error(res, 400, "missing rater parameter");
    const RaterMeta meta = meta_from_query(req, impl_->svc.rater_meta(rater).value_or(RaterMeta{}));
    const auto task = impl_->svc.next_task(rater, meta);
    if (!task) return send_error(res, 404, "no eligible task");
    send_json(res, 200, public_payload(*task));
  });

  srv.Post("/api/ratings", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      const auto ack = impl_->svc.submit(event_from_json(nlohmann::json::parse(req.body)));
      send_json(res, 200, {{"ok", true}, {"sequence", ack.sequence}, {"replaced", ack.replaced}});
    } catch (const nlohmann::json::exception& e) {
      send_error(res, 400, std::string("malformed JSON: ") + e.what());
    } catch (const ValidationError& e) {
      send_error(res, 400, e.what());
    } catch (const std::out_of_range& e) {
      send_error(res, 404, e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  });

  srv.Post("/api/raters", [this](const httplib::Request& req, httplib::Response& res) {
    RaterMeta meta;
    try {
      if (!req.body.empty()) {
        const auto j = nlohmann::json::parse(req.body);
        meta = {j.value("country", ""), j.value("accent", ""), j.value("gender", "")};
      }
    } catch (const nlohmann::json::exception& e) {
      return send_error(res, 400, std::string("malformed JSON: ") + e.what());
    }
    send_json(res, 200, {{"rater_id", impl_->svc.register_rater(meta)}});
  });

  srv.Get("/api/results", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      const auto group_by = parse_group_by(req.get_param_value("group_by"));
      if (req.get_param_value("format") == "table") {
        res.set_content(impl_->svc.results(group_by).to_table(), "text/plain; charset=utf-8");
        return;
      }
      res.set_content(impl_->svc.results_json(group_by), "application/json");
    } catch (const ValidationError& e) {
      send_error(res, 400, e.what());
    }
  });

  srv.Get(R"(/api/audio/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    const auto path = impl_->svc.audio_for(req.matches[1].str());
    if (!path || !std::filesystem::exists(*path)) return send_error(res, 404, "unknown audio");
    const auto bytes = read_file_bytes(*path);
    res.set_content(std::string(bytes.begin(), bytes.end()), "audio/wav");
  });

  if (static_dir && !srv.set_mount_point("/", static_dir->string()))
    throw Error("static directory " + static_dir->string() + " does not exist");
}

HttpApi::~HttpApi() = default;

int HttpApi::bind(const std::string& host, int port) {
  if (port == 0) {
    const int p = impl_->srv.bind_to_any_port(host);
    if (p <= 0) throw Error("cannot bind " + host);
    return p;
  }
  if (!impl_->srv.bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpApi::listen() { impl_->srv.listen_after_bind(); }
void HttpApi::stop() { impl_->srv.stop(); }
void HttpApi::wait_until_ready() { impl_->srv.wait_until_ready(); }

}  // namespace afro::service
