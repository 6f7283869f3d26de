#include <thread>

#include "activeeval/service.hpp"
#include "httplib.h"

namespace activeeval {

using Json = nlohmann::json;

struct Server::Impl {
  SessionManager& sessions;
  ServerOptions options;
  httplib::Server http;
  std::thread thread;
  int port = 0;

  Impl(SessionManager& s, ServerOptions o) : sessions(s), options(std::move(o)) { routes(); }

  static void reply(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  void authorize(const httplib::Request& req) const {
    if (options.token.empty()) return;
    if (req.get_header_value("Authorization") != "Bearer " + options.token) {
      throw AuthError("missing or invalid bearer token");
    }
  }

  // Runs a handler, mapping library errors to status codes.
  template <typename F>
  auto guarded(F f) {
    return [this, f](const httplib::Request& req, httplib::Response& res) {
      try {
        authorize(req);
        f(req, res);
      } catch (const AuthError& e) {
        reply(res, 401, {{"error", e.what()}});
      } catch (const LookupError& e) {
        reply(res, 404, {{"error", e.what()}});
      } catch (const ConflictError& e) {
        reply(res, 409, {{"error", e.what()}});
      } catch (const ValidationError& e) {
        Json body = {{"error", e.what()}};
        if (e.line() > 0) body["line"] = e.line();
        reply(res, 400, body);
      } catch (const Error& e) {
        reply(res, 400, {{"error", e.what()}});
      } catch (const Json::exception& e) {
        reply(res, 400, {{"error", std::string("malformed JSON: ") + e.what()}});
      } catch (const std::exception& e) {
        reply(res, 500, {{"error", e.what()}});
      }
    };
  }

  static Json body_of(const httplib::Request& req) { return Json::parse(req.body); }

  void routes() {
    http.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
                const std::string id = sessions.create(body_of(req));
                reply(res, 201, sessions.get(id).summary());
              }));
    http.Get(R"(/sessions/([A-Za-z0-9_-]+))",
             guarded([this](const httplib::Request& req, httplib::Response& res) {
               reply(res, 200, sessions.get(req.matches[1]).summary());
             }));
    http.Get(R"(/sessions/([A-Za-z0-9_-]+)/next)",
             guarded([this](const httplib::Request& req, httplib::Response& res) {
               const std::string annotator =
                   req.has_param("annotator") ? req.get_param_value("annotator") : "";
               reply(res, 200, sessions.get(req.matches[1]).next_task(annotator));
             }));
    http.Post(R"(/sessions/([A-Za-z0-9_-]+)/judgments)",
              guarded([this](const httplib::Request& req, httplib::Response& res) {
                const Json body = body_of(req);
                if (!body.contains("task_id") || !body.contains("choice")) {
                  throw ValidationError("task_id and choice are required");
                }
                const std::string annotator =
                    body.contains("annotator") ? body.at("annotator").get<std::string>() : "";
                reply(res, 200,
                      sessions.get(req.matches[1])
                          .submit(body.at("task_id").get<std::string>(),
                                  body.at("choice").get<std::string>(), annotator));
              }));
    http.Get(R"(/sessions/([A-Za-z0-9_-]+)/leaderboard)",
             guarded([this](const httplib::Request& req, httplib::Response& res) {
               reply(res, 200, sessions.get(req.matches[1]).leaderboard());
             }));
    http.Get(R"(/sessions/([A-Za-z0-9_-]+)/log)",
             guarded([this](const httplib::Request& req, httplib::Response& res) {
               res.status = 200;
               res.set_content(sessions.get(req.matches[1]).log_text(), "application/x-ndjson");
             }));
  }
};

Server::Server(SessionManager& sessions, ServerOptions options)
    : impl_(std::make_unique<Impl>(sessions, std::move(options))) {}

Server::~Server() { stop(); }

int Server::start() {
  auto& i = *impl_;
  if (i.options.port == 0) {
    i.port = i.http.bind_to_any_port(i.options.host);
  } else if (i.http.bind_to_port(i.options.host, i.options.port)) {
    i.port = i.options.port;
  } else {
    i.port = -1;
  }
  if (i.port < 0) throw Error("cannot bind " + i.options.host + ":" + std::to_string(i.options.port));
  i.thread = std::thread([&i] { i.http.listen_after_bind(); });
  i.http.wait_until_ready();
  return i.port;
}

void Server::run() {
  auto& i = *impl_;
  if (!i.http.listen(i.options.host, i.options.port)) {
    throw Error("cannot listen on " + i.options.host + ":" + std::to_string(i.options.port));
  }
}

void Server::stop() {
  if (!impl_) return;
  impl_->http.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace activeeval
