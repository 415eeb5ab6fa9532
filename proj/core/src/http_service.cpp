#include "rarecorpus/http_service.hpp"

#include <httplib.h>

#include "rarecorpus/error.hpp"

namespace rarecorpus {

using nlohmann::json;

namespace {

constexpr const char* kJson = "application/json";

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const ValidationError& e) {
    reply(res, 400, {{"error", e.what()}});
  } catch (const json::exception& e) {
    reply(res, 400, {{"error", std::string("malformed JSON: ") + e.what()}});
  } catch (const NotFoundError& e) {
    reply(res, 404, {{"error", e.what()}});
  } catch (const ConflictError& e) {
    reply(res, 409, {{"error", e.what()}});
  } catch (const std::exception& e) {
    reply(res, 500, {{"error", e.what()}});
  }
}

json metadata(const Session& session) {
  return {{"session_id", session.id()},
          {"collection", session.collection_ref()},
          {"status", to_string(session.status())},
          {"config", session.config().to_json()},
          {"content_warning", kContentWarning}};
}

}  // namespace

HttpService::HttpService(SessionManager& manager) : manager_(manager), server_(std::make_unique<httplib::Server>()) {
  routes();
}

HttpService::~HttpService() = default;

void HttpService::routes() {
  auto& srv = *server_;

  srv.Get("/health", [](const httplib::Request&, httplib::Response& res) { reply(res, 200, {{"status", "ok"}}); });

  srv.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = req.body.empty() ? json::object() : json::parse(req.body);
      const auto id = manager_.create(body);
      reply(res, 201, metadata(*manager_.get(id)));
    });
  });

  srv.Get(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { reply(res, 200, metadata(*manager_.get(req.matches[1]))); });
  });

  srv.Get(R"(/sessions/([^/]+)/next)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto session = manager_.get(req.matches[1]);
      const auto worker = req.get_param_value("worker");
      if (worker.empty()) throw ValidationError("worker query parameter is required");
      json docs = json::array();
      for (const auto* doc : session->next(worker)) docs.push_back({{"doc_id", doc->doc_id}, {"text", doc->text}});
      reply(res, 200, {{"session_id", session->id()}, {"status", to_string(session->status())}, {"documents", docs}});
    });
  });

  srv.Post(R"(/sessions/([^/]+)/annotations)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto annotation = Annotation::from_json(json::parse(req.body));
      auto ack = manager_.submit(req.matches[1], annotation).to_json();
      ack["doc_id"] = annotation.doc_id;
      ack["worker_id"] = annotation.worker_id;
      reply(res, 200, ack);
    });
  });

  srv.Get(R"(/sessions/([^/]+)/state)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { reply(res, 200, manager_.get(req.matches[1])->state()); });
  });

  srv.Get(R"(/sessions/([^/]+)/export)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      res.status = 200;
      res.set_content(manager_.get(req.matches[1])->export_jsonl(), "application/x-ndjson");
    });
  });
}

int HttpService::bind(const std::string& host, int port) {
  if (port == 0) return server_->bind_to_any_port(host);
  return server_->bind_to_port(host, port) ? port : -1;
}

bool HttpService::serve() { return server_->listen_after_bind(); }

void HttpService::stop() { server_->stop(); }

}  // namespace rarecorpus
