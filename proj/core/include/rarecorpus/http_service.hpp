#pragma once

#include <memory>
#include <string>

#include "rarecorpus/session.hpp"

namespace httplib {
class Server;
}

namespace rarecorpus {

/// JSON-over-HTTP front end for a SessionManager.
///
///   POST /sessions                    -> {"session_id", "status", "content_warning"}
///   GET  /sessions/{id}               -> session metadata
///   GET  /sessions/{id}/next?worker=  -> {"documents": [{"doc_id", "text"}], "status"}
///   POST /sessions/{id}/annotations   -> SubmitResult
///   GET  /sessions/{id}/state         -> summary
///   GET  /sessions/{id}/export        -> JSON Lines
///
/// Errors carry {"error": reason}: 400 validation, 404 unknown, 409 conflict.
class HttpService {
 public:
  explicit HttpService(SessionManager& manager);
  ~HttpService();
  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  /// Binds without serving; port 0 picks a free port. Returns the bound port or -1.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  bool serve();
  void stop();

 private:
  void routes();

  SessionManager& manager_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace rarecorpus
