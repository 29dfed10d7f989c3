#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <thread>

#include "stepplan/scorer.hpp"

namespace httplib {
class Server;
}

namespace stepplan {

/// Transport-free request dispatcher for the scorer wire protocol.
class ProtocolHandler {
 public:
  struct Reply {
    int status = 200;
    std::string body;
  };

  explicit ProtocolHandler(ScorerBundle bundle) : bundle_(std::move(bundle)) {}

  /// 400 for malformed bodies (error object names the field), 422 when the
  /// scorer rejects a well-formed request, 404 for unknown paths.
  Reply handle(std::string_view path, std::string_view body) const;

 private:
  ScorerBundle bundle_;
};

/// HTTP front end for a bundle. Runs its accept loop on a background thread
/// after start(), or on the caller's thread with run().
class ScorerServer {
 public:
  explicit ScorerServer(ScorerBundle bundle);
  ~ScorerServer();
  ScorerServer(const ScorerServer&) = delete;
  ScorerServer& operator=(const ScorerServer&) = delete;

  /// Binds host:port (port 0 picks a free port) and returns the bound port.
  /// Throws std::runtime_error on bind failure.
  int bind(const std::string& host, int port);
  void start();
  void run();
  void stop();
  int port() const noexcept { return port_; }

 private:
  ProtocolHandler handler_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = -1;
};

}  // namespace stepplan
