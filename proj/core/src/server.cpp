#include "stepplan/server.hpp"

#include <httplib.h>

#include "stepplan/error.hpp"
#include "stepplan/wire.hpp"

namespace stepplan {
namespace {

using nlohmann::json;

ProtocolHandler::Reply error_reply(int status, std::string_view kind, std::string_view field, std::string_view what) {
  json body = {{"error", kind}, {"message", what}};
  if (!field.empty()) body["field"] = field;
  return {status, body.dump()};
}

}  // namespace

ProtocolHandler::Reply ProtocolHandler::handle(std::string_view path, std::string_view body) const {
  json request;
  try {
    request = json::parse(body);
  } catch (const json::parse_error& e) {
    return error_reply(400, "protocol", "<body>", e.what());
  }

  try {
    if (path == wire::kProposePath) {
      auto r = wire::decode_propose_request(request);
      return {200, wire::encode_candidates(bundle_.proposer->propose(r.instance, r.prefix, r.n, r.method)).dump()};
    }
    if (path == wire::kLoglikPath) {
      auto r = wire::decode_loglik_request(request);
      return {200, wire::encode_likelihood(bundle_.likelihood->loglik(r.instance, r.steps)).dump()};
    }
    if (path == wire::kVerifyPath) {
      auto r = wire::decode_verify_request(request);
      return {200, wire::encode_validity(bundle_.verifier->verify(r.goal, r.prefix, r.candidate)).dump()};
    }
    if (path == wire::kCompletePath) {
      auto r = wire::decode_complete_request(request);
      if (!bundle_.completion) return error_reply(422, "scorer", "", "no completion backend configured");
      return {200, wire::encode_completion(bundle_.completion->complete(r.prompt, r.params)).dump()};
    }
  } catch (const ProtocolError& e) {
    return error_reply(400, "protocol", e.field(), e.what());
  } catch (const std::exception& e) {
    return error_reply(422, "scorer", "", e.what());
  }
  return error_reply(404, "not-found", "", std::string("unknown endpoint ") + std::string(path));
}

ScorerServer::ScorerServer(ScorerBundle bundle)
    : handler_(std::move(bundle)), server_(std::make_unique<httplib::Server>()) {
  // httplib defaults to SO_REUSEPORT, which lets a second server silently
  // share a busy port. SO_REUSEADDR alone still allows quick restarts but
  // makes a real conflict fail at bind time.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  for (const char* path : {wire::kProposePath, wire::kLoglikPath, wire::kVerifyPath, wire::kCompletePath}) {
    server_->Post(path, [this, path](const httplib::Request& req, httplib::Response& res) {
      auto reply = handler_.handle(path, req.body);
      res.status = reply.status;
      res.set_content(reply.body, "application/json");
    });
  }
}

ScorerServer::~ScorerServer() { stop(); }

int ScorerServer::bind(const std::string& host, int port) {
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
  } else {
    port_ = server_->bind_to_port(host, port) ? port : -1;
  }
  if (port_ < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  return port_;
}

void ScorerServer::start() {
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void ScorerServer::run() { server_->listen_after_bind(); }

void ScorerServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace stepplan
