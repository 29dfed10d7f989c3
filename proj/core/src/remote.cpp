#include "stepplan/remote.hpp"

#include <httplib.h>

#include <thread>

#include "stepplan/error.hpp"
#include "stepplan/wire.hpp"

namespace stepplan {
namespace {

using nlohmann::json;

class Transport {
 public:
  Transport(std::string url, std::chrono::milliseconds timeout, RetryPolicy retry)
      : url_(std::move(url)), timeout_(timeout), retry_(retry) {
    if (retry_.attempts < 1) throw ValidationError("retry policy needs at least one attempt");
  }

  json post(const char* path, const json& request) const {
    const std::string body = request.dump();
    std::string last_error;
    auto backoff = retry_.initial_backoff;
    for (int attempt = 1; attempt <= retry_.attempts; ++attempt) {
      if (attempt > 1) {
        std::this_thread::sleep_for(backoff);
        backoff *= 2;
      }
      httplib::Client client(url_);
      client.set_connection_timeout(timeout_);
      client.set_read_timeout(timeout_);
      client.set_write_timeout(timeout_);
      auto res = client.Post(path, body, "application/json");
      if (!res) {
        last_error = httplib::to_string(res.error());
        continue;
      }
      if (res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      json reply;
      try {
        reply = json::parse(res->body);
      } catch (const json::parse_error& e) {
        throw ProtocolError("<body>", std::string("unparseable reply from ") + path + ": " + e.what());
      }
      if (res->status == 200) return reply;
      const std::string message = reply.is_object() ? reply.value("message", res->body) : res->body;
      if (res->status == 400)
        throw ProtocolError(reply.is_object() ? reply.value("field", std::string("<request>")) : "<request>",
                            std::string("request rejected by ") + path + ": " + message);
      throw ScorerError(std::string(path) + ": " + message);
    }
    throw ScorerUnavailable(url_ + path + " unavailable after " + std::to_string(retry_.attempts) +
                            " attempts: " + last_error);
  }

 private:
  std::string url_;
  std::chrono::milliseconds timeout_;
  RetryPolicy retry_;
};

class RemoteProposer final : public Proposer {
 public:
  explicit RemoteProposer(std::shared_ptr<const Transport> t) : t_(std::move(t)) {}
  std::vector<StepCandidate> propose(const PlanningInstance& instance, const std::vector<std::string>& prefix, int n,
                                     const DecodingMethod& method) const override {
    auto reply = t_->post(wire::kProposePath, wire::encode(wire::ProposeRequest{instance, prefix, n, method}));
    return wire::decode_candidates(reply, n);
  }

 private:
  std::shared_ptr<const Transport> t_;
};

class RemoteLikelihood final : public LikelihoodModel {
 public:
  explicit RemoteLikelihood(std::shared_ptr<const Transport> t) : t_(std::move(t)) {}
  Likelihood loglik(const PlanningInstance& instance, const std::vector<std::string>& steps) const override {
    return wire::decode_likelihood(t_->post(wire::kLoglikPath, wire::encode(wire::LoglikRequest{instance, steps})));
  }

 private:
  std::shared_ptr<const Transport> t_;
};

class RemoteVerifier final : public Verifier {
 public:
  explicit RemoteVerifier(std::shared_ptr<const Transport> t) : t_(std::move(t)) {}
  double verify(const Goal& goal, const std::vector<std::string>& prefix, const std::string& candidate) const override {
    return wire::decode_validity(
        t_->post(wire::kVerifyPath, wire::encode(wire::VerifyRequest{goal, prefix, candidate})));
  }

 private:
  std::shared_ptr<const Transport> t_;
};

class RemoteCompletion final : public CompletionModel {
 public:
  explicit RemoteCompletion(std::shared_ptr<const Transport> t) : t_(std::move(t)) {}
  std::string complete(const std::string& prompt, const SamplingParams& params) const override {
    return wire::decode_completion(
        t_->post(wire::kCompletePath, wire::encode(wire::CompleteRequest{prompt, params})));
  }

 private:
  std::shared_ptr<const Transport> t_;
};

}  // namespace

ScorerBundle remote_bundle(const std::string& endpoint_url, std::chrono::milliseconds timeout, RetryPolicy retry) {
  auto transport = std::make_shared<const Transport>(endpoint_url, timeout, retry);
  ScorerBundle b;
  b.proposer = std::make_shared<RemoteProposer>(transport);
  b.likelihood = std::make_shared<RemoteLikelihood>(transport);
  b.verifier = std::make_shared<RemoteVerifier>(transport);
  b.completion = std::make_shared<RemoteCompletion>(transport);
  return b;
}

}  // namespace stepplan
