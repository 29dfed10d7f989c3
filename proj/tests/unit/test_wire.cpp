#include <gtest/gtest.h>

#include <httplib.h>

#include <atomic>
#include <thread>

#include "stepplan/error.hpp"
#include "stepplan/mock_world.hpp"
#include "stepplan/remote.hpp"
#include "stepplan/server.hpp"
#include "stepplan/wire.hpp"

using namespace stepplan;
using nlohmann::json;

namespace {

PlanningInstance instance(const std::string& goal) {
  PlanningInstance in;
  in.goal.text = goal;
  return in;
}

/// Canned-reply HTTP server for exercising the client against misbehaving
/// endpoints.
class FakeEndpoint {
 public:
  explicit FakeEndpoint(std::function<void(const httplib::Request&, httplib::Response&)> fn) {
    server_.Post(R"(/v1/.*)", [fn](const httplib::Request& req, httplib::Response& res) { fn(req, res); });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeEndpoint() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

RetryPolicy fast_retry() { return RetryPolicy{3, std::chrono::milliseconds(1)}; }

}  // namespace

TEST(WireCodec, ValidityPassthroughAndRange) {
  EXPECT_DOUBLE_EQ(wire::decode_validity(json{{"validity", 0.93}}), 0.93);
  try {
    wire::decode_validity(json{{"validity", 1.2}});
    FAIL();
  } catch (const ProtocolError& e) {
    EXPECT_EQ(e.field(), "validity");
  }
  EXPECT_THROW(wire::decode_validity(json{{"validity", -0.01}}), ProtocolError);
  EXPECT_THROW(wire::decode_validity(json{{"valid", 0.5}}), ProtocolError);
}

TEST(WireCodec, TooManyCandidatesRejected) {
  const std::vector<StepCandidate> three = {{"a", -0.1, 1, false}, {"b", -0.2, 1, false}, {"", -0.3, 1, true}};
  const auto body = wire::encode_candidates(three);
  EXPECT_EQ(wire::decode_candidates(body, 3), three);
  EXPECT_THROW(wire::decode_candidates(body, 2), ProtocolError);
}

TEST(WireCodec, CandidateFieldChecks) {
  auto one = [](json c) { return json{{"candidates", json::array({c})}}; };
  EXPECT_THROW(wire::decode_candidates(one({{"text", "a"}, {"logprob_sum", 0.5}, {"token_count", 1}, {"terminal", false}}), 1),
               ProtocolError);
  EXPECT_THROW(wire::decode_candidates(one({{"text", "a"}, {"logprob_sum", -0.5}, {"token_count", 0}, {"terminal", false}}), 1),
               ProtocolError);
  EXPECT_THROW(wire::decode_candidates(one({{"text", ""}, {"logprob_sum", -0.5}, {"token_count", 1}, {"terminal", false}}), 1),
               ProtocolError);
}

TEST(WireCodec, RequestsRoundTrip) {
  wire::ProposeRequest p;
  p.instance = instance("buy a car");
  p.instance.kind = TaskKind::counterfactual_planning;
  p.instance.condition = Condition{"on a budget", std::nullopt};
  p.prefix = {"research models"};
  p.n = 4;
  p.method = DecodingMethod::nucleus(0.9, 1.0, 42);
  const auto j = wire::encode(p);
  EXPECT_EQ(j["task"], "counterfactual-planning");
  EXPECT_EQ(j["prefix_steps"], json::array({"research models"}));
  const auto back = wire::decode_propose_request(j);
  EXPECT_EQ(wire::encode(back), j);

  wire::VerifyRequest v{Goal{"g", ""}, {"a"}, "b"};
  EXPECT_EQ(wire::encode(wire::decode_verify_request(wire::encode(v))), wire::encode(v));

  wire::CompleteRequest c{"prompt", SamplingParams{0.98, 0.9, 64, 7}};
  EXPECT_EQ(wire::encode(wire::decode_complete_request(wire::encode(c))), wire::encode(c));
}

TEST(WireCodec, MissingFieldNamed) {
  try {
    wire::decode_verify_request(json{{"goal", "g"}, {"prefix_steps", json::array()}});
    FAIL();
  } catch (const ProtocolError& e) {
    EXPECT_EQ(e.field(), "candidate_step");
  }
}

TEST(ProtocolHandlerTest, StatusCodes) {
  auto world = std::make_shared<MockWorld>();
  world->add({}, "a", 0.9, 0.9);
  ProtocolHandler h(mock_bundle(world));
  EXPECT_EQ(h.handle(wire::kVerifyPath, "{not json").status, 400);
  const auto missing = h.handle(wire::kVerifyPath, R"({"goal":"g","prefix_steps":[]})");
  EXPECT_EQ(missing.status, 400);
  EXPECT_EQ(json::parse(missing.body)["field"], "candidate_step");
  EXPECT_EQ(h.handle("/v1/other", "{}").status, 404);
  const auto off_tree = h.handle(wire::kLoglikPath, R"({"task":"planning","goal":"g","steps":["zzz"]})");
  EXPECT_EQ(off_tree.status, 422);
  const auto ok = h.handle(wire::kVerifyPath, R"({"goal":"g","prefix_steps":[],"candidate_step":"a"})");
  EXPECT_EQ(ok.status, 200);
  EXPECT_EQ(json::parse(ok.body), (json{{"validity", 0.9}}));
}

TEST(Loopback, RemoteBundleMatchesInProcess) {
  auto world = std::make_shared<MockWorld>();
  world->add({}, "a", 0.6, 0.9);
  world->add({}, "b", 0.3, 0.2);
  world->add({"a"}, "c", 1.0, 0.7);
  world->add_completion({"", "Step 1: x"});
  const auto local = mock_bundle(world);
  ScorerServer server(local);
  const int port = server.bind("127.0.0.1", 0);
  server.start();
  const auto remote = remote_bundle("http://127.0.0.1:" + std::to_string(port));

  const auto in = instance("g");
  for (const auto& m : {DecodingMethod::greedy(), DecodingMethod::beam(3), DecodingMethod::nucleus(0.9, 1.0, 5)}) {
    EXPECT_EQ(remote.proposer->propose(in, {}, 3, m), local.proposer->propose(in, {}, 3, m));
    EXPECT_EQ(remote.proposer->propose(in, {"a"}, 3, m), local.proposer->propose(in, {"a"}, 3, m));
  }
  EXPECT_EQ(remote.likelihood->loglik(in, {"a", "c"}), local.likelihood->loglik(in, {"a", "c"}));
  EXPECT_EQ(remote.verifier->verify(in.goal, {}, "b"), local.verifier->verify(in.goal, {}, "b"));
  EXPECT_EQ(remote.completion->complete("p", {}), "Step 1: x");
  EXPECT_THROW(remote.likelihood->loglik(in, {"nope"}), ScorerError);

  // A malformed body gets a protocol error and the server keeps serving.
  httplib::Client raw("127.0.0.1", port);
  auto bad = raw.Post(wire::kVerifyPath, "{{{", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  EXPECT_EQ(remote.verifier->verify(in.goal, {}, "a"), 0.9);
  server.stop();
}

TEST(ScorerServerTest, BusyPortFailsToBind) {
  auto world = std::make_shared<MockWorld>();
  ScorerServer first(mock_bundle(world));
  const int port = first.bind("127.0.0.1", 0);
  first.start();
  ScorerServer second(mock_bundle(world));
  EXPECT_THROW(second.bind("127.0.0.1", port), std::runtime_error);
  first.stop();
}

TEST(RemoteClient, OutOfRangeValidityIsProtocolError) {
  FakeEndpoint ep([](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"validity": 1.2})", "application/json");
  });
  const auto b = remote_bundle(ep.url(), std::chrono::seconds(5), fast_retry());
  try {
    b.verifier->verify(Goal{"g", ""}, {}, "a");
    FAIL();
  } catch (const ProtocolError& e) {
    EXPECT_EQ(e.field(), "validity");
  }
}

TEST(RemoteClient, ExtraCandidatesAreProtocolError) {
  FakeEndpoint ep([](const httplib::Request& req, httplib::Response& res) {
    const int n = json::parse(req.body)["n"].get<int>();
    json cands = json::array();
    for (int i = 0; i <= n; ++i)
      cands.push_back({{"text", "s" + std::to_string(i)}, {"logprob_sum", -1.0}, {"token_count", 1}, {"terminal", false}});
    res.set_content(json{{"candidates", cands}}.dump(), "application/json");
  });
  const auto b = remote_bundle(ep.url(), std::chrono::seconds(5), fast_retry());
  EXPECT_THROW(b.proposer->propose(instance("g"), {}, 2, DecodingMethod::greedy()), ProtocolError);
}

TEST(RemoteClient, RetriesServerErrorsThenSucceeds) {
  std::atomic<int> calls{0};
  FakeEndpoint ep([&](const httplib::Request&, httplib::Response& res) {
    if (calls.fetch_add(1) < 2) {
      res.status = 503;
      return;
    }
    res.set_content(R"({"validity": 0.5})", "application/json");
  });
  const auto b = remote_bundle(ep.url(), std::chrono::seconds(5), fast_retry());
  EXPECT_DOUBLE_EQ(b.verifier->verify(Goal{"g", ""}, {}, "a"), 0.5);
  EXPECT_EQ(calls.load(), 3);
}

TEST(RemoteClient, ExhaustedRetriesAreUnavailable) {
  std::atomic<int> calls{0};
  FakeEndpoint ep([&](const httplib::Request&, httplib::Response& res) {
    calls.fetch_add(1);
    res.status = 500;
  });
  const auto b = remote_bundle(ep.url(), std::chrono::seconds(5), fast_retry());
  EXPECT_THROW(b.verifier->verify(Goal{"g", ""}, {}, "a"), ScorerUnavailable);
  EXPECT_EQ(calls.load(), 3);
}

TEST(RemoteClient, UnreachableEndpointIsUnavailable) {
  // Bind and immediately release a port so nothing is listening on it.
  httplib::Server probe;
  const int port = probe.bind_to_any_port("127.0.0.1");
  probe.stop();
  const auto b = remote_bundle("http://127.0.0.1:" + std::to_string(port), std::chrono::milliseconds(500), fast_retry());
  EXPECT_THROW(b.verifier->verify(Goal{"g", ""}, {}, "a"), ScorerUnavailable);
}
