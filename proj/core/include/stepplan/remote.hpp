#pragma once

#include <chrono>
#include <string>

#include "stepplan/scorer.hpp"

namespace stepplan {

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{250};  // doubled after each failure
};

/// Bundle whose calls travel over the scorer wire protocol to `endpoint_url`
/// (e.g. "http://127.0.0.1:8080"). Transport failures and 5xx replies are
/// retried; exhausting the policy raises ScorerUnavailable. Schema violations
/// in replies raise ProtocolError; 422 replies raise ScorerError. Each call
/// opens its own connection, so the bundle is safe to share across threads.
ScorerBundle remote_bundle(const std::string& endpoint_url,
                           std::chrono::milliseconds timeout = std::chrono::seconds(30),
                           RetryPolicy retry = {});

}  // namespace stepplan
