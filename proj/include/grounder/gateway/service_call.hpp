#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "grounder/gateway/endpoint_pool.hpp"

namespace grounder::gateway {

/// One try against one endpoint (or a failed routing attempt).
struct AttemptRecord {
    std::size_t endpoint = 0;
    std::string url;
    std::string outcome;
    double latency_ms = 0.0;
};

/// A gateway failure together with the attempt log that led to it.
class GatewayError : public Error {
  public:
    GatewayError(ErrorCode code, const std::string& message, std::vector<AttemptRecord> attempts, int last_status = 0)
        : Error(code, message), attempts_(std::move(attempts)), last_status_(last_status) {}

    [[nodiscard]] const std::vector<AttemptRecord>& attempts() const { return attempts_; }
    [[nodiscard]] int last_status() const { return last_status_; }

  private:
    std::vector<AttemptRecord> attempts_;
    int last_status_;
};

struct CallResult {
    nlohmann::json body;
    std::size_t endpoint = 0;
    double latency_ms = 0.0;
    std::vector<AttemptRecord> attempts;
};

/// POSTs `body` to `path` on a routed endpoint, retrying timeouts, connection
/// errors and 5xx replies on the next routed endpoint. At most
/// 1 + max_retries attempts are made. Failing endpoints are marked dead; when
/// none is healthy the pool's dead endpoints are probed before giving up on an
/// attempt.
///
/// Exhaustion throws GatewayError(exhausted_code). A 2xx reply that is not JSON
/// throws MalformedResponse; other 4xx replies throw RequestRejected. Neither is retried.
CallResult call_json(EndpointPool& pool, Transport& transport, const std::string& path, const nlohmann::json& body,
                     const std::vector<std::pair<std::string, std::string>>& headers, ErrorCode exhausted_code);

}  // namespace grounder::gateway
