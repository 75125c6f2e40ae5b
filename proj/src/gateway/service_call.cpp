#include "grounder/gateway/service_call.hpp"

#include <optional>

#include <spdlog/spdlog.h>

#include "grounder/core/timing.hpp"

namespace grounder::gateway {

CallResult call_json(EndpointPool& pool, Transport& transport, const std::string& path, const nlohmann::json& body,
                     const std::vector<std::pair<std::string, std::string>>& headers, ErrorCode exhausted_code) {
    HttpRequest request{"POST", path, body.dump(), headers};
    request.headers.emplace_back("Content-Type", "application/json");

    std::vector<AttemptRecord> attempts;
    int last_status = 0;
    const int max_attempts = 1 + pool.options().max_retries;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        std::optional<EndpointPool::Lease> lease;
        try {
            lease.emplace(pool.acquire());
        } catch (const Error& e) {
            if (e.code() != ErrorCode::kNoHealthyEndpoint) {
                throw;
            }
            if (pool.probe_dead(transport) > 0) {
                lease.emplace(pool.acquire());
            }
        }
        if (!lease) {
            attempts.push_back(AttemptRecord{pool.size(), "", "no healthy endpoint", 0.0});
            continue;
        }

        const std::size_t id = lease->id();
        const std::string& url = pool.url(id);
        Stopwatch watch;
        HttpReply reply;
        try {
            reply = transport.send(url, request, pool.options().timeout);
        } catch (const TransportError& e) {
            const char* what = e.kind() == TransportFailure::kTimeout ? "timeout" : "connection error";
            attempts.push_back(AttemptRecord{id, url, std::string(what) + ": " + e.what(), watch.elapsed_ms()});
            pool.mark_failure(id);
            spdlog::debug("{}{} failed: {}", url, path, e.what());
            continue;
        }
        const double latency = watch.elapsed_ms();
        last_status = reply.status;

        if (reply.status >= 200 && reply.status < 300) {
            auto parsed = nlohmann::json::parse(reply.body, nullptr, false);
            if (parsed.is_discarded()) {
                attempts.push_back(AttemptRecord{id, url, "malformed body", latency});
                throw GatewayError(ErrorCode::kMalformedResponse, "service returned a non-JSON body from " + url + path,
                                   std::move(attempts), reply.status);
            }
            attempts.push_back(AttemptRecord{id, url, "ok", latency});
            return CallResult{std::move(parsed), id, latency, std::move(attempts)};
        }

        attempts.push_back(AttemptRecord{id, url, "http " + std::to_string(reply.status), latency});
        if (reply.status >= 500) {
            pool.mark_failure(id);
            continue;
        }
        if (reply.status == 429 || reply.status == 408) {
            continue;
        }
        throw GatewayError(ErrorCode::kRequestRejected,
                           "request rejected by " + url + path + " (http " + std::to_string(reply.status) + "): " + reply.body,
                           std::move(attempts), reply.status);
    }
    throw GatewayError(exhausted_code, "all " + std::to_string(max_attempts) + " attempts on " + path + " failed",
                       std::move(attempts), last_status);
}

}  // namespace grounder::gateway
