#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "grounder/core/error.hpp"

namespace grounder::gateway {

struct HttpRequest {
    std::string method = "POST";
    std::string path;
    std::string body;
    std::vector<std::pair<std::string, std::string>> headers;
};

struct HttpReply {
    int status = 0;
    std::string body;
};

enum class TransportFailure { kTimeout, kConnection };

class TransportError : public Error {
  public:
    TransportError(TransportFailure kind, const std::string& message)
        : Error(ErrorCode::kServiceUnavailable, message), kind_(kind) {}

    [[nodiscard]] TransportFailure kind() const { return kind_; }

  private:
    TransportFailure kind_;
};

/// Moves one request to `base_url + request.path`. Throws TransportError on
/// timeout or connection failure; any HTTP status is returned, not thrown.
class Transport {
  public:
    virtual ~Transport() = default;
    virtual HttpReply send(const std::string& base_url, const HttpRequest& request, std::chrono::milliseconds timeout) = 0;
};

/// Plain HTTP(S) via cpp-httplib. A fresh client per call keeps it thread-safe.
class HttpTransport final : public Transport {
  public:
    HttpReply send(const std::string& base_url, const HttpRequest& request, std::chrono::milliseconds timeout) override;
};

namespace mock {
class MockServices;
}

/// Dispatches `mock://<name>` URLs to registered in-process mock services and
/// everything else to HTTP.
class RoutingTransport final : public Transport {
  public:
    RoutingTransport();

    void register_mock(const std::string& name, std::shared_ptr<mock::MockServices> services);
    [[nodiscard]] std::shared_ptr<mock::MockServices> mock(const std::string& name) const;

    HttpReply send(const std::string& base_url, const HttpRequest& request, std::chrono::milliseconds timeout) override;

  private:
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<mock::MockServices>> mocks_;
    HttpTransport http_;
};

/// Splits "scheme://host:port/prefix" into ("scheme://host:port", "/prefix").
std::pair<std::string, std::string> split_base_url(const std::string& base_url);

}  // namespace grounder::gateway
