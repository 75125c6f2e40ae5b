#pragma once

#include <memory>
#include <string>

#include "grounder/gateway/mock_services.hpp"

namespace grounder::gateway::mock {

/// Hosts a MockServices instance over HTTP on one port, sleeping out each
/// reply's scripted latency before answering.
class MockHttpServer {
  public:
    explicit MockHttpServer(std::shared_ptr<MockServices> services);
    ~MockHttpServer();

    MockHttpServer(const MockHttpServer&) = delete;
    MockHttpServer& operator=(const MockHttpServer&) = delete;

    /// Binds and starts serving on a background thread; port 0 picks a free
    /// port. Returns the bound port. Throws PortInUse.
    int start(const std::string& host, int port);
    [[nodiscard]] bool running() const;
    void stop();

    [[nodiscard]] std::string base_url() const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace grounder::gateway::mock
