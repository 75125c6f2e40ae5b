#pragma once

#include <memory>
#include <string>
#include <vector>

#include "grounder/gateway/chat.hpp"
#include "grounder/gateway/endpoint_pool.hpp"
#include "grounder/gateway/services.hpp"
#include "grounder/gateway/transport.hpp"

namespace grounder::gateway {

struct ServiceSettings {
    std::vector<EndpointConfig> endpoints;
    PoolOptions pool;
    std::string model;
    double temperature = 0.0;
    int max_tokens = 2048;
    std::string api_key;
};

struct GatewaySettings {
    ServiceSettings chat{{}, PoolOptions{std::chrono::milliseconds{120000}, 2, "/health"}, "", 0.0, 2048, ""};
    ServiceSettings detector;
    ServiceSettings tracker;
    ServiceSettings embedder;
};

/// Owns one endpoint pool and client per external service role.
class Gateway {
  public:
    Gateway(GatewaySettings settings, std::shared_ptr<Transport> transport);

    [[nodiscard]] ChatClient& chat() { return *chat_; }
    [[nodiscard]] DetectorClient& detector() { return *detector_; }
    [[nodiscard]] TrackerClient& tracker() { return *tracker_; }
    [[nodiscard]] EmbedderClient& embedder() { return *embedder_; }
    [[nodiscard]] Transport& transport() { return *transport_; }
    [[nodiscard]] const GatewaySettings& settings() const { return settings_; }

  private:
    GatewaySettings settings_;
    std::shared_ptr<Transport> transport_;
    std::unique_ptr<EndpointPool> chat_pool_;
    std::unique_ptr<EndpointPool> detector_pool_;
    std::unique_ptr<EndpointPool> tracker_pool_;
    std::unique_ptr<EndpointPool> embedder_pool_;
    std::unique_ptr<ChatClient> chat_;
    std::unique_ptr<DetectorClient> detector_;
    std::unique_ptr<TrackerClient> tracker_;
    std::unique_ptr<EmbedderClient> embedder_;
};

}  // namespace grounder::gateway
