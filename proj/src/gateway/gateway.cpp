#include "grounder/gateway/gateway.hpp"

namespace grounder::gateway {

Gateway::Gateway(GatewaySettings settings, std::shared_ptr<Transport> transport)
    : settings_(std::move(settings)), transport_(std::move(transport)) {
    if (!transport_) {
        throw Error(ErrorCode::kConfig, "gateway needs a transport");
    }
    chat_pool_ = std::make_unique<EndpointPool>(settings_.chat.endpoints, settings_.chat.pool);
    detector_pool_ = std::make_unique<EndpointPool>(settings_.detector.endpoints, settings_.detector.pool);
    tracker_pool_ = std::make_unique<EndpointPool>(settings_.tracker.endpoints, settings_.tracker.pool);
    embedder_pool_ = std::make_unique<EndpointPool>(settings_.embedder.endpoints, settings_.embedder.pool);

    chat_ = std::make_unique<ChatClient>(
        *chat_pool_, *transport_,
        ChatDefaults{settings_.chat.model, settings_.chat.temperature, settings_.chat.max_tokens, settings_.chat.api_key});
    detector_ = std::make_unique<DetectorClient>(*detector_pool_, *transport_);
    tracker_ = std::make_unique<TrackerClient>(*tracker_pool_, *transport_);
    embedder_ = std::make_unique<EmbedderClient>(*embedder_pool_, *transport_,
                                                 settings_.embedder.model.empty() ? "embedder" : settings_.embedder.model);
}

}  // namespace grounder::gateway
