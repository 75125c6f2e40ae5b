#include "grounder/gateway/chat.hpp"

#include "grounder/core/text.hpp"

namespace grounder::gateway {

namespace {

const char* role_name(Role role) {
    switch (role) {
        case Role::kSystem: return "system";
        case Role::kUser: return "user";
        case Role::kAssistant: return "assistant";
    }
    return "user";
}

}  // namespace

void ChatRequest::validate() const {
    int systems = 0;
    int users = 0;
    for (const auto& m : messages) {
        systems += m.role == Role::kSystem ? 1 : 0;
        users += m.role == Role::kUser ? 1 : 0;
        for (const auto& part : m.content) {
            if (const auto* image = std::get_if<ImagePart>(&part)) {
                if (image->base64_data.empty() || base64_decode(image->base64_data).empty()) {
                    throw Error(ErrorCode::kInvalidArgument, "image payload decodes to zero bytes");
                }
            }
        }
    }
    if (systems > 1) {
        throw Error(ErrorCode::kInvalidArgument, "chat request has more than one system message");
    }
    if (users < 1) {
        throw Error(ErrorCode::kInvalidArgument, "chat request needs a user message");
    }
    if (temperature < 0.0) {
        throw Error(ErrorCode::kInvalidArgument, "temperature must be >= 0");
    }
    if (max_tokens <= 0) {
        throw Error(ErrorCode::kInvalidArgument, "max_tokens must be positive");
    }
}

nlohmann::json ChatRequest::to_json() const {
    auto msgs = nlohmann::json::array();
    for (const auto& m : messages) {
        auto content = nlohmann::json::array();
        for (const auto& part : m.content) {
            if (const auto* t = std::get_if<TextPart>(&part)) {
                content.push_back({{"type", "text"}, {"text", t->text}});
            } else {
                const auto& image = std::get<ImagePart>(part);
                content.push_back({{"type", "image_url"},
                                   {"image_url", {{"url", "data:" + image.media_type + ";base64," + image.base64_data}}}});
            }
        }
        msgs.push_back({{"role", role_name(m.role)}, {"content", std::move(content)}});
    }
    return nlohmann::json{{"model", model}, {"messages", std::move(msgs)}, {"temperature", temperature}, {"max_tokens", max_tokens}};
}

std::size_t ChatRequest::image_count() const {
    std::size_t n = 0;
    for (const auto& m : messages) {
        for (const auto& part : m.content) {
            n += std::holds_alternative<ImagePart>(part) ? 1 : 0;
        }
    }
    return n;
}

std::string ChatRequest::text() const {
    std::string out;
    for (const auto& m : messages) {
        for (const auto& part : m.content) {
            if (const auto* t = std::get_if<TextPart>(&part)) {
                if (!out.empty()) {
                    out += '\n';
                }
                out += t->text;
            }
        }
    }
    return out;
}

ChatRequest make_user_request(const std::string& text, const std::vector<const Image*>& images) {
    ChatMessage message{Role::kUser, {TextPart{text}}};
    for (const Image* image : images) {
        message.content.emplace_back(ImagePart{"image/png", image->to_base64()});
    }
    ChatRequest request;
    request.messages.push_back(std::move(message));
    return request;
}

ChatResponse parse_chat_body(const nlohmann::json& body) {
    ChatResponse response;
    try {
        const auto& content = body.at("choices").at(0).at("message").at("content");
        if (content.is_string()) {
            response.text = content.get<std::string>();
        } else if (content.is_array()) {
            for (const auto& part : content) {
                if (part.value("type", "") == "text") {
                    response.text += part.at("text").get<std::string>();
                }
            }
        } else {
            throw Error(ErrorCode::kMalformedResponse, "message content is neither text nor parts");
        }
        if (body.contains("usage") && body["usage"].is_object()) {
            response.usage.prompt_tokens = body["usage"].value("prompt_tokens", 0);
            response.usage.completion_tokens = body["usage"].value("completion_tokens", 0);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kMalformedResponse, std::string("chat response missing fields: ") + e.what());
    }
    return response;
}

ChatClient::ChatClient(EndpointPool& pool, Transport& transport, ChatDefaults defaults)
    : pool_(pool), transport_(transport), defaults_(std::move(defaults)) {}

ChatResponse ChatClient::complete(ChatRequest request) {
    if (request.model.empty()) {
        request.model = defaults_.model;
        request.temperature = defaults_.temperature;
        request.max_tokens = defaults_.max_tokens;
    }
    request.validate();
    std::vector<std::pair<std::string, std::string>> headers;
    if (!defaults_.api_key.empty()) {
        headers.emplace_back("Authorization", "Bearer " + defaults_.api_key);
    }
    auto call = call_json(pool_, transport_, "/chat/completions", request.to_json(), headers, ErrorCode::kAllEndpointsFailed);
    ChatResponse response;
    try {
        response = parse_chat_body(call.body);
    } catch (const Error& e) {
        throw GatewayError(ErrorCode::kMalformedResponse, e.what(), std::move(call.attempts));
    }
    response.latency_ms = call.latency_ms;
    response.endpoint = call.endpoint;
    response.attempts = std::move(call.attempts);
    return response;
}

std::vector<Outcome<ChatResponse>> ChatClient::fan_out(std::vector<ChatRequest> requests, std::size_t max_concurrency) {
    if (max_concurrency == 0) {
        throw Error(ErrorCode::kInvalidArgument, "max_concurrency must be at least 1");
    }
    return parallel_collect<ChatResponse>(requests.size(), max_concurrency,
                                          [&](std::size_t i) { return complete(std::move(requests[i])); });
}

}  // namespace grounder::gateway
