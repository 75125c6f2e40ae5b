#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "grounder/core/image.hpp"
#include "grounder/core/parallel.hpp"
#include "grounder/gateway/service_call.hpp"

namespace grounder::gateway {

enum class Role { kSystem, kUser, kAssistant };

struct TextPart {
    std::string text;
};

struct ImagePart {
    std::string media_type = "image/png";
    std::string base64_data;
};

using ContentPart = std::variant<TextPart, ImagePart>;

struct ChatMessage {
    Role role = Role::kUser;
    std::vector<ContentPart> content;
};

struct ChatRequest {
    std::vector<ChatMessage> messages;
    std::string model;
    double temperature = 0.0;
    int max_tokens = 2048;

    /// Throws InvalidArgument unless: at most one system message, at least one
    /// user message, every image part decodes to non-empty bytes,
    /// temperature >= 0 and max_tokens > 0.
    void validate() const;

    /// OpenAI-style Chat Completions body.
    [[nodiscard]] nlohmann::json to_json() const;

    [[nodiscard]] std::size_t image_count() const;
    /// Concatenated text parts, newline-separated.
    [[nodiscard]] std::string text() const;
};

/// Single user message holding the text followed by the images.
ChatRequest make_user_request(const std::string& text, const std::vector<const Image*>& images);

struct Usage {
    int prompt_tokens = 0;
    int completion_tokens = 0;
};

struct ChatResponse {
    std::string text;
    Usage usage;
    double latency_ms = 0.0;
    std::size_t endpoint = 0;
    std::vector<AttemptRecord> attempts;
};

struct ChatDefaults {
    std::string model;
    double temperature = 0.0;
    int max_tokens = 2048;
    std::string api_key;
};

class ChatClient {
  public:
    ChatClient(EndpointPool& pool, Transport& transport, ChatDefaults defaults);

    /// Requests without a model take model, temperature and max_tokens from the defaults.
    ChatResponse complete(ChatRequest request);

    /// All requests with at most `max_concurrency` in flight; slot i answers request i.
    std::vector<Outcome<ChatResponse>> fan_out(std::vector<ChatRequest> requests, std::size_t max_concurrency);

    [[nodiscard]] const ChatDefaults& defaults() const { return defaults_; }
    [[nodiscard]] EndpointPool& pool() { return pool_; }

  private:
    EndpointPool& pool_;
    Transport& transport_;
    ChatDefaults defaults_;
};

/// Parses a Chat Completions response body. Throws MalformedResponse.
ChatResponse parse_chat_body(const nlohmann::json& body);

}  // namespace grounder::gateway
