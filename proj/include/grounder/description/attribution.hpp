#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "grounder/core/image.hpp"
#include "grounder/description/prompt.hpp"
#include "grounder/description/structured_description.hpp"
#include "grounder/gateway/chat.hpp"

namespace grounder::description {

/// One follow-up question: which instances satisfy `task`, stored as boolean `key`.
struct AttributionTask {
    std::string key = "task_relevant";
    std::string task;
};

struct AttributionReport {
    std::string key;
    std::vector<std::string> matched;
    /// References that matched no instance, verbatim.
    std::vector<std::string> dropped;
    /// Set when the response held no usable list; the attribute is then left unset.
    bool failed = false;
    std::string error;

    [[nodiscard]] nlohmann::json to_json() const;
};

gateway::ChatRequest build_attribution_request(const StructuredDescription& desc, const Image& image,
                                               const std::string& task, const PromptTemplate& tmpl);

/// Applies a raw response to `desc` in place. Instance order and count never change.
AttributionReport apply_attribution(StructuredDescription& desc, const std::string& key, std::string_view response);

/// One request per task, issued concurrently; results are merged in task order.
std::vector<AttributionReport> decoupled_attribution(StructuredDescription& desc, const Image& image,
                                                     const std::vector<AttributionTask>& tasks,
                                                     gateway::ChatClient& chat, const PromptTemplate& tmpl,
                                                     std::size_t max_concurrency = 4);

}  // namespace grounder::description
