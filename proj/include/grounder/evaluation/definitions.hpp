#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "grounder/description/prompt.hpp"
#include "grounder/gateway/chat.hpp"

namespace grounder::evaluation {

struct DefinitionItem {
    std::string name;
    /// Set for detections, absent for dataset classes.
    std::optional<std::string> description;

    bool operator==(const DefinitionItem&) const = default;
};

struct DefinitionResult {
    std::string text;
    /// True when generation failed; matching then embeds the name alone.
    bool fallback = false;
    std::string error;
};

/// Category definitions from the chat service, cached by exact input.
class DefinitionGenerator {
  public:
    DefinitionGenerator(gateway::ChatClient& chat, description::PromptTemplate tmpl, std::size_t max_concurrency = 8);

    /// One upstream call per distinct uncached item; slot i answers items[i].
    std::vector<DefinitionResult> generate(const std::vector<DefinitionItem>& items);

    [[nodiscard]] std::size_t upstream_calls() const;
    void load_cache(const std::filesystem::path& path);
    void save_cache(const std::filesystem::path& path) const;

  private:
    [[nodiscard]] std::string key(const DefinitionItem& item) const;

    gateway::ChatClient& chat_;
    description::PromptTemplate template_;
    std::size_t max_concurrency_;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, std::string> cache_;
    std::size_t upstream_calls_ = 0;
};

}  // namespace grounder::evaluation
