#include "grounder/evaluation/definitions.hpp"

#include <fstream>
#include <map>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "grounder/core/error.hpp"
#include "grounder/core/text.hpp"

namespace grounder::evaluation {

DefinitionGenerator::DefinitionGenerator(gateway::ChatClient& chat, description::PromptTemplate tmpl,
                                         std::size_t max_concurrency)
    : chat_(chat), template_(std::move(tmpl)), max_concurrency_(max_concurrency) {}

std::string DefinitionGenerator::key(const DefinitionItem& item) const {
    std::string material = chat_.defaults().model;
    material += '\x1f';
    material += item.name;
    material += '\x1f';
    material += item.description ? "d:" + *item.description : "-";
    return hex64(fnv1a64(material));
}

std::vector<DefinitionResult> DefinitionGenerator::generate(const std::vector<DefinitionItem>& items) {
    std::vector<DefinitionResult> out(items.size());
    std::map<std::string, std::vector<std::size_t>> pending;
    std::vector<std::string> order;
    {
        std::lock_guard lock(mutex_);
        for (std::size_t i = 0; i < items.size(); ++i) {
            const auto k = key(items[i]);
            if (const auto it = cache_.find(k); it != cache_.end()) {
                out[i].text = it->second;
                continue;
            }
            auto [slot, inserted] = pending.try_emplace(k);
            if (inserted) {
                order.push_back(k);
            }
            slot->second.push_back(i);
        }
    }
    std::vector<gateway::ChatRequest> requests;
    for (const auto& k : order) {
        const auto& item = items[pending.at(k).front()];
        const auto text = template_.render({{"object_name", item.name},
                                            {"description", item.description ? *item.description : item.name}});
        requests.push_back(gateway::make_user_request(text, {}));
    }
    auto responses = chat_.fan_out(std::move(requests), max_concurrency_);

    std::lock_guard lock(mutex_);
    upstream_calls_ += order.size();
    for (std::size_t r = 0; r < order.size(); ++r) {
        const auto& slots = pending.at(order[r]);
        if (responses[r].ok() && !trim(responses[r].value().text).empty()) {
            cache_[order[r]] = responses[r].value().text;
            for (const auto i : slots) {
                out[i].text = responses[r].value().text;
            }
            continue;
        }
        const std::string error = responses[r].ok() ? "empty definition" : responses[r].error().message;
        spdlog::warn("definition for {} failed: {}", items[slots.front()].name, error);
        for (const auto i : slots) {
            out[i].fallback = true;
            out[i].error = error;
        }
    }
    return out;
}

std::size_t DefinitionGenerator::upstream_calls() const {
    std::lock_guard lock(mutex_);
    return upstream_calls_;
}

void DefinitionGenerator::load_cache(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        return;
    }
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (!j.is_object()) {
        throw Error(ErrorCode::kIo, "definition cache is corrupt: " + path.string());
    }
    std::lock_guard lock(mutex_);
    for (const auto& [k, v] : j.items()) {
        if (v.is_string()) {
            cache_[k] = v.get<std::string>();
        }
    }
}

void DefinitionGenerator::save_cache(const std::filesystem::path& path) const {
    nlohmann::json j = nlohmann::json::object();
    {
        std::lock_guard lock(mutex_);
        for (const auto& [k, v] : cache_) {
            j[k] = v;
        }
    }
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorCode::kIo, "cannot write definition cache: " + path.string());
    }
    out << j.dump(1) << '\n';
}

}  // namespace grounder::evaluation
