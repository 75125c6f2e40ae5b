#include "grounder/description/attribution.hpp"

#include <spdlog/spdlog.h>

#include "grounder/core/error.hpp"
#include "grounder/core/text.hpp"
#include "grounder/description/json_extract.hpp"

namespace grounder::description {

nlohmann::json AttributionReport::to_json() const {
    nlohmann::json j{{"key", key}, {"matched", matched}, {"dropped", dropped}, {"failed", failed}};
    if (!error.empty()) {
        j["error"] = error;
    }
    return j;
}

gateway::ChatRequest build_attribution_request(const StructuredDescription& desc, const Image& image,
                                               const std::string& task, const PromptTemplate& tmpl) {
    if (desc.instances.empty()) {
        throw Error(ErrorCode::kEmptyDescription, "attribution needs a non-empty description");
    }
    if (trim(task).empty()) {
        throw Error(ErrorCode::kInvalidArgument, "attribution needs a task");
    }
    const auto text = tmpl.render({{"description", desc.to_json().dump()}, {"task", task}});
    return gateway::make_user_request(text, {&image});
}

namespace {

std::vector<std::string> references(const nlohmann::json& parsed) {
    const nlohmann::json* list = &parsed;
    if (parsed.is_object() && parsed.size() == 1 && parsed.begin()->is_array()) {
        list = &*parsed.begin();
    }
    if (!list->is_array()) {
        throw Error(ErrorCode::kNoValidJson, "attribution response is not a list");
    }
    std::vector<std::string> out;
    for (const auto& item : *list) {
        if (item.is_string()) {
            out.push_back(item.get<std::string>());
        } else if (item.is_object() && item.contains(kObjectName) && item[std::string(kObjectName)].is_string()) {
            out.push_back(item[std::string(kObjectName)].get<std::string>());
        } else {
            out.push_back(item.dump());
        }
    }
    return out;
}

}  // namespace

AttributionReport apply_attribution(StructuredDescription& desc, const std::string& key, std::string_view response) {
    AttributionReport report;
    report.key = key;
    std::vector<std::string> refs;
    try {
        refs = references(extract_json(response));
    } catch (const Error& e) {
        report.failed = true;
        report.error = e.what();
        desc.provenance.report.notes.push_back("attribution " + key + " failed: " + e.what());
        spdlog::warn("attribution {} left unset: {}", key, e.what());
        return report;
    }
    const auto names = desc.names();
    std::vector<bool> hit(names.size(), false);
    for (const auto& ref : refs) {
        const auto idx = fuzzy_match(trim(ref), names);
        if (!idx) {
            report.dropped.push_back(ref);
            spdlog::info("attribution {} dropped unmatched reference {}", key, ref);
            continue;
        }
        hit[*idx] = true;
    }
    for (std::size_t i = 0; i < names.size(); ++i) {
        desc.instances[i].attributes[key] = static_cast<bool>(hit[i]);
        if (hit[i]) {
            report.matched.push_back(names[i]);
        }
    }
    return report;
}

std::vector<AttributionReport> decoupled_attribution(StructuredDescription& desc, const Image& image,
                                                     const std::vector<AttributionTask>& tasks,
                                                     gateway::ChatClient& chat, const PromptTemplate& tmpl,
                                                     std::size_t max_concurrency) {
    std::vector<gateway::ChatRequest> requests;
    requests.reserve(tasks.size());
    for (const auto& t : tasks) {
        requests.push_back(build_attribution_request(desc, image, t.task, tmpl));
    }
    auto responses = chat.fan_out(std::move(requests), max_concurrency);
    std::vector<AttributionReport> reports;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (responses[i].ok()) {
            reports.push_back(apply_attribution(desc, tasks[i].key, responses[i].value().text));
        } else {
            AttributionReport failed;
            failed.key = tasks[i].key;
            failed.failed = true;
            failed.error = responses[i].error().message;
            desc.provenance.report.notes.push_back("attribution " + tasks[i].key + " failed: " + failed.error);
            reports.push_back(std::move(failed));
        }
    }
    return reports;
}

}  // namespace grounder::description
