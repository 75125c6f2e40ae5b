#include "grounder/grounding/grounding.hpp"

#include <algorithm>
#include <cmath>

#include "grounder/core/error.hpp"

namespace grounder::grounding {

std::size_t budget(double odf, std::size_t n) {
    if (!std::isfinite(odf) || odf < 1.0) {
        throw Error(ErrorCode::kInvalidArgument, "odf must be a finite number >= 1");
    }
    // The epsilon keeps products like 1.2 * 5 from flooring to 5 when they land just below 6.
    const auto scaled = static_cast<std::size_t>(std::floor(odf * static_cast<double>(n) + 1e-9));
    return std::max(n, scaled);
}

bool ranks_before(const gateway::Detection& a, const gateway::Detection& b) {
    if (a.confidence != b.confidence) {
        return a.confidence > b.confidence;
    }
    if (a.prompt_index != b.prompt_index) {
        return a.prompt_index < b.prompt_index;
    }
    return a.bbox < b.bbox;
}

std::vector<std::string> detector_prompts(const description::StructuredDescription& desc) {
    std::vector<std::string> prompts;
    prompts.reserve(desc.instances.size());
    for (const auto& i : desc.instances) {
        prompts.push_back(i.description);
    }
    return prompts;
}

GroundingResult curate(std::span<const std::string> names, std::vector<gateway::Detection> candidates, double odf) {
    const std::size_t n = names.size();
    GroundingResult out;
    out.odf = odf;
    out.budget = budget(odf, n);
    for (const auto& c : candidates) {
        if (c.prompt_index >= n) {
            throw Error(ErrorCode::kProtocolViolation, "detection refers to prompt " + std::to_string(c.prompt_index));
        }
    }
    std::stable_sort(candidates.begin(), candidates.end(), ranks_before);

    std::vector<std::size_t> ranks(n, 0);
    std::vector<bool> used(candidates.size(), false);
    for (std::size_t instance = 0; instance < n; ++instance) {
        const auto best = std::find_if(candidates.begin(), candidates.end(),
                                       [&](const gateway::Detection& d) { return d.prompt_index == instance; });
        if (best == candidates.end()) {
            out.ungrounded.push_back(instance);
            out.ungrounded_names.push_back(names[instance]);
            continue;
        }
        used[static_cast<std::size_t>(best - candidates.begin())] = true;
        ranks[instance] = 1;
        out.assignments.push_back({instance, names[instance], *best, 1});
    }
    // The second pass only spends the slots beyond one per instance, so instances without
    // detections never turn into duplicates of the others.
    std::size_t extra = out.budget - n;
    for (std::size_t i = 0; i < candidates.size() && extra > 0; ++i) {
        if (used[i]) {
            continue;
        }
        const auto instance = candidates[i].prompt_index;
        out.assignments.push_back({instance, names[instance], candidates[i], ++ranks[instance]});
        --extra;
    }
    return out;
}

GroundingResult ground_instances(const description::StructuredDescription& desc, const Image& image,
                                 gateway::DetectorClient& detector, double odf) {
    if (desc.instances.empty()) {
        throw Error(ErrorCode::kEmptyDescription, "cannot ground an empty description");
    }
    budget(odf, desc.instances.size());
    const auto prompts = detector_prompts(desc);
    std::vector<gateway::Detection> detections;
    try {
        detections = detector.detect(image, prompts);
    } catch (const Error& e) {
        throw Error(ErrorCode::kDetectorFailure, std::string("detector: ") + e.what());
    }
    return curate(desc.names(), std::move(detections), odf);
}

nlohmann::json GroundingResult::to_json() const {
    auto list = nlohmann::json::array();
    for (const auto& a : assignments) {
        list.push_back({{"instance", a.instance},
                        {"object_name", a.object_name},
                        {"prompt_index", a.detection.prompt_index},
                        {"bbox", a.detection.bbox},
                        {"confidence", a.detection.confidence},
                        {"rank", a.rank}});
    }
    auto missing = nlohmann::json::array();
    for (std::size_t i = 0; i < ungrounded.size(); ++i) {
        missing.push_back({{"instance", ungrounded[i]}, {"object_name", ungrounded_names[i]}});
    }
    return {{"odf", odf}, {"budget", budget}, {"assignments", list}, {"ungrounded", missing}};
}

GroundingResult GroundingResult::from_json(const nlohmann::json& j) {
    GroundingResult out;
    try {
        out.odf = j.at("odf").get<double>();
        out.budget = j.at("budget").get<std::size_t>();
        for (const auto& a : j.at("assignments")) {
            Assignment as;
            as.instance = a.at("instance").get<std::size_t>();
            as.object_name = a.at("object_name").get<std::string>();
            as.detection.prompt_index = a.at("prompt_index").get<std::size_t>();
            as.detection.bbox = a.at("bbox").get<BBox>();
            as.detection.confidence = a.at("confidence").get<double>();
            as.rank = a.at("rank").get<std::size_t>();
            out.assignments.push_back(std::move(as));
        }
        for (const auto& u : j.at("ungrounded")) {
            out.ungrounded.push_back(u.at("instance").get<std::size_t>());
            out.ungrounded_names.push_back(u.at("object_name").get<std::string>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kInvalidArgument, std::string("grounding result: ") + e.what());
    }
    return out;
}

}  // namespace grounder::grounding
