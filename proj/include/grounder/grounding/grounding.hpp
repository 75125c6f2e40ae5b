#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "grounder/core/image.hpp"
#include "grounder/description/structured_description.hpp"
#include "grounder/gateway/services.hpp"

namespace grounder::grounding {

struct Assignment {
    /// Position of the instance in the description, equal to detection.prompt_index.
    std::size_t instance = 0;
    std::string object_name;
    gateway::Detection detection;
    /// 1 for the instance's most confident detection, then 2, 3, ... in insertion order.
    std::size_t rank = 1;

    bool operator==(const Assignment&) const = default;
};

struct GroundingResult {
    std::vector<Assignment> assignments;
    /// Instance indices without any detector output.
    std::vector<std::size_t> ungrounded;
    std::vector<std::string> ungrounded_names;
    double odf = 1.0;
    std::size_t budget = 0;

    [[nodiscard]] nlohmann::json to_json() const;
    static GroundingResult from_json(const nlohmann::json& j);
};

/// max(n, floor(odf * n)). Throws InvalidArgument for odf < 1.
std::size_t budget(double odf, std::size_t n);

/// Total order used everywhere detections are ranked: confidence descending, then
/// prompt_index ascending, then the bbox tuple ascending.
bool ranks_before(const gateway::Detection& a, const gateway::Detection& b);

/// The detector prompt list: one description per instance, in instance order.
std::vector<std::string> detector_prompts(const description::StructuredDescription& desc);

/// Two-pass curation of raw detector output for `names.size()` instances.
GroundingResult curate(std::span<const std::string> names, std::vector<gateway::Detection> candidates, double odf);

/// Detector call plus curation. Detector errors surface as DetectorFailure.
GroundingResult ground_instances(const description::StructuredDescription& desc, const Image& image,
                                 gateway::DetectorClient& detector, double odf);

}  // namespace grounder::grounding
