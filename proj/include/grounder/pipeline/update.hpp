#pragma once

#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "grounder/core/image.hpp"
#include "grounder/description/attribution.hpp"
#include "grounder/description/prompt.hpp"
#include "grounder/description/schema.hpp"
#include "grounder/description/structured_description.hpp"
#include "grounder/gateway/gateway.hpp"
#include "grounder/grounding/grounding.hpp"
#include "grounder/pipeline/config.hpp"
#include "grounder/tracking/track_registry.hpp"
#include "grounder/validation/validation.hpp"

namespace grounder::pipeline {

/// Wall time of each update step in milliseconds.
struct StepTimes {
    double description = 0.0;
    double attribution = 0.0;
    double detection = 0.0;
    double segmentation = 0.0;
    double validation = 0.0;

    [[nodiscard]] double total() const { return description + attribution + detection + segmentation + validation; }
    StepTimes& operator+=(const StepTimes& other);
};

struct UpdateOutcome {
    description::StructuredDescription description;
    std::vector<description::AttributionReport> attribution;
    grounding::GroundingResult grounding;
    tracking::AdmitReport admitted;
    std::optional<validation::AssignmentResult> validation;
    StepTimes times;
};

/// The slow path: describe, attribute, ground, segment, and optionally validate.
class UpdatePipeline {
  public:
    UpdatePipeline(const PipelineConfig& config, gateway::Gateway& gateway);

    /// Description plus decoupled attribution when a task is configured.
    description::StructuredDescription describe(const Image& image, StepTimes& times,
                                                std::vector<description::AttributionReport>* attribution = nullptr);

    /// Full update of `registry` from `image`. Tracks admitted by this update are
    /// validated when enabled; rejected ones are marked, corrected ones relabelled.
    UpdateOutcome run(const Image& image, tracking::TrackRegistry& registry);

    [[nodiscard]] const description::AttributeSchema& schema() const { return schema_; }
    [[nodiscard]] const description::PromptSet& prompts() const { return prompts_; }
    [[nodiscard]] const PipelineConfig& config() const { return config_; }

  private:
    const PipelineConfig& config_;
    gateway::Gateway& gateway_;
    description::AttributeSchema schema_;
    description::PromptSet prompts_;
};

}  // namespace grounder::pipeline
