#include "grounder/pipeline/update.hpp"

#include <set>

#include <spdlog/spdlog.h>

#include "grounder/core/timing.hpp"

namespace grounder::pipeline {

StepTimes& StepTimes::operator+=(const StepTimes& other) {
    description += other.description;
    attribution += other.attribution;
    detection += other.detection;
    segmentation += other.segmentation;
    validation += other.validation;
    return *this;
}

UpdatePipeline::UpdatePipeline(const PipelineConfig& config, gateway::Gateway& gateway)
    : config_(config),
      gateway_(gateway),
      schema_(description::AttributeSchema::load(config.schema_path)),
      prompts_(description::PromptSet::load(config.prompt_dir, config.prompt_version)) {}

description::StructuredDescription UpdatePipeline::describe(const Image& image, StepTimes& times,
                                                            std::vector<description::AttributionReport>* attribution) {
    Stopwatch watch;
    const auto prompt = description::build_description_prompt(schema_, prompts_.describe, config_.word_cap);
    const auto response = gateway_.chat().complete(gateway::make_user_request(prompt, {&image}));
    auto desc = description::parse_structured_description(
        response.text, schema_, description::ParseOptions{config_.word_cap, gateway_.chat().defaults().model});
    times.description += watch.elapsed_ms();

    if (!config_.task.empty()) {
        Stopwatch attribution_watch;
        auto reports = description::decoupled_attribution(desc, image, {{config_.attribute_key, config_.task}},
                                                          gateway_.chat(), prompts_.attribute, config_.max_concurrency);
        times.attribution += attribution_watch.elapsed_ms();
        if (attribution != nullptr) {
            *attribution = std::move(reports);
        }
    }
    return desc;
}

UpdateOutcome UpdatePipeline::run(const Image& image, tracking::TrackRegistry& registry) {
    UpdateOutcome out;
    out.description = describe(image, out.times, &out.attribution);

    Stopwatch detection_watch;
    out.grounding = grounding::ground_instances(out.description, image, gateway_.detector(), config_.odf);
    out.times.detection = detection_watch.elapsed_ms();

    Stopwatch segmentation_watch;
    out.admitted = registry.admit(out.grounding, out.description, image);
    out.times.segmentation = segmentation_watch.elapsed_ms();

    if (!config_.validate || out.admitted.admitted.empty()) {
        return out;
    }
    Stopwatch validation_watch;
    std::vector<validation::ValidationTarget> targets;
    std::vector<validation::OriginalGrounding> original;
    for (const auto& a : out.admitted.admitted) {
        const auto* track = registry.find(a.track_id);
        targets.push_back({a.track_id, track->bbox.value_or(track->seed_box)});
        original.push_back({a.track_id,
                            track->instance ? std::optional<std::string>(track->instance->object_name) : std::nullopt,
                            track->confidence});
    }
    const validation::ValidationOptions options{config_.crop_padding, config_.invalid_keyword, config_.max_concurrency};
    const auto proposals = validation::collect_proposals(image, targets, out.description, gateway_.chat(),
                                                         prompts_.validate, options);
    auto result = validation::solve_assignment(original, proposals, validation::group_instances(out.description));
    for (const auto& v : result.verdicts) {
        if (v.verdict == validation::Verdict::kRejected) {
            registry.reject(v.track_id);
        } else if (v.verdict == validation::Verdict::kCorrected) {
            registry.relabel(v.track_id, tracking::make_ref(*out.description.find(*v.instance)));
        }
        spdlog::debug("validation {}", v.to_json().dump());
    }
    out.validation = std::move(result);
    out.times.validation = validation_watch.elapsed_ms();
    return out;
}

}  // namespace grounder::pipeline
