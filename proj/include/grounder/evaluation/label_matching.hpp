#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "grounder/evaluation/classes.hpp"
#include "grounder/gateway/services.hpp"

namespace grounder::evaluation {

/// Texts describing one grounded detection.
struct DetectionText {
    std::string object_name;
    std::string description;
    /// Empty when definition generation failed.
    std::string definition;
};

struct MatchOutcome {
    std::size_t detection = 0;
    std::size_t class_index = 0;
    std::string matched_class;
    double score = 0.0;
    /// Native class the detection is evaluated as; empty when discarded.
    std::optional<std::string> evaluated_as;

    [[nodiscard]] bool discarded() const { return !evaluated_as.has_value(); }
};

struct MatchReport {
    std::vector<MatchOutcome> outcomes;

    [[nodiscard]] std::size_t discarded() const;
    [[nodiscard]] nlohmann::json to_json() const;
};

/// Mean cosine similarity over every (detection text, class text) pair; detection texts are
/// name, description and definition, class texts are name and definition. Empty texts are
/// left out of the pair set.
double pair_score(const std::vector<std::vector<double>>& detection_vectors,
                  const std::vector<std::vector<double>>& class_vectors);

/// Argmax class per detection, first declared class on ties. Augmented winners are
/// redirected through their mapping rule or discarded. Throws EmbeddingFailure.
MatchReport match_labels(const std::vector<DetectionText>& detections, const std::vector<ClassEntry>& classes,
                         gateway::EmbedderClient& embedder);

}  // namespace grounder::evaluation
