#include "grounder/evaluation/label_matching.hpp"

#include <algorithm>
#include <map>

#include "grounder/core/error.hpp"
#include "grounder/core/text.hpp"

namespace grounder::evaluation {

std::size_t MatchReport::discarded() const {
    return static_cast<std::size_t>(
        std::count_if(outcomes.begin(), outcomes.end(), [](const MatchOutcome& o) { return o.discarded(); }));
}

nlohmann::json MatchReport::to_json() const {
    auto list = nlohmann::json::array();
    for (const auto& o : outcomes) {
        list.push_back({{"detection", o.detection},
                        {"matched_class", o.matched_class},
                        {"score", o.score},
                        {"evaluated_as", o.evaluated_as ? nlohmann::json(*o.evaluated_as) : nlohmann::json(nullptr)}});
    }
    return list;
}

double pair_score(const std::vector<std::vector<double>>& detection_vectors,
                  const std::vector<std::vector<double>>& class_vectors) {
    double sum = 0.0;
    for (const auto& a : detection_vectors) {
        for (const auto& b : class_vectors) {
            sum += gateway::cosine_similarity(a, b);
        }
    }
    const auto pairs = detection_vectors.size() * class_vectors.size();
    return pairs > 0 ? sum / static_cast<double>(pairs) : 0.0;
}

MatchReport match_labels(const std::vector<DetectionText>& detections, const std::vector<ClassEntry>& classes,
                         gateway::EmbedderClient& embedder) {
    if (std::none_of(classes.begin(), classes.end(), [](const ClassEntry& c) { return c.origin == ClassOrigin::kNative; })) {
        throw Error(ErrorCode::kInvalidArgument, "label matching needs at least one native class");
    }
    std::vector<std::string> texts;
    std::map<std::string, std::size_t> slot;
    const auto intern = [&](const std::string& text) {
        auto [it, inserted] = slot.try_emplace(text, texts.size());
        if (inserted) {
            texts.push_back(text);
        }
        return it->second;
    };
    std::vector<std::vector<std::size_t>> detection_slots;
    for (const auto& d : detections) {
        std::vector<std::size_t> s;
        for (const auto* t : {&d.object_name, &d.description, &d.definition}) {
            if (!trim(*t).empty()) {
                s.push_back(intern(*t));
            }
        }
        detection_slots.push_back(std::move(s));
    }
    std::vector<std::vector<std::size_t>> class_slots;
    for (const auto& c : classes) {
        std::vector<std::size_t> s{intern(c.name)};
        if (!trim(c.definition).empty()) {
            s.push_back(intern(c.definition));
        }
        class_slots.push_back(std::move(s));
    }

    std::vector<std::vector<double>> vectors;
    try {
        vectors = embedder.embed(texts);
    } catch (const Error& e) {
        throw Error(ErrorCode::kEmbeddingFailure, std::string("embedding: ") + e.what());
    }
    const auto gather = [&](const std::vector<std::size_t>& s) {
        std::vector<std::vector<double>> out;
        for (const auto i : s) {
            out.push_back(vectors[i]);
        }
        return out;
    };
    std::vector<std::vector<std::vector<double>>> class_vectors;
    for (const auto& s : class_slots) {
        class_vectors.push_back(gather(s));
    }

    MatchReport report;
    for (std::size_t d = 0; d < detections.size(); ++d) {
        const auto det_vectors = gather(detection_slots[d]);
        MatchOutcome best;
        best.detection = d;
        bool found = false;
        for (std::size_t c = 0; c < classes.size(); ++c) {
            const double score = pair_score(det_vectors, class_vectors[c]);
            if (!found || score > best.score) {
                best.class_index = c;
                best.score = score;
                found = true;
            }
        }
        const auto& winner = classes[best.class_index];
        best.matched_class = winner.name;
        if (winner.origin == ClassOrigin::kNative) {
            best.evaluated_as = winner.name;
        } else if (winner.rule_target) {
            best.evaluated_as = *winner.rule_target;
        }
        report.outcomes.push_back(std::move(best));
    }
    return report;
}

}  // namespace grounder::evaluation
