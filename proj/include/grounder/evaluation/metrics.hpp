#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "grounder/core/geometry.hpp"

namespace grounder::evaluation {

struct ScoredBox {
    std::int64_t image_id = 0;
    std::string label;
    BBox bbox;
    double confidence = 0.0;
};

struct GroundTruthBox {
    std::int64_t image_id = 0;
    std::string label;
    BBox bbox;
};

struct MetricsReport {
    /// Mean over labels with ground truth of the AP averaged over IoU 0.50:0.05:0.95.
    double map = 0.0;
    double map50 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::map<std::string, double> per_class_ap;
    /// Detections below this confidence were dropped for precision/recall; unset when none were.
    std::optional<double> threshold;
    std::size_t true_positives = 0;
    std::size_t false_positives = 0;
    std::size_t false_negatives = 0;
    std::vector<std::string> flags;

    [[nodiscard]] nlohmann::json to_json() const;
};

/// The ten COCO IoU thresholds.
std::vector<double> coco_iou_thresholds();

/// Greedy matching: detections by confidence descending (stable), each to the unmatched
/// ground truth box with the same image and label and the highest IoU >= threshold.
/// Returns a true-positive flag per detection in the ranked order, plus that order.
struct RankedMatch {
    std::vector<std::size_t> order;
    std::vector<bool> true_positive;
};
RankedMatch match_ranked(const std::vector<ScoredBox>& detections, const std::vector<GroundTruthBox>& truth,
                         double iou_threshold);

/// All-point interpolated average precision of one ranked list.
double average_precision(const std::vector<bool>& ranked_true_positive, std::size_t positives);

/// Metrics at IoU 0.5 for every detection, or at the F1-maximizing confidence threshold
/// when `sweep` is set (ties go to the lower threshold).
MetricsReport compute_metrics(const std::vector<ScoredBox>& detections, const std::vector<GroundTruthBox>& truth,
                              bool sweep = false);

}  // namespace grounder::evaluation
