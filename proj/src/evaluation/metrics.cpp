#include "grounder/evaluation/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace grounder::evaluation {

nlohmann::json MetricsReport::to_json() const {
    return {{"mAP", map},
            {"mAP50", map50},
            {"precision", precision},
            {"recall", recall},
            {"f1", f1},
            {"per_class_ap", per_class_ap},
            {"threshold", threshold ? nlohmann::json(*threshold) : nlohmann::json(nullptr)},
            {"true_positives", true_positives},
            {"false_positives", false_positives},
            {"false_negatives", false_negatives},
            {"flags", flags}};
}

std::vector<double> coco_iou_thresholds() {
    std::vector<double> out;
    for (int i = 0; i < 10; ++i) {
        out.push_back(0.5 + 0.05 * i);
    }
    return out;
}

RankedMatch match_ranked(const std::vector<ScoredBox>& detections, const std::vector<GroundTruthBox>& truth,
                         double iou_threshold) {
    RankedMatch out;
    out.order.resize(detections.size());
    std::iota(out.order.begin(), out.order.end(), 0);
    std::stable_sort(out.order.begin(), out.order.end(), [&](std::size_t a, std::size_t b) {
        return detections[a].confidence > detections[b].confidence;
    });
    std::vector<bool> used(truth.size(), false);
    out.true_positive.reserve(detections.size());
    for (const auto d : out.order) {
        const auto& det = detections[d];
        std::optional<std::size_t> best;
        double best_iou = iou_threshold;
        for (std::size_t g = 0; g < truth.size(); ++g) {
            if (used[g] || truth[g].image_id != det.image_id || truth[g].label != det.label) {
                continue;
            }
            const double overlap = iou(det.bbox, truth[g].bbox);
            if (overlap >= best_iou && (!best || overlap > best_iou)) {
                best = g;
                best_iou = overlap;
            }
        }
        if (best) {
            used[*best] = true;
        }
        out.true_positive.push_back(best.has_value());
    }
    return out;
}

double average_precision(const std::vector<bool>& ranked_true_positive, std::size_t positives) {
    if (positives == 0) {
        return 0.0;
    }
    const std::size_t n = ranked_true_positive.size();
    std::vector<double> precision(n);
    std::vector<double> recall(n);
    std::size_t tp = 0;
    for (std::size_t i = 0; i < n; ++i) {
        tp += ranked_true_positive[i] ? 1 : 0;
        precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
        recall[i] = static_cast<double>(tp) / static_cast<double>(positives);
    }
    for (std::size_t i = n; i-- > 1;) {
        precision[i - 1] = std::max(precision[i - 1], precision[i]);
    }
    double ap = 0.0;
    double previous_recall = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ap += (recall[i] - previous_recall) * precision[i];
        previous_recall = recall[i];
    }
    return ap;
}

namespace {

struct Counts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

Counts counts_for(std::size_t tp, std::size_t kept, std::size_t positives) {
    Counts c;
    c.tp = tp;
    c.fp = kept - tp;
    c.fn = positives - tp;
    c.precision = kept > 0 ? static_cast<double>(tp) / static_cast<double>(kept) : 0.0;
    c.recall = positives > 0 ? static_cast<double>(tp) / static_cast<double>(positives) : 0.0;
    c.f1 = c.precision + c.recall > 0.0 ? 2.0 * c.precision * c.recall / (c.precision + c.recall) : 0.0;
    return c;
}

}  // namespace

MetricsReport compute_metrics(const std::vector<ScoredBox>& detections, const std::vector<GroundTruthBox>& truth,
                              bool sweep) {
    MetricsReport report;
    if (truth.empty()) {
        report.flags.push_back("empty_ground_truth");
    }

    std::set<std::string> labels;
    for (const auto& g : truth) {
        labels.insert(g.label);
    }
    const auto thresholds = coco_iou_thresholds();
    double map_sum = 0.0;
    double map50_sum = 0.0;
    for (const auto& label : labels) {
        std::vector<ScoredBox> dets;
        std::vector<GroundTruthBox> gts;
        for (const auto& d : detections) {
            if (d.label == label) {
                dets.push_back(d);
            }
        }
        for (const auto& g : truth) {
            if (g.label == label) {
                gts.push_back(g);
            }
        }
        double sum = 0.0;
        for (std::size_t t = 0; t < thresholds.size(); ++t) {
            const double ap = average_precision(match_ranked(dets, gts, thresholds[t]).true_positive, gts.size());
            sum += ap;
            if (t == 0) {
                map50_sum += ap;
            }
        }
        const double class_ap = sum / static_cast<double>(thresholds.size());
        report.per_class_ap[label] = class_ap;
        map_sum += class_ap;
    }
    if (!labels.empty()) {
        report.map = map_sum / static_cast<double>(labels.size());
        report.map50 = map50_sum / static_cast<double>(labels.size());
    }

    // A confidence cut keeps a prefix of the ranked order, and greedy matching of a prefix
    // equals the prefix of the full matching, so one pass serves every threshold.
    const auto ranked = match_ranked(detections, truth, 0.5);
    Counts best = counts_for(static_cast<std::size_t>(std::count(ranked.true_positive.begin(), ranked.true_positive.end(), true)),
                             detections.size(), truth.size());
    if (sweep && !detections.empty()) {
        std::size_t tp = 0;
        std::optional<double> best_threshold;
        for (std::size_t i = 0; i < ranked.order.size(); ++i) {
            tp += ranked.true_positive[i] ? 1 : 0;
            const double conf = detections[ranked.order[i]].confidence;
            const bool block_end = i + 1 == ranked.order.size() || detections[ranked.order[i + 1]].confidence != conf;
            if (!block_end) {
                continue;
            }
            const Counts c = counts_for(tp, i + 1, truth.size());
            if (!best_threshold || c.f1 >= best.f1) {
                best = c;
                best_threshold = conf;
            }
        }
        report.threshold = best_threshold;
    }
    report.true_positives = best.tp;
    report.false_positives = best.fp;
    report.false_negatives = best.fn;
    report.precision = best.precision;
    report.recall = best.recall;
    report.f1 = best.f1;
    return report;
}

}  // namespace grounder::evaluation
