#pragma once

// Reference implementations written independently of the library, used to check it.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "grounder/core/geometry.hpp"
#include "grounder/evaluation/metrics.hpp"
#include "grounder/gateway/services.hpp"
#include "grounder/validation/validation.hpp"

namespace grounder::oracle {

inline double box_iou(const BBox& a, const BBox& b) {
    const double w = std::max(0.0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
    const double h = std::max(0.0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
    const double inter = w * h;
    const double uni = (a.x1 - a.x0) * (a.y1 - a.y0) + (b.x1 - b.x0) * (b.y1 - b.y0) - inter;
    return uni > 0 ? inter / uni : 0.0;
}

inline std::size_t odf_budget(double odf, std::size_t n) {
    return std::max(n, static_cast<std::size_t>(std::floor(odf * static_cast<double>(n) + 1e-9)));
}

/// Re-simulates curation: the best candidate of every prompt, then the globally most
/// confident leftovers for the slots beyond one per instance. Returns indices into `candidates`.
inline std::vector<std::size_t> curate(const std::vector<gateway::Detection>& candidates, std::size_t n, double odf) {
    auto key = [&](std::size_t i) {
        const auto& d = candidates[i];
        return std::make_tuple(-d.confidence, d.prompt_index, d.bbox.x0, d.bbox.y0, d.bbox.x1, d.bbox.y1);
    };
    std::vector<std::size_t> chosen;
    std::set<std::size_t> used;
    for (std::size_t p = 0; p < n; ++p) {
        std::optional<std::size_t> best;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (candidates[i].prompt_index == p && (!best || key(i) < key(*best))) best = i;
        }
        if (best) {
            chosen.push_back(*best);
            used.insert(*best);
        }
    }
    const std::size_t first_pass = chosen.size();
    const std::size_t extra = odf_budget(odf, n) - n;
    while (chosen.size() < first_pass + extra) {
        std::optional<std::size_t> best;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (!used.count(i) && candidates[i].prompt_index < n && (!best || key(i) < key(*best))) best = i;
        }
        if (!best) break;
        chosen.push_back(*best);
        used.insert(*best);
    }
    return chosen;
}

/// Greedy IoU matching recomputed per label and image.
inline std::vector<bool> greedy_tp(const std::vector<evaluation::ScoredBox>& ranked,
                                   const std::vector<evaluation::GroundTruthBox>& truth, double threshold) {
    std::vector<bool> taken(truth.size(), false);
    std::vector<bool> tp;
    for (const auto& d : ranked) {
        int best = -1;
        double best_iou = -1.0;
        for (std::size_t g = 0; g < truth.size(); ++g) {
            if (taken[g] || truth[g].label != d.label || truth[g].image_id != d.image_id) continue;
            const double v = box_iou(d.bbox, truth[g].bbox);
            if (v >= threshold && v > best_iou) {
                best = static_cast<int>(g);
                best_iou = v;
            }
        }
        if (best >= 0) taken[static_cast<std::size_t>(best)] = true;
        tp.push_back(best >= 0);
    }
    return tp;
}

inline std::vector<evaluation::ScoredBox> rank(std::vector<evaluation::ScoredBox> dets) {
    std::stable_sort(dets.begin(), dets.end(), [](const auto& a, const auto& b) { return a.confidence > b.confidence; });
    return dets;
}

/// AP as the sum, over each true positive, of the best precision at any rank reaching at
/// least that recall, divided by the number of positives.
inline double pr_integration_ap(const std::vector<bool>& tp, std::size_t positives) {
    if (positives == 0) return 0.0;
    std::vector<double> precision;
    std::vector<std::size_t> hits;
    std::size_t count = 0;
    for (std::size_t i = 0; i < tp.size(); ++i) {
        count += tp[i];
        precision.push_back(double(count) / double(i + 1));
        hits.push_back(count);
    }
    double ap = 0.0;
    for (std::size_t k = 1; k <= count; ++k) {
        double best = 0.0;
        for (std::size_t i = 0; i < tp.size(); ++i) {
            if (hits[i] >= k) best = std::max(best, precision[i]);
        }
        ap += best / double(positives);
    }
    return ap;
}

struct BruteMetrics {
    double map = 0.0;
    double map50 = 0.0;
    std::map<std::string, double> per_class;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::optional<double> threshold;
};

inline void prf(std::size_t tp, std::size_t kept, std::size_t positives, double& p, double& r, double& f) {
    p = kept ? double(tp) / double(kept) : 0.0;
    r = positives ? double(tp) / double(positives) : 0.0;
    f = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
}

inline BruteMetrics metrics(const std::vector<evaluation::ScoredBox>& dets, const std::vector<evaluation::GroundTruthBox>& truth,
                            bool sweep) {
    BruteMetrics out;
    std::set<std::string> labels;
    for (const auto& g : truth) labels.insert(g.label);
    for (const auto& label : labels) {
        std::vector<evaluation::ScoredBox> ld;
        std::vector<evaluation::GroundTruthBox> lg;
        for (const auto& d : dets) if (d.label == label) ld.push_back(d);
        for (const auto& g : truth) if (g.label == label) lg.push_back(g);
        const auto ranked = rank(ld);
        double sum = 0.0;
        for (int t = 0; t < 10; ++t) {
            const double ap = pr_integration_ap(greedy_tp(ranked, lg, 0.5 + 0.05 * t), lg.size());
            sum += ap;
            if (t == 0) out.map50 += ap;
        }
        out.per_class[label] = sum / 10.0;
        out.map += sum / 10.0;
    }
    if (!labels.empty()) {
        out.map /= double(labels.size());
        out.map50 /= double(labels.size());
    }
    const auto all = greedy_tp(rank(dets), truth, 0.5);
    prf(std::size_t(std::count(all.begin(), all.end(), true)), dets.size(), truth.size(), out.precision, out.recall, out.f1);
    if (sweep && !dets.empty()) {
        std::set<double> candidates;
        for (const auto& d : dets) candidates.insert(d.confidence);
        double best_f = -1.0;
        for (const double t : candidates) {  // ascending, so ties keep the lower threshold
            std::vector<evaluation::ScoredBox> kept;
            for (const auto& d : dets) if (d.confidence >= t) kept.push_back(d);
            const auto m = greedy_tp(rank(kept), truth, 0.5);
            double p, r, f;
            prf(std::size_t(std::count(m.begin(), m.end(), true)), kept.size(), truth.size(), p, r, f);
            if (f > best_f) {
                best_f = f;
                out.precision = p;
                out.recall = r;
                out.f1 = f;
                out.threshold = t;
            }
        }
    }
    return out;
}

/// Largest number of tracks that any injective mapping can place inside the group of their
/// proposal, by enumerating every assignment of tracks to instances or rejection.
inline std::size_t best_group_agreement(const std::vector<std::optional<std::size_t>>& proposal_group,
                                        const std::vector<std::vector<std::string>>& group_members) {
    std::vector<std::string> instances;
    std::map<std::string, std::size_t> group_of;
    for (std::size_t g = 0; g < group_members.size(); ++g) {
        for (const auto& m : group_members[g]) {
            instances.push_back(m);
            group_of[m] = g;
        }
    }
    std::size_t best = 0;
    std::vector<int> choice(proposal_group.size(), -1);
    std::set<std::size_t> used;
    std::function<void(std::size_t, std::size_t)> walk = [&](std::size_t t, std::size_t placed) {
        if (t == proposal_group.size()) {
            best = std::max(best, placed);
            return;
        }
        walk(t + 1, placed);
        if (!proposal_group[t]) return;
        for (std::size_t i = 0; i < instances.size(); ++i) {
            if (used.count(i) || group_of[instances[i]] != *proposal_group[t]) continue;
            used.insert(i);
            walk(t + 1, placed + 1);
            used.erase(i);
        }
    };
    walk(0, 0);
    return best;
}

}  // namespace grounder::oracle
