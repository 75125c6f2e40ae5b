#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "grounder/evaluation/dataset.hpp"
#include "grounder/evaluation/label_matching.hpp"
#include "grounder/evaluation/metrics.hpp"
#include "grounder/gateway/gateway.hpp"
#include "grounder/pipeline/config.hpp"
#include "grounder/pipeline/update.hpp"

namespace grounder::evaluation {

struct ImageRecord {
    std::int64_t image_id = 0;
    std::string file;
    bool ok = false;
    std::string error;
    std::size_t instances = 0;
    std::size_t ungrounded = 0;
    std::size_t annotations = 0;
    pipeline::StepTimes times;
    std::vector<ScoredBox> detections;
    std::size_t discarded = 0;
    std::size_t rejected = 0;
    nlohmann::json matches = nlohmann::json::array();
};

struct BenchmarkResult {
    /// Every evaluated detection, no confidence cut.
    MetricsReport metrics;
    /// Precision, recall and F1 at the F1-maximizing confidence.
    MetricsReport swept;
    std::vector<ImageRecord> images;
    pipeline::StepTimes mean_times;
    double mean_instances = 0.0;
    std::size_t failures = 0;
    std::vector<std::string> flags;
    std::string model;
    double odf = 1.0;
    bool validate = false;

    /// `stable` leaves out wall times so repeated runs serialize identically.
    [[nodiscard]] nlohmann::json to_json(bool stable) const;
    /// Summary table in the column layout Model | Ins. | Time | mAP | P | R | F1 | Thresh,
    /// followed by the per-step timing partition.
    [[nodiscard]] std::string table(bool stable) const;
    /// One row per image plus a mean row: description, attribution, detection, segmentation, validation.
    [[nodiscard]] std::string timing_csv() const;
};

/// describe -> ground -> segment -> (validate) -> match -> metrics for every image.
/// Per-image failures are recorded; throws BenchmarkFailed when every image fails.
BenchmarkResult run_benchmark(const Dataset& dataset, const pipeline::PipelineConfig& config, gateway::Gateway& gateway);

/// report.json, report.txt, timings.csv and matches.jsonl under `dir`.
void write_benchmark_outputs(const BenchmarkResult& result, const std::filesystem::path& dir, bool stable);

}  // namespace grounder::evaluation
