#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>

#include "grounder/pipeline/config.hpp"

namespace grounder::cli {

/// Flags shared by the pipeline commands; set values override the config file.
struct CommonOptions {
    std::optional<std::filesystem::path> config;
    std::optional<double> odf;
    std::optional<bool> validate;
    std::optional<std::string> task;
    std::optional<std::size_t> max_concurrency;
    std::optional<std::filesystem::path> output_dir;
    bool stable_output = false;
};

pipeline::PipelineConfig resolve_config(const CommonOptions& options);

/// Runs `body`; library errors become a one-line JSON object on `err` and their exit code.
int guarded(std::ostream& err, const std::function<int()>& body);

/// description.json: instances, provenance with parse report, attribution reports.
int cmd_describe(const CommonOptions& options, const std::filesystem::path& image, std::ostream& out, std::ostream& err);

/// grounding.json, plus grounding.png when `overlay` is set.
int cmd_ground(const CommonOptions& options, const std::filesystem::path& image,
               const std::filesystem::path& description, bool overlay, std::ostream& out, std::ostream& err);

struct TrackOptions {
    /// Directory of frames (sorted by name) or a video file.
    std::filesystem::path input;
    /// Re-run the update mechanism every k frames; 0 updates on the first frame only.
    int update_interval = 0;
    /// When this file appears between frames, one update runs and the file is removed.
    std::optional<std::filesystem::path> trigger_file;
    bool overlays = false;
};

/// tracks.jsonl (one snapshot per frame) and updates.jsonl (one record per update).
int cmd_track(const CommonOptions& options, const TrackOptions& track, std::ostream& out, std::ostream& err);

/// report.json, report.txt, timings.csv, matches.jsonl. Nonzero only when every image fails.
int cmd_eval(const CommonOptions& options, const std::filesystem::path& dataset, const std::string& format,
             std::ostream& out, std::ostream& err);

/// Serves one fixture on host:port until `stop` becomes true or `duration_ms` elapses (0 = no limit).
int cmd_serve_mocks(const std::filesystem::path& fixture, const std::string& host, int port, int duration_ms,
                    const std::atomic<bool>& stop, std::ostream& out, std::ostream& err);

int cmd_synth_dataset(const std::filesystem::path& dir, std::size_t images, std::uint64_t seed,
                      const std::string& format, const std::filesystem::path& fixture, std::ostream& out,
                      std::ostream& err);

int cmd_synth_sequence(const std::filesystem::path& dir, int frames, int entry_frame,
                       const std::filesystem::path& fixture, std::ostream& out, std::ostream& err);

}  // namespace grounder::cli
