#include <atomic>
#include <csignal>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "grounder/cli/commands.hpp"
#include "grounder/core/error.hpp"
#include "grounder/pipeline/config.hpp"

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

}  // namespace

int main(int argc, char** argv) {
    using namespace grounder;
    CLI::App app{"Open-vocabulary grounding, tracking and benchmarking"};
    app.require_subcommand(1);
    app.fallthrough();

    cli::CommonOptions common;
    std::string config_path;
    double odf = 0;
    bool validate = false;
    bool no_validate = false;
    std::string task;
    std::size_t max_concurrency = 0;
    std::string output_dir;
    std::string log_level = "warn";
    app.add_option("--config", config_path, "JSON configuration file");
    app.add_option("--odf", odf, "Over-detection factor (>= 1)");
    app.add_flag("--validate", validate, "Enable crop validation");
    app.add_flag("--no-validate", no_validate, "Disable crop validation");
    app.add_option("--task", task, "Task for decoupled attribution");
    app.add_option("--max-concurrency", max_concurrency, "Upper bound on parallel service calls");
    app.add_option("--output-dir", output_dir, "Directory for output files");
    app.add_flag("--stable-output", common.stable_output, "Omit timings and other nondeterministic fields");
    app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");

    std::string image;
    std::string description;
    bool overlay = false;

    auto* describe = app.add_subcommand("describe", "Structured description of one image");
    describe->add_option("image", image, "Image file")->required();

    auto* ground = app.add_subcommand("ground", "Ground a description in an image");
    ground->add_option("image", image, "Image file")->required();
    ground->add_option("--description", description, "description.json from the describe command")->required();
    ground->add_flag("--overlay", overlay, "Also write grounding.png");

    cli::TrackOptions track_options;
    std::string trigger_file;
    std::string input;
    auto* track = app.add_subcommand("track", "Track objects over a frame directory or video");
    track->add_option("input", input, "Frame directory or video file")->required();
    track->add_option("--update-interval", track_options.update_interval, "Update every k frames (0 = first frame only)");
    track->add_option("--trigger-file", trigger_file, "Run one update whenever this file appears");
    track->add_flag("--overlay", track_options.overlays, "Write per-frame overlays");

    std::string dataset;
    std::string format = "coco";
    auto* eval = app.add_subcommand("eval", "Benchmark on an annotated dataset");
    eval->add_option("dataset", dataset, "Annotation file")->required();
    eval->add_option("--format", format, "coco|custom")->check(CLI::IsMember({"coco", "custom"}));

    std::string fixture = pipeline::default_fixture_path().string();
    std::string host = "127.0.0.1";
    int port = 0;
    int duration_ms = 0;
    auto* serve = app.add_subcommand("serve-mocks", "Serve the mock services over HTTP");
    serve->add_option("--fixture", fixture, "Mock fixture JSON");
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--port", port, "Port (0 picks a free one)");
    serve->add_option("--duration-ms", duration_ms, "Stop after this long (0 = until interrupted)");

    std::string synth_dir;
    std::size_t images = 10;
    std::uint64_t seed = 1;
    int frames = 30;
    int entry_frame = 12;
    bool sequence = false;
    auto* synth = app.add_subcommand("synth", "Write a synthetic dataset or frame sequence");
    synth->add_option("dir", synth_dir, "Output directory")->required();
    synth->add_flag("--sequence", sequence, "Write a frame sequence instead of a dataset");
    synth->add_option("--images", images, "Dataset size");
    synth->add_option("--seed", seed, "Scene seed");
    synth->add_option("--format", format, "coco|custom")->check(CLI::IsMember({"coco", "custom"}));
    synth->add_option("--frames", frames, "Sequence length");
    synth->add_option("--entry-frame", entry_frame, "Frame at which the late object enters");
    synth->add_option("--fixture", fixture, "Mock fixture JSON (palette)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_code(ErrorCode::kInvalidArgument);
    }

    spdlog::set_default_logger(spdlog::stderr_color_mt("grounder"));
    spdlog::set_level(spdlog::level::from_str(log_level));

    if (!config_path.empty()) common.config = config_path;
    if (app.count("--odf") > 0) common.odf = odf;
    if (validate) common.validate = true;
    if (no_validate) common.validate = false;
    if (!task.empty()) common.task = task;
    if (max_concurrency > 0) common.max_concurrency = max_concurrency;
    if (!output_dir.empty()) common.output_dir = output_dir;

    if (*describe) {
        return cli::cmd_describe(common, image, std::cout, std::cerr);
    }
    if (*ground) {
        return cli::cmd_ground(common, image, description, overlay, std::cout, std::cerr);
    }
    if (*track) {
        track_options.input = input;
        if (!trigger_file.empty()) track_options.trigger_file = trigger_file;
        return cli::cmd_track(common, track_options, std::cout, std::cerr);
    }
    if (*eval) {
        return cli::cmd_eval(common, dataset, format, std::cout, std::cerr);
    }
    if (*serve) {
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        return cli::cmd_serve_mocks(fixture, host, port, duration_ms, g_stop, std::cout, std::cerr);
    }
    if (sequence) {
        return cli::cmd_synth_sequence(synth_dir, frames, entry_frame, fixture, std::cout, std::cerr);
    }
    return cli::cmd_synth_dataset(synth_dir, images, seed, format, fixture, std::cout, std::cerr);
}
