#include "grounder/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <thread>

#include <opencv2/videoio.hpp>
#include <spdlog/spdlog.h>

#include "grounder/core/error.hpp"
#include "grounder/core/overlay.hpp"
#include "grounder/description/structured_description.hpp"
#include "grounder/evaluation/benchmark.hpp"
#include "grounder/gateway/mock_http_server.hpp"
#include "grounder/gateway/mock_services.hpp"
#include "grounder/grounding/grounding.hpp"
#include "grounder/pipeline/synthetic.hpp"
#include "grounder/pipeline/update.hpp"
#include "grounder/tracking/track_registry.hpp"

namespace grounder::cli {

pipeline::PipelineConfig resolve_config(const CommonOptions& options) {
    pipeline::PipelineConfig c = options.config ? pipeline::load_config(*options.config) : pipeline::default_config();
    if (options.odf) c.odf = *options.odf;
    if (options.validate) c.validate = *options.validate;
    if (options.task) c.task = *options.task;
    if (options.max_concurrency) c.max_concurrency = *options.max_concurrency;
    if (options.output_dir) c.output_dir = *options.output_dir;
    c.check();
    return c;
}

int guarded(std::ostream& err, const std::function<int()>& body) {
    try {
        return body();
    } catch (const Error& e) {
        err << nlohmann::json{{"error", to_string(e.code())}, {"message", e.what()}}.dump() << '\n';
        return exit_code(e.code());
    } catch (const std::exception& e) {
        err << nlohmann::json{{"error", "Unexpected"}, {"message", e.what()}}.dump() << '\n';
        return 1;
    }
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorCode::kIo, "cannot write " + path.string());
    }
    out << content;
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::kInvalidArgument, "cannot open " + path.string());
    }
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) {
        throw Error(ErrorCode::kInvalidArgument, path.string() + " is not valid JSON");
    }
    return j;
}

Image load_image(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw Error(ErrorCode::kInvalidArgument, "image not found: " + path.string());
    }
    return Image::load(path);
}

nlohmann::json description_json(const description::StructuredDescription& desc,
                                 const std::vector<description::AttributionReport>& attribution) {
    auto reports = nlohmann::json::array();
    for (const auto& r : attribution) {
        reports.push_back(r.to_json());
    }
    return {{"instances", desc.to_json()},
            {"provenance",
             {{"model", desc.provenance.model},
              {"raw_hash", desc.provenance.raw_hash},
              {"report", desc.provenance.report.to_json()}}},
            {"attribution", reports}};
}

std::vector<std::filesystem::path> frame_files(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        auto ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (entry.is_regular_file() && (ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp")) {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

/// Pulls frames one at a time from a directory or a video; nullopt marks an undecodable frame.
class FrameSource {
  public:
    explicit FrameSource(const std::filesystem::path& input) {
        if (std::filesystem::is_directory(input)) {
            files_ = frame_files(input);
            if (files_.empty()) {
                throw Error(ErrorCode::kInvalidArgument, "no frames in " + input.string());
            }
        } else if (std::filesystem::exists(input)) {
            video_.open(input.string());
            if (!video_.isOpened()) {
                throw Error(ErrorCode::kInvalidArgument, "cannot open video " + input.string());
            }
        } else {
            throw Error(ErrorCode::kInvalidArgument, "track input not found: " + input.string());
        }
    }

    /// False at the end of the stream.
    bool next(std::optional<Image>& frame, std::string& name) {
        if (!files_.empty() || next_file_ > 0) {
            if (next_file_ >= files_.size()) {
                return false;
            }
            const auto& path = files_[next_file_++];
            name = path.filename().string();
            try {
                frame = Image::load(path);
            } catch (const Error& e) {
                spdlog::warn("skipping frame {}: {}", name, e.what());
                frame.reset();
            }
            return true;
        }
        cv::Mat mat;
        if (!video_.read(mat) || mat.empty()) {
            return false;
        }
        name = "video_frame_" + std::to_string(video_index_++);
        frame = Image(mat);
        return true;
    }

  private:
    std::vector<std::filesystem::path> files_;
    std::size_t next_file_ = 0;
    cv::VideoCapture video_;
    std::size_t video_index_ = 0;
};

std::vector<OverlayItem> track_overlay_items(const tracking::TrackRegistry& registry) {
    std::vector<OverlayItem> items;
    for (const auto& t : registry.tracks()) {
        if (t.status != tracking::TrackStatus::kLive) {
            continue;
        }
        const std::string label = std::to_string(t.id) + (t.instance ? " " + t.instance->object_name : "");
        items.push_back({t.bbox, label, &t.mask});
    }
    return items;
}

}  // namespace

int cmd_describe(const CommonOptions& options, const std::filesystem::path& image_path, std::ostream& out,
                 std::ostream& err) {
    return guarded(err, [&] {
        const auto config = resolve_config(options);
        const Image image = load_image(image_path);
        gateway::Gateway gateway(config.services, pipeline::make_transport(config));
        pipeline::UpdatePipeline update(config, gateway);
        pipeline::StepTimes times;
        std::vector<description::AttributionReport> attribution;
        const auto desc = update.describe(image, times, &attribution);
        const auto text = description_json(desc, attribution).dump(2) + "\n";
        write_file(config.output_dir / "description.json", text);
        out << text;
        return 0;
    });
}

int cmd_ground(const CommonOptions& options, const std::filesystem::path& image_path,
               const std::filesystem::path& description_path, bool overlay, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto config = resolve_config(options);
        if (!std::filesystem::exists(description_path)) {
            throw Error(ErrorCode::kInvalidArgument, "description file not found: " + description_path.string());
        }
        const auto j = read_json_file(description_path);
        const auto schema = description::AttributeSchema::load(config.schema_path);
        const auto& list = j.is_object() && j.contains("instances") ? j["instances"] : j;
        const auto desc = description::description_from_json(list, schema, {config.word_cap, ""});
        const Image image = load_image(image_path);
        gateway::Gateway gateway(config.services, pipeline::make_transport(config));
        const auto result = grounding::ground_instances(desc, image, gateway.detector(), config.odf);
        const auto text = result.to_json().dump(2) + "\n";
        write_file(config.output_dir / "grounding.json", text);
        if (overlay) {
            std::vector<OverlayItem> items;
            for (const auto& a : result.assignments) {
                items.push_back({a.detection.bbox, a.object_name, nullptr});
            }
            std::filesystem::create_directories(config.output_dir);
            render_overlay(image, items).save(config.output_dir / "grounding.png");
        }
        out << text;
        return 0;
    });
}

int cmd_track(const CommonOptions& options, const TrackOptions& track, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (track.update_interval < 0) {
            throw Error(ErrorCode::kInvalidArgument, "update interval must be non-negative");
        }
        const auto config = resolve_config(options);
        FrameSource source(track.input);
        gateway::Gateway gateway(config.services, pipeline::make_transport(config));
        pipeline::UpdatePipeline update(config, gateway);
        tracking::TrackRegistry registry(gateway.tracker(),
                                         tracking::RegistryOptions{config.iou_gate, config.lost_patience});
        std::filesystem::create_directories(config.output_dir);
        std::ofstream tracks_out(config.output_dir / "tracks.jsonl");
        std::ofstream updates_out(config.output_dir / "updates.jsonl");
        if (!tracks_out || !updates_out) {
            throw Error(ErrorCode::kIo, "cannot write into " + config.output_dir.string());
        }
        if (track.overlays) {
            std::filesystem::create_directories(config.output_dir / "overlays");
        }

        std::optional<Image> frame;
        std::string name;
        std::size_t processed = 0;
        std::size_t skipped = 0;
        std::size_t updates = 0;
        while (source.next(frame, name)) {
            if (!frame) {
                ++skipped;
                continue;
            }
            const bool first = processed == 0;
            if (!first) {
                registry.step(*frame);
            }
            bool run_update = first || (track.update_interval > 0 && registry.frame() % track.update_interval == 0);
            if (track.trigger_file && std::filesystem::exists(*track.trigger_file)) {
                std::filesystem::remove(*track.trigger_file);
                run_update = true;
            }
            if (run_update) {
                const auto outcome = update.run(*frame, registry);
                ++updates;
                nlohmann::json record{{"frame", registry.frame()},
                                      {"instances", outcome.description.instances.size()},
                                      {"admitted", nlohmann::json::array()},
                                      {"suppressed", nlohmann::json::array()}};
                for (const auto& a : outcome.admitted.admitted) {
                    record["admitted"].push_back({{"track_id", a.track_id}, {"object_name", a.object_name}, {"bbox", a.box}});
                }
                for (const auto& s : outcome.admitted.suppressed) {
                    record["suppressed"].push_back({{"track_id", s.track_id},
                                                    {"object_name", s.object_name},
                                                    {"iou", s.iou},
                                                    {"merged", s.merged}});
                }
                if (outcome.validation) {
                    record["validation"] = outcome.validation->audit_log();
                }
                if (!options.stable_output) {
                    record["times_ms"] = {{"description", outcome.times.description},
                                          {"attribution", outcome.times.attribution},
                                          {"detection", outcome.times.detection},
                                          {"segmentation", outcome.times.segmentation},
                                          {"validation", outcome.times.validation}};
                }
                updates_out << record.dump() << '\n';
            }
            auto snapshot = registry.snapshot_json();
            snapshot["source"] = name;
            tracks_out << snapshot.dump() << '\n';
            if (track.overlays) {
                char file[32];
                std::snprintf(file, sizeof(file), "frame_%04lld.png", static_cast<long long>(registry.frame()));
                const auto items = track_overlay_items(registry);
                render_overlay(*frame, items).save(config.output_dir / "overlays" / file);
            }
            ++processed;
        }
        if (processed == 0) {
            throw Error(ErrorCode::kInvalidArgument, "no decodable frames in " + track.input.string());
        }
        out << nlohmann::json{{"frames", processed},
                              {"skipped", skipped},
                              {"updates", updates},
                              {"tracks_created", registry.tracks().size()}}
                   .dump()
            << '\n';
        return 0;
    });
}

int cmd_eval(const CommonOptions& options, const std::filesystem::path& dataset_path, const std::string& format,
             std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto config = resolve_config(options);
        const auto dataset = evaluation::load_dataset(dataset_path, evaluation::parse_format(format));
        gateway::Gateway gateway(config.services, pipeline::make_transport(config));
        const auto result = evaluation::run_benchmark(dataset, config, gateway);
        evaluation::write_benchmark_outputs(result, config.output_dir, options.stable_output);
        out << result.table(options.stable_output);
        return 0;
    });
}

int cmd_serve_mocks(const std::filesystem::path& fixture, const std::string& host, int port, int duration_ms,
                    const std::atomic<bool>& stop, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        auto services = std::make_shared<gateway::mock::MockServices>(gateway::mock::MockFixture::load(fixture));
        gateway::mock::MockHttpServer server(services);
        const int bound = server.start(host, port);
        out << nlohmann::json{{"listening", server.base_url()}, {"port", bound}}.dump() << std::endl;
        const auto started = std::chrono::steady_clock::now();
        while (!stop.load() && server.running()) {
            if (duration_ms > 0 && std::chrono::steady_clock::now() - started >= std::chrono::milliseconds(duration_ms)) {
                break;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(20));
        }
        server.stop();
        return 0;
    });
}

int cmd_synth_dataset(const std::filesystem::path& dir, std::size_t images, std::uint64_t seed,
                      const std::string& format, const std::filesystem::path& fixture, std::ostream& out,
                      std::ostream& err) {
    return guarded(err, [&] {
        pipeline::SyntheticDatasetSpec spec;
        spec.images = images;
        spec.seed = seed;
        spec.format = evaluation::parse_format(format);
        const auto dataset = pipeline::write_synthetic_dataset(dir, gateway::mock::MockFixture::load(fixture), spec);
        std::size_t boxes = 0;
        for (const auto& img : dataset.images) {
            boxes += img.annotations.size();
        }
        out << nlohmann::json{{"annotations", (dir / "annotations.json").string()},
                              {"images", dataset.images.size()},
                              {"boxes", boxes}}
                   .dump()
            << '\n';
        return 0;
    });
}

int cmd_synth_sequence(const std::filesystem::path& dir, int frames, int entry_frame,
                       const std::filesystem::path& fixture, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (frames <= 0) {
            throw Error(ErrorCode::kInvalidArgument, "frames must be positive");
        }
        pipeline::write_sequence(dir, gateway::mock::MockFixture::load(fixture), pipeline::default_sequence(frames, entry_frame));
        out << nlohmann::json{{"frames", frames}, {"dir", dir.string()}}.dump() << '\n';
        return 0;
    });
}

}  // namespace grounder::cli
