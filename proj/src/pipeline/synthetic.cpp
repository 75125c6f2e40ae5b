#include "grounder/pipeline/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include <opencv2/imgproc.hpp>

#include "grounder/core/error.hpp"

namespace grounder::pipeline {

Image render_scene(int width, int height, const gateway::mock::MockFixture& fixture,
                   const std::vector<SceneObject>& objects) {
    const auto& bg = fixture.background;
    cv::Mat pixels(height, width, CV_8UC3, cv::Scalar(bg[2], bg[1], bg[0]));
    for (const auto& o : objects) {
        const auto& rgb = fixture.palette.at(o.palette_index).rgb;
        const BBox b = clamp_box(o.box, width, height);
        if (!b.valid()) {
            continue;
        }
        const cv::Rect rect(static_cast<int>(std::floor(b.x0)), static_cast<int>(std::floor(b.y0)),
                            static_cast<int>(std::ceil(b.x1) - std::floor(b.x0)),
                            static_cast<int>(std::ceil(b.y1) - std::floor(b.y0)));
        pixels(rect).setTo(cv::Scalar(rgb[2], rgb[1], rgb[0]));
    }
    return Image(pixels);
}

std::vector<SceneObject> random_objects(const gateway::mock::MockFixture& fixture, std::uint64_t seed, int width,
                                        int height, std::size_t min_objects, std::size_t max_objects) {
    if (fixture.palette.empty() || min_objects > max_objects) {
        throw Error(ErrorCode::kInvalidArgument, "scene needs a palette and min_objects <= max_objects");
    }
    std::mt19937_64 rng(seed);
    max_objects = std::min(max_objects, fixture.palette.size());
    min_objects = std::min(min_objects, max_objects);
    const auto count = std::uniform_int_distribution<std::size_t>(min_objects, max_objects)(rng);
    std::vector<std::size_t> colours(fixture.palette.size());
    std::iota(colours.begin(), colours.end(), 0);
    std::shuffle(colours.begin(), colours.end(), rng);

    const int max_side = std::max(8, std::min(width, height) / 3);
    std::uniform_int_distribution<int> side(8, max_side);
    std::vector<SceneObject> out;
    for (std::size_t k = 0; k < colours.size() && out.size() < count; ++k) {
        for (int attempt = 0; attempt < 200; ++attempt) {
            const int w = side(rng);
            const int h = side(rng);
            const int x = std::uniform_int_distribution<int>(0, width - w)(rng);
            const int y = std::uniform_int_distribution<int>(0, height - h)(rng);
            const BBox box{double(x), double(y), double(x + w), double(y + h)};
            // Two pixels of background between objects keep their masks apart.
            const BBox grown{box.x0 - 2, box.y0 - 2, box.x1 + 2, box.y1 + 2};
            const bool clear = std::none_of(out.begin(), out.end(), [&](const SceneObject& o) { return iou(o.box, grown) > 0.0; });
            if (clear) {
                out.push_back({colours[k], box});
                break;
            }
        }
    }
    return out;
}

evaluation::Dataset write_synthetic_dataset(const std::filesystem::path& dir, const gateway::mock::MockFixture& fixture,
                                            const SyntheticDatasetSpec& spec) {
    std::filesystem::create_directories(dir / "images");
    evaluation::Dataset d;
    d.format = spec.format;
    d.root = dir;
    std::set<std::string> seen;
    for (const auto& p : fixture.palette) {
        if (seen.insert(p.category).second) {
            d.categories.push_back({static_cast<std::int64_t>(d.categories.size() + 1), p.category});
        }
    }
    for (std::size_t i = 0; i < spec.images; ++i) {
        const auto objects = random_objects(fixture, spec.seed * 1000003ULL + i, spec.width, spec.height,
                                            spec.min_objects, spec.max_objects);
        const auto name = "image_" + std::to_string(i) + ".png";
        render_scene(spec.width, spec.height, fixture, objects).save(dir / "images" / name);
        evaluation::DatasetImage img;
        img.id = static_cast<std::int64_t>(i + 1);
        img.file = std::filesystem::path("images") / name;
        img.width = spec.width;
        img.height = spec.height;
        for (const auto& o : objects) {
            const auto& p = fixture.palette[o.palette_index];
            img.annotations.push_back({o.box, spec.format == evaluation::DatasetFormat::kCoco ? p.category : p.description});
        }
        d.images.push_back(std::move(img));
    }
    const auto j = spec.format == evaluation::DatasetFormat::kCoco ? evaluation::to_coco_json(d) : evaluation::to_custom_json(d);
    std::ofstream out(dir / "annotations.json");
    if (!out) {
        throw Error(ErrorCode::kIo, "cannot write " + (dir / "annotations.json").string());
    }
    out << j.dump(1) << '\n';
    out.close();
    return evaluation::load_dataset(dir / "annotations.json", spec.format);
}

nlohmann::json SequenceSpec::to_json() const {
    auto list = nlohmann::json::array();
    for (const auto& o : objects) {
        list.push_back({{"palette_index", o.palette_index},
                        {"start", o.start},
                        {"dx", o.dx},
                        {"dy", o.dy},
                        {"first_frame", o.first_frame},
                        {"last_frame", o.last_frame}});
    }
    return {{"width", width}, {"height", height}, {"frames", frames}, {"objects", list}};
}

SequenceSpec SequenceSpec::from_json(const nlohmann::json& j) {
    SequenceSpec s;
    s.width = j.value("width", s.width);
    s.height = j.value("height", s.height);
    s.frames = j.value("frames", s.frames);
    for (const auto& o : j.at("objects")) {
        s.objects.push_back({o.at("palette_index").get<std::size_t>(), o.at("start").get<BBox>(), o.value("dx", 0.0),
                             o.value("dy", 0.0), o.value("first_frame", 0), o.value("last_frame", -1)});
    }
    return s;
}

std::vector<SceneObject> objects_at(const SequenceSpec& spec, int frame) {
    std::vector<SceneObject> out;
    for (const auto& o : spec.objects) {
        if (frame < o.first_frame || (o.last_frame >= 0 && frame > o.last_frame)) {
            continue;
        }
        const double t = frame - o.first_frame;
        const BBox moved{o.start.x0 + o.dx * t, o.start.y0 + o.dy * t, o.start.x1 + o.dx * t, o.start.y1 + o.dy * t};
        const BBox visible = clamp_box(moved, spec.width, spec.height);
        if (visible.valid()) {
            out.push_back({o.palette_index, visible});
        }
    }
    return out;
}

std::vector<Image> render_sequence(const gateway::mock::MockFixture& fixture, const SequenceSpec& spec) {
    std::vector<Image> frames;
    for (int f = 0; f < spec.frames; ++f) {
        frames.push_back(render_scene(spec.width, spec.height, fixture, objects_at(spec, f)));
    }
    return frames;
}

void write_sequence(const std::filesystem::path& dir, const gateway::mock::MockFixture& fixture, const SequenceSpec& spec) {
    std::filesystem::create_directories(dir);
    auto truth = nlohmann::json::array();
    const auto frames = render_sequence(fixture, spec);
    for (int f = 0; f < spec.frames; ++f) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%04d.png", f);
        frames[static_cast<std::size_t>(f)].save(dir / name);
        auto boxes = nlohmann::json::array();
        for (const auto& o : objects_at(spec, f)) {
            boxes.push_back({{"palette_index", o.palette_index}, {"bbox", o.box}});
        }
        truth.push_back({{"frame", f}, {"objects", boxes}});
    }
    std::ofstream out(dir / "truth.json");
    out << nlohmann::json{{"spec", spec.to_json()}, {"frames", truth}}.dump(1) << '\n';
}

SequenceSpec default_sequence(int frames, int entry_frame) {
    SequenceSpec s;
    s.frames = frames;
    s.objects = {
        {0, BBox{10, 10, 34, 30}, 1.0, 0.0, 0, -1},
        {1, BBox{10, 60, 30, 90}, 1.0, 0.5, 0, -1},
        {2, BBox{70, 20, 96, 44}, 0.0, 1.0, 0, -1},
        {3, BBox{120, 80, 144, 104}, -1.0, 0.0, entry_frame, -1},
    };
    return s;
}

}  // namespace grounder::pipeline
