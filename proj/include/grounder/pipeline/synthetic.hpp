#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "grounder/core/geometry.hpp"
#include "grounder/core/image.hpp"
#include "grounder/evaluation/dataset.hpp"
#include "grounder/gateway/mock_services.hpp"

namespace grounder::pipeline {

/// A solid rectangle in one palette colour.
struct SceneObject {
    std::size_t palette_index = 0;
    BBox box;
};

/// Background filled, then each object painted in order over whole pixels.
Image render_scene(int width, int height, const gateway::mock::MockFixture& fixture,
                   const std::vector<SceneObject>& objects);

/// Non-overlapping objects of distinct palette colours, count in [min_objects, max_objects].
std::vector<SceneObject> random_objects(const gateway::mock::MockFixture& fixture, std::uint64_t seed, int width,
                                        int height, std::size_t min_objects, std::size_t max_objects);

struct SyntheticDatasetSpec {
    std::size_t images = 10;
    std::uint64_t seed = 1;
    int width = 160;
    int height = 120;
    std::size_t min_objects = 2;
    std::size_t max_objects = 6;
    evaluation::DatasetFormat format = evaluation::DatasetFormat::kCoco;
};

/// Writes PNG images and annotations.json under `dir`; returns the dataset as loaded back.
/// COCO labels are palette categories, custom labels are palette descriptions.
evaluation::Dataset write_synthetic_dataset(const std::filesystem::path& dir, const gateway::mock::MockFixture& fixture,
                                            const SyntheticDatasetSpec& spec);

struct MovingObject {
    std::size_t palette_index = 0;
    BBox start;
    double dx = 0.0;
    double dy = 0.0;
    int first_frame = 0;
    /// Inclusive; -1 keeps the object to the end.
    int last_frame = -1;
};

struct SequenceSpec {
    int width = 160;
    int height = 120;
    int frames = 30;
    std::vector<MovingObject> objects;

    [[nodiscard]] nlohmann::json to_json() const;
    static SequenceSpec from_json(const nlohmann::json& j);
};

/// Objects visible in `frame`, boxes translated by their velocity.
std::vector<SceneObject> objects_at(const SequenceSpec& spec, int frame);
std::vector<Image> render_sequence(const gateway::mock::MockFixture& fixture, const SequenceSpec& spec);

/// frame_0000.png ... plus truth.json holding the spec and per-frame boxes.
void write_sequence(const std::filesystem::path& dir, const gateway::mock::MockFixture& fixture, const SequenceSpec& spec);

/// Three boxes drifting right and down, and a fourth entering at `entry_frame`.
SequenceSpec default_sequence(int frames = 30, int entry_frame = 12);

}  // namespace grounder::pipeline
