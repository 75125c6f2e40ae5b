#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "grounder/core/geometry.hpp"

namespace grounder::evaluation {

enum class DatasetFormat { kCoco, kCustom };

DatasetFormat parse_format(const std::string& name);
std::string_view to_string(DatasetFormat format);

struct Annotation {
    BBox bbox;
    /// Category name (COCO) or the image-scoped description (custom).
    std::string label;
};

struct DatasetImage {
    std::int64_t id = 0;
    std::filesystem::path file;
    int width = 0;
    int height = 0;
    std::vector<Annotation> annotations;
};

struct Category {
    std::int64_t id = 0;
    std::string name;
};

struct Dataset {
    DatasetFormat format = DatasetFormat::kCoco;
    std::filesystem::path root;
    std::vector<DatasetImage> images;
    /// COCO only; custom datasets match against each image's own descriptions.
    std::vector<Category> categories;

    /// Distinct annotation labels of one image, in first-appearance order.
    [[nodiscard]] std::vector<std::string> image_labels(std::size_t image_index) const;
};

/// Image paths resolve against the annotation file's directory. Throws SchemaViolation
/// naming the file and the JSON pointer of the offending value.
Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format);
Dataset dataset_from_json(const nlohmann::json& j, DatasetFormat format, const std::filesystem::path& source);

/// COCO annotation JSON (bbox as [x, y, w, h]).
nlohmann::json to_coco_json(const Dataset& dataset);
/// Custom annotation JSON (bbox as [x0, y0, x1, y1]).
nlohmann::json to_custom_json(const Dataset& dataset);

}  // namespace grounder::evaluation
