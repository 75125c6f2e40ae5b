#include "grounder/evaluation/dataset.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "grounder/core/error.hpp"

namespace grounder::evaluation {

DatasetFormat parse_format(const std::string& name) {
    if (name == "coco") {
        return DatasetFormat::kCoco;
    }
    if (name == "custom") {
        return DatasetFormat::kCustom;
    }
    throw Error(ErrorCode::kInvalidArgument, "unknown dataset format: " + name);
}

std::string_view to_string(DatasetFormat format) {
    return format == DatasetFormat::kCoco ? "coco" : "custom";
}

std::vector<std::string> Dataset::image_labels(std::size_t image_index) const {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& a : images.at(image_index).annotations) {
        if (seen.insert(a.label).second) {
            out.push_back(a.label);
        }
    }
    return out;
}

namespace {

class Reader {
  public:
    explicit Reader(std::filesystem::path source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const nlohmann::json::json_pointer& at, const std::string& what) const {
        throw Error(ErrorCode::kSchemaViolation, source_.string() + " at " + (at.empty() ? "/" : at.to_string()) + ": " + what);
    }

    const nlohmann::json& member(const nlohmann::json& parent, const nlohmann::json::json_pointer& at,
                                 const std::string& key) const {
        if (!parent.is_object() || !parent.contains(key)) {
            fail(at, "missing member \"" + key + "\"");
        }
        return parent[key];
    }

    const nlohmann::json& array(const nlohmann::json& parent, const nlohmann::json::json_pointer& at,
                                const std::string& key) const {
        const auto& v = member(parent, at, key);
        if (!v.is_array()) {
            fail(at / key, "expected an array");
        }
        return v;
    }

    std::int64_t integer(const nlohmann::json& parent, const nlohmann::json::json_pointer& at, const std::string& key) const {
        const auto& v = member(parent, at, key);
        if (!v.is_number_integer()) {
            fail(at / key, "expected an integer");
        }
        return v.get<std::int64_t>();
    }

    std::string text(const nlohmann::json& parent, const nlohmann::json::json_pointer& at, const std::string& key) const {
        const auto& v = member(parent, at, key);
        if (!v.is_string() || v.get<std::string>().empty()) {
            fail(at / key, "expected a non-empty string");
        }
        return v.get<std::string>();
    }

    std::array<double, 4> quad(const nlohmann::json& parent, const nlohmann::json::json_pointer& at, const std::string& key) const {
        const auto& v = member(parent, at, key);
        if (!v.is_array() || v.size() != 4) {
            fail(at / key, "expected an array of 4 numbers");
        }
        std::array<double, 4> out{};
        for (std::size_t i = 0; i < 4; ++i) {
            if (!v[i].is_number() || !std::isfinite(v[i].get<double>())) {
                fail(at / key, "expected an array of 4 numbers");
            }
            out[i] = v[i].get<double>();
        }
        return out;
    }

    const std::filesystem::path& source() const { return source_; }

  private:
    std::filesystem::path source_;
};

using Ptr = nlohmann::json::json_pointer;

Dataset read_coco(const nlohmann::json& j, const Reader& r) {
    Dataset d;
    d.format = DatasetFormat::kCoco;
    std::map<std::int64_t, std::size_t> image_index;
    const Ptr root;
    const auto& images = r.array(j, root, "images");
    for (std::size_t i = 0; i < images.size(); ++i) {
        const Ptr at = root / "images" / i;
        DatasetImage img;
        img.id = r.integer(images[i], at, "id");
        img.file = r.text(images[i], at, "file_name");
        img.width = static_cast<int>(r.integer(images[i], at, "width"));
        img.height = static_cast<int>(r.integer(images[i], at, "height"));
        if (img.width <= 0 || img.height <= 0) {
            r.fail(at, "image size must be positive");
        }
        if (!image_index.emplace(img.id, d.images.size()).second) {
            r.fail(at / "id", "duplicate image id");
        }
        d.images.push_back(std::move(img));
    }
    std::map<std::int64_t, std::string> category_name;
    const auto& categories = r.array(j, root, "categories");
    for (std::size_t i = 0; i < categories.size(); ++i) {
        const Ptr at = root / "categories" / i;
        Category c{r.integer(categories[i], at, "id"), r.text(categories[i], at, "name")};
        if (!category_name.emplace(c.id, c.name).second) {
            r.fail(at / "id", "duplicate category id");
        }
        d.categories.push_back(std::move(c));
    }
    const auto& annotations = r.array(j, root, "annotations");
    for (std::size_t i = 0; i < annotations.size(); ++i) {
        const Ptr at = root / "annotations" / i;
        const auto image_id = r.integer(annotations[i], at, "image_id");
        const auto category_id = r.integer(annotations[i], at, "category_id");
        const auto [x, y, w, h] = r.quad(annotations[i], at, "bbox");
        const auto img = image_index.find(image_id);
        if (img == image_index.end()) {
            r.fail(at / "image_id", "unknown image id");
        }
        const auto cat = category_name.find(category_id);
        if (cat == category_name.end()) {
            r.fail(at / "category_id", "unknown category id");
        }
        if (w <= 0 || h <= 0) {
            r.fail(at / "bbox", "box width and height must be positive");
        }
        d.images[img->second].annotations.push_back({BBox{x, y, x + w, y + h}, cat->second});
    }
    return d;
}

Dataset read_custom(const nlohmann::json& j, const Reader& r) {
    Dataset d;
    d.format = DatasetFormat::kCustom;
    const Ptr root;
    const auto& images = r.array(j, root, "images");
    for (std::size_t i = 0; i < images.size(); ++i) {
        const Ptr at = root / "images" / i;
        DatasetImage img;
        img.id = images[i].contains("id") ? r.integer(images[i], at, "id") : static_cast<std::int64_t>(i);
        img.file = r.text(images[i], at, "file");
        img.width = static_cast<int>(r.integer(images[i], at, "width"));
        img.height = static_cast<int>(r.integer(images[i], at, "height"));
        if (img.width <= 0 || img.height <= 0) {
            r.fail(at, "image size must be positive");
        }
        const auto& annotations = r.array(images[i], at, "annotations");
        for (std::size_t k = 0; k < annotations.size(); ++k) {
            const Ptr a_at = at / "annotations" / k;
            const auto [x0, y0, x1, y1] = r.quad(annotations[k], a_at, "bbox");
            if (x1 <= x0 || y1 <= y0) {
                r.fail(a_at / "bbox", "box must satisfy x0 < x1 and y0 < y1");
            }
            img.annotations.push_back({BBox{x0, y0, x1, y1}, r.text(annotations[k], a_at, "description")});
        }
        d.images.push_back(std::move(img));
    }
    return d;
}

}  // namespace

Dataset dataset_from_json(const nlohmann::json& j, DatasetFormat format, const std::filesystem::path& source) {
    const Reader reader(source);
    Dataset d = format == DatasetFormat::kCoco ? read_coco(j, reader) : read_custom(j, reader);
    d.root = source.has_parent_path() ? source.parent_path() : std::filesystem::path(".");
    return d;
}

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::kIo, "cannot open dataset: " + path.string());
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::kSchemaViolation, path.string() + ": " + e.what());
    }
    return dataset_from_json(j, format, path);
}

nlohmann::json to_coco_json(const Dataset& dataset) {
    nlohmann::json images = nlohmann::json::array();
    nlohmann::json annotations = nlohmann::json::array();
    nlohmann::json categories = nlohmann::json::array();
    std::map<std::string, std::int64_t> category_id;
    for (const auto& c : dataset.categories) {
        category_id[c.name] = c.id;
        categories.push_back({{"id", c.id}, {"name", c.name}});
    }
    std::int64_t next_annotation = 1;
    for (const auto& img : dataset.images) {
        images.push_back({{"id", img.id}, {"file_name", img.file.generic_string()}, {"width", img.width}, {"height", img.height}});
        for (const auto& a : img.annotations) {
            const auto& b = a.bbox;
            annotations.push_back({{"id", next_annotation++},
                                   {"image_id", img.id},
                                   {"category_id", category_id.at(a.label)},
                                   {"bbox", {b.x0, b.y0, b.width(), b.height()}},
                                   {"area", b.area()},
                                   {"iscrowd", 0}});
        }
    }
    return {{"images", images}, {"annotations", annotations}, {"categories", categories}};
}

nlohmann::json to_custom_json(const Dataset& dataset) {
    nlohmann::json images = nlohmann::json::array();
    for (const auto& img : dataset.images) {
        nlohmann::json annotations = nlohmann::json::array();
        for (const auto& a : img.annotations) {
            annotations.push_back({{"bbox", a.bbox}, {"description", a.label}});
        }
        images.push_back({{"id", img.id},
                          {"file", img.file.generic_string()},
                          {"width", img.width},
                          {"height", img.height},
                          {"annotations", annotations}});
    }
    return {{"images", images}};
}

}  // namespace grounder::evaluation
