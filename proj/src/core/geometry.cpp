#include "grounder/core/geometry.hpp"

#include <algorithm>

#include "grounder/core/error.hpp"

namespace grounder {

double iou(const BBox& a, const BBox& b) {
    const double ix0 = std::max(a.x0, b.x0);
    const double iy0 = std::max(a.y0, b.y0);
    const double ix1 = std::min(a.x1, b.x1);
    const double iy1 = std::min(a.y1, b.y1);
    if (ix1 <= ix0 || iy1 <= iy0) {
        return 0.0;
    }
    const double inter = (ix1 - ix0) * (iy1 - iy0);
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

BBox clamp_box(const BBox& box, double width, double height) {
    return BBox{std::clamp(box.x0, 0.0, width), std::clamp(box.y0, 0.0, height),
                std::clamp(box.x1, 0.0, width), std::clamp(box.y1, 0.0, height)};
}

BBox pad_box(const BBox& box, double margin, double width, double height) {
    const double dx = box.width() * margin;
    const double dy = box.height() * margin;
    return clamp_box(BBox{box.x0 - dx, box.y0 - dy, box.x1 + dx, box.y1 + dy}, width, height);
}

void to_json(nlohmann::json& j, const BBox& box) {
    j = nlohmann::json::array({box.x0, box.y0, box.x1, box.y1});
}

void from_json(const nlohmann::json& j, BBox& box) {
    if (!j.is_array() || j.size() != 4) {
        throw Error(ErrorCode::kProtocolViolation, "bbox must be an array of 4 numbers");
    }
    for (const auto& v : j) {
        if (!v.is_number()) {
            throw Error(ErrorCode::kProtocolViolation, "bbox must be an array of 4 numbers");
        }
    }
    box = BBox{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

}  // namespace grounder
