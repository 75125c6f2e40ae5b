#pragma once

#include <compare>

#include <nlohmann/json.hpp>

namespace grounder {

/// Axis-aligned box in pixel coordinates, half-open: [x0, x1) x [y0, y1).
struct BBox {
    double x0 = 0.0;
    double y0 = 0.0;
    double x1 = 0.0;
    double y1 = 0.0;

    [[nodiscard]] double width() const { return x1 - x0; }
    [[nodiscard]] double height() const { return y1 - y0; }
    [[nodiscard]] double area() const { return valid() ? width() * height() : 0.0; }
    [[nodiscard]] bool valid() const { return x0 < x1 && y0 < y1; }

    auto operator<=>(const BBox&) const = default;
};

/// Intersection over union; 0 for disjoint or degenerate boxes.
double iou(const BBox& a, const BBox& b);

BBox clamp_box(const BBox& box, double width, double height);

/// Grows each side by `margin` times the box extent, then clamps.
BBox pad_box(const BBox& box, double margin, double width, double height);

void to_json(nlohmann::json& j, const BBox& box);
void from_json(const nlohmann::json& j, BBox& box);

}  // namespace grounder
