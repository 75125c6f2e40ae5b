#pragma once

#include <optional>
#include <span>
#include <string>

#include "grounder/core/geometry.hpp"
#include "grounder/core/image.hpp"
#include "grounder/core/mask.hpp"

namespace grounder {

struct OverlayItem {
    std::optional<BBox> box;
    std::string label;
    const RleMask* mask = nullptr;
};

/// Copy of `image` with masks tinted and boxes and labels drawn. Colours follow the label.
Image render_overlay(const Image& image, std::span<const OverlayItem> items);

}  // namespace grounder
