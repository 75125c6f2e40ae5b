#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "grounder/core/geometry.hpp"

namespace grounder {

/// Dense binary mask, row-major.
class BinaryMask {
  public:
    BinaryMask() = default;
    BinaryMask(int width, int height) : width_(width), height_(height), cells_(static_cast<std::size_t>(width) * height, 0) {}

    [[nodiscard]] int width() const { return width_; }
    [[nodiscard]] int height() const { return height_; }
    [[nodiscard]] bool at(int row, int col) const { return cells_[index(row, col)] != 0; }
    void set(int row, int col, bool value = true) { cells_[index(row, col)] = value ? 1 : 0; }
    [[nodiscard]] std::size_t area() const;

    /// Fills rows [y0, y1) and columns [x0, x1), clipped to the mask.
    void fill_rect(int x0, int y0, int x1, int y1);

    bool operator==(const BinaryMask&) const = default;

  private:
    [[nodiscard]] std::size_t index(int row, int col) const { return static_cast<std::size_t>(row) * width_ + col; }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> cells_;
};

/// Uncompressed COCO run-length encoding: column-major runs, first run counts zeros.
struct RleMask {
    int height = 0;
    int width = 0;
    std::vector<std::uint32_t> counts;

    bool operator==(const RleMask&) const = default;
};

RleMask encode_rle(const BinaryMask& mask);
BinaryMask decode_rle(const RleMask& rle);

/// True when the runs cover exactly width x height cells.
bool rle_consistent(const RleMask& rle);
std::size_t rle_area(const RleMask& rle);

/// Tight half-open bounds of the set cells. Throws EmptyMask for an empty mask.
BBox mask_to_bbox(const RleMask& rle);

void to_json(nlohmann::json& j, const RleMask& rle);
void from_json(const nlohmann::json& j, RleMask& rle);

}  // namespace grounder
