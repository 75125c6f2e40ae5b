#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "grounder/core/geometry.hpp"

namespace grounder {

/// An 8-bit BGR image. Value type; copies share pixel storage like cv::Mat.
class Image {
  public:
    Image() = default;
    explicit Image(cv::Mat pixels);

    static Image load(const std::filesystem::path& path);
    static Image decode(std::span<const std::uint8_t> encoded);

    [[nodiscard]] int width() const { return pixels_.cols; }
    [[nodiscard]] int height() const { return pixels_.rows; }
    [[nodiscard]] bool empty() const { return pixels_.empty(); }
    [[nodiscard]] const cv::Mat& pixels() const { return pixels_; }

    /// Lossless PNG bytes; deterministic for identical pixels.
    [[nodiscard]] std::vector<std::uint8_t> encode_png() const;
    /// Base64 of the PNG encoding.
    [[nodiscard]] std::string to_base64() const;
    static Image from_base64(std::string_view text);

    /// Crops to the box rounded outward to whole pixels. Throws DegenerateCrop if empty.
    [[nodiscard]] Image crop(const BBox& box) const;

    void save(const std::filesystem::path& path) const;

  private:
    cv::Mat pixels_;
};

}  // namespace grounder
