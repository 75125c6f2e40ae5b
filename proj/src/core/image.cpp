#include "grounder/core/image.hpp"

#include <cmath>

#include <opencv2/imgcodecs.hpp>

#include "grounder/core/error.hpp"
#include "grounder/core/text.hpp"

namespace grounder {

Image::Image(cv::Mat pixels) : pixels_(std::move(pixels)) {
    if (!pixels_.empty() && pixels_.type() != CV_8UC3) {
        throw Error(ErrorCode::kInvalidArgument, "images must be 8-bit, 3 channels");
    }
}

Image Image::load(const std::filesystem::path& path) {
    cv::Mat pixels = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (pixels.empty()) {
        throw Error(ErrorCode::kIo, "cannot read image: " + path.string());
    }
    return Image(std::move(pixels));
}

Image Image::decode(std::span<const std::uint8_t> encoded) {
    if (encoded.empty()) {
        throw Error(ErrorCode::kInvalidArgument, "empty image payload");
    }
    const cv::Mat buffer(1, static_cast<int>(encoded.size()), CV_8UC1, const_cast<std::uint8_t*>(encoded.data()));
    cv::Mat pixels = cv::imdecode(buffer, cv::IMREAD_COLOR);
    if (pixels.empty()) {
        throw Error(ErrorCode::kInvalidArgument, "image payload does not decode");
    }
    return Image(std::move(pixels));
}

std::vector<std::uint8_t> Image::encode_png() const {
    std::vector<std::uint8_t> out;
    if (!cv::imencode(".png", pixels_, out)) {
        throw Error(ErrorCode::kIo, "png encoding failed");
    }
    return out;
}

std::string Image::to_base64() const {
    const auto bytes = encode_png();
    return base64_encode(bytes);
}

Image Image::from_base64(std::string_view text) {
    const auto bytes = base64_decode(text);
    return decode(bytes);
}

Image Image::crop(const BBox& box) const {
    const BBox clamped = clamp_box(box, width(), height());
    const int x0 = static_cast<int>(std::floor(clamped.x0));
    const int y0 = static_cast<int>(std::floor(clamped.y0));
    const int x1 = static_cast<int>(std::ceil(clamped.x1));
    const int y1 = static_cast<int>(std::ceil(clamped.y1));
    if (x1 <= x0 || y1 <= y0) {
        throw Error(ErrorCode::kDegenerateCrop, "crop has zero area after clamping");
    }
    return Image(pixels_(cv::Rect(x0, y0, x1 - x0, y1 - y0)).clone());
}

void Image::save(const std::filesystem::path& path) const {
    if (!cv::imwrite(path.string(), pixels_)) {
        throw Error(ErrorCode::kIo, "cannot write image: " + path.string());
    }
}

}  // namespace grounder
