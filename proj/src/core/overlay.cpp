#include "grounder/core/overlay.hpp"

#include <opencv2/imgproc.hpp>

#include "grounder/core/text.hpp"

namespace grounder {

namespace {

cv::Scalar label_colour(const std::string& label) {
    const auto h = fnv1a64(label);
    return cv::Scalar(64 + static_cast<double>(h & 0x7f), 64 + static_cast<double>((h >> 8) & 0x7f),
                      64 + static_cast<double>((h >> 16) & 0x7f));
}

}  // namespace

Image render_overlay(const Image& image, std::span<const OverlayItem> items) {
    cv::Mat canvas = image.pixels().clone();
    for (const auto& item : items) {
        const auto colour = label_colour(item.label);
        if (item.mask != nullptr && item.mask->width == canvas.cols && item.mask->height == canvas.rows) {
            const BinaryMask mask = decode_rle(*item.mask);
            for (int r = 0; r < canvas.rows; ++r) {
                auto* row = canvas.ptr<cv::Vec3b>(r);
                for (int c = 0; c < canvas.cols; ++c) {
                    if (mask.at(r, c)) {
                        for (int k = 0; k < 3; ++k) {
                            row[c][k] = static_cast<unsigned char>((row[c][k] + colour[k]) / 2);
                        }
                    }
                }
            }
        }
        if (item.box) {
            const cv::Point p0(static_cast<int>(item.box->x0), static_cast<int>(item.box->y0));
            const cv::Point p1(static_cast<int>(item.box->x1) - 1, static_cast<int>(item.box->y1) - 1);
            cv::rectangle(canvas, p0, p1, colour, 1);
            if (!item.label.empty()) {
                cv::putText(canvas, item.label, cv::Point(p0.x, std::max(10, p0.y - 3)), cv::FONT_HERSHEY_SIMPLEX, 0.35,
                            colour, 1);
            }
        }
    }
    return Image(canvas);
}

}  // namespace grounder
