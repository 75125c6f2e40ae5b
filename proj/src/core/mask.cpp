#include "grounder/core/mask.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "grounder/core/error.hpp"

namespace grounder {

std::size_t BinaryMask::area() const {
    return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), std::uint8_t{1}));
}

void BinaryMask::fill_rect(int x0, int y0, int x1, int y1) {
    x0 = std::clamp(x0, 0, width_);
    x1 = std::clamp(x1, 0, width_);
    y0 = std::clamp(y0, 0, height_);
    y1 = std::clamp(y1, 0, height_);
    for (int r = y0; r < y1; ++r) {
        for (int c = x0; c < x1; ++c) {
            set(r, c);
        }
    }
}

RleMask encode_rle(const BinaryMask& mask) {
    RleMask rle{mask.height(), mask.width(), {}};
    bool current = false;
    std::uint32_t run = 0;
    for (int c = 0; c < mask.width(); ++c) {
        for (int r = 0; r < mask.height(); ++r) {
            const bool v = mask.at(r, c);
            if (v != current) {
                rle.counts.push_back(run);
                run = 0;
                current = v;
            }
            ++run;
        }
    }
    rle.counts.push_back(run);
    return rle;
}

BinaryMask decode_rle(const RleMask& rle) {
    if (!rle_consistent(rle)) {
        throw Error(ErrorCode::kProtocolViolation, "mask run lengths do not match mask size");
    }
    BinaryMask mask(rle.width, rle.height);
    std::size_t pos = 0;
    bool value = false;
    for (const auto run : rle.counts) {
        if (value) {
            for (std::size_t k = pos; k < pos + run; ++k) {
                mask.set(static_cast<int>(k % rle.height), static_cast<int>(k / rle.height));
            }
        }
        pos += run;
        value = !value;
    }
    return mask;
}

bool rle_consistent(const RleMask& rle) {
    if (rle.height < 0 || rle.width < 0) {
        return false;
    }
    const auto total = std::accumulate(rle.counts.begin(), rle.counts.end(), std::uint64_t{0});
    return total == static_cast<std::uint64_t>(rle.height) * static_cast<std::uint64_t>(rle.width);
}

std::size_t rle_area(const RleMask& rle) {
    std::size_t area = 0;
    for (std::size_t i = 1; i < rle.counts.size(); i += 2) {
        area += rle.counts[i];
    }
    return area;
}

BBox mask_to_bbox(const RleMask& rle) {
    if (!rle_consistent(rle)) {
        throw Error(ErrorCode::kProtocolViolation, "mask run lengths do not match mask size");
    }
    int min_row = std::numeric_limits<int>::max();
    int max_row = -1;
    int min_col = std::numeric_limits<int>::max();
    int max_col = -1;
    std::size_t pos = 0;
    const auto h = static_cast<std::size_t>(rle.height);
    for (std::size_t i = 0; i < rle.counts.size(); ++i) {
        const std::size_t run = rle.counts[i];
        if (i % 2 == 1 && run > 0) {
            const std::size_t first = pos;
            const std::size_t last = pos + run - 1;
            const auto first_col = static_cast<int>(first / h);
            const auto last_col = static_cast<int>(last / h);
            min_col = std::min(min_col, first_col);
            max_col = std::max(max_col, last_col);
            if (first_col == last_col) {
                min_row = std::min(min_row, static_cast<int>(first % h));
                max_row = std::max(max_row, static_cast<int>(last % h));
            } else {
                // A run that crosses a column boundary touches the last row of its
                // first column and the first row of its last column.
                min_row = 0;
                max_row = rle.height - 1;
            }
        }
        pos += run;
    }
    if (max_col < 0) {
        throw Error(ErrorCode::kEmptyMask, "mask has no set cells");
    }
    return BBox{static_cast<double>(min_col), static_cast<double>(min_row), static_cast<double>(max_col + 1),
                static_cast<double>(max_row + 1)};
}

void to_json(nlohmann::json& j, const RleMask& rle) {
    j = nlohmann::json{{"size", {rle.height, rle.width}}, {"counts", rle.counts}};
}

void from_json(const nlohmann::json& j, RleMask& rle) {
    if (!j.is_object() || !j.contains("size") || !j.contains("counts") || !j["size"].is_array() ||
        j["size"].size() != 2 || !j["counts"].is_array()) {
        throw Error(ErrorCode::kProtocolViolation, "mask_rle must be {size:[h,w], counts:[...]}");
    }
    rle.height = j["size"][0].get<int>();
    rle.width = j["size"][1].get<int>();
    rle.counts.clear();
    for (const auto& c : j["counts"]) {
        if (!c.is_number_unsigned() && !(c.is_number_integer() && c.get<std::int64_t>() >= 0)) {
            throw Error(ErrorCode::kProtocolViolation, "mask_rle counts must be non-negative integers");
        }
        rle.counts.push_back(c.get<std::uint32_t>());
    }
}

}  // namespace grounder
