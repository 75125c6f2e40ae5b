#include <doctest.h>

#include <algorithm>
#include <set>

#include "grounder/core/error.hpp"
#include "grounder/core/geometry.hpp"
#include "grounder/core/image.hpp"
#include "grounder/core/mask.hpp"
#include "grounder/core/parallel.hpp"
#include "grounder/core/text.hpp"
#include "support.hpp"

using namespace grounder;
using grounder::testing::Rng;

namespace {

// Dynamic-programming edit distance written independently of the library.
std::size_t dp_distance(const std::string& a, const std::string& b) {
    std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
    for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
    for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        }
    }
    return d[a.size()][b.size()];
}

double area_oracle_iou(const BBox& a, const BBox& b) {
    const double w = std::max(0.0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
    const double h = std::max(0.0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
    const double inter = w * h;
    const double uni = (a.x1 - a.x0) * (a.y1 - a.y0) + (b.x1 - b.x0) * (b.y1 - b.y0) - inter;
    return uni > 0 ? inter / uni : 0.0;
}

BBox random_box(Rng& rng, int extent) {
    const int x0 = rng.integer(0, extent - 2);
    const int y0 = rng.integer(0, extent - 2);
    return BBox{double(x0), double(y0), double(rng.integer(x0 + 1, extent)), double(rng.integer(y0 + 1, extent))};
}

}  // namespace

TEST_CASE("iou examples") {
    const BBox a{0, 0, 10, 10};
    CHECK(iou(a, a) == doctest::Approx(1.0));
    CHECK(iou(a, BBox{20, 20, 30, 30}) == 0.0);
    CHECK(iou(a, BBox{5, 0, 15, 10}) == doctest::Approx(50.0 / 150.0).epsilon(1e-12));
    CHECK(iou(a, BBox{1, 1, 10, 10}) == doctest::Approx(0.81));
    CHECK(iou(a, BBox{3, 3, 3, 8}) == 0.0);
}

TEST_CASE("iou agrees with the area oracle and is symmetric") {
    Rng rng(11);
    for (int i = 0; i < 2000; ++i) {
        const auto a = random_box(rng, 40);
        const auto b = random_box(rng, 40);
        CHECK(std::abs(iou(a, b) - area_oracle_iou(a, b)) < 1e-12);
        CHECK(iou(a, b) == iou(b, a));
        CHECK(iou(a, b) >= 0.0);
        CHECK(iou(a, b) <= 1.0);
    }
}

TEST_CASE("pad and clamp stay inside the image") {
    const auto padded = pad_box(BBox{0, 0, 10, 10}, 0.1, 50, 50);
    CHECK(padded == BBox{0, 0, 11, 11});
    const auto middle = pad_box(BBox{10, 10, 20, 30}, 0.1, 100, 100);
    CHECK(middle == BBox{9, 8, 21, 32});
    CHECK(clamp_box(BBox{-5, -5, 200, 60}, 100, 50) == BBox{0, 0, 100, 50});
}

TEST_CASE("mask_to_bbox examples") {
    BinaryMask single(12, 12);
    single.set(5, 7);
    CHECK(mask_to_bbox(encode_rle(single)) == BBox{7, 5, 8, 6});

    BinaryMask full(10, 10);
    full.fill_rect(0, 0, 10, 10);
    CHECK(mask_to_bbox(encode_rle(full)) == BBox{0, 0, 10, 10});

    BinaryMask ell(10, 10);
    for (int r = 2; r <= 4; ++r) ell.set(r, 3);
    for (int c = 3; c <= 6; ++c) ell.set(4, c);
    CHECK(mask_to_bbox(encode_rle(ell)) == BBox{3, 2, 7, 5});

    CHECK_THROWS_AS(mask_to_bbox(encode_rle(BinaryMask(4, 4))), Error);
}

TEST_CASE("rle round trip and bbox against brute force") {
    Rng rng(5);
    for (int trial = 0; trial < 300; ++trial) {
        const int w = rng.integer(1, 17);
        const int h = rng.integer(1, 17);
        BinaryMask m(w, h);
        const double density = rng.real(0.0, 0.6);
        int minr = h, minc = w, maxr = -1, maxc = -1;
        for (int r = 0; r < h; ++r) {
            for (int c = 0; c < w; ++c) {
                if (rng.coin(density)) {
                    m.set(r, c);
                    minr = std::min(minr, r);
                    minc = std::min(minc, c);
                    maxr = std::max(maxr, r);
                    maxc = std::max(maxc, c);
                }
            }
        }
        const auto rle = encode_rle(m);
        CHECK(rle_consistent(rle));
        CHECK(decode_rle(rle) == m);
        CHECK(rle_area(rle) == m.area());
        if (maxr >= 0) {
            CHECK(mask_to_bbox(rle) == BBox{double(minc), double(minr), double(maxc + 1), double(maxr + 1)});
        }
        nlohmann::json j = rle;
        CHECK(j.get<RleMask>() == rle);
    }
}

TEST_CASE("rle starts with zeros and is column-major") {
    BinaryMask m(3, 2);
    m.set(0, 0);
    m.set(1, 2);
    const auto rle = encode_rle(m);
    // Column-major cells: (0,0)=1 (1,0)=0 (0,1)=0 (1,1)=0 (0,2)=0 (1,2)=1
    CHECK(rle.counts == std::vector<std::uint32_t>{0, 1, 4, 1});
    RleMask bad{2, 3, {1, 2}};
    CHECK_FALSE(rle_consistent(bad));
}

TEST_CASE("levenshtein matches the dynamic-programming oracle") {
    Rng rng(3);
    const std::string alphabet = "abcde";
    for (int i = 0; i < 1000; ++i) {
        std::string a, b;
        for (int k = rng.integer(0, 8); k > 0; --k) a += alphabet[rng.integer(0, 4)];
        for (int k = rng.integer(0, 8); k > 0; --k) b += alphabet[rng.integer(0, 4)];
        CHECK(levenshtein(a, b) == dp_distance(a, b));
    }
    CHECK(levenshtein("fragil", "fragile") == 1);
    CHECK(levenshtein("kitten", "sitting") == 3);
}

TEST_CASE("fuzzy matching") {
    const std::vector<std::string> candidates{"fragile", "sturdy"};
    CHECK(fuzzy_threshold("fragile") == 1);
    CHECK(fuzzy_threshold("cup") == 1);
    CHECK(fuzzy_threshold("refrigerator") == 3);
    CHECK(fuzzy_match("fragil", candidates) == 0);
    CHECK(fuzzy_match("STURDY", candidates) == 1);
    CHECK_FALSE(fuzzy_match("metalic-ish-stuff", std::vector<std::string>{"metal", "plastic"}).has_value());
    const std::vector<std::string> tie{"cat", "bat"};
    CHECK(fuzzy_match("hat", tie) == 0);
}

TEST_CASE("text helpers") {
    CHECK(trim("  a b \n") == "a b");
    CHECK(split_words(" red  cup\tleft ") == std::vector<std::string>{"red", "cup", "left"});
    CHECK(to_lower("MiXeD") == "mixed");
    const std::vector<std::string> parts{"a", "b", "c"};
    CHECK(join(parts, ", ") == "a, b, c");
    CHECK(hex64(0xabcULL) == "0000000000000abc");
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("base64 round trip") {
    Rng rng(9);
    for (int i = 0; i < 100; ++i) {
        std::vector<std::uint8_t> bytes(static_cast<std::size_t>(rng.integer(0, 40)));
        for (auto& b : bytes) b = static_cast<std::uint8_t>(rng.integer(0, 255));
        CHECK(base64_decode(base64_encode(bytes)) == bytes);
    }
    const std::string hello = "hello";
    CHECK(base64_encode(std::vector<std::uint8_t>(hello.begin(), hello.end())) == "aGVsbG8=");
    CHECK_THROWS_AS(base64_decode("not base64!"), Error);
}

TEST_CASE("image encode and decode") {
    Image img(cv::Mat(4, 6, CV_8UC3, cv::Scalar(10, 20, 30)));
    const auto back = Image::from_base64(img.to_base64());
    CHECK(back.width() == 6);
    CHECK(back.height() == 4);
    CHECK(back.pixels().at<cv::Vec3b>(2, 3) == cv::Vec3b(10, 20, 30));
    CHECK_THROWS_AS(Image::from_base64(base64_encode(std::vector<std::uint8_t>{1, 2, 3})), Error);
}

TEST_CASE("error codes map to distinct exit codes") {
    std::set<int> seen;
    for (const auto code : all_error_codes()) {
        const int exit = exit_code(code);
        CHECK(exit > 1);
        CHECK(seen.insert(exit).second);
        CHECK_FALSE(to_string(code).empty());
    }
    CHECK(exit_code(ErrorCode::kInvalidArgument) == 2);
}

TEST_CASE("parallel_collect isolates failures per slot") {
    const auto out = parallel_collect<int>(4, 4, [](std::size_t i) -> int {
        if (i == 1) throw Error(ErrorCode::kDetectorFailure, "boom");
        return static_cast<int>(i) * 10;
    });
    REQUIRE(out.size() == 4);
    CHECK(out[0].value() == 0);
    CHECK_FALSE(out[1].ok());
    CHECK(out[1].error().code == ErrorCode::kDetectorFailure);
    CHECK(out[3].value() == 30);
}
