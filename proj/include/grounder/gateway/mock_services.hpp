#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "grounder/core/geometry.hpp"
#include "grounder/core/image.hpp"

namespace grounder::gateway::mock {

/// One synthetic object kind: a solid colour the geometric mocks can recognise.
struct PaletteEntry {
    std::array<std::uint8_t, 3> rgb{};
    std::string object_name;
    std::string description;
    std::string category;
    nlohmann::json attributes = nlohmann::json::object();
};

struct ChatRule {
    std::vector<std::string> contains;
    std::optional<std::size_t> image_count;
    std::string handler;  // "describe" | "attribute" | "validate" | "define" | "" (scripted)
    std::string response;
    std::chrono::milliseconds latency{0};
};

struct DetectorRule {
    std::string prompt;
    std::vector<std::pair<BBox, double>> detections;
};

struct EmptyMaskScript {
    std::int64_t track = 0;
    std::int64_t from_frame = 0;
    std::int64_t to_frame = 0;
};

struct FaultScript {
    std::chrono::milliseconds latency{0};
    int fail_first = 0;
    bool always_fail = false;
    int fail_status = 503;
};

/// Parsed fixture file. See data/mocks/default_fixture.json for the layout.
struct MockFixture {
    std::uint64_t seed = 0;
    std::array<std::uint8_t, 3> background{0, 0, 0};
    std::vector<PaletteEntry> palette;

    std::vector<ChatRule> chat_rules;
    std::string describe_style = "plain";
    double validator_error_rate = 0.0;

    std::vector<DetectorRule> detector_rules;
    bool detector_geometric = true;
    double detector_score = 0.9;
    double detector_error_rate = 0.0;
    double distractor_score = 0.0;

    std::string tracker_mode = "rectangle";
    std::string tracker_fill = "inclusive";
    std::vector<EmptyMaskScript> empty_masks;

    std::size_t embed_dim = 64;
    std::map<std::string, std::vector<double>> codebook;

    std::map<std::string, FaultScript> faults;
    bool down = false;

    static MockFixture from_json(const nlohmann::json& j);
    static MockFixture load(const std::filesystem::path& path);
};

struct MockReply {
    int status = 200;
    std::string body;
    std::chrono::milliseconds latency{0};
};

/// Deterministic stand-ins for the chat, detector, tracker and embedder services.
///
/// Replies are a function of request content and fixture; only the fault
/// scripts ("fail the first n calls") depend on arrival order. Geometric
/// handlers read the solid-colour synthetic scenes described by the palette.
class MockServices {
  public:
    explicit MockServices(MockFixture fixture);

    MockReply handle(std::string_view method, std::string_view path, const std::string& body);

    /// Calls seen per route ("chat", "detect", "track", "embed", "health").
    [[nodiscard]] std::size_t calls(const std::string& route) const;
    void set_fault(const std::string& route, FaultScript fault);
    void set_down(bool down);
    [[nodiscard]] const MockFixture& fixture() const { return fixture_; }

  private:
    struct MockTrack {
        std::int64_t id = 0;
        BBox box;
        std::optional<std::size_t> palette_index;
    };
    struct TrackerState {
        std::int64_t frame = 0;
        std::int64_t next_id = 0;
        std::vector<MockTrack> tracks;
    };

    MockReply handle_chat(const nlohmann::json& body);
    MockReply handle_detect(const nlohmann::json& body);
    MockReply handle_track(const nlohmann::json& body, bool init);
    MockReply handle_embed(const nlohmann::json& body);

    std::string describe(const Image& image) const;
    std::string attribute(const std::string& text, const Image& image) const;
    std::string validate(const Image& crop, const std::string& crop_payload) const;
    std::string define(const std::string& text) const;
    nlohmann::json track_masks(const TrackerState& state, const Image& image) const;
    std::vector<double> embed_one(const std::string& text) const;

    MockFixture fixture_;
    mutable std::mutex mutex_;
    std::map<std::string, std::size_t> calls_;
    std::map<std::string, TrackerState> trackers_;
    std::size_t next_state_ = 0;
};

/// Per-palette pixel counts and half-open bounds in an image.
struct PalettePresence {
    std::size_t palette_index = 0;
    std::size_t pixels = 0;
    BBox bounds;
};
std::vector<PalettePresence> find_palette(const Image& image, const std::vector<PaletteEntry>& palette);

/// Uniform value in [0, 1) derived from a seed and a key.
double unit_hash(std::uint64_t seed, std::string_view key);

}  // namespace grounder::gateway::mock
