#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "grounder/core/geometry.hpp"
#include "grounder/core/image.hpp"
#include "grounder/core/mask.hpp"
#include "grounder/gateway/service_call.hpp"

namespace grounder::gateway {

struct Detection {
    std::size_t prompt_index = 0;
    BBox bbox;
    double confidence = 0.0;

    bool operator==(const Detection&) const = default;
};

void to_json(nlohmann::json& j, const Detection& d);

/// Client for POST /detect.
class DetectorClient {
  public:
    DetectorClient(EndpointPool& pool, Transport& transport) : pool_(pool), transport_(transport) {}

    /// Every detection the service reports, clamped to the image. Boxes that
    /// collapse to zero area after clamping are dropped.
    std::vector<Detection> detect(const Image& image, std::span<const std::string> prompts);

  private:
    EndpointPool& pool_;
    Transport& transport_;
};

struct TrackMask {
    std::int64_t track_id = 0;
    RleMask mask;
};

struct TrackerSnapshot {
    std::int64_t frame = 0;
    std::vector<TrackMask> entries;
};

/// Opaque server-side tracker state; empty until the first init.
struct TrackerHandle {
    std::string state_id;
    [[nodiscard]] bool fresh() const { return state_id.empty(); }
};

/// Client for POST /track/init and /track/step.
class TrackerClient {
  public:
    TrackerClient(EndpointPool& pool, Transport& transport) : pool_(pool), transport_(transport) {}

    /// Fresh handle: init with one track per box. Otherwise: step the existing
    /// state, appending `new_boxes` as new tracks. `advance` = false re-segments
    /// the current frame without moving the tracker forward.
    TrackerSnapshot update(const Image& frame, std::span<const BBox> new_boxes, TrackerHandle& handle, bool advance = true);

  private:
    EndpointPool& pool_;
    Transport& transport_;
};

/// Client for POST /embed with an exact-text cache.
class EmbedderClient {
  public:
    EmbedderClient(EndpointPool& pool, Transport& transport, std::string model = "embedder")
        : pool_(pool), transport_(transport), model_(std::move(model)) {}

    /// Unit vectors, one per text, in input order.
    std::vector<std::vector<double>> embed(std::span<const std::string> texts);

    [[nodiscard]] std::size_t upstream_calls() const;
    [[nodiscard]] std::size_t cache_hits() const;

    /// Disk persistence keyed by (model, text hash). Missing file is not an error.
    void load_cache(const std::filesystem::path& path);
    void save_cache(const std::filesystem::path& path) const;

  private:
    EndpointPool& pool_;
    Transport& transport_;
    std::string model_;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, std::vector<double>> cache_;
    std::size_t upstream_calls_ = 0;
    std::size_t cache_hits_ = 0;
};

/// Scales to unit Euclidean length. Throws ProtocolViolation for a zero vector.
std::vector<double> normalized(std::vector<double> v);
double cosine_similarity(std::span<const double> a, std::span<const double> b);

}  // namespace grounder::gateway
