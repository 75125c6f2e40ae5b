#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "grounder/core/geometry.hpp"
#include "grounder/core/image.hpp"
#include "grounder/core/mask.hpp"
#include "grounder/description/structured_description.hpp"
#include "grounder/gateway/services.hpp"
#include "grounder/grounding/grounding.hpp"

namespace grounder::tracking {

enum class TrackStatus { kLive, kLost, kRejected };

std::string_view to_string(TrackStatus status);

/// The described instance a track stands for, frozen at grounding time.
struct InstanceRef {
    std::string object_name;
    /// Every attribute of the instance, object_name and description included.
    nlohmann::json attributes;

    bool operator==(const InstanceRef&) const = default;
};

InstanceRef make_ref(const description::ObjectInstance& instance);

struct Track {
    std::int64_t id = 0;
    std::optional<InstanceRef> instance;
    RleMask mask;
    /// Tight bounds of the mask; empty while the mask is empty.
    std::optional<BBox> bbox;
    /// Box the track was created from.
    BBox seed_box;
    /// Detector confidence of the grounding that created the track.
    double confidence = 0.0;
    std::int64_t birth_frame = 0;
    TrackStatus status = TrackStatus::kLive;
    int empty_frames = 0;
};

struct Admission {
    std::int64_t track_id = 0;
    std::string object_name;
    BBox box;
};

struct Suppression {
    std::string object_name;
    BBox box;
    std::int64_t track_id = 0;
    double iou = 0.0;
    /// True when the detection's instance filled the track's empty instance slot.
    bool merged = false;
};

struct AdmitReport {
    std::vector<Admission> admitted;
    std::vector<Suppression> suppressed;
};

struct RegistryOptions {
    double iou_gate = 0.6;
    /// Consecutive empty-mask frames tolerated before a track is lost.
    int lost_patience = 5;
};

/// Live tracks backed by an external tracker state. Not thread-safe; callers serialize
/// admit and step.
class TrackRegistry {
  public:
    explicit TrackRegistry(gateway::TrackerClient& tracker, RegistryOptions options = {});

    /// Creates tracks for the grounded detections that do not overlap an existing live
    /// track by more than the IoU gate. On failure the registry is unchanged.
    AdmitReport admit(const grounding::GroundingResult& grounding, const description::StructuredDescription& desc,
                      const Image& frame);

    /// Advances the tracker one frame and refreshes every track's mask.
    void step(const Image& frame);

    void reject(std::int64_t track_id);
    /// Points a track at another instance, as decided by validation.
    void relabel(std::int64_t track_id, InstanceRef instance);

    [[nodiscard]] const std::vector<Track>& tracks() const { return tracks_; }
    [[nodiscard]] const Track* find(std::int64_t track_id) const;
    [[nodiscard]] std::int64_t frame() const { return frame_; }
    [[nodiscard]] bool initialized() const { return !handle_.fresh(); }
    [[nodiscard]] const RegistryOptions& options() const { return options_; }

    /// One JSON-lines record: the current frame with every non-rejected track.
    [[nodiscard]] nlohmann::json snapshot_json() const;

  private:
    Track* find_mutable(std::int64_t track_id);
    /// Empty masks only count toward patience when the tracker advanced a frame.
    void apply_masks(std::vector<Track>& tracks, const gateway::TrackerSnapshot& snapshot, bool advanced) const;

    gateway::TrackerClient& tracker_;
    RegistryOptions options_;
    gateway::TrackerHandle handle_;
    std::vector<Track> tracks_;
    std::int64_t frame_ = 0;
};

}  // namespace grounder::tracking
