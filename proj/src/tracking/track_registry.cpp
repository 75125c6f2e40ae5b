#include "grounder/tracking/track_registry.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <spdlog/spdlog.h>

#include "grounder/core/error.hpp"

namespace grounder::tracking {

std::string_view to_string(TrackStatus status) {
    switch (status) {
        case TrackStatus::kLive: return "live";
        case TrackStatus::kLost: return "lost";
        case TrackStatus::kRejected: return "rejected";
    }
    return "live";
}

InstanceRef make_ref(const description::ObjectInstance& instance) {
    return InstanceRef{instance.object_name, instance.to_json()};
}

TrackRegistry::TrackRegistry(gateway::TrackerClient& tracker, RegistryOptions options)
    : tracker_(tracker), options_(options) {
    if (!(options_.iou_gate > 0.0 && options_.iou_gate < 1.0)) {
        throw Error(ErrorCode::kConfig, "IoU gate must lie in (0, 1)");
    }
    if (options_.lost_patience < 0) {
        throw Error(ErrorCode::kConfig, "lost patience must be non-negative");
    }
}

const Track* TrackRegistry::find(std::int64_t track_id) const {
    const auto it = std::find_if(tracks_.begin(), tracks_.end(), [&](const Track& t) { return t.id == track_id; });
    return it == tracks_.end() ? nullptr : &*it;
}

Track* TrackRegistry::find_mutable(std::int64_t track_id) {
    return const_cast<Track*>(std::as_const(*this).find(track_id));
}

void TrackRegistry::apply_masks(std::vector<Track>& tracks, const gateway::TrackerSnapshot& snapshot, bool advanced) const {
    std::map<std::int64_t, const RleMask*> masks;
    for (const auto& e : snapshot.entries) {
        masks[e.track_id] = &e.mask;
    }
    for (auto& t : tracks) {
        if (t.status == TrackStatus::kRejected) {
            continue;
        }
        const auto it = masks.find(t.id);
        if (it != masks.end()) {
            t.mask = *it->second;
        } else {
            t.mask = encode_rle(BinaryMask(t.mask.width, t.mask.height));
        }
        if (rle_area(t.mask) > 0) {
            t.bbox = mask_to_bbox(t.mask);
            t.empty_frames = 0;
            t.status = TrackStatus::kLive;
        } else {
            t.bbox.reset();
            if (!advanced) {
                continue;
            }
            ++t.empty_frames;
            if (t.empty_frames > options_.lost_patience) {
                t.status = TrackStatus::kLost;
            }
        }
    }
}

AdmitReport TrackRegistry::admit(const grounding::GroundingResult& grounding,
                                 const description::StructuredDescription& desc, const Image& frame) {
    AdmitReport report;
    std::vector<Track> next = tracks_;

    struct Candidate {
        const grounding::Assignment* assignment;
        std::optional<InstanceRef> ref;
    };
    std::vector<Candidate> survivors;
    for (const auto& a : grounding.assignments) {
        std::optional<InstanceRef> ref;
        if (a.instance < desc.instances.size() && desc.instances[a.instance].object_name == a.object_name) {
            ref = make_ref(desc.instances[a.instance]);
        } else if (const auto* inst = desc.find(a.object_name)) {
            ref = make_ref(*inst);
        }

        // Gate against tracks that were live before this call only.
        Track* best = nullptr;
        double best_iou = 0.0;
        for (std::size_t i = 0; i < tracks_.size(); ++i) {
            auto& t = next[i];
            if (t.status != TrackStatus::kLive || !t.bbox) {
                continue;
            }
            const double overlap = iou(*t.bbox, a.detection.bbox);
            if (overlap > best_iou) {
                best_iou = overlap;
                best = &t;
            }
        }
        if (best != nullptr && best_iou > options_.iou_gate) {
            Suppression s{a.object_name, a.detection.bbox, best->id, best_iou, false};
            if (!best->instance && ref) {
                best->instance = ref;
                s.merged = true;
            } else {
                spdlog::info("suppressed {} at IoU {:.3f} with track {}", a.object_name, best_iou, best->id);
            }
            report.suppressed.push_back(std::move(s));
            continue;
        }
        survivors.push_back({&a, std::move(ref)});
    }

    if (survivors.empty()) {
        tracks_ = std::move(next);
        return report;
    }

    std::vector<BBox> boxes;
    boxes.reserve(survivors.size());
    for (const auto& s : survivors) {
        boxes.push_back(s.assignment->detection.bbox);
    }
    gateway::TrackerHandle handle = handle_;
    gateway::TrackerSnapshot snapshot;
    try {
        snapshot = tracker_.update(frame, boxes, handle, /*advance=*/false);
    } catch (const Error& e) {
        throw Error(ErrorCode::kTrackerFailure, std::string("tracker update: ") + e.what());
    }

    std::set<std::int64_t> known;
    for (const auto& t : tracks_) {
        known.insert(t.id);
    }
    std::vector<std::int64_t> fresh;
    for (const auto& e : snapshot.entries) {
        if (known.count(e.track_id) == 0) {
            fresh.push_back(e.track_id);
        }
    }
    std::sort(fresh.begin(), fresh.end());
    if (fresh.size() != survivors.size()) {
        throw Error(ErrorCode::kTrackerFailure, "tracker created " + std::to_string(fresh.size()) + " tracks for " +
                                                    std::to_string(survivors.size()) + " boxes");
    }
    for (std::size_t i = 0; i < survivors.size(); ++i) {
        Track t;
        t.id = fresh[i];
        t.instance = std::move(survivors[i].ref);
        t.mask = RleMask{frame.height(), frame.width(), {static_cast<std::uint32_t>(frame.width() * frame.height())}};
        t.seed_box = survivors[i].assignment->detection.bbox;
        t.confidence = survivors[i].assignment->detection.confidence;
        t.birth_frame = frame_;
        next.push_back(std::move(t));
        report.admitted.push_back({fresh[i], survivors[i].assignment->object_name, survivors[i].assignment->detection.bbox});
    }
    apply_masks(next, snapshot, /*advanced=*/false);

    handle_ = std::move(handle);
    tracks_ = std::move(next);
    return report;
}

void TrackRegistry::step(const Image& frame) {
    if (handle_.fresh()) {
        ++frame_;
        return;
    }
    gateway::TrackerHandle handle = handle_;
    gateway::TrackerSnapshot snapshot;
    try {
        snapshot = tracker_.update(frame, {}, handle, /*advance=*/true);
    } catch (const Error& e) {
        throw Error(ErrorCode::kTrackerFailure, std::string("tracker step: ") + e.what());
    }
    std::vector<Track> next = tracks_;
    apply_masks(next, snapshot, /*advanced=*/true);
    handle_ = std::move(handle);
    tracks_ = std::move(next);
    ++frame_;
}

void TrackRegistry::reject(std::int64_t track_id) {
    Track* t = find_mutable(track_id);
    if (t == nullptr) {
        throw Error(ErrorCode::kInvalidArgument, "unknown track " + std::to_string(track_id));
    }
    t->status = TrackStatus::kRejected;
}

void TrackRegistry::relabel(std::int64_t track_id, InstanceRef instance) {
    Track* t = find_mutable(track_id);
    if (t == nullptr) {
        throw Error(ErrorCode::kInvalidArgument, "unknown track " + std::to_string(track_id));
    }
    t->instance = std::move(instance);
}

nlohmann::json TrackRegistry::snapshot_json() const {
    auto list = nlohmann::json::array();
    for (const auto& t : tracks_) {
        if (t.status == TrackStatus::kRejected) {
            continue;
        }
        nlohmann::json j{{"id", t.id},
                         {"object_name", t.instance ? nlohmann::json(t.instance->object_name) : nlohmann::json(nullptr)},
                         {"bbox", t.bbox ? nlohmann::json(*t.bbox) : nlohmann::json(nullptr)},
                         {"mask_rle", t.mask},
                         {"status", to_string(t.status)},
                         {"attributes", t.instance ? t.instance->attributes : nlohmann::json::object()}};
        list.push_back(std::move(j));
    }
    return {{"frame", frame_}, {"tracks", list}};
}

}  // namespace grounder::tracking
