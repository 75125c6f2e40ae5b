#include "grounder/gateway/services.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <spdlog/spdlog.h>

#include "grounder/core/text.hpp"

namespace grounder::gateway {

void to_json(nlohmann::json& j, const Detection& d) {
    j = nlohmann::json{{"prompt_index", d.prompt_index}, {"bbox", d.bbox}, {"score", d.confidence}};
}

std::vector<Detection> DetectorClient::detect(const Image& image, std::span<const std::string> prompts) {
    if (image.empty()) {
        throw Error(ErrorCode::kInvalidArgument, "detect needs a non-empty image");
    }
    if (prompts.empty()) {
        throw Error(ErrorCode::kInvalidArgument, "detect needs at least one prompt");
    }
    for (const auto& p : prompts) {
        if (trim(p).empty()) {
            throw Error(ErrorCode::kInvalidArgument, "detector prompts must be non-empty");
        }
    }
    const nlohmann::json body{{"image", image.to_base64()}, {"prompts", std::vector<std::string>(prompts.begin(), prompts.end())}};
    const auto call = call_json(pool_, transport_, "/detect", body, {}, ErrorCode::kServiceUnavailable);

    std::vector<Detection> out;
    try {
        const auto& list = call.body.at("detections");
        if (!list.is_array()) {
            throw Error(ErrorCode::kProtocolViolation, "detections must be an array");
        }
        for (const auto& item : list) {
            const auto index = item.at("prompt_index").get<std::int64_t>();
            if (index < 0 || static_cast<std::size_t>(index) >= prompts.size()) {
                throw Error(ErrorCode::kProtocolViolation, "prompt_index out of range: " + std::to_string(index));
            }
            const double score = item.at("score").get<double>();
            if (!(score >= 0.0 && score <= 1.0)) {
                throw Error(ErrorCode::kProtocolViolation, "detection score outside [0, 1]");
            }
            const BBox box = clamp_box(item.at("bbox").get<BBox>(), image.width(), image.height());
            if (!box.valid()) {
                spdlog::debug("dropping detection that leaves the image for prompt {}", index);
                continue;
            }
            out.push_back(Detection{static_cast<std::size_t>(index), box, score});
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kProtocolViolation, std::string("detector reply missing fields: ") + e.what());
    }
    return out;
}

TrackerSnapshot TrackerClient::update(const Image& frame, std::span<const BBox> new_boxes, TrackerHandle& handle, bool advance) {
    if (frame.empty()) {
        throw Error(ErrorCode::kInvalidArgument, "tracker needs a non-empty frame");
    }
    auto boxes = nlohmann::json::array();
    for (const auto& b : new_boxes) {
        if (!b.valid()) {
            throw Error(ErrorCode::kInvalidArgument, "tracker boxes must have positive area");
        }
        boxes.push_back(b);
    }
    CallResult call;
    try {
        if (handle.fresh()) {
            call = call_json(pool_, transport_, "/track/init", {{"image", frame.to_base64()}, {"boxes", boxes}}, {},
                             ErrorCode::kServiceUnavailable);
        } else {
            call = call_json(pool_, transport_, "/track/step",
                             {{"state_id", handle.state_id}, {"image", frame.to_base64()}, {"add_boxes", boxes}, {"advance", advance}},
                             {}, ErrorCode::kServiceUnavailable);
        }
    } catch (const GatewayError& e) {
        if (e.code() == ErrorCode::kRequestRejected && e.last_status() == 404) {
            throw Error(ErrorCode::kStaleHandle, "tracker state " + handle.state_id + " is unknown to the service");
        }
        throw;
    }

    TrackerSnapshot snapshot;
    std::string state_id;
    try {
        state_id = call.body.at("state_id").get<std::string>();
        snapshot.frame = call.body.value("frame", std::int64_t{0});
        std::set<std::int64_t> seen;
        for (const auto& t : call.body.at("tracks")) {
            TrackMask entry{t.at("id").get<std::int64_t>(), t.at("mask_rle").get<RleMask>()};
            if (entry.track_id < 0 || !seen.insert(entry.track_id).second) {
                throw Error(ErrorCode::kProtocolViolation, "tracker returned a negative or duplicate track id");
            }
            if (entry.mask.height != frame.height() || entry.mask.width != frame.width() || !rle_consistent(entry.mask)) {
                throw Error(ErrorCode::kProtocolViolation, "tracker mask does not match the frame size");
            }
            snapshot.entries.push_back(std::move(entry));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kProtocolViolation, std::string("tracker reply missing fields: ") + e.what());
    }
    handle.state_id = state_id;
    return snapshot;
}

std::vector<double> normalized(std::vector<double> v) {
    double norm = 0.0;
    for (const double x : v) {
        norm += x * x;
    }
    norm = std::sqrt(norm);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw Error(ErrorCode::kProtocolViolation, "embedding has zero or non-finite norm");
    }
    for (double& x : v) {
        x /= norm;
    }
    return v;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw Error(ErrorCode::kDimensionMismatch, "cosine of vectors with different dimensions");
    }
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) {
        return 0.0;
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<std::vector<double>> EmbedderClient::embed(std::span<const std::string> texts) {
    for (const auto& t : texts) {
        if (t.empty()) {
            throw Error(ErrorCode::kInvalidArgument, "cannot embed empty text");
        }
    }
    std::vector<std::string> missing;
    {
        std::lock_guard lock(mutex_);
        std::set<std::string> queued;
        for (const auto& t : texts) {
            if (cache_.count(t) == 0 && queued.insert(t).second) {
                missing.push_back(t);
            }
        }
    }
    if (!missing.empty()) {
        const auto call = call_json(pool_, transport_, "/embed", {{"texts", missing}}, {}, ErrorCode::kServiceUnavailable);
        std::vector<std::vector<double>> vectors;
        try {
            vectors = call.body.at("vectors").get<std::vector<std::vector<double>>>();
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::kProtocolViolation, std::string("embedder reply missing vectors: ") + e.what());
        }
        if (vectors.size() != missing.size()) {
            throw Error(ErrorCode::kProtocolViolation, "embedder returned a different number of vectors than texts");
        }
        for (const auto& v : vectors) {
            if (v.size() != vectors.front().size()) {
                throw Error(ErrorCode::kDimensionMismatch, "embedder returned vectors of different dimensions");
            }
        }
        std::lock_guard lock(mutex_);
        ++upstream_calls_;
        for (std::size_t i = 0; i < missing.size(); ++i) {
            cache_[missing[i]] = normalized(std::move(vectors[i]));
        }
    }

    std::lock_guard lock(mutex_);
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    std::set<std::string> fetched(missing.begin(), missing.end());
    for (const auto& t : texts) {
        if (fetched.erase(t) == 0) {
            ++cache_hits_;
        }
        out.push_back(cache_.at(t));
    }
    for (const auto& v : out) {
        if (v.size() != out.front().size()) {
            throw Error(ErrorCode::kDimensionMismatch, "cached and fresh embeddings differ in dimension");
        }
    }
    return out;
}

std::size_t EmbedderClient::upstream_calls() const {
    std::lock_guard lock(mutex_);
    return upstream_calls_;
}

std::size_t EmbedderClient::cache_hits() const {
    std::lock_guard lock(mutex_);
    return cache_hits_;
}

void EmbedderClient::load_cache(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        return;
    }
    const auto doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded() || doc.value("model", "") != model_ || !doc.contains("entries")) {
        spdlog::warn("ignoring embedding cache {} (unreadable or for another model)", path.string());
        return;
    }
    std::lock_guard lock(mutex_);
    for (const auto& e : doc["entries"]) {
        const auto text = e.at("text").get<std::string>();
        if (e.at("key").get<std::string>() == hex64(fnv1a64(model_ + '\x1f' + text))) {
            cache_[text] = e.at("vector").get<std::vector<double>>();
        }
    }
}

void EmbedderClient::save_cache(const std::filesystem::path& path) const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> keys;
    keys.reserve(cache_.size());
    for (const auto& [text, _] : cache_) {
        keys.push_back(text);
    }
    std::sort(keys.begin(), keys.end());
    auto entries = nlohmann::json::array();
    for (const auto& text : keys) {
        entries.push_back({{"key", hex64(fnv1a64(model_ + '\x1f' + text))}, {"text", text}, {"vector", cache_.at(text)}});
    }
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorCode::kIo, "cannot write embedding cache: " + path.string());
    }
    out << nlohmann::json{{"model", model_}, {"entries", entries}}.dump() << '\n';
}

}  // namespace grounder::gateway
