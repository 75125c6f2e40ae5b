#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "grounder/core/geometry.hpp"
#include "grounder/core/image.hpp"
#include "grounder/description/prompt.hpp"
#include "grounder/description/structured_description.hpp"
#include "grounder/gateway/chat.hpp"

namespace grounder::validation {

struct ValidationOptions {
    /// Crop margin per side as a fraction of the box extent.
    double padding = 0.1;
    std::string invalid_keyword = "invalid";
    std::size_t max_concurrency = 8;
};

/// A grounded track to be checked.
struct ValidationTarget {
    std::int64_t track_id = 0;
    BBox box;
};

struct ValidationProposal {
    std::int64_t track_id = 0;
    /// Matched instance name; empty means the invalid sentinel.
    std::optional<std::string> proposed;
    std::string raw;
    double latency_ms = 0.0;
    std::string note;

    [[nodiscard]] bool invalid() const { return !proposed.has_value(); }
};

/// Full image plus padded crop plus the serialized description. Throws DegenerateCrop.
gateway::ChatRequest build_validation_request(const Image& image, const BBox& box,
                                              const description::StructuredDescription& desc,
                                              const description::PromptTemplate& tmpl,
                                              const ValidationOptions& options = {});

/// Maps a raw answer to an instance name or the sentinel (nullopt). `note` explains non-exact outcomes.
std::optional<std::string> interpret_answer(const std::string& raw, const std::vector<std::string>& names,
                                            const std::string& invalid_keyword, std::string* note = nullptr);

/// One request per target, concurrently. Transport failures become the sentinel with a note.
std::vector<ValidationProposal> collect_proposals(const Image& image, const std::vector<ValidationTarget>& targets,
                                                  const description::StructuredDescription& desc,
                                                  gateway::ChatClient& chat, const description::PromptTemplate& tmpl,
                                                  const ValidationOptions& options = {});

struct NameGroup {
    std::size_t id = 0;
    /// Instance names in description order.
    std::vector<std::string> members;
    std::string base;
};

/// "cup_2" -> "cup". Names without a numeric suffix are returned unchanged.
std::string base_name(const std::string& name);

/// Partition of the names: shared base name or bases within the fuzzy threshold of the
/// shorter one, closed transitively. Groups are ordered by their first member.
std::vector<NameGroup> group_instances(const std::vector<std::string>& names);
std::vector<NameGroup> group_instances(const description::StructuredDescription& desc);

/// Original grounding of one track.
struct OriginalGrounding {
    std::int64_t track_id = 0;
    /// Empty when the track carries no instance.
    std::optional<std::string> instance;
    double confidence = 0.0;
};

enum class Verdict { kValidated, kCorrected, kRejected };

std::string_view to_string(Verdict verdict);

struct TrackVerdict {
    std::int64_t track_id = 0;
    Verdict verdict = Verdict::kRejected;
    std::optional<std::string> original;
    std::optional<std::string> proposed;
    /// Instance the track ends up on; empty when rejected.
    std::optional<std::string> instance;
    int stage = 0;
    double confidence = 0.0;
    std::string reason;

    bool operator==(const TrackVerdict&) const = default;
    [[nodiscard]] nlohmann::json to_json() const;
};

struct AssignmentResult {
    /// In input order.
    std::vector<TrackVerdict> verdicts;
    /// Instance name -> track id; injective.
    std::map<std::string, std::int64_t> mapping;

    /// One JSON object per track.
    [[nodiscard]] std::vector<nlohmann::json> audit_log() const;
};

/// Staged heuristic:
///  1. an invalid proposal rejects the track;
///  2. tracks proposing a member of their original group keep the original instance, or
///     when a more confident track already holds it, move to the proposed instance or
///     another free member of that group;
///  3. the remaining tracks, most confident first, take the proposed instance or the next
///     free member of its group;
///  4. a track whose proposed group is fully taken is rejected.
/// Throws InconsistentInput when proposals and originals cover different tracks or a
/// proposal names an unknown instance.
AssignmentResult solve_assignment(const std::vector<OriginalGrounding>& original,
                                  const std::vector<ValidationProposal>& proposals,
                                  const std::vector<NameGroup>& groups);

}  // namespace grounder::validation
