#include "grounder/validation/validation.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include <spdlog/spdlog.h>

#include "grounder/core/error.hpp"
#include "grounder/core/text.hpp"
#include "grounder/description/json_extract.hpp"

namespace grounder::validation {

gateway::ChatRequest build_validation_request(const Image& image, const BBox& box,
                                              const description::StructuredDescription& desc,
                                              const description::PromptTemplate& tmpl,
                                              const ValidationOptions& options) {
    if (desc.instances.empty()) {
        throw Error(ErrorCode::kEmptyDescription, "validation needs a non-empty description");
    }
    const BBox padded = pad_box(box, options.padding, image.width(), image.height());
    if (!padded.valid()) {
        throw Error(ErrorCode::kDegenerateCrop, "crop box has no area inside the image");
    }
    const Image crop = image.crop(padded);
    const auto text = tmpl.render({{"description", desc.to_json().dump()}, {"invalid_keyword", options.invalid_keyword}});
    return gateway::make_user_request(text, {&image, &crop});
}

namespace {

std::string strip_decoration(std::string_view raw) {
    static const std::string_view junk = " \t\r\n.,;:!?\"'`*";
    const auto begin = raw.find_first_not_of(junk);
    if (begin == std::string_view::npos) {
        return {};
    }
    const auto end = raw.find_last_not_of(junk);
    return std::string(raw.substr(begin, end - begin + 1));
}

std::optional<std::string> embedded_name(const std::string& raw) {
    try {
        const auto j = description::extract_json(raw);
        if (j.is_object() && j.contains("object_name") && j["object_name"].is_string()) {
            return j["object_name"].get<std::string>();
        }
        if (j.is_array() && j.size() == 1 && j[0].is_string()) {
            return j[0].get<std::string>();
        }
    } catch (const Error&) {
    }
    return std::nullopt;
}

}  // namespace

std::optional<std::string> interpret_answer(const std::string& raw, const std::vector<std::string>& names,
                                            const std::string& invalid_keyword, std::string* note) {
    std::string answer = strip_decoration(raw);
    if (auto name = embedded_name(raw)) {
        answer = strip_decoration(*name);
    }
    const auto set_note = [&](std::string text) {
        if (note != nullptr) {
            *note = std::move(text);
        }
    };
    if (to_lower(answer) == to_lower(invalid_keyword)) {
        return std::nullopt;
    }
    if (const auto it = std::find(names.begin(), names.end(), answer); it != names.end()) {
        return *it;
    }
    if (const auto idx = fuzzy_match(answer, names)) {
        set_note("matched " + answer + " to " + names[*idx]);
        return names[*idx];
    }
    set_note("answer matches no instance");
    return std::nullopt;
}

std::vector<ValidationProposal> collect_proposals(const Image& image, const std::vector<ValidationTarget>& targets,
                                                  const description::StructuredDescription& desc,
                                                  gateway::ChatClient& chat, const description::PromptTemplate& tmpl,
                                                  const ValidationOptions& options) {
    std::vector<ValidationProposal> out(targets.size());
    std::vector<gateway::ChatRequest> requests;
    std::vector<std::size_t> slots;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        out[i].track_id = targets[i].track_id;
        try {
            requests.push_back(build_validation_request(image, targets[i].box, desc, tmpl, options));
            slots.push_back(i);
        } catch (const Error& e) {
            out[i].note = std::string("no request: ") + e.what();
        }
    }
    auto responses = chat.fan_out(std::move(requests), options.max_concurrency);
    const auto names = desc.names();
    for (std::size_t k = 0; k < slots.size(); ++k) {
        auto& p = out[slots[k]];
        if (!responses[k].ok()) {
            p.note = "request failed: " + responses[k].error().message;
            spdlog::warn("validation of track {} degraded to invalid: {}", p.track_id, p.note);
            continue;
        }
        const auto& r = responses[k].value();
        p.raw = r.text;
        p.latency_ms = r.latency_ms;
        p.proposed = interpret_answer(r.text, names, options.invalid_keyword, &p.note);
    }
    return out;
}

std::string base_name(const std::string& name) {
    const auto underscore = name.find_last_of('_');
    if (underscore == std::string::npos || underscore == 0 || underscore + 1 == name.size()) {
        return name;
    }
    const bool digits = std::all_of(name.begin() + static_cast<std::ptrdiff_t>(underscore) + 1, name.end(),
                                    [](unsigned char c) { return std::isdigit(c) != 0; });
    return digits ? name.substr(0, underscore) : name;
}

std::vector<NameGroup> group_instances(const std::vector<std::string>& names) {
    const std::size_t n = names.size();
    std::vector<std::string> bases;
    for (const auto& name : names) {
        bases.push_back(to_lower(base_name(name)));
    }
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    const auto root = [&](std::size_t i) {
        while (parent[i] != i) {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        return i;
    };
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const auto& shorter = bases[i].size() <= bases[j].size() ? bases[i] : bases[j];
            if (bases[i] == bases[j] || levenshtein(bases[i], bases[j]) <= fuzzy_threshold(shorter)) {
                const auto a = root(i);
                const auto b = root(j);
                parent[std::max(a, b)] = std::min(a, b);
            }
        }
    }
    std::vector<NameGroup> groups;
    std::map<std::size_t, std::size_t> by_root;
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = root(i);
        auto [it, inserted] = by_root.emplace(r, groups.size());
        if (inserted) {
            groups.push_back(NameGroup{groups.size(), {}, base_name(names[i])});
        }
        groups[it->second].members.push_back(names[i]);
    }
    return groups;
}

std::vector<NameGroup> group_instances(const description::StructuredDescription& desc) {
    return group_instances(desc.names());
}

std::string_view to_string(Verdict verdict) {
    switch (verdict) {
        case Verdict::kValidated: return "validated";
        case Verdict::kCorrected: return "corrected";
        case Verdict::kRejected: return "rejected";
    }
    return "rejected";
}

nlohmann::json TrackVerdict::to_json() const {
    const auto opt = [](const std::optional<std::string>& s) { return s ? nlohmann::json(*s) : nlohmann::json(nullptr); };
    return {{"track_id", track_id},
            {"original", opt(original)},
            {"proposed", opt(proposed)},
            {"verdict", to_string(verdict)},
            {"instance", opt(instance)},
            {"stage", stage},
            {"confidence", confidence},
            {"reason", reason}};
}

std::vector<nlohmann::json> AssignmentResult::audit_log() const {
    std::vector<nlohmann::json> out;
    out.reserve(verdicts.size());
    for (const auto& v : verdicts) {
        out.push_back(v.to_json());
    }
    return out;
}

AssignmentResult solve_assignment(const std::vector<OriginalGrounding>& original,
                                  const std::vector<ValidationProposal>& proposals,
                                  const std::vector<NameGroup>& groups) {
    std::map<std::string, std::size_t> group_of;
    for (const auto& g : groups) {
        for (const auto& m : g.members) {
            group_of[m] = g.id;
        }
    }
    const auto group_index = [&](std::size_t id) -> const NameGroup& {
        return *std::find_if(groups.begin(), groups.end(), [&](const NameGroup& g) { return g.id == id; });
    };

    std::map<std::int64_t, const ValidationProposal*> proposal_of;
    for (const auto& p : proposals) {
        if (!proposal_of.emplace(p.track_id, &p).second) {
            throw Error(ErrorCode::kInconsistentInput, "two proposals for track " + std::to_string(p.track_id));
        }
        if (p.proposed && group_of.count(*p.proposed) == 0) {
            throw Error(ErrorCode::kInconsistentInput, "proposal names unknown instance " + *p.proposed);
        }
    }
    std::set<std::int64_t> original_ids;
    for (const auto& o : original) {
        if (!original_ids.insert(o.track_id).second || proposal_of.count(o.track_id) == 0) {
            throw Error(ErrorCode::kInconsistentInput, "track " + std::to_string(o.track_id) +
                                                           " is duplicated or has no proposal");
        }
    }
    if (original_ids.size() != proposal_of.size()) {
        throw Error(ErrorCode::kInconsistentInput, "proposals cover tracks without an original grounding");
    }

    AssignmentResult result;
    result.verdicts.resize(original.size());
    std::set<std::string> taken;
    const auto assign = [&](TrackVerdict& v, const std::string& instance, int stage, std::string reason) {
        v.instance = instance;
        v.verdict = v.original && *v.original == instance ? Verdict::kValidated : Verdict::kCorrected;
        v.stage = stage;
        v.reason = std::move(reason);
        taken.insert(instance);
        result.mapping[instance] = v.track_id;
    };
    const auto reject = [&](TrackVerdict& v, int stage, std::string reason) {
        v.verdict = Verdict::kRejected;
        v.instance.reset();
        v.stage = stage;
        v.reason = std::move(reason);
    };
    const auto first_free = [&](std::size_t group) -> std::optional<std::string> {
        for (const auto& m : group_index(group).members) {
            if (taken.count(m) == 0) {
                return m;
            }
        }
        return std::nullopt;
    };

    std::vector<std::size_t> same_group;
    std::vector<std::size_t> cross_group;
    for (std::size_t i = 0; i < original.size(); ++i) {
        const auto& o = original[i];
        const auto& p = *proposal_of.at(o.track_id);
        auto& v = result.verdicts[i];
        v.track_id = o.track_id;
        v.original = o.instance;
        v.proposed = p.proposed;
        v.confidence = o.confidence;
        if (!p.proposed) {
            reject(v, 1, "validator answered invalid");
            continue;
        }
        const bool shares_group = o.instance && group_of.count(*o.instance) != 0 &&
                                  group_of.at(*o.instance) == group_of.at(*p.proposed);
        (shares_group ? same_group : cross_group).push_back(i);
    }

    const auto by_confidence = [&](std::size_t a, std::size_t b) {
        if (original[a].confidence != original[b].confidence) {
            return original[a].confidence > original[b].confidence;
        }
        return original[a].track_id < original[b].track_id;
    };
    std::sort(same_group.begin(), same_group.end(), by_confidence);
    std::sort(cross_group.begin(), cross_group.end(), by_confidence);

    for (const auto i : same_group) {
        auto& v = result.verdicts[i];
        if (taken.count(*v.original) == 0) {
            assign(v, *v.original, 2, "proposal agrees with the original group");
        } else if (taken.count(*v.proposed) == 0) {
            assign(v, *v.proposed, 2, "original held by a more confident track; took the proposed instance");
        } else if (auto free = first_free(group_of.at(*v.proposed))) {
            assign(v, *free, 2, "duplicate agreement resolved to a free group member");
        } else {
            reject(v, 2, "every member of the agreed group is already grounded");
        }
    }
    for (const auto i : cross_group) {
        auto& v = result.verdicts[i];
        if (taken.count(*v.proposed) == 0) {
            assign(v, *v.proposed, 3, "corrected to the proposed instance");
        } else if (auto free = first_free(group_of.at(*v.proposed))) {
            assign(v, *free, 3, "corrected to a free member of the proposed group");
        } else {
            reject(v, 4, "proposed group has no free member");
        }
    }
    return result;
}

}  // namespace grounder::validation
