#include "grounder/description/structured_description.hpp"

#include <set>

#include <spdlog/spdlog.h>

#include "grounder/core/error.hpp"
#include "grounder/core/text.hpp"
#include "grounder/description/coerce.hpp"
#include "grounder/description/json_extract.hpp"

namespace grounder::description {

nlohmann::json ObjectInstance::to_json() const {
    nlohmann::json j;
    for (const auto& [key, value] : attributes) {
        j[key] = value_to_json(value);
    }
    j[std::string(kObjectName)] = object_name;
    j[std::string(kDescription)] = description;
    return j;
}

std::string_view to_string(ElementStatus status) {
    switch (status) {
        case ElementStatus::kKept: return "kept";
        case ElementStatus::kRepaired: return "repaired";
        case ElementStatus::kDiscarded: return "discarded";
    }
    return "kept";
}

std::size_t ParseReport::count(ElementStatus status) const {
    return static_cast<std::size_t>(
        std::count_if(elements.begin(), elements.end(), [&](const ElementReport& e) { return e.status == status; }));
}

nlohmann::json ParseReport::to_json() const {
    auto list = nlohmann::json::array();
    for (const auto& e : elements) {
        nlohmann::json j{{"index", e.index}, {"status", to_string(e.status)}};
        if (!e.reason.empty()) {
            j["reason"] = e.reason;
        }
        if (!e.repairs.empty()) {
            j["repairs"] = e.repairs;
        }
        if (e.object_name) {
            j["object_name"] = *e.object_name;
        }
        list.push_back(std::move(j));
    }
    return {{"elements", list}, {"notes", notes}};
}

std::vector<std::string> StructuredDescription::names() const {
    std::vector<std::string> out;
    out.reserve(instances.size());
    for (const auto& i : instances) {
        out.push_back(i.object_name);
    }
    return out;
}

const ObjectInstance* StructuredDescription::find(std::string_view object_name) const {
    for (const auto& i : instances) {
        if (i.object_name == object_name) {
            return &i;
        }
    }
    return nullptr;
}

nlohmann::json StructuredDescription::to_json() const {
    auto list = nlohmann::json::array();
    for (const auto& i : instances) {
        list.push_back(i.to_json());
    }
    return list;
}

namespace {

bool dependency_met(const AttributeSpec& spec, const std::map<std::string, AttributeValue>& values) {
    if (!spec.dependency) {
        return true;
    }
    const auto it = values.find(spec.dependency->key);
    return it != values.end() && value_to_json(it->second) == value_to_json(spec.dependency->value);
}

/// Returns the instance, or nullopt with `report` marked discarded.
std::optional<ObjectInstance> parse_element(const nlohmann::json& element, const AttributeSchema& schema,
                                            const ParseOptions& options, ElementReport& report) {
    const auto discard = [&](std::string reason) {
        report.status = ElementStatus::kDiscarded;
        report.reason = std::move(reason);
        return std::nullopt;
    };
    if (!element.is_object()) {
        return discard("not an object");
    }
    if (element.contains(kObjectName) && element[std::string(kObjectName)].is_string()) {
        report.object_name = trim(element[std::string(kObjectName)].get<std::string>());
    }

    std::map<std::string, AttributeValue> values;
    for (const auto& spec : schema.specs()) {
        const bool present = element.contains(spec.key) && !element[spec.key].is_null();
        if (!dependency_met(spec, values)) {
            if (present) {
                report.repairs.push_back("dropped " + spec.key + ": dependency on " + spec.dependency->key + " unmet");
            }
            continue;
        }
        if (!present) {
            if (spec.required) {
                return discard("missing required attribute " + spec.key);
            }
            continue;
        }
        try {
            auto coerced = coerce_value(element[spec.key], spec);
            if (spec.kind == ValueKind::kText) {
                auto& text = std::get<std::string>(coerced.value);
                const auto trimmed = trim(text);
                if (trimmed != text) {
                    text = trimmed;
                    if (coerced.repair.empty()) {
                        coerced.repair = "trimmed whitespace";
                    }
                }
                if (text.empty()) {
                    if (spec.required) {
                        return discard("missing required attribute " + spec.key);
                    }
                    report.repairs.push_back("dropped " + spec.key + ": empty text");
                    continue;
                }
            }
            if (!coerced.repair.empty()) {
                report.repairs.push_back(spec.key + ": " + coerced.repair);
            }
            values.emplace(spec.key, std::move(coerced.value));
        } catch (const ValueRejected& e) {
            if (spec.required) {
                return discard("invalid value for required attribute " + spec.key + ": " + e.reason());
            }
            report.repairs.push_back("dropped " + spec.key + ": " + e.reason());
        }
    }
    for (const auto& [key, _] : element.items()) {
        if (schema.find(key) == nullptr) {
            report.repairs.push_back("ignored unknown key " + key);
        }
    }

    ObjectInstance instance;
    instance.object_name = std::get<std::string>(values.at(std::string(kObjectName)));
    instance.description = std::get<std::string>(values.at(std::string(kDescription)));
    values.erase(std::string(kObjectName));
    values.erase(std::string(kDescription));
    instance.attributes = std::move(values);

    const auto words = split_words(instance.description);
    if (words.size() > options.word_cap) {
        const std::vector<std::string> head(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(options.word_cap));
        instance.description = join(head, " ");
        report.repairs.push_back("description truncated from " + std::to_string(words.size()) + " to " +
                                 std::to_string(options.word_cap) + " words");
    }
    report.object_name = instance.object_name;
    return instance;
}

StructuredDescription parse_list(const nlohmann::json& parsed, std::string_view raw, const AttributeSchema& schema,
                                 const ParseOptions& options) {
    StructuredDescription out;
    out.provenance.model = options.model;
    out.provenance.raw_hash = hex64(fnv1a64(raw));
    auto& report = out.provenance.report;

    const nlohmann::json* list = &parsed;
    nlohmann::json wrapped;
    if (parsed.is_object()) {
        if (parsed.size() == 1 && parsed.begin()->is_array()) {
            list = &*parsed.begin();
            report.notes.push_back("unwrapped list from key " + parsed.begin().key());
        } else {
            wrapped = nlohmann::json::array({parsed});
            list = &wrapped;
            report.notes.push_back("single object treated as a one-element list");
        }
    }

    for (std::size_t i = 0; i < list->size(); ++i) {
        ElementReport element_report;
        element_report.index = i;
        if (auto instance = parse_element((*list)[i], schema, options, element_report)) {
            element_report.status = element_report.repairs.empty() ? ElementStatus::kKept : ElementStatus::kRepaired;
            out.instances.push_back(std::move(*instance));
        }
        report.elements.push_back(std::move(element_report));
    }

    // Keep the first occurrence of a name; later ones get the lowest free "_<k>" suffix, k >= 2.
    std::set<std::string> literal;
    for (const auto& i : out.instances) {
        literal.insert(i.object_name);
    }
    std::set<std::string> taken;
    std::size_t kept_index = 0;
    for (auto& e : report.elements) {
        if (e.status == ElementStatus::kDiscarded) {
            continue;
        }
        auto& instance = out.instances[kept_index++];
        if (taken.insert(instance.object_name).second) {
            continue;
        }
        std::string renamed;
        for (std::size_t k = 2;; ++k) {
            renamed = instance.object_name + "_" + std::to_string(k);
            if (literal.count(renamed) == 0 && taken.count(renamed) == 0) {
                break;
            }
        }
        e.repairs.push_back("duplicate name " + instance.object_name + " renamed to " + renamed);
        e.status = ElementStatus::kRepaired;
        e.object_name = renamed;
        instance.object_name = renamed;
        taken.insert(renamed);
    }

    std::set<std::string> descriptions;
    for (const auto& i : out.instances) {
        if (!descriptions.insert(i.description).second) {
            report.notes.push_back("duplicate description for " + i.object_name + ": " + i.description);
        }
    }

    spdlog::debug("parse report {}", report.to_json().dump());
    if (out.instances.empty()) {
        std::string reasons;
        for (const auto& e : report.elements) {
            reasons += (reasons.empty() ? "" : "; ") + std::to_string(e.index) + ": " + e.reason;
        }
        throw Error(ErrorCode::kEmptyDescription,
                    "no list element survived parsing (" + std::to_string(report.elements.size()) + " elements" +
                        (reasons.empty() ? "" : "; " + reasons) + ")");
    }
    return out;
}

}  // namespace

StructuredDescription parse_structured_description(std::string_view raw, const AttributeSchema& schema,
                                                   const ParseOptions& options) {
    return parse_list(extract_json(raw), raw, schema, options);
}

StructuredDescription description_from_json(const nlohmann::json& list, const AttributeSchema& schema,
                                            const ParseOptions& options) {
    const auto text = list.dump();
    return parse_list(list, text, schema, options);
}

}  // namespace grounder::description
