#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "grounder/description/schema.hpp"

namespace grounder::description {

struct ObjectInstance {
    std::string object_name;
    std::string description;
    /// Schema attributes other than object_name and description.
    std::map<std::string, AttributeValue> attributes;

    bool operator==(const ObjectInstance&) const = default;

    [[nodiscard]] nlohmann::json to_json() const;
};

enum class ElementStatus { kKept, kRepaired, kDiscarded };

std::string_view to_string(ElementStatus status);

/// What happened to one element of the raw list.
struct ElementReport {
    std::size_t index = 0;
    ElementStatus status = ElementStatus::kKept;
    std::string reason;
    std::vector<std::string> repairs;
    std::optional<std::string> object_name;
};

struct ParseReport {
    std::vector<ElementReport> elements;
    std::vector<std::string> notes;

    [[nodiscard]] std::size_t count(ElementStatus status) const;
    [[nodiscard]] nlohmann::json to_json() const;
};

struct Provenance {
    std::string model;
    std::string raw_hash;
    ParseReport report;
};

struct StructuredDescription {
    std::vector<ObjectInstance> instances;
    Provenance provenance;

    [[nodiscard]] std::vector<std::string> names() const;
    [[nodiscard]] const ObjectInstance* find(std::string_view object_name) const;
    /// JSON list of instance objects, the form the model is asked to produce.
    [[nodiscard]] nlohmann::json to_json() const;
};

struct ParseOptions {
    std::size_t word_cap = 10;
    std::string model;
};

/// Throws NoValidJson when the response holds no JSON and EmptyDescription when no element survives.
StructuredDescription parse_structured_description(std::string_view raw, const AttributeSchema& schema,
                                                   const ParseOptions& options = {});

/// Re-reads a description previously written by StructuredDescription::to_json.
StructuredDescription description_from_json(const nlohmann::json& list, const AttributeSchema& schema,
                                            const ParseOptions& options = {});

}  // namespace grounder::description
