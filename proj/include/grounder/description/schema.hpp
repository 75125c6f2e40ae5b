#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace grounder::description {

enum class ValueKind { kText, kInteger, kReal, kBoolean, kEnum };

std::string_view kind_name(ValueKind kind);

using AttributeValue = std::variant<std::string, std::int64_t, double, bool>;

nlohmann::json value_to_json(const AttributeValue& value);
std::string value_to_text(const AttributeValue& value);

/// The attribute is only expected when `key` holds `value`.
struct AttributeDependency {
    std::string key;
    AttributeValue value;
};

struct AttributeSpec {
    std::string key;
    ValueKind kind = ValueKind::kText;
    bool required = false;
    std::optional<std::size_t> max_length;
    std::vector<std::string> allowed;
    std::optional<AttributeDependency> dependency;
};

inline constexpr std::string_view kObjectName = "object_name";
inline constexpr std::string_view kDescription = "description";

/// Ordered attribute specs, always led by the required text attributes
/// object_name and description.
class AttributeSchema {
  public:
    /// Validates and prepends the two required attributes unless supplied.
    /// Throws Config on duplicate keys, empty enums, or a malformed required attribute.
    static AttributeSchema make(std::vector<AttributeSpec> specs);
    static AttributeSchema from_json(const nlohmann::json& j);
    static AttributeSchema load(const std::filesystem::path& path);

    [[nodiscard]] const std::vector<AttributeSpec>& specs() const { return specs_; }
    [[nodiscard]] const AttributeSpec* find(std::string_view key) const;

  private:
    std::vector<AttributeSpec> specs_;
};

}  // namespace grounder::description
