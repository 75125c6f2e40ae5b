#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "grounder/core/error.hpp"
#include "grounder/description/schema.hpp"

namespace grounder::description {

class ValueRejected : public Error {
  public:
    ValueRejected(std::string key, std::string value, std::string reason);

    [[nodiscard]] const std::string& key() const { return key_; }
    [[nodiscard]] const std::string& value() const { return value_; }
    [[nodiscard]] const std::string& reason() const { return reason_; }

  private:
    std::string key_;
    std::string value_;
    std::string reason_;
};

struct Coerced {
    AttributeValue value;
    /// Empty when the input already had the target type and form.
    std::string repair;
};

/// Typecasts a JSON scalar to the spec's kind; enum values snap to the nearest allowed
/// keyword within the fuzzy threshold. Text longer than max_length is truncated.
/// Throws ValueRejected.
Coerced coerce_value(const nlohmann::json& value, const AttributeSpec& spec);

}  // namespace grounder::description
