#include "grounder/description/coerce.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include "grounder/core/text.hpp"

namespace grounder::description {

ValueRejected::ValueRejected(std::string key, std::string value, std::string reason)
    : Error(ErrorCode::kValueRejected, key + "=" + value + ": " + reason),
      key_(std::move(key)),
      value_(std::move(value)),
      reason_(std::move(reason)) {}

namespace {

std::string scalar_text(const nlohmann::json& v) {
    return v.is_string() ? v.get<std::string>() : v.dump();
}

std::optional<std::int64_t> parse_integer(std::string_view s) {
    std::int64_t out = 0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    if (ec == std::errc() && ptr == end) {
        return out;
    }
    return std::nullopt;
}

std::optional<double> parse_real(std::string_view s) {
    double out = 0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    if (ec == std::errc() && ptr == end && std::isfinite(out)) {
        return out;
    }
    return std::nullopt;
}

std::optional<std::int64_t> integral(double d) {
    if (std::isfinite(d) && std::floor(d) == d && std::fabs(d) < 9.0e15) {
        return static_cast<std::int64_t>(d);
    }
    return std::nullopt;
}

Coerced to_text(const nlohmann::json& v, const AttributeSpec& spec) {
    Coerced out{scalar_text(v), v.is_string() ? "" : "typecast to text"};
    auto& s = std::get<std::string>(out.value);
    if (spec.max_length && s.size() > *spec.max_length) {
        s.resize(*spec.max_length);
        out.repair = "truncated to " + std::to_string(*spec.max_length) + " characters";
    }
    return out;
}

Coerced to_integer(const nlohmann::json& v, const AttributeSpec& spec) {
    if (v.is_number_integer()) {
        return {v.get<std::int64_t>(), ""};
    }
    if (v.is_number_float()) {
        if (auto i = integral(v.get<double>())) {
            return {*i, "typecast to integer"};
        }
    } else if (v.is_string()) {
        const auto s = trim(v.get<std::string>());
        if (auto i = parse_integer(s)) {
            return {*i, "typecast to integer"};
        }
        if (auto d = parse_real(s)) {
            if (auto i = integral(*d)) {
                return {*i, "typecast to integer"};
            }
        }
    }
    throw ValueRejected(spec.key, scalar_text(v), "not an integer");
}

Coerced to_real(const nlohmann::json& v, const AttributeSpec& spec) {
    if (v.is_number_float()) {
        return {v.get<double>(), ""};
    }
    if (v.is_number()) {
        return {v.get<double>(), "typecast to real"};
    }
    if (v.is_string()) {
        if (auto d = parse_real(trim(v.get<std::string>()))) {
            return {*d, "typecast to real"};
        }
    }
    throw ValueRejected(spec.key, scalar_text(v), "not a real number");
}

Coerced to_boolean(const nlohmann::json& v, const AttributeSpec& spec) {
    if (v.is_boolean()) {
        return {v.get<bool>(), ""};
    }
    if (v.is_number_integer()) {
        const auto i = v.get<std::int64_t>();
        if (i == 0 || i == 1) {
            return {i == 1, "typecast to boolean"};
        }
    }
    if (v.is_string()) {
        const auto s = to_lower(trim(v.get<std::string>()));
        if (s == "true" || s == "yes" || s == "1") {
            return {true, "typecast to boolean"};
        }
        if (s == "false" || s == "no" || s == "0") {
            return {false, "typecast to boolean"};
        }
        static const std::vector<std::string> keywords{"true", "false"};
        if (auto idx = fuzzy_match(s, keywords)) {
            return {*idx == 0, "matched boolean keyword " + keywords[*idx]};
        }
    }
    throw ValueRejected(spec.key, scalar_text(v), "not a boolean");
}

Coerced to_enum(const nlohmann::json& v, const AttributeSpec& spec) {
    const auto text = trim(scalar_text(v));
    if (auto idx = fuzzy_match(text, spec.allowed)) {
        const auto& keyword = spec.allowed[*idx];
        return {keyword, keyword == text ? "" : "matched keyword " + keyword};
    }
    throw ValueRejected(spec.key, text, "no allowed keyword within edit-distance threshold");
}

}  // namespace

Coerced coerce_value(const nlohmann::json& value, const AttributeSpec& spec) {
    if (value.is_null() || value.is_object() || value.is_array()) {
        throw ValueRejected(spec.key, value.dump(), "not a scalar");
    }
    switch (spec.kind) {
        case ValueKind::kText: return to_text(value, spec);
        case ValueKind::kInteger: return to_integer(value, spec);
        case ValueKind::kReal: return to_real(value, spec);
        case ValueKind::kBoolean: return to_boolean(value, spec);
        case ValueKind::kEnum: return to_enum(value, spec);
    }
    throw ValueRejected(spec.key, value.dump(), "unknown kind");
}

}  // namespace grounder::description
