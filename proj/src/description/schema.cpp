#include "grounder/description/schema.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "grounder/core/error.hpp"

namespace grounder::description {

std::string_view kind_name(ValueKind kind) {
    switch (kind) {
        case ValueKind::kText: return "text";
        case ValueKind::kInteger: return "integer";
        case ValueKind::kReal: return "real";
        case ValueKind::kBoolean: return "boolean";
        case ValueKind::kEnum: return "enum";
    }
    return "text";
}

nlohmann::json value_to_json(const AttributeValue& value) {
    return std::visit([](const auto& v) { return nlohmann::json(v); }, value);
}

std::string value_to_text(const AttributeValue& value) {
    if (const auto* s = std::get_if<std::string>(&value)) {
        return *s;
    }
    return value_to_json(value).dump();
}

AttributeSchema AttributeSchema::make(std::vector<AttributeSpec> specs) {
    std::vector<AttributeSpec> ordered;
    for (const std::string_view required : {kObjectName, kDescription}) {
        auto it = std::find_if(specs.begin(), specs.end(), [&](const AttributeSpec& s) { return s.key == required; });
        if (it == specs.end()) {
            ordered.push_back(AttributeSpec{std::string(required), ValueKind::kText, true, std::nullopt, {}, std::nullopt});
            continue;
        }
        if (it->kind != ValueKind::kText || !it->required || it->dependency) {
            throw Error(ErrorCode::kConfig, std::string(required) + " must be a required, unconditional text attribute");
        }
        ordered.push_back(std::move(*it));
        specs.erase(it);
    }
    std::set<std::string> keys{std::string(kObjectName), std::string(kDescription)};
    for (auto& s : specs) {
        if (s.key.empty()) {
            throw Error(ErrorCode::kConfig, "attribute keys must be non-empty");
        }
        if (!keys.insert(s.key).second) {
            throw Error(ErrorCode::kConfig, "duplicate attribute key: " + s.key);
        }
        if (s.kind == ValueKind::kEnum && s.allowed.empty()) {
            throw Error(ErrorCode::kConfig, "enum attribute needs allowed keywords: " + s.key);
        }
        if (s.max_length && *s.max_length == 0) {
            throw Error(ErrorCode::kConfig, "max_length must be positive: " + s.key);
        }
        ordered.push_back(std::move(s));
    }
    for (const auto& s : ordered) {
        if (s.dependency && keys.count(s.dependency->key) == 0) {
            throw Error(ErrorCode::kConfig, "attribute " + s.key + " depends on unknown key " + s.dependency->key);
        }
    }
    AttributeSchema schema;
    schema.specs_ = std::move(ordered);
    return schema;
}

const AttributeSpec* AttributeSchema::find(std::string_view key) const {
    for (const auto& s : specs_) {
        if (s.key == key) {
            return &s;
        }
    }
    return nullptr;
}

namespace {

ValueKind parse_kind(const std::string& name) {
    if (name == "text") return ValueKind::kText;
    if (name == "integer") return ValueKind::kInteger;
    if (name == "real") return ValueKind::kReal;
    if (name == "boolean") return ValueKind::kBoolean;
    if (name == "enum") return ValueKind::kEnum;
    throw Error(ErrorCode::kConfig, "unknown attribute kind: " + name);
}

AttributeValue json_scalar(const nlohmann::json& j) {
    if (j.is_boolean()) return j.get<bool>();
    if (j.is_number_integer()) return j.get<std::int64_t>();
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) return j.get<std::string>();
    throw Error(ErrorCode::kConfig, "dependency value must be a scalar");
}

}  // namespace

AttributeSchema AttributeSchema::from_json(const nlohmann::json& j) {
    std::vector<AttributeSpec> specs;
    try {
        for (const auto& a : j.at("attributes")) {
            AttributeSpec s;
            s.key = a.at("key").get<std::string>();
            s.kind = parse_kind(a.value("kind", "text"));
            s.required = a.value("required", false);
            if (a.contains("max_length") && !a["max_length"].is_null()) {
                s.max_length = a["max_length"].get<std::size_t>();
            }
            s.allowed = a.value("values", std::vector<std::string>{});
            if (a.contains("depends_on")) {
                s.dependency = AttributeDependency{a["depends_on"].at("key").get<std::string>(), json_scalar(a["depends_on"].at("value"))};
            }
            specs.push_back(std::move(s));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kConfig, std::string("attribute schema: ") + e.what());
    }
    return make(std::move(specs));
}

AttributeSchema AttributeSchema::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::kConfig, "cannot open attribute schema: " + path.string());
    }
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) {
        throw Error(ErrorCode::kConfig, "attribute schema is not valid JSON: " + path.string());
    }
    return from_json(j);
}

}  // namespace grounder::description
