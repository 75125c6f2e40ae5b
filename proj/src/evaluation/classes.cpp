#include "grounder/evaluation/classes.hpp"

#include <fstream>
#include <set>

#include "grounder/core/error.hpp"

namespace grounder::evaluation {

std::vector<ClassEntry> augmented_classes_from_json(const nlohmann::json& j) {
    if (!j.is_array()) {
        throw Error(ErrorCode::kConfig, "augmented class file must hold a JSON list");
    }
    std::vector<ClassEntry> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& e = j[i];
        if (!e.is_object() || !e.contains("name") || !e["name"].is_string() || e["name"].get<std::string>().empty()) {
            throw Error(ErrorCode::kConfig, "augmented class " + std::to_string(i) + " needs a name");
        }
        ClassEntry entry;
        entry.name = e["name"].get<std::string>();
        entry.origin = ClassOrigin::kAugmented;
        if (e.contains("definition") && e["definition"].is_string()) {
            entry.definition = e["definition"].get<std::string>();
        }
        if (e.contains("rule_target") && e["rule_target"].is_string()) {
            entry.rule_target = e["rule_target"].get<std::string>();
        }
        out.push_back(std::move(entry));
    }
    return out;
}

std::vector<ClassEntry> load_augmented_classes(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::kConfig, "cannot open augmented class file: " + path.string());
    }
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) {
        throw Error(ErrorCode::kConfig, "augmented class file is not valid JSON: " + path.string());
    }
    return augmented_classes_from_json(j);
}

std::vector<ClassEntry> build_class_list(const std::vector<std::string>& native, std::vector<ClassEntry> augmented) {
    std::vector<ClassEntry> out;
    std::set<std::string> names;
    for (const auto& n : native) {
        if (!names.insert(n).second) {
            throw Error(ErrorCode::kConfig, "duplicate class name: " + n);
        }
        out.push_back(ClassEntry{n, "", ClassOrigin::kNative, std::nullopt});
    }
    const std::set<std::string> native_names(native.begin(), native.end());
    for (auto& a : augmented) {
        if (!names.insert(a.name).second) {
            throw Error(ErrorCode::kConfig, "augmented class repeats a class name: " + a.name);
        }
        if (a.rule_target && native_names.count(*a.rule_target) == 0) {
            throw Error(ErrorCode::kConfig, "mapping rule of " + a.name + " targets unknown class " + *a.rule_target);
        }
        a.origin = ClassOrigin::kAugmented;
        out.push_back(std::move(a));
    }
    return out;
}

std::filesystem::path default_augmented_classes_path() {
    return std::filesystem::path(GROUNDER_DATA_DIR) / "classes" / "coco_augmented.v1.json";
}

}  // namespace grounder::evaluation
