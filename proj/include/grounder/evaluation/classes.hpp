#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace grounder::evaluation {

enum class ClassOrigin { kNative, kAugmented };

struct ClassEntry {
    std::string name;
    /// Empty until generated or supplied.
    std::string definition;
    ClassOrigin origin = ClassOrigin::kNative;
    /// Augmented entries only: the native class that matches are redirected to.
    std::optional<std::string> rule_target;
};

/// Reads [{name, definition?, rule_target?}] as augmented entries. Throws Config.
std::vector<ClassEntry> load_augmented_classes(const std::filesystem::path& path);
std::vector<ClassEntry> augmented_classes_from_json(const nlohmann::json& j);

/// Native entries in the given order followed by the augmented ones. Throws Config when a
/// rule targets an unknown native class or a name repeats.
std::vector<ClassEntry> build_class_list(const std::vector<std::string>& native, std::vector<ClassEntry> augmented);

std::filesystem::path default_augmented_classes_path();

}  // namespace grounder::evaluation
