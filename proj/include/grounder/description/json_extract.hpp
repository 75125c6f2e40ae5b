#pragma once

#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace grounder::description {

/// Byte span [begin, end) of a bracket-balanced substring.
struct JsonCandidate {
    std::size_t begin = 0;
    std::size_t end = 0;
    [[nodiscard]] std::size_t size() const { return end - begin; }
};

/// Every balanced {...} or [...] substring. Brackets inside string literals are ignored.
std::vector<JsonCandidate> balanced_candidates(std::string_view raw);

/// Parses the longest candidate that is valid JSON; earlier wins on equal length.
/// Throws NoValidJson when none parses.
nlohmann::json extract_json(std::string_view raw);

}  // namespace grounder::description
