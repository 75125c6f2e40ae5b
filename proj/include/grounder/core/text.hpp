#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace grounder {

std::string to_lower(std::string_view text);
std::string trim(std::string_view text);
std::vector<std::string> split_words(std::string_view text);
std::string join(std::span<const std::string> parts, std::string_view separator);

/// Edit distance with unit insert/delete/substitute costs.
std::size_t levenshtein(std::string_view a, std::string_view b);

/// Largest accepted distance when fuzzily matching against `target`: max(1, floor(len / 4)).
std::size_t fuzzy_threshold(std::string_view target);

/// Index of the candidate closest to `value` (case-insensitive) if within that candidate's
/// fuzzy threshold. Exact matches win; ties go to the earlier candidate.
std::optional<std::size_t> fuzzy_match(std::string_view value, std::span<const std::string> candidates);

/// 64-bit FNV-1a, used for content keys and response fingerprints.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws InvalidArgument on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace grounder
