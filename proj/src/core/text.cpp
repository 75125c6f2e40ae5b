#include "grounder/core/text.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <numeric>

#include <openssl/evp.h>

#include "grounder/core/error.hpp"

namespace grounder {

std::string to_lower(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string trim(std::string_view text) {
    const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    std::size_t begin = 0;
    std::size_t end = text.size();
    while (begin < end && is_space(static_cast<unsigned char>(text[begin]))) {
        ++begin;
    }
    while (end > begin && is_space(static_cast<unsigned char>(text[end - 1]))) {
        --end;
    }
    return std::string(text.substr(begin, end - begin));
}

std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> words;
    std::string current;
    for (const char ch : text) {
        if (std::isspace(static_cast<unsigned char>(ch)) != 0) {
            if (!current.empty()) {
                words.push_back(std::move(current));
                current.clear();
            }
        } else {
            current.push_back(ch);
        }
    }
    if (!current.empty()) {
        words.push_back(std::move(current));
    }
    return words;
}

std::string join(std::span<const std::string> parts, std::string_view separator) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) {
            out += separator;
        }
        out += parts[i];
    }
    return out;
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
    std::vector<std::size_t> prev(b.size() + 1);
    std::vector<std::size_t> curr(b.size() + 1);
    std::iota(prev.begin(), prev.end(), std::size_t{0});
    for (std::size_t i = 1; i <= a.size(); ++i) {
        curr[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            curr[j] = std::min({prev[j] + 1, curr[j - 1] + 1, sub});
        }
        std::swap(prev, curr);
    }
    return prev[b.size()];
}

std::size_t fuzzy_threshold(std::string_view target) {
    return std::max<std::size_t>(1, target.size() / 4);
}

std::optional<std::size_t> fuzzy_match(std::string_view value, std::span<const std::string> candidates) {
    const std::string needle = to_lower(trim(value));
    std::optional<std::size_t> best;
    std::size_t best_distance = 0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const std::string target = to_lower(candidates[i]);
        const std::size_t d = levenshtein(needle, target);
        if (d > fuzzy_threshold(target)) {
            continue;
        }
        if (!best || d < best_distance) {
            best = i;
            best_distance = d;
        }
    }
    return best;
}

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed) {
    std::uint64_t hash = seed;
    for (const char ch : data) {
        hash ^= static_cast<std::uint8_t>(ch);
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::string hex64(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(), static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
    std::string clean;
    clean.reserve(text.size());
    for (const char ch : text) {
        if (std::isspace(static_cast<unsigned char>(ch)) == 0) {
            clean.push_back(ch);
        }
    }
    if (clean.size() % 4 != 0) {
        throw Error(ErrorCode::kInvalidArgument, "base64 payload length is not a multiple of 4");
    }
    std::vector<std::uint8_t> out(3 * clean.size() / 4);
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(clean.data()), static_cast<int>(clean.size()));
    if (n < 0) {
        throw Error(ErrorCode::kInvalidArgument, "malformed base64 payload");
    }
    std::size_t padding = 0;
    if (!clean.empty() && clean.back() == '=') {
        ++padding;
        if (clean.size() >= 2 && clean[clean.size() - 2] == '=') {
            ++padding;
        }
    }
    out.resize(static_cast<std::size_t>(n) - padding);
    return out;
}

}  // namespace grounder
