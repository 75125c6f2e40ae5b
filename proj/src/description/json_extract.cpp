#include "grounder/description/json_extract.hpp"

#include <algorithm>
#include <optional>
#include <vector>

#include "grounder/core/error.hpp"

namespace grounder::description {

namespace {

std::optional<std::size_t> balanced_end(std::string_view raw, std::size_t begin) {
    std::vector<char> stack;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = begin; i < raw.size(); ++i) {
        const char c = raw[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        switch (c) {
            case '"': in_string = true; break;
            case '{': stack.push_back('}'); break;
            case '[': stack.push_back(']'); break;
            case '}':
            case ']':
                if (stack.empty() || stack.back() != c) {
                    return std::nullopt;
                }
                stack.pop_back();
                if (stack.empty()) {
                    return i + 1;
                }
                break;
            default: break;
        }
    }
    return std::nullopt;
}

}  // namespace

std::vector<JsonCandidate> balanced_candidates(std::string_view raw) {
    std::vector<JsonCandidate> out;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] != '{' && raw[i] != '[') {
            continue;
        }
        if (auto end = balanced_end(raw, i)) {
            out.push_back({i, *end});
        }
    }
    return out;
}

nlohmann::json extract_json(std::string_view raw) {
    auto candidates = balanced_candidates(raw);
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const JsonCandidate& a, const JsonCandidate& b) { return a.size() > b.size(); });
    for (const auto& c : candidates) {
        auto parsed = nlohmann::json::parse(raw.data() + c.begin, raw.data() + c.end, nullptr, false);
        if (!parsed.is_discarded()) {
            return parsed;
        }
    }
    throw Error(ErrorCode::kNoValidJson, "no valid JSON object or list in response");
}

}  // namespace grounder::description
