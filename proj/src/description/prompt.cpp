#include "grounder/description/prompt.hpp"

#include <fstream>
#include <sstream>

#include "grounder/core/error.hpp"

namespace grounder::description {

PromptTemplate::PromptTemplate(std::string text) : text_(std::move(text)) {}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::kConfig, "cannot open prompt template: " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return PromptTemplate(ss.str());
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& values) const {
    std::string out;
    std::size_t pos = 0;
    while (true) {
        const auto open = text_.find("{{", pos);
        if (open == std::string::npos) {
            out.append(text_, pos);
            break;
        }
        const auto close = text_.find("}}", open + 2);
        if (close == std::string::npos) {
            throw Error(ErrorCode::kConfig, "unterminated placeholder in prompt template");
        }
        out.append(text_, pos, open - pos);
        const std::string name = text_.substr(open + 2, close - open - 2);
        const auto it = values.find(name);
        if (it == values.end()) {
            throw Error(ErrorCode::kConfig, "no value for prompt placeholder " + name);
        }
        out += it->second;
        pos = close + 2;
    }
    return out;
}

PromptSet PromptSet::load(const std::filesystem::path& dir, const std::string& version) {
    const auto file = [&](const char* name) { return PromptTemplate::load(dir / (std::string(name) + "." + version + ".txt")); };
    return PromptSet{file("describe"), file("attribute"), file("validate"), file("define")};
}

std::filesystem::path PromptSet::default_dir() {
    return std::filesystem::path(GROUNDER_DATA_DIR) / "prompts";
}

const PromptSet& PromptSet::shipped() {
    static const PromptSet set = load(default_dir());
    return set;
}

std::string describe_attributes(const AttributeSchema& schema) {
    std::ostringstream out;
    for (const auto& s : schema.specs()) {
        out << "- " << s.key << " (" << kind_name(s.kind);
        if (s.kind == ValueKind::kEnum) {
            out << ", one of:";
            for (const auto& k : s.allowed) {
                out << ' ' << k;
            }
        }
        if (s.max_length) {
            out << ", at most " << *s.max_length << " characters";
        }
        out << (s.required ? ", required" : ", optional");
        if (s.dependency) {
            out << ", only when " << s.dependency->key << " is " << value_to_text(s.dependency->value);
        }
        out << ")\n";
    }
    auto text = out.str();
    if (!text.empty()) {
        text.pop_back();
    }
    return text;
}

std::string build_description_prompt(const AttributeSchema& schema, const PromptTemplate& tmpl, std::size_t word_cap) {
    return tmpl.render({{"attributes", describe_attributes(schema)}, {"word_cap", std::to_string(word_cap)}});
}

std::string build_description_prompt(const AttributeSchema& schema, std::size_t word_cap) {
    return build_description_prompt(schema, PromptSet::shipped().describe, word_cap);
}

}  // namespace grounder::description
