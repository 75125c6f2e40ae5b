#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "grounder/description/schema.hpp"

namespace grounder::description {

/// Text with {{name}} placeholders.
class PromptTemplate {
  public:
    PromptTemplate() = default;
    explicit PromptTemplate(std::string text);
    static PromptTemplate load(const std::filesystem::path& path);

    /// Throws Config when a placeholder has no value.
    [[nodiscard]] std::string render(const std::map<std::string, std::string>& values) const;
    [[nodiscard]] const std::string& text() const { return text_; }

  private:
    std::string text_;
};

/// The four prompt templates used by the pipeline, loaded from <dir>/<name>.<version>.txt.
struct PromptSet {
    PromptTemplate describe;
    PromptTemplate attribute;
    PromptTemplate validate;
    PromptTemplate define;

    static PromptSet load(const std::filesystem::path& dir, const std::string& version = "v1");
    static std::filesystem::path default_dir();
    /// Shipped templates; loaded once.
    static const PromptSet& shipped();
};

/// One line per attribute: key, kind, allowed keywords, requiredness and dependency.
std::string describe_attributes(const AttributeSchema& schema);

std::string build_description_prompt(const AttributeSchema& schema, const PromptTemplate& tmpl, std::size_t word_cap = 10);
std::string build_description_prompt(const AttributeSchema& schema, std::size_t word_cap = 10);

}  // namespace grounder::description
