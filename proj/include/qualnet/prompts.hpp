#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace qualnet::pipeline {

enum class TemplateId { IndicatorExtraction, ConceptMapping, CausalExtraction, IndicatorMerging };

std::string to_string(TemplateId id);  // file stem, e.g. "indicator_extraction"

// A prompt body with `{{name}}` placeholders.
struct PromptTemplate {
    TemplateId id = TemplateId::IndicatorExtraction;
    std::string body;

    // Throws InvalidInput when the body lacks a placeholder the renderer fills.
    void check() const;

    // Substitutes every placeholder; unknown names in `values` are ignored.
    std::string render(const std::map<std::string, std::string>& values) const;

    static PromptTemplate builtin(TemplateId id);
    static const std::vector<std::string>& placeholders(TemplateId id);
};

struct PromptSet {
    PromptTemplate extraction = PromptTemplate::builtin(TemplateId::IndicatorExtraction);
    PromptTemplate mapping = PromptTemplate::builtin(TemplateId::ConceptMapping);
    PromptTemplate causal = PromptTemplate::builtin(TemplateId::CausalExtraction);
    PromptTemplate merging = PromptTemplate::builtin(TemplateId::IndicatorMerging);

    // Reads `<dir>/<template_id>.txt` for each template; missing files keep
    // the built-in text.
    static PromptSet load(const std::filesystem::path& dir);
};

}  // namespace qualnet::pipeline
