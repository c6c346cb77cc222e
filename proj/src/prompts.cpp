#include "qualnet/prompts.hpp"

#include <fstream>
#include <sstream>

#include "qualnet/error.hpp"

namespace qualnet::pipeline {

namespace {

constexpr const char* kIndicatorExtraction = R"([Instruction]
Extract meaningful indicators from the provided sentence, which is taken from qualitative data. In grounded theory, an indicator refers to a word, phrase, or sentence, or a series of words, phrases, or sentences, in the materials being analyzed.

[Example]
- Research Overview: "This study explores emotional responses and conflict resolution strategies in interpersonal relationships, particularly focusing on how individuals manage anger and attempt to mediate tense situations."
- Sentence: "No, I would not feel angry, I would feel concerned and try to talk to them to calm them down. It is out of the ordinary behaviour for them, I do not like seeing people angry or arguments so I would try and defuse the situation."

Output:
{
  "indicators": [
    "I would not feel angry",
    "I would feel concerned",
    "try to talk to them to calm them down",
    "It is out of the ordinary behaviour for them",
    "I do not like seeing people angry or arguments",
    "I would try and defuse the situation"
  ]
}

[Output Format]
Return the extracted indicators in JSON format as a simple list:
{
  "indicators": [
    "indicator1",
    "indicator2",
    "indicator3",
    ...
  ]
}

[Input]
- Research Overview: {{overview}}
- Sentence: {{sentence}}
)";

constexpr const char* kConceptMapping = R"([Instruction]
Your task is to assign the most appropriate concept to a given indicator (in grounded theory, an indicator refers to a word, phrase, or sentence, or a series of words, phrases, or sentences, in the materials being analyzed).

You will be provided with:
1. An indicator extracted from a paragraph
2. The complete sentence from which the indicator was extracted
3. A list of concepts with their definitions and references

If you find that none of the concepts seem appropriate, select the one that is the best fit.

Answer the following question based on the indicator, sentence, and concepts given to you:
Which concept best describes the indicator within the context of the sentence? (Select exactly one option)
{{options}}

[Output Format]
Please output your choice as a single letter:
label: [{{letters}}]

[Input]
- Indicator: {{indicator}}
- Sentence: {{sentence}}
- Concepts:
{{concepts}}
)";

constexpr const char* kCausalExtraction = R"([Instruction]
Analyze the given sentence and the two identified indicators with their concepts. Determine if there is a meaningful causal relationship between these indicators based on the text evidence. A causal relationship exists when one indicator (cause) leads to another indicator (effect).

IMPORTANT:
1. Consider both explicit causal markers (like "because," "therefore," "since," "as a result") AND implicit causal relationships. While many causal relationships are explicitly indicated, others might be inferred from the meaning and context of the sentence. Both types are equally valid for this task.
2. Pay careful attention to the direction of causation: determine which indicator leads to the other, not the reverse.

You will be provided with:
1. Sentence: The complete sentence from qualitative data being analyzed
2. Indicator 1: The first indicator with its concept type in parentheses
3. Indicator 2: The second indicator with its concept type in parentheses

Answer the following question based on the indicators and sentence given to you:
Which of the following statements is true? (Select exactly one option)
a. Indicator 1 causes Indicator 2
b. Indicator 2 causes Indicator 1
c. Indicator 1 and Indicator 2 are not directly causally related

[Output Format]
Please output your choice as a single letter:
label: [a/b/c]

[Input]
- Sentence: {{sentence}}
- Indicator 1: {{indicator1}}
- Indicator 2: {{indicator2}}
)";

constexpr const char* kIndicatorMerging = R"([Instruction]
Determine if two indicators represent the same real-world indicators (in grounded theory, an indicator refers to a word, phrase, or sentence, or a series of words, phrases, or sentences, in the materials being analyzed) or refer to functionally identical semantic meanings despite different surface forms, based on their concept and the original sentences from which they were extracted. Indicators should ONLY be merged if they are equivalent, not merely related or similar concepts. For merging to be appropriate, the indicators need to be interchangeable in their respective contexts without changing the meaning.

You will be provided with:
1. Concept: The shared concept assigned to both indicators
2. Indicator 1: The first indicator to be compared
3. Sentence 1: The sentence from which Indicator 1 was extracted
4. Indicator 2: The second indicator to be compared
5. Sentence 2: The sentence from which Indicator 2 was extracted

Answer the following question based on the indicators and sentences given to you:
Should these two indicators be merged? (Select exactly one option)
a. Merge
b. Do not merge

[Output Format]
Please output your choice as a single letter:
label: [a/b]

[Input]
- Concept: {{concept}}
- Indicator 1: {{indicator1}}
- Sentence 1: {{sentence1}}
- Indicator 2: {{indicator2}}
- Sentence 2: {{sentence2}}
)";

}  // namespace

std::string to_string(TemplateId id) {
    switch (id) {
        case TemplateId::IndicatorExtraction: return "indicator_extraction";
        case TemplateId::ConceptMapping: return "concept_mapping";
        case TemplateId::CausalExtraction: return "causal_extraction";
        case TemplateId::IndicatorMerging: return "indicator_merging";
    }
    return "indicator_extraction";
}

const std::vector<std::string>& PromptTemplate::placeholders(TemplateId id) {
    static const std::vector<std::string> extraction = {"overview", "sentence"};
    static const std::vector<std::string> mapping = {"options", "letters", "indicator",
                                                     "sentence", "concepts"};
    static const std::vector<std::string> causal = {"sentence", "indicator1", "indicator2"};
    static const std::vector<std::string> merging = {"concept", "indicator1", "sentence1",
                                                     "indicator2", "sentence2"};
    switch (id) {
        case TemplateId::IndicatorExtraction: return extraction;
        case TemplateId::ConceptMapping: return mapping;
        case TemplateId::CausalExtraction: return causal;
        case TemplateId::IndicatorMerging: return merging;
    }
    return extraction;
}

PromptTemplate PromptTemplate::builtin(TemplateId id) {
    switch (id) {
        case TemplateId::IndicatorExtraction: return {id, kIndicatorExtraction};
        case TemplateId::ConceptMapping: return {id, kConceptMapping};
        case TemplateId::CausalExtraction: return {id, kCausalExtraction};
        case TemplateId::IndicatorMerging: return {id, kIndicatorMerging};
    }
    return {id, kIndicatorExtraction};
}

void PromptTemplate::check() const {
    for (const auto& name : placeholders(id)) {
        if (body.find("{{" + name + "}}") == std::string::npos) {
            throw Error(ErrorKind::InvalidInput, "prompt template " + to_string(id) +
                                                     " lacks placeholder {{" + name + "}}");
        }
    }
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& values) const {
    std::string out;
    out.reserve(body.size() + 256);
    std::size_t pos = 0;
    while (pos < body.size()) {
        auto open = body.find("{{", pos);
        if (open == std::string::npos) {
            out.append(body, pos, std::string::npos);
            break;
        }
        auto close = body.find("}}", open + 2);
        if (close == std::string::npos) {
            out.append(body, pos, std::string::npos);
            break;
        }
        out.append(body, pos, open - pos);
        const std::string name = body.substr(open + 2, close - open - 2);
        auto it = values.find(name);
        if (it != values.end()) out += it->second;
        else out.append(body, open, close + 2 - open);
        pos = close + 2;
    }
    return out;
}

PromptSet PromptSet::load(const std::filesystem::path& dir) {
    PromptSet set;
    for (auto* t : {&set.extraction, &set.mapping, &set.causal, &set.merging}) {
        const auto path = dir / (to_string(t->id) + ".txt");
        std::ifstream in(path);
        if (!in) continue;
        std::ostringstream ss;
        ss << in.rdbuf();
        t->body = ss.str();
        t->check();
    }
    return set;
}

}  // namespace qualnet::pipeline
