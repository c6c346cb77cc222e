#include "qualnet/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>
#include <sstream>

#include "qualnet/error.hpp"
#include "qualnet/text.hpp"

namespace qualnet::ingest {

namespace {

bool valid_utf8(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        auto c = static_cast<unsigned char>(s[i]);
        std::size_t extra = 0;
        if (c < 0x80) extra = 0;
        else if ((c & 0xE0) == 0xC0 && c >= 0xC2) extra = 1;
        else if ((c & 0xF0) == 0xE0) extra = 2;
        else if ((c & 0xF8) == 0xF0 && c <= 0xF4) extra = 3;
        else return false;
        if (i + extra >= s.size() && extra > 0) return false;
        for (std::size_t k = 1; k <= extra; ++k) {
            if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) return false;
        }
        i += extra + 1;
    }
    return true;
}

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }
bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }

bool ends_with_abbreviation(std::string_view text, std::size_t period_pos,
                            const std::vector<std::string>& abbreviations) {
    std::size_t start = period_pos;
    while (start > 0 && !std::isspace(static_cast<unsigned char>(text[start - 1]))) --start;
    std::string token = to_lower(text.substr(start, period_pos + 1 - start));
    // Opening punctuation does not belong to the abbreviation.
    while (!token.empty() && (token.front() == '(' || token.front() == '"' || token.front() == '\'')) {
        token.erase(token.begin());
    }
    return std::any_of(abbreviations.begin(), abbreviations.end(),
                       [&](const std::string& a) { return to_lower(a) == token; });
}

}  // namespace

std::vector<SourceUnit> split_units(std::string_view corpus_text, UnitId first_id,
                                    std::size_t first_ordinal) {
    if (corpus_text.substr(0, 3) == "\xEF\xBB\xBF") corpus_text.remove_prefix(3);
    if (!valid_utf8(corpus_text)) {
        throw Error(ErrorKind::InvalidInput, "corpus is not valid UTF-8");
    }
    std::vector<SourceUnit> units;
    for (auto& line : split_lines(corpus_text)) {
        if (trim(line).empty()) continue;
        SourceUnit u;
        u.unit_id = UnitId{first_id.value + units.size()};
        u.ordinal = first_ordinal + units.size();
        u.raw_text = std::move(line);
        units.push_back(std::move(u));
    }
    if (units.empty()) throw Error(ErrorKind::EmptyCorpus, "corpus has no non-blank line");
    return units;
}

std::vector<Sentence> split_sentences(const SourceUnit& unit,
                                      const std::vector<std::string>& abbreviations,
                                      SentenceId first_id) {
    const std::string_view text = unit.raw_text;
    std::vector<Sentence> out;
    auto emit = [&](std::size_t b, std::size_t e) {
        std::string piece = trim(text.substr(b, e - b));
        if (piece.empty()) return;
        Sentence s;
        s.sentence_id = SentenceId{first_id.value + out.size()};
        s.unit_id = unit.unit_id;
        s.ordinal = out.size();
        s.text = std::move(piece);
        out.push_back(std::move(s));
    };

    std::size_t seg_start = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        if (!is_terminator(text[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < text.size() && is_terminator(text[j])) ++j;
        const bool single_period = j - i == 1 && text[i] == '.';
        while (j < text.size() && is_closer(text[j])) ++j;
        const bool at_boundary =
            j == text.size() || std::isspace(static_cast<unsigned char>(text[j]));
        if (at_boundary && !(single_period && ends_with_abbreviation(text, i, abbreviations))) {
            emit(seg_start, j);
            seg_start = j;
        }
        i = j;
    }
    emit(seg_start, text.size());
    return out;
}

const std::vector<std::string>& default_abbreviations() {
    static const std::vector<std::string> list = {"Dr.", "Mr.", "Mrs.", "Ms.",
                                                  "e.g.", "i.e.", "etc.", "vs."};
    return list;
}

std::vector<std::string> load_abbreviations(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot read " + path.string());
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        out.push_back(t);
    }
    return out;
}

std::size_t ingest_corpus(Project& project, std::string_view corpus_text) {
    auto units = split_units(corpus_text, project.next_unit_id(), project.units.size());
    const auto& abbreviations =
        project.settings.abbreviations ? *project.settings.abbreviations : default_abbreviations();
    SentenceId next_sentence = project.next_sentence_id();
    for (auto& u : units) {
        auto sentences = split_sentences(u, abbreviations, next_sentence);
        next_sentence = SentenceId{next_sentence.value + sentences.size()};
        for (auto& s : sentences) project.sentences.push_back(std::move(s));
        project.units.push_back(std::move(u));
    }
    return units.size();
}

std::string to_string(CausalDirection d) {
    switch (d) {
        case CausalDirection::E1CausesE2: return "e1_causes_e2";
        case CausalDirection::E2CausesE1: return "e2_causes_e1";
        case CausalDirection::NonCausal: return "non_causal";
    }
    return "non_causal";
}

namespace {

[[noreturn]] void malformed(std::size_t line, const std::string& what) {
    std::ostringstream os;
    os << "line " << line << ": " << what;
    throw Error(ErrorKind::MalformedRecord, os.str());
}

// Strips the four entity tags, recording their spans in the stripped text.
void strip_tags(const std::string& tagged, std::size_t line, SemEvalRecord& rec) {
    static const std::string tags[4] = {"<e1>", "</e1>", "<e2>", "</e2>"};
    std::size_t positions[4];
    for (int t = 0; t < 4; ++t) {
        auto p = tagged.find(tags[t]);
        if (p == std::string::npos) malformed(line, "missing " + tags[t]);
        if (tagged.find(tags[t], p + 1) != std::string::npos) {
            malformed(line, "repeated " + tags[t]);
        }
        positions[t] = p;
    }
    if (positions[0] > positions[1] || positions[2] > positions[3]) {
        malformed(line, "unbalanced entity tags");
    }

    std::string plain;
    plain.reserve(tagged.size());
    std::size_t marks[4] = {0, 0, 0, 0};
    std::size_t i = 0;
    while (i < tagged.size()) {
        bool matched = false;
        for (int t = 0; t < 4; ++t) {
            if (i == positions[t]) {
                marks[t] = plain.size();
                i += tags[t].size();
                matched = true;
                break;
            }
        }
        if (!matched) plain.push_back(tagged[i++]);
    }
    rec.sentence_text = std::move(plain);
    rec.e1_span = Span{marks[0], marks[1]};
    rec.e2_span = Span{marks[2], marks[3]};
    if (rec.e1_span.start >= rec.e1_span.end || rec.e2_span.start >= rec.e2_span.end) {
        malformed(line, "empty entity");
    }
    const bool disjoint =
        rec.e1_span.end <= rec.e2_span.start || rec.e2_span.end <= rec.e1_span.start;
    if (!disjoint) malformed(line, "overlapping entity tags");
}

}  // namespace

std::vector<SemEvalRecord> parse_semeval(std::string_view file_text) {
    static const std::regex sentence_re(R"(^\s*(\d+)\s+\"(.*)\"\s*$)");
    static const std::regex relation_re(R"(^([A-Za-z]+-[A-Za-z]+)\((e[12]),(e[12])\)$)");

    const auto lines = split_lines(file_text);
    std::vector<SemEvalRecord> records;
    std::size_t i = 0;
    auto skip_blank = [&] {
        while (i < lines.size() && trim(lines[i]).empty()) ++i;
    };

    skip_blank();
    while (i < lines.size()) {
        const std::size_t sentence_line = i + 1;
        std::smatch m;
        if (!std::regex_match(lines[i], m, sentence_re)) {
            malformed(sentence_line, "expected '<id>\\t\"<sentence>\"'");
        }
        SemEvalRecord rec;
        rec.record_id = std::stol(m[1].str());
        strip_tags(m[2].str(), sentence_line, rec);
        ++i;

        if (i >= lines.size()) malformed(sentence_line, "missing relation line");
        const std::string relation = trim(lines[i]);
        const std::size_t relation_line = i + 1;
        ++i;
        if (relation == "Other") {
            rec.relation_label = relation;
        } else {
            std::smatch rm;
            if (!std::regex_match(relation, rm, relation_re) || rm[2].str() == rm[3].str()) {
                malformed(relation_line, "unparseable relation '" + relation + "'");
            }
            rec.relation_label = relation;
            if (rm[1].str() == "Cause-Effect") {
                rec.causal_direction = rm[2].str() == "e1" ? CausalDirection::E1CausesE2
                                                           : CausalDirection::E2CausesE1;
            }
        }
        if (i < lines.size() && lines[i].rfind("Comment", 0) == 0) ++i;
        records.push_back(std::move(rec));
        skip_blank();
    }
    return records;
}

std::vector<GoldSpanEdge> semeval_gold_edges(const std::vector<SemEvalRecord>& records) {
    std::vector<GoldSpanEdge> out;
    for (const auto& r : records) {
        switch (r.causal_direction) {
            case CausalDirection::E1CausesE2:
                out.push_back({r.record_id, r.e1_span, r.e2_span});
                break;
            case CausalDirection::E2CausesE1:
                out.push_back({r.record_id, r.e2_span, r.e1_span});
                break;
            case CausalDirection::NonCausal:
                break;
        }
    }
    return out;
}

}  // namespace qualnet::ingest
