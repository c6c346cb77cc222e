#include "qualnet/store.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "qualnet/error.hpp"

namespace qualnet::store {

using nlohmann::json;

namespace {

template <class T>
json opt(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

template <class T, class Key>
std::vector<T> sorted(std::vector<T> items, Key key) {
    std::stable_sort(items.begin(), items.end(),
                     [&](const T& a, const T& b) { return key(a) < key(b); });
    return items;
}

template <class IdT>
IdT id_at(const json& j, const char* key) {
    return IdT{j.at(key).get<std::uint64_t>()};
}

template <class IdT>
std::optional<IdT> opt_id_at(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return IdT{j.at(key).get<std::uint64_t>()};
}

std::optional<std::string> opt_string_at(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<std::string>();
}

}  // namespace

json to_json(const Project& p) {
    json units = json::array();
    for (const auto& u : sorted(p.units, [](const SourceUnit& u) { return u.unit_id; })) {
        units.push_back({{"unit_id", u.unit_id.value}, {"raw_text", u.raw_text}, {"ordinal", u.ordinal}});
    }
    json sentences = json::array();
    for (const auto& s : sorted(p.sentences, [](const Sentence& s) { return s.sentence_id; })) {
        sentences.push_back({{"sentence_id", s.sentence_id.value},
                             {"unit_id", s.unit_id.value},
                             {"ordinal", s.ordinal},
                             {"text", s.text}});
    }
    json indicators = json::array();
    for (const auto& i : sorted(p.indicators, [](const Indicator& i) { return i.indicator_id; })) {
        json span = nullptr;
        if (i.span) span = {{"start", i.span->start}, {"end", i.span->end}};
        indicators.push_back({{"indicator_id", i.indicator_id.value},
                              {"sentence_id", i.sentence_id.value},
                              {"text", i.text},
                              {"span", span},
                              {"concept_id", i.concept_id ? json(i.concept_id->value) : json(nullptr)},
                              {"status", to_string(i.status)},
                              {"memo", opt(i.memo)}});
    }
    json concepts = json::array();
    for (const auto& c : sorted(p.concepts, [](const Concept& c) { return c.concept_id; })) {
        concepts.push_back({{"concept_id", c.concept_id.value},
                            {"name", c.name},
                            {"definition", c.definition},
                            {"color", c.color},
                            {"references", c.references}});
    }
    json edges = json::array();
    for (const auto& e : sorted(p.causal_edges, [](const CausalEdge& e) { return e.edge_id; })) {
        edges.push_back({{"edge_id", e.edge_id.value},
                         {"cause", e.cause.value},
                         {"effect", e.effect.value},
                         {"sentence_id", e.sentence_id.value},
                         {"origin", to_string(e.origin)},
                         {"status", to_string(e.status)}});
    }
    json concept_edges = json::array();
    for (const auto& e : sorted(p.concept_edges, [](const ConceptEdge& e) {
             return std::make_pair(e.cause, e.effect);
         })) {
        json ids = json::array();
        for (auto id : e.contributing_edge_ids) ids.push_back(id.value);
        concept_edges.push_back({{"cause", e.cause.value},
                                 {"effect", e.effect.value},
                                 {"weight", e.weight},
                                 {"contributing_edge_ids", ids}});
    }
    json merges = json::array();
    for (const auto& m : sorted(p.merge_records, [](const MergeRecord& m) { return m.canonical; })) {
        json absorbed = json::array();
        for (auto id : m.absorbed) absorbed.push_back(id.value);
        merges.push_back({{"canonical", m.canonical.value}, {"absorbed", absorbed}});
    }
    json settings = {{"abbreviations", opt(p.settings.abbreviations)}};
    return {{"project_id", p.project_id},
            {"overview", p.overview ? json(p.overview->text) : json(nullptr)},
            {"settings", settings},
            {"units", units},
            {"sentences", sentences},
            {"indicators", indicators},
            {"concepts", concepts},
            {"causal_edges", edges},
            {"concept_edges", concept_edges},
            {"merge_records", merges},
            {"revision", p.revision}};
}

Project project_from_json(const json& j) {
    Project p;
    try {
        p.project_id = j.at("project_id").get<std::string>();
        if (auto ov = opt_string_at(j, "overview")) p.overview = ResearchOverview{*ov};
        if (j.contains("settings") && j.at("settings").contains("abbreviations") &&
            !j.at("settings").at("abbreviations").is_null()) {
            p.settings.abbreviations =
                j.at("settings").at("abbreviations").get<std::vector<std::string>>();
        }
        for (const auto& u : j.at("units")) {
            p.units.push_back({id_at<UnitId>(u, "unit_id"), u.at("raw_text").get<std::string>(),
                               u.at("ordinal").get<std::size_t>()});
        }
        for (const auto& s : j.at("sentences")) {
            p.sentences.push_back({id_at<SentenceId>(s, "sentence_id"), id_at<UnitId>(s, "unit_id"),
                                   s.at("ordinal").get<std::size_t>(), s.at("text").get<std::string>()});
        }
        for (const auto& i : j.at("indicators")) {
            Indicator ind;
            ind.indicator_id = id_at<IndicatorId>(i, "indicator_id");
            ind.sentence_id = id_at<SentenceId>(i, "sentence_id");
            ind.text = i.at("text").get<std::string>();
            if (i.contains("span") && !i.at("span").is_null()) {
                ind.span = Span{i.at("span").at("start").get<std::size_t>(),
                                i.at("span").at("end").get<std::size_t>()};
            }
            ind.concept_id = opt_id_at<ConceptId>(i, "concept_id");
            ind.status = parse_indicator_status(i.at("status").get<std::string>());
            ind.memo = opt_string_at(i, "memo");
            p.indicators.push_back(std::move(ind));
        }
        for (const auto& c : j.at("concepts")) {
            p.concepts.push_back({id_at<ConceptId>(c, "concept_id"), c.at("name").get<std::string>(),
                                  c.at("definition").get<std::string>(), c.at("color").get<std::string>(),
                                  c.at("references").get<std::vector<std::string>>()});
        }
        for (const auto& e : j.at("causal_edges")) {
            p.causal_edges.push_back({id_at<EdgeId>(e, "edge_id"), id_at<IndicatorId>(e, "cause"),
                                      id_at<IndicatorId>(e, "effect"),
                                      id_at<SentenceId>(e, "sentence_id"),
                                      parse_edge_origin(e.at("origin").get<std::string>()),
                                      parse_edge_status(e.at("status").get<std::string>())});
        }
        for (const auto& e : j.at("concept_edges")) {
            ConceptEdge ce{id_at<ConceptId>(e, "cause"), id_at<ConceptId>(e, "effect"),
                           e.at("weight").get<std::size_t>(), {}};
            for (const auto& id : e.at("contributing_edge_ids")) {
                ce.contributing_edge_ids.push_back(EdgeId{id.get<std::uint64_t>()});
            }
            p.concept_edges.push_back(std::move(ce));
        }
        for (const auto& m : j.at("merge_records")) {
            MergeRecord r{id_at<IndicatorId>(m, "canonical"), {}};
            for (const auto& id : m.at("absorbed")) r.absorbed.push_back(IndicatorId{id.get<std::uint64_t>()});
            p.merge_records.push_back(std::move(r));
        }
        p.revision = j.at("revision").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ValidationFailed, std::string("malformed project: ") + e.what());
    }
    return p;
}

json to_json(const ProjectFile& file) {
    return {{"format_version", kFormatVersion},
            {"project", to_json(file.project)},
            {"provider_transcript_ref", opt(file.provider_transcript_ref)}};
}

ProjectFile file_from_json(const json& j) {
    if (!j.is_object() || !j.contains("format_version") || !j.at("format_version").is_number_integer()) {
        throw Error(ErrorKind::SchemaMismatch, "missing integer format_version");
    }
    const auto version = j.at("format_version").get<std::int64_t>();
    if (version != kFormatVersion) {
        throw Error(ErrorKind::SchemaMismatch,
                    "unsupported format_version " + std::to_string(version));
    }
    if (!j.contains("project")) throw Error(ErrorKind::ValidationFailed, "missing project");
    ProjectFile file;
    file.project = project_from_json(j.at("project"));
    file.provider_transcript_ref = opt_string_at(j, "provider_transcript_ref");
    return file;
}

std::string serialize(const ProjectFile& file) {
    return to_json(file).dump(2) + "\n";
}

namespace {

void throw_if_invalid(const Project& project) {
    const auto problems = validate_project(project);
    if (problems.empty()) return;
    std::string message = "project failed validation: " + problems.front();
    if (problems.size() > 1) message += " (+" + std::to_string(problems.size() - 1) + " more)";
    throw Error(ErrorKind::ValidationFailed, message);
}

}  // namespace

void save(const ProjectFile& file, const std::filesystem::path& path, const FaultHook& hook) {
    throw_if_invalid(file.project);
    const std::string text = serialize(file);
    auto temp = path;
    temp += ".tmp";
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::IoError, "cannot write " + temp.string());
        out << text;
        out.flush();
        if (!out) throw Error(ErrorKind::IoError, "short write to " + temp.string());
    }
    if (hook) hook(temp);
    std::error_code ec;
    std::filesystem::rename(temp, path, ec);
    if (ec) {
        std::filesystem::remove(temp, ec);
        throw Error(ErrorKind::IoError, "cannot replace " + path.string());
    }
}

void save(const Project& project, const std::filesystem::path& path) {
    save(ProjectFile{project, std::nullopt}, path);
}

ProjectFile load_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot read " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    auto j = json::parse(buffer.str(), nullptr, false);
    if (j.is_discarded()) throw Error(ErrorKind::IoError, path.string() + " is not valid JSON");
    auto file = file_from_json(j);
    throw_if_invalid(file.project);
    return file;
}

Project load(const std::filesystem::path& path) {
    return load_file(path).project;
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

std::string indicators_csv(const Project& project) {
    std::string out = "indicator_id,sentence_id,text,concept_name,status\n";
    for (const auto& i : sorted(project.indicators, [](const Indicator& i) { return i.indicator_id; })) {
        std::string concept_name;
        if (i.concept_id) {
            if (const auto* c = project.find_concept(*i.concept_id)) concept_name = c->name;
        }
        out += std::to_string(i.indicator_id.value) + "," + std::to_string(i.sentence_id.value) + "," +
               csv_field(i.text) + "," + csv_field(concept_name) + "," + to_string(i.status) + "\n";
    }
    return out;
}

}  // namespace qualnet::store
