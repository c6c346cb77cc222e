#include "qualnet/service.hpp"

#include <algorithm>
#include <cstdlib>
#include <regex>

#include "qualnet/ingest.hpp"
#include "qualnet/metrics.hpp"
#include "qualnet/store.hpp"
#include "qualnet/text.hpp"

namespace qualnet::service {

using nlohmann::json;

std::string to_string(ApiCode code) {
    switch (code) {
        case ApiCode::NotFound: return "not_found";
        case ApiCode::InvalidInput: return "invalid_input";
        case ApiCode::Conflict: return "conflict";
        case ApiCode::ProviderUnavailable: return "provider_unavailable";
        case ApiCode::Internal: return "internal";
    }
    return "internal";
}

int http_status(ApiCode code) {
    switch (code) {
        case ApiCode::NotFound: return 404;
        case ApiCode::InvalidInput: return 400;
        case ApiCode::Conflict: return 409;
        case ApiCode::ProviderUnavailable: return 503;
        case ApiCode::Internal: return 500;
    }
    return 500;
}

ApiCode api_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::NotFound:
        case ErrorKind::UnknownNode:
            return ApiCode::NotFound;
        case ErrorKind::Conflict:
            return ApiCode::Conflict;
        case ErrorKind::ProviderUnavailable:
        case ErrorKind::ProviderRejected:
        case ErrorKind::MalformedProviderOutput:
        case ErrorKind::InvalidLabel:
            return ApiCode::ProviderUnavailable;
        case ErrorKind::IoError:
            return ApiCode::Internal;
        default:
            return ApiCode::InvalidInput;
    }
}

json ApiError::to_json() const {
    json out = {{"code", to_string(code)}, {"message", message}};
    if (!detail.is_null()) out["detail"] = detail;
    return out;
}

std::string to_string(JobState state) {
    switch (state) {
        case JobState::Pending: return "pending";
        case JobState::Running: return "running";
        case JobState::Done: return "done";
        case JobState::Failed: return "failed";
    }
    return "pending";
}

json JobStatus::to_json() const {
    json out = {{"job_id", job_id},
                {"project_id", project_id},
                {"status", to_string(state)},
                {"progress", {{"completed_stages", completed_stages}, {"total_stages", total_stages}}},
                {"stage", stage ? json(pipeline::to_string(*stage)) : json(nullptr)}};
    if (report) out["report"] = report->to_json(false);
    if (error) out["error"] = error->to_json();
    return out;
}

namespace {

struct ApiException : std::exception {
    ApiError error;
    explicit ApiException(ApiError e) : error(std::move(e)) {}
    const char* what() const noexcept override { return error.message.c_str(); }
};

[[noreturn]] void not_found(const std::string& what) {
    throw ApiException({ApiCode::NotFound, what + " not found", nullptr});
}

[[noreturn]] void invalid(const std::string& what) {
    throw ApiException({ApiCode::InvalidInput, what, nullptr});
}

ApiError to_api_error(const std::exception& e) {
    if (const auto* api = dynamic_cast<const ApiException*>(&e)) return api->error;
    if (const auto* err = dynamic_cast<const Error*>(&e)) {
        return {api_code(err->kind()), err->what(), {{"kind", qualnet::to_string(err->kind())}}};
    }
    if (dynamic_cast<const json::exception*>(&e)) {
        return {ApiCode::InvalidInput, std::string("malformed request: ") + e.what(), nullptr};
    }
    return {ApiCode::Internal, e.what(), nullptr};
}

Response reply(const json& body, int status = 200) {
    return Response{status, body.dump(), "application/json"};
}

Response error_reply(const ApiError& error) {
    return reply(error.to_json(), http_status(error.code));
}

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::string current;
    for (char c : path) {
        if (c == '/') {
            if (!current.empty()) parts.push_back(std::move(current));
            current.clear();
        } else {
            current += c;
        }
    }
    if (!current.empty()) parts.push_back(std::move(current));
    return parts;
}

json parse_body(const Request& request) {
    if (trim(request.body).empty()) return json::object();
    if (!request.content_type.empty() && request.content_type.find("json") == std::string::npos) {
        return json::object();
    }
    auto j = json::parse(request.body, nullptr, false);
    if (j.is_discarded()) invalid("request body is not valid JSON");
    return j;
}

std::uint64_t parse_uint(const std::string& s, const std::string& what) {
    if (s.empty() || !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); })) {
        invalid(what + " must be a non-negative integer");
    }
    return std::strtoull(s.c_str(), nullptr, 10);
}

std::optional<std::uint64_t> expected_revision(const Request& request, const json& body) {
    if (body.is_object() && body.contains("expected_revision")) {
        const auto& v = body.at("expected_revision");
        if (!v.is_number_unsigned() && !v.is_number_integer()) invalid("expected_revision must be an integer");
        return v.get<std::uint64_t>();
    }
    if (auto it = request.query.find("expected_revision"); it != request.query.end()) {
        return parse_uint(it->second, "expected_revision");
    }
    return std::nullopt;
}

const std::regex& project_id_pattern() {
    static const std::regex re("^[A-Za-z0-9_-]{1,64}$");
    return re;
}

json indicator_json(const Project& project, const Indicator& ind) {
    json span = nullptr;
    if (ind.span) span = {{"start", ind.span->start}, {"end", ind.span->end}};
    json concept_name = nullptr;
    if (ind.concept_id) {
        if (const auto* c = project.find_concept(*ind.concept_id)) concept_name = c->name;
    }
    return {{"indicator_id", ind.indicator_id.value},
            {"sentence_id", ind.sentence_id.value},
            {"text", ind.text},
            {"span", span},
            {"concept_id", ind.concept_id ? json(ind.concept_id->value) : json(nullptr)},
            {"concept_name", concept_name},
            {"status", qualnet::to_string(ind.status)},
            {"memo", ind.memo ? json(*ind.memo) : json(nullptr)}};
}

json concept_json(const Concept& c) {
    return {{"concept_id", c.concept_id.value},
            {"name", c.name},
            {"definition", c.definition},
            {"color", c.color},
            {"references", c.references}};
}

std::string string_field(const json& body, const char* key) {
    if (!body.contains(key) || !body.at(key).is_string()) {
        invalid(std::string("'") + key + "' must be a string");
    }
    return body.at(key).get<std::string>();
}

bool valid_color(const std::string& color) {
    static const std::regex re("^#[0-9A-Fa-f]{6}$");
    return std::regex_match(color, re);
}

void apply_concept_fields(Project& project, Concept& c, const json& body) {
    if (body.contains("name")) {
        auto name = trim(string_field(body, "name"));
        if (name.empty()) invalid("concept name must not be empty");
        for (const auto& other : project.concepts) {
            if (other.concept_id != c.concept_id && other.name == name) {
                throw ApiException({ApiCode::Conflict, "concept name '" + name + "' is taken", nullptr});
            }
        }
        c.name = std::move(name);
    }
    if (body.contains("definition")) c.definition = string_field(body, "definition");
    if (body.contains("color")) {
        c.color = string_field(body, "color");
        if (!valid_color(c.color)) invalid("color must look like #rrggbb");
    }
    if (body.contains("references")) {
        if (!body.at("references").is_array()) invalid("'references' must be an array");
        c.references.clear();
        for (const auto& r : body.at("references")) {
            if (!r.is_string()) invalid("references must be strings");
            add_reference(c, r.get<std::string>());
        }
    }
}

// Soft-deletes active edges that touch a deleted indicator.
std::size_t cascade_edges(Project& project, IndicatorId id) {
    std::size_t n = 0;
    for (auto& e : project.causal_edges) {
        if (e.active() && (e.cause == id || e.effect == id)) {
            e.status = EdgeStatus::Deleted;
            ++n;
        }
    }
    return n;
}

network::IndicatorGraph filtered_graph(const Project& project, const Request& request) {
    auto graph = network::build_indicator_graph(project);
    if (auto it = request.query.find("fraction"); it != request.query.end()) {
        char* end = nullptr;
        const double f = std::strtod(it->second.c_str(), &end);
        if (it->second.empty() || *end != '\0') invalid("fraction must be a number");
        if (graph.nodes.empty()) return graph;
        graph = network::degree_filter(graph, f);
    }
    return graph;
}

}  // namespace

// ---------------------------------------------------------------------------

Workspace::Workspace(WorkspaceOptions options) : options_(std::move(options)) {
    if (!options_.providers.chat || !options_.providers.embed) {
        throw Error(ErrorKind::InvalidInput, "workspace needs chat and embedding providers");
    }
    std::filesystem::create_directories(options_.data_dir);
    for (const auto& entry : std::filesystem::directory_iterator(options_.data_dir)) {
        const auto name = entry.path().filename().string();
        const std::string suffix = ".qualnet.json";
        if (name.size() <= suffix.size() || name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0) {
            continue;
        }
        auto slot = std::make_shared<Slot>();
        slot->project = store::load(entry.path());
        projects_.emplace(slot->project.project_id, slot);
    }
    for (std::size_t i = 0; i < std::max<std::size_t>(1, options_.workers); ++i) {
        workers_.emplace_back([this] { worker_loop(); });
    }
}

Workspace::~Workspace() {
    {
        std::lock_guard lock(jobs_mutex_);
        stopping_ = true;
    }
    jobs_cv_.notify_all();
    for (auto& t : workers_) t.join();
}

std::filesystem::path Workspace::file_for(const std::string& project_id) const {
    return options_.data_dir / (project_id + ".qualnet.json");
}

void Workspace::persist(const Project& project) const {
    store::save(project, file_for(project.project_id));
}

std::shared_ptr<Workspace::Slot> Workspace::slot(const std::string& project_id) {
    std::lock_guard lock(projects_mutex_);
    auto it = projects_.find(project_id);
    if (it == projects_.end()) not_found("project '" + project_id + "'");
    return it->second;
}

Project Workspace::snapshot(const std::string& project_id) {
    auto s = slot(project_id);
    std::lock_guard lock(s->mutex);
    return s->project;
}

template <class Fn>
json Workspace::mutate(const std::string& project_id, std::optional<std::uint64_t> expected, Fn&& fn) {
    auto s = slot(project_id);
    std::lock_guard lock(s->mutex);
    if (expected && *expected != s->project.revision) {
        throw ApiException({ApiCode::Conflict,
                            "stale expected_revision " + std::to_string(*expected),
                            {{"current_revision", s->project.revision}}});
    }
    Project working = s->project;
    json result = fn(working);
    network::refresh_concept_edges(working);
    ++working.revision;
    persist(working);
    s->project = std::move(working);
    if (!result.is_object()) result = json::object();
    result["revision"] = s->project.revision;
    return result;
}

Response Workspace::handle(const Request& request) {
    try {
        return route(request);
    } catch (const std::exception& e) {
        return error_reply(to_api_error(e));
    }
}

JobStatus Workspace::wait_for_job(const std::string& job_id) {
    std::unique_lock lock(jobs_mutex_);
    auto it = jobs_.find(job_id);
    if (it == jobs_.end()) throw Error(ErrorKind::NotFound, "job '" + job_id + "' not found");
    jobs_cv_.wait(lock, [&] {
        const auto state = jobs_.at(job_id).status.state;
        return state == JobState::Done || state == JobState::Failed;
    });
    return jobs_.at(job_id).status;
}

void Workspace::worker_loop() {
    while (true) {
        std::string job_id;
        {
            std::unique_lock lock(jobs_mutex_);
            jobs_cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
            if (stopping_ && queue_.empty()) return;
            job_id = queue_.front();
            queue_.pop_front();
            jobs_.at(job_id).status.state = JobState::Running;
        }
        run_job(job_id);
        jobs_cv_.notify_all();
    }
}

void Workspace::run_job(const std::string& job_id) {
    std::string project_id;
    pipeline::PipelineConfig config = options_.pipeline;
    {
        std::lock_guard lock(jobs_mutex_);
        const auto& job = jobs_.at(job_id);
        project_id = job.status.project_id;
        config.stages = job.stages;
    }
    try {
        auto s = slot(project_id);
        Project working;
        {
            std::lock_guard lock(s->mutex);
            working = s->project;
        }
        auto observer = [&](const Project& state, const pipeline::StageReport& stage) {
            {
                std::lock_guard lock(s->mutex);
                if (s->project.revision + 1 != state.revision) {
                    throw ApiException({ApiCode::Conflict,
                                        "project changed while the " + pipeline::to_string(stage.stage) +
                                            " stage was running",
                                        {{"current_revision", s->project.revision}}});
                }
                persist(state);
                s->project = state;
            }
            std::lock_guard lock(jobs_mutex_);
            auto& status = jobs_.at(job_id).status;
            status.stage = stage.stage;
            ++status.completed_stages;
        };
        auto report = pipeline::run_pipeline(
            working, config, {*options_.providers.chat, *options_.providers.embed}, observer);
        std::lock_guard lock(jobs_mutex_);
        auto& status = jobs_.at(job_id).status;
        status.report = std::move(report);
        status.state = JobState::Done;
    } catch (const std::exception& e) {
        std::lock_guard lock(jobs_mutex_);
        auto& status = jobs_.at(job_id).status;
        status.error = to_api_error(e);
        status.state = JobState::Failed;
    }
}

Response Workspace::route(const Request& request) {
    const auto parts = split_path(request.path);
    const auto& m = request.method;
    const auto n = parts.size();

    if (n >= 1 && parts[0] == "jobs") {
        if (n == 2 && m == "GET") {
            std::lock_guard lock(jobs_mutex_);
            auto it = jobs_.find(parts[1]);
            if (it == jobs_.end()) not_found("job '" + parts[1] + "'");
            return reply(it->second.status.to_json());
        }
        not_found("route");
    }
    if (n == 0 || parts[0] != "projects") not_found("route");

    if (n == 1) {
        if (m == "GET") {
            json list = json::array();
            std::vector<std::shared_ptr<Slot>> slots;
            {
                std::lock_guard lock(projects_mutex_);
                for (const auto& [id, s] : projects_) slots.push_back(s);
            }
            for (const auto& s : slots) {
                std::lock_guard lock(s->mutex);
                list.push_back({{"project_id", s->project.project_id}, {"revision", s->project.revision}});
            }
            return reply({{"projects", list}});
        }
        if (m == "POST") {
            const auto body = parse_body(request);
            Project project;
            std::lock_guard lock(projects_mutex_);
            if (body.contains("project_id")) {
                project.project_id = string_field(body, "project_id");
                if (!std::regex_match(project.project_id, project_id_pattern())) {
                    invalid("project_id may only contain letters, digits, '_' and '-'");
                }
                if (projects_.count(project.project_id)) {
                    throw ApiException({ApiCode::Conflict,
                                        "project '" + project.project_id + "' already exists", nullptr});
                }
            } else {
                do {
                    project.project_id = "p" + std::to_string(next_project_++);
                } while (projects_.count(project.project_id));
            }
            if (body.contains("overview")) project.overview = ResearchOverview{string_field(body, "overview")};
            if (body.contains("concepts")) {
                if (!body.at("concepts").is_array()) invalid("'concepts' must be an array");
                for (const auto& cj : body.at("concepts")) {
                    Concept c;
                    c.concept_id = project.next_concept_id();
                    c.color = "#808080";
                    apply_concept_fields(project, c, cj);
                    if (c.name.empty()) invalid("concept name must not be empty");
                    project.concepts.push_back(std::move(c));
                }
            }
            persist(project);
            auto s = std::make_shared<Slot>();
            s->project = project;
            projects_.emplace(project.project_id, s);
            return reply(store::to_json(project), 201);
        }
        not_found("route");
    }

    const std::string& pid = parts[1];
    if (n == 2) {
        if (m == "GET") return reply(store::to_json(snapshot(pid)));
        if (m == "DELETE") {
            std::lock_guard lock(projects_mutex_);
            auto it = projects_.find(pid);
            if (it == projects_.end()) not_found("project '" + pid + "'");
            std::lock_guard slot_lock(it->second->mutex);
            std::error_code ec;
            std::filesystem::remove(file_for(pid), ec);
            projects_.erase(it);
            return reply({{"deleted", pid}});
        }
        not_found("route");
    }

    const std::string& resource = parts[2];
    const json body = (m == "GET") ? json::object() : parse_body(request);
    const auto expected = expected_revision(request, body);

    if (resource == "overview" && n == 3 && m == "PUT") {
        auto text = body.is_object() && body.contains("text") ? string_field(body, "text") : request.body;
        return reply(mutate(pid, expected, [&](Project& p) {
            p.overview = ResearchOverview{text};
            return json::object();
        }));
    }

    if (resource == "corpus" && n == 3 && m == "POST") {
        std::string text = request.body;
        if (request.content_type.find("json") != std::string::npos || (body.is_object() && body.contains("text"))) {
            text = string_field(body, "text");
        }
        return reply(mutate(pid, expected, [&](Project& p) {
            const auto units = ingest::ingest_corpus(p, text);
            return json{{"units_added", units}, {"sentences", p.sentences.size()}};
        }));
    }

    if (resource == "run" && n == 3 && m == "POST") {
        std::set<pipeline::Stage> stages = options_.pipeline.stages;
        if (auto it = request.query.find("stages"); it != request.query.end()) {
            stages = pipeline::parse_stages(it->second);
        } else if (body.contains("stages")) {
            stages = pipeline::parse_stages(string_field(body, "stages"));
        }
        {
            auto s = slot(pid);
            std::lock_guard lock(s->mutex);
            if (expected && *expected != s->project.revision) {
                throw ApiException({ApiCode::Conflict, "stale expected_revision " + std::to_string(*expected),
                                    {{"current_revision", s->project.revision}}});
            }
        }
        std::string job_id;
        {
            std::lock_guard lock(jobs_mutex_);
            job_id = "j" + std::to_string(next_job_++);
            Job job;
            job.status.job_id = job_id;
            job.status.project_id = pid;
            job.status.total_stages = stages.size();
            job.stages = stages;
            jobs_.emplace(job_id, std::move(job));
            queue_.push_back(job_id);
        }
        jobs_cv_.notify_all();
        return reply({{"job_id", job_id}, {"status", "pending"}}, 202);
    }

    if (resource == "indicators") {
        if (n == 3 && m == "GET") {
            const auto p = snapshot(pid);
            json list = json::array();
            for (const auto& ind : p.indicators) list.push_back(indicator_json(p, ind));
            return reply({{"indicators", list}, {"revision", p.revision}});
        }
        if (n != 4) not_found("route");
        const IndicatorId iid{parse_uint(parts[3], "indicator id")};
        if (m == "GET") {
            const auto p = snapshot(pid);
            const auto* ind = p.find_indicator(iid);
            if (!ind) not_found("indicator " + parts[3]);
            auto out = indicator_json(p, *ind);
            out["revision"] = p.revision;
            return reply(out);
        }
        if (m == "PATCH") {
            return reply(mutate(pid, expected, [&](Project& p) {
                auto* ind = p.find_indicator(iid);
                if (!ind) not_found("indicator " + parts[3]);
                if (!ind->live()) invalid("indicator " + parts[3] + " is deleted");
                const auto* sentence = p.find_sentence(ind->sentence_id);
                if (body.contains("span")) {
                    const auto& sj = body.at("span");
                    if (!sj.is_object() || !sj.contains("start") || !sj.contains("end")) {
                        invalid("'span' must be {start, end}");
                    }
                    const auto start = sj.at("start").get<std::size_t>();
                    const auto end = sj.at("end").get<std::size_t>();
                    if (!sentence || start >= end || end > sentence->text.size()) {
                        invalid("span lies outside the sentence");
                    }
                    const auto text = trim(sentence->text.substr(start, end - start));
                    if (text.empty()) invalid("span selects only whitespace");
                    ind->text = sentence->text.substr(start, end - start);
                    ind->span = Span{start, end};
                    ind->status = IndicatorStatus::Edited;
                } else if (body.contains("text")) {
                    const auto text = trim(string_field(body, "text"));
                    if (text.empty()) invalid("indicator text must not be empty");
                    ind->text = text;
                    ind->span.reset();
                    if (sentence) {
                        if (auto pos = find_case_insensitive(sentence->text, text)) {
                            ind->span = Span{*pos, *pos + text.size()};
                        }
                    }
                    ind->status = IndicatorStatus::Edited;
                }
                if (body.contains("concept_id") || body.contains("concept_name")) {
                    std::optional<ConceptId> target;
                    if (body.contains("concept_name")) {
                        const auto* c = p.find_concept_by_name(string_field(body, "concept_name"));
                        if (!c) not_found("concept '" + body.at("concept_name").get<std::string>() + "'");
                        target = c->concept_id;
                    } else if (!body.at("concept_id").is_null()) {
                        target = ConceptId{body.at("concept_id").get<std::uint64_t>()};
                        if (!p.find_concept(*target)) not_found("concept " + std::to_string(target->value));
                    }
                    ind->concept_id = target;
                    if (target) add_reference(*p.find_concept(*target), ind->text);
                    if (ind->status == IndicatorStatus::Auto) ind->status = IndicatorStatus::Edited;
                }
                if (body.contains("memo")) {
                    if (body.at("memo").is_null()) ind->memo.reset();
                    else ind->memo = string_field(body, "memo");
                }
                return indicator_json(p, *ind);
            }));
        }
        if (m == "DELETE") {
            return reply(mutate(pid, expected, [&](Project& p) {
                auto* ind = p.find_indicator(iid);
                if (!ind) not_found("indicator " + parts[3]);
                if (!ind->live()) return json{{"deleted", iid.value}, {"edges_deleted", 0}};
                ind->status = IndicatorStatus::Deleted;
                const auto edges = cascade_edges(p, iid);
                return json{{"deleted", iid.value}, {"edges_deleted", edges}};
            }));
        }
        not_found("route");
    }

    if (resource == "concepts") {
        if (n == 3 && m == "GET") {
            const auto p = snapshot(pid);
            json list = json::array();
            for (const auto& c : p.concepts) list.push_back(concept_json(c));
            return reply({{"concepts", list}, {"revision", p.revision}});
        }
        if (n == 3 && m == "POST") {
            json out = mutate(pid, expected, [&](Project& p) {
                Concept c;
                c.concept_id = p.next_concept_id();
                c.color = "#808080";
                if (!body.contains("name")) invalid("concept needs a name");
                apply_concept_fields(p, c, body);
                p.concepts.push_back(c);
                return concept_json(c);
            });
            return reply(out, 201);
        }
        if (n != 4) not_found("route");
        const ConceptId cid{parse_uint(parts[3], "concept id")};
        if (m == "PATCH") {
            return reply(mutate(pid, expected, [&](Project& p) {
                auto* c = p.find_concept(cid);
                if (!c) not_found("concept " + parts[3]);
                apply_concept_fields(p, *c, body);
                return concept_json(*c);
            }));
        }
        if (m == "DELETE") {
            return reply(mutate(pid, expected, [&](Project& p) {
                auto it = std::find_if(p.concepts.begin(), p.concepts.end(),
                                       [&](const Concept& c) { return c.concept_id == cid; });
                if (it == p.concepts.end()) not_found("concept " + parts[3]);
                p.concepts.erase(it);
                std::size_t unmapped = 0;
                for (auto& ind : p.indicators) {
                    if (ind.concept_id == cid) {
                        ind.concept_id.reset();
                        ++unmapped;
                    }
                }
                return json{{"deleted", cid.value}, {"indicators_unmapped", unmapped}};
            }));
        }
        not_found("route");
    }

    if (resource == "edges") {
        if (n == 3 && m == "POST") {
            json out = mutate(pid, expected, [&](Project& p) {
                const IndicatorId cause{body.value("cause", std::uint64_t{0})};
                const IndicatorId effect{body.value("effect", std::uint64_t{0})};
                const auto* c = p.find_indicator(cause);
                const auto* f = p.find_indicator(effect);
                if (!c || !c->live()) not_found("cause indicator");
                if (!f || !f->live()) not_found("effect indicator");
                if (cause == effect) invalid("an edge needs two distinct indicators");
                CausalEdge e;
                e.edge_id = p.next_edge_id();
                e.cause = cause;
                e.effect = effect;
                e.sentence_id = c->sentence_id;
                e.origin = EdgeOrigin::Manual;
                p.causal_edges.push_back(e);
                if (auto problems = validate_project(p); !problems.empty()) invalid(problems.front());
                return json{{"edge_id", e.edge_id.value}};
            });
            return reply(out, 201);
        }
        if (n == 4 && m == "DELETE") {
            const EdgeId eid{parse_uint(parts[3], "edge id")};
            return reply(mutate(pid, expected, [&](Project& p) {
                auto* e = p.find_edge(eid);
                if (!e) not_found("edge " + parts[3]);
                e->status = EdgeStatus::Deleted;
                return json{{"deleted", eid.value}};
            }));
        }
        not_found("route");
    }

    if (resource == "baseline" && n == 3 && m == "POST") {
        const auto method_name = request.query.count("method") ? request.query.at("method") : "cue";
        const auto mode_name = request.query.count("mode") ? request.query.at("mode") : "consecutive";
        baseline::Method method;
        if (method_name == "cue") method = baseline::Method::Cue;
        else if (method_name == "cooccurrence") method = baseline::Method::Cooccurrence;
        else invalid("method must be cue or cooccurrence");
        baseline::CooccurrenceMode mode;
        if (mode_name == "consecutive") mode = baseline::CooccurrenceMode::Consecutive;
        else if (mode_name == "all_ordered") mode = baseline::CooccurrenceMode::AllOrdered;
        else invalid("mode must be consecutive or all_ordered");
        return reply(mutate(pid, expected, [&](Project& p) {
            return json{{"edges_added", baseline::apply_to_project(p, method, mode, options_.cue_rules)}};
        }));
    }

    if (resource == "rebuild" && n == 3 && m == "POST") {
        return reply(mutate(pid, expected, [&](Project& p) {
            return json{{"concept_edges", p.concept_edges.size()}};
        }));
    }

    if (resource == "network" && m == "GET") {
        const auto p = snapshot(pid);
        if (n == 3) {
            const auto view = request.query.count("view") ? request.query.at("view") : "indicator";
            const auto graph = filtered_graph(p, request);
            json out;
            if (view == "indicator") out = network::indicator_view_json(graph);
            else if (view == "concept") out = network::concept_view_json(network::consolidate(graph, p.concepts));
            else invalid("view must be indicator or concept");
            out["revision"] = p.revision;
            return reply(out);
        }
        if (n == 4 && parts[3] == "component") {
            network::Selection selection;
            if (request.query.count("node")) selection = IndicatorId{parse_uint(request.query.at("node"), "node")};
            else if (request.query.count("edge")) selection = EdgeId{parse_uint(request.query.at("edge"), "edge")};
            else invalid("component needs node= or edge=");
            const auto component = network::component_of(network::build_indicator_graph(p), selection);
            auto out = network::network_json(component, network::consolidate(component, p.concepts));
            out["revision"] = p.revision;
            return reply(out);
        }
        not_found("route");
    }

    if (resource == "search" && n == 3 && m == "GET") {
        auto s = slot(pid);
        Project p;
        {
            std::lock_guard lock(s->mutex);
            p = s->project;
        }
        const auto q = request.query.count("q") ? request.query.at("q") : std::string{};
        if (trim(q).empty()) invalid("q must not be empty");
        const std::size_t k = request.query.count("k") ? parse_uint(request.query.at("k"), "k") : 10;
        const auto graph = network::build_indicator_graph(p);
        const auto hits = network::semantic_search(q, graph, *options_.providers.embed, k, s->cache);
        json list = json::array();
        for (const auto& h : hits) {
            list.push_back({{"indicator_id", h.id.value}, {"text", graph.find(h.id)->text}, {"similarity", h.similarity}});
        }
        return reply({{"hits", list}, {"revision", p.revision}});
    }

    if (resource == "evaluate" && n == 3 && m == "POST") {
        const auto p = snapshot(pid);
        const json& gold_json = body.contains("gold") ? body.at("gold") : body;
        const auto gold = metrics::GoldFile::from_json(gold_json);
        const auto match = request.query.count("match") ? request.query.at("match") : std::string("exact");
        metrics::MatchPolicy policy;
        if (match == "exact") {
            policy = metrics::MatchPolicy::exact();
        } else if (match.rfind("embed", 0) == 0) {
            double threshold = 0.90;
            if (match.size() > 6 && match[5] == ':') threshold = std::strtod(match.c_str() + 6, nullptr);
            policy = metrics::MatchPolicy::embedding(*options_.providers.embed, threshold);
        } else if (match == "adjudicated") {
            metrics::Adjudication table;
            for (const auto& a : body.value("adjudication", json::array())) {
                table[{a.at("predicted").get<std::string>(), a.at("gold").get<std::string>()}] =
                    a.at("match").get<bool>();
            }
            policy = metrics::MatchPolicy::adjudicated(std::move(table));
        } else {
            invalid("match must be exact, embed[:t], or adjudicated");
        }
        auto out = metrics::evaluate_project(p, gold, policy).to_json();
        out["revision"] = p.revision;
        return reply(out);
    }

    if (resource == "export" && n == 3 && m == "GET") {
        const auto p = snapshot(pid);
        const auto format = request.query.count("format") ? request.query.at("format") : "json";
        if (format == "json") return Response{200, store::serialize({p, std::nullopt}), "application/json"};
        if (format == "csv") return Response{200, store::indicators_csv(p), "text/csv"};
        invalid("format must be json or csv");
    }

    not_found("route");
}

}  // namespace qualnet::service
