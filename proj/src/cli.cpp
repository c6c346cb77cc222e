#include "qualnet/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "qualnet/baseline.hpp"
#include "qualnet/config.hpp"
#include "qualnet/error.hpp"
#include "qualnet/http_server.hpp"
#include "qualnet/ingest.hpp"
#include "qualnet/metrics.hpp"
#include "qualnet/network.hpp"
#include "qualnet/pipeline.hpp"
#include "qualnet/semeval.hpp"
#include "qualnet/service.hpp"
#include "qualnet/store.hpp"

namespace qualnet::cli {

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot read " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
    out << text;
}

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::ProviderUnavailable:
        case ErrorKind::ProviderRejected:
        case ErrorKind::MalformedProviderOutput:
        case ErrorKind::InvalidLabel:
            return kProvider;
        case ErrorKind::IoError:
            return kIo;
        default:
            return kValidation;
    }
}

baseline::Method parse_method(const std::string& s) {
    if (s == "cooccurrence") return baseline::Method::Cooccurrence;
    if (s == "cue") return baseline::Method::Cue;
    throw Error(ErrorKind::InvalidInput, "method must be cooccurrence or cue");
}

baseline::CooccurrenceMode parse_mode(const std::string& s) {
    if (s == "consecutive") return baseline::CooccurrenceMode::Consecutive;
    if (s == "all_ordered") return baseline::CooccurrenceMode::AllOrdered;
    throw Error(ErrorKind::InvalidInput, "mode must be consecutive or all_ordered");
}

std::vector<Concept> read_concepts(const std::string& path) {
    auto j = json::parse(read_file(path), nullptr, false);
    if (j.is_discarded() || !j.is_array()) {
        throw Error(ErrorKind::InvalidInput, "concept file must be a JSON array");
    }
    std::vector<Concept> out;
    std::uint64_t next = 1;
    for (const auto& c : j) {
        Concept concept_entry;
        concept_entry.concept_id = ConceptId{next++};
        concept_entry.name = c.at("name").get<std::string>();
        concept_entry.definition = c.value("definition", std::string{});
        concept_entry.color = c.value("color", std::string("#808080"));
        for (const auto& r : c.value("references", std::vector<std::string>{})) {
            add_reference(concept_entry, r);
        }
        out.push_back(std::move(concept_entry));
    }
    return out;
}

bool looks_like_project_file(const std::string& text) {
    auto j = json::parse(text, nullptr, false);
    return !j.is_discarded() && j.is_object() && j.contains("format_version");
}

std::string semeval_table(const std::vector<std::pair<std::string, semeval::Evaluation>>& rows) {
    std::ostringstream os;
    os << std::left << std::setw(28) << "Method" << std::right << std::setw(9) << "Records"
       << std::setw(10) << "Prec" << std::setw(10) << "Rec" << std::setw(10) << "DirAcc"
       << std::setw(13) << "Prec/DirAcc" << '\n';
    for (const auto& [name, e] : rows) {
        const auto& r = e.report;
        os << std::left << std::setw(28) << name << std::right << std::setw(9) << e.records
           << std::setw(10) << (r.precision_undefined ? "-" : metrics::format_percent(r.precision))
           << std::setw(10) << (r.recall_undefined ? "-" : metrics::format_percent(r.recall))
           << std::setw(10) << (r.direction_accuracy ? metrics::format_percent(*r.direction_accuracy) : "-")
           << std::setw(13) << metrics::format_percent(e.directed_precision) << '\n';
    }
    return os.str();
}

metrics::MatchPolicy parse_match(const std::string& spec, provider::EmbeddingProvider& embedder) {
    if (spec == "exact") return metrics::MatchPolicy::exact();
    if (spec == "embed") return metrics::MatchPolicy::embedding(embedder);
    if (spec.rfind("embed:", 0) == 0) {
        char* end = nullptr;
        const double t = std::strtod(spec.c_str() + 6, &end);
        if (*end != '\0') throw Error(ErrorKind::InvalidInput, "embed threshold must be a number");
        return metrics::MatchPolicy::embedding(embedder, t);
    }
    if (spec.rfind("adjudicated:", 0) == 0) {
        return metrics::MatchPolicy::adjudicated(metrics::load_adjudication(spec.substr(12)));
    }
    throw Error(ErrorKind::InvalidInput, "match must be exact, embed:<t>, or adjudicated:<file>");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Causal network construction from qualitative text"};
    app.require_subcommand(1);
    bool json_output = false;
    app.add_flag("--json", json_output, "JSON output and machine-readable errors");

    // ingest
    auto* ingest_cmd = app.add_subcommand("ingest", "Split a corpus into a new project file");
    std::string corpus_path, output_path, overview_text, overview_file, concepts_file, project_id = "project",
                                                                                        abbreviations_file;
    ingest_cmd->add_option("corpus", corpus_path, "UTF-8 text, one response per line")->required();
    ingest_cmd->add_option("-o,--output", output_path, "project file to write")->required();
    ingest_cmd->add_option("--overview", overview_text, "research overview text");
    ingest_cmd->add_option("--overview-file", overview_file, "file holding the research overview");
    ingest_cmd->add_option("--concepts", concepts_file, "JSON array of {name, definition, color}");
    ingest_cmd->add_option("--project-id", project_id);
    ingest_cmd->add_option("--abbreviations", abbreviations_file, "one abbreviation per line");

    // run
    auto* run_cmd = app.add_subcommand("run", "Run pipeline stages on a project file");
    std::string project_path, stages = "extract,map,classify,merge", provider_spec = "mock", transcript_path,
                              prompts_dir, config_path;
    std::size_t parallelism = 4, neighbors = 10;
    run_cmd->add_option("project", project_path)->required();
    run_cmd->add_option("--stages", stages);
    run_cmd->add_option("--provider", provider_spec, "mock[:script] | replay:<transcript> | http");
    run_cmd->add_option("--transcript", transcript_path, "record provider traffic to this JSONL file");
    run_cmd->add_option("--prompts", prompts_dir, "directory of prompt template overrides");
    run_cmd->add_option("--parallelism", parallelism)->check(CLI::PositiveNumber);
    run_cmd->add_option("--neighbors", neighbors)->check(CLI::PositiveNumber);
    run_cmd->add_option("--config", config_path, "TOML file with [http] settings");
    run_cmd->add_option("-o,--output", output_path, "defaults to overwriting the input");

    // baseline
    auto* baseline_cmd = app.add_subcommand("baseline", "Add baseline edges to a project or score a SemEval file");
    std::string input_path, method = "cue", mode = "consecutive", cue_rules_path;
    baseline_cmd->add_option("input", input_path, "project file or SemEval TXT file")->required();
    baseline_cmd->add_option("--method", method)->check(CLI::IsMember({"cooccurrence", "cue"}));
    baseline_cmd->add_option("--mode", mode)->check(CLI::IsMember({"consecutive", "all_ordered"}));
    baseline_cmd->add_option("--cue-rules", cue_rules_path);
    baseline_cmd->add_option("-o,--output", output_path);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Score a project against a gold annotation file");
    std::string gold_path, match_spec = "exact";
    eval_cmd->add_option("project", project_path)->required();
    eval_cmd->add_option("--gold", gold_path)->required();
    eval_cmd->add_option("--match", match_spec, "exact | embed:<t> | adjudicated:<file>");
    eval_cmd->add_option("--provider", provider_spec, "embedding backend for embed matching");

    // semeval-eval
    auto* semeval_cmd = app.add_subcommand("semeval-eval", "Score baselines on SemEval-2010 Task 8 records");
    std::string semeval_path;
    semeval_cmd->add_option("file", semeval_path)->required();
    semeval_cmd->add_option("--method", method)->check(CLI::IsMember({"cooccurrence", "cue", "all"}));
    semeval_cmd->add_option("--mode", mode)->check(CLI::IsMember({"consecutive", "all_ordered"}));
    semeval_cmd->add_option("--cue-rules", cue_rules_path);

    // export
    auto* export_cmd = app.add_subcommand("export", "Write a project as JSON, indicator CSV, or network JSON");
    std::string format = "json";
    export_cmd->add_option("project", project_path)->required();
    export_cmd->add_option("--format", format)->check(CLI::IsMember({"json", "csv", "network"}));
    export_cmd->add_option("-o,--output", output_path);

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "Start the HTTP API");
    serve_cmd->add_option("--config", config_path)->required();

    std::vector<std::string> argv_storage{"qualnet"};
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_storage) argv.push_back(a.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        if (json_output) {
            err << json{{"error", {{"kind", "Usage"}, {"message", e.what()}}}}.dump() << '\n';
        } else {
            err << e.what() << '\n' << app.help();
        }
        return kUsage;
    }

    try {
        if (*ingest_cmd) {
            Project project;
            project.project_id = project_id;
            if (!overview_file.empty()) project.overview = ResearchOverview{read_file(overview_file)};
            else if (!overview_text.empty()) project.overview = ResearchOverview{overview_text};
            if (!concepts_file.empty()) project.concepts = read_concepts(concepts_file);
            if (!abbreviations_file.empty()) {
                project.settings.abbreviations = ingest::load_abbreviations(abbreviations_file);
            }
            const auto units = ingest::ingest_corpus(project, read_file(corpus_path));
            store::save(project, output_path);
            if (json_output) {
                out << json{{"units", units}, {"sentences", project.sentences.size()}}.dump() << '\n';
            } else {
                out << "ingested " << units << " units, " << project.sentences.size() << " sentences\n";
            }
            return kOk;
        }

        if (*run_cmd) {
            auto file = store::load_file(project_path);
            provider::HttpSettings http;
            if (!config_path.empty()) http = config::load(config_path).http;
            auto bundle = provider::make_providers(provider_spec, http);

            pipeline::PipelineConfig cfg;
            if (!prompts_dir.empty()) cfg.prompts = pipeline::PromptSet::load(prompts_dir);
            cfg.parallelism = parallelism;
            cfg.neighbors = neighbors;
            cfg.stages = pipeline::parse_stages(stages);

            std::unique_ptr<provider::TranscriptLog> log;
            std::unique_ptr<provider::RecordingChatProvider> recording_chat;
            std::unique_ptr<provider::RecordingEmbeddingProvider> recording_embed;
            provider::ChatProvider* chat = bundle.chat.get();
            provider::EmbeddingProvider* embed = bundle.embed.get();
            if (!transcript_path.empty()) {
                write_file(transcript_path, "");
                log = std::make_unique<provider::TranscriptLog>(
                    transcript_path, bundle.deterministic ? provider::fixed_clock() : provider::system_clock());
                recording_chat = std::make_unique<provider::RecordingChatProvider>(*chat, *log);
                recording_embed = std::make_unique<provider::RecordingEmbeddingProvider>(*embed, *log);
                chat = recording_chat.get();
                embed = recording_embed.get();
                file.provider_transcript_ref = transcript_path;
            }
            const std::string target = output_path.empty() ? project_path : output_path;
            // Completed stages are kept even if a later one fails.
            auto observer = [&](const Project& state, const pipeline::StageReport&) {
                store::save(store::ProjectFile{state, file.provider_transcript_ref}, target);
            };
            auto report = pipeline::run_pipeline(file.project, cfg, {*chat, *embed}, observer);
            if (!transcript_path.empty()) report.transcript = transcript_path;
            store::save(file, target);
            out << report.to_json(!bundle.deterministic).dump(2) << '\n';
            return kOk;
        }

        if (*baseline_cmd) {
            std::vector<baseline::CueRule> rules = baseline::default_cue_rules();
            if (!cue_rules_path.empty()) rules = baseline::load_cue_rules(cue_rules_path);
            const auto text = read_file(input_path);
            if (looks_like_project_file(text)) {
                auto file = store::load_file(input_path);
                const auto added = baseline::apply_to_project(file.project, parse_method(method), parse_mode(mode), rules);
                network::refresh_concept_edges(file.project);
                ++file.project.revision;
                store::save(file, output_path.empty() ? input_path : output_path);
                if (json_output) out << json{{"edges_added", added}}.dump() << '\n';
                else out << "added " << added << " " << method << " edges\n";
                return kOk;
            }
            const auto records = semeval::causal_records(ingest::parse_semeval(text));
            auto project = semeval::to_project(records);
            baseline::apply_to_project(project, parse_method(method), parse_mode(mode), rules);
            const auto evaluation = semeval::score(project, records);
            if (!output_path.empty()) store::save(project, output_path);
            if (json_output) out << evaluation.to_json().dump(2) << '\n';
            else out << semeval_table({{method, evaluation}});
            return kOk;
        }

        if (*eval_cmd) {
            const auto project = store::load(project_path);
            const auto gold = metrics::GoldFile::load(gold_path);
            auto bundle = provider::make_providers(provider_spec);
            const auto policy = parse_match(match_spec, *bundle.embed);
            const auto result = metrics::evaluate_project(project, gold, policy);
            if (json_output) {
                out << result.to_json().dump(2) << '\n';
            } else {
                out << metrics::format_table(
                    {{"Indicators", result.indicators}, {"Edges", result.edges}, {"Concepts", result.concepts}});
                out << "Concept accuracy: "
                    << (result.concept_accuracy ? metrics::format_percent(*result.concept_accuracy) : "-") << '\n';
            }
            return kOk;
        }

        if (*semeval_cmd) {
            std::vector<baseline::CueRule> rules = baseline::default_cue_rules();
            if (!cue_rules_path.empty()) rules = baseline::load_cue_rules(cue_rules_path);
            const auto records = semeval::causal_records(ingest::parse_semeval(read_file(semeval_path)));
            std::vector<std::pair<std::string, semeval::Evaluation>> rows;
            const auto m = parse_mode(mode);
            if (method == "cooccurrence" || method == "all") {
                rows.emplace_back("Co-occurrence (" + mode + ")",
                                  semeval::evaluate(records, baseline::Method::Cooccurrence, m, rules));
            }
            if (method == "cue" || method == "all") {
                rows.emplace_back("Causal cues", semeval::evaluate(records, baseline::Method::Cue, m, rules));
            }
            if (json_output) {
                json j = json::object();
                for (const auto& [name, e] : rows) j[name] = e.to_json();
                out << j.dump(2) << '\n';
            } else {
                out << semeval_table(rows);
            }
            return kOk;
        }

        if (*export_cmd) {
            const auto file = store::load_file(project_path);
            std::string text;
            if (format == "json") {
                text = store::serialize(file);
            } else if (format == "csv") {
                text = store::indicators_csv(file.project);
            } else {
                const auto graph = network::build_indicator_graph(file.project);
                text = network::network_json(graph, network::consolidate(graph, file.project.concepts)).dump(2) + "\n";
            }
            if (output_path.empty()) out << text;
            else write_file(output_path, text);
            return kOk;
        }

        if (*serve_cmd) {
            const auto cfg = config::load(config_path);
            service::WorkspaceOptions options;
            options.data_dir = cfg.data_dir;
            options.providers = provider::make_providers(cfg.provider, cfg.http);
            options.pipeline.parallelism = cfg.parallelism;
            if (cfg.prompts_dir) options.pipeline.prompts = pipeline::PromptSet::load(*cfg.prompts_dir);
            if (cfg.cue_rules) options.cue_rules = baseline::load_cue_rules(*cfg.cue_rules);
            options.workers = cfg.workers;
            service::Workspace workspace(std::move(options));
            service::HttpServer server(workspace);
            const int port = server.bind(cfg.bind, cfg.port);
            err << "listening on " << cfg.bind << ":" << port << std::endl;
            server.listen();
            return kOk;
        }
    } catch (const Error& e) {
        if (json_output) {
            err << json{{"error", {{"kind", to_string(e.kind())}, {"message", e.what()}}}}.dump() << '\n';
        } else {
            err << "error: " << e.what() << '\n';
        }
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        if (json_output) {
            err << json{{"error", {{"kind", "Internal"}, {"message", e.what()}}}}.dump() << '\n';
        } else {
            err << "error: " << e.what() << '\n';
        }
        return kValidation;
    }
    return kUsage;
}

}  // namespace qualnet::cli
