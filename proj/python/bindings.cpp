#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "qualnet/cli.hpp"
#include "qualnet/error.hpp"
#include "qualnet/ingest.hpp"
#include "qualnet/metrics.hpp"
#include "qualnet/network.hpp"
#include "qualnet/pipeline.hpp"
#include "qualnet/provider.hpp"
#include "qualnet/semeval.hpp"
#include "qualnet/store.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace qualnet;

// JSON travels as text; the Python package decodes it.
namespace {

Project parse_project(const std::string& text) {
    return store::project_from_json(json::parse(text));
}

std::string ingest_project(const std::string& corpus, const std::string& project_id,
                   const std::optional<std::string>& overview, const std::string& concepts_json) {
    Project p;
    p.project_id = project_id;
    if (overview) p.overview = ResearchOverview{*overview};
    for (const auto& c : json::parse(concepts_json)) {
        Concept con;
        con.concept_id = p.next_concept_id();
        con.name = c.at("name").get<std::string>();
        con.definition = c.value("definition", std::string{});
        con.color = c.value("color", std::string("#808080"));
        p.concepts.push_back(std::move(con));
    }
    ingest::ingest_corpus(p, corpus);
    return store::to_json(p).dump();
}

py::tuple run(const std::string& project_json, const std::string& provider_spec, const std::string& stages) {
    auto p = parse_project(project_json);
    auto bundle = provider::make_providers(provider_spec);
    pipeline::PipelineConfig cfg;
    cfg.stages = pipeline::parse_stages(stages);
    pipeline::RunReport report;
    {
        py::gil_scoped_release release;
        report = pipeline::run_pipeline(p, cfg, {*bundle.chat, *bundle.embed});
    }
    return py::make_tuple(store::to_json(p).dump(), report.to_json(false).dump());
}

std::string network_view(const std::string& project_json) {
    const auto p = parse_project(project_json);
    const auto graph = network::build_indicator_graph(p);
    return network::network_json(graph, network::consolidate(graph, p.concepts)).dump();
}

std::string evaluate(const std::string& project_json, const std::string& gold_json) {
    const auto p = parse_project(project_json);
    const auto gold = metrics::GoldFile::from_json(json::parse(gold_json));
    return metrics::evaluate_project(p, gold, metrics::MatchPolicy::exact()).to_json().dump();
}

std::string semeval_eval(const std::string& text, const std::string& method) {
    const auto records = semeval::causal_records(ingest::parse_semeval(text));
    const auto m = method == "cue" ? baseline::Method::Cue : baseline::Method::Cooccurrence;
    return semeval::evaluate(records, m).to_json().dump();
}

double kappa(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    return metrics::kappa(a, b).value;
}

py::tuple run_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    static py::exception<Error> error_type(m, "QualnetError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::set_error(error_type, (std::string(to_string(e.kind())) + ": " + e.what()).c_str());
        }
    });

    m.def("ingest", &ingest_project, py::arg("corpus"), py::arg("project_id") = "py",
          py::arg("overview") = std::nullopt, py::arg("concepts_json") = "[]");
    m.def("run", &run, py::arg("project_json"), py::arg("provider") = "mock",
          py::arg("stages") = "extract,map,classify,merge");
    m.def("network", &network_view);
    m.def("evaluate", &evaluate);
    m.def("semeval_eval", &semeval_eval, py::arg("text"), py::arg("method") = "cooccurrence");
    m.def("kappa", &kappa);
    m.def("cli", &run_cli);
}
