#include <gtest/gtest.h>

#include <thread>

#include <httplib.h>

#include "qualnet/http_server.hpp"
#include "qualnet/service.hpp"
#include "qualnet/store.hpp"
#include "support/fixtures.hpp"

using namespace qualnet;
namespace qt = qualnet::testing;
using namespace qualnet::service;
using nlohmann::json;

namespace {

WorkspaceOptions options_for(const std::filesystem::path& dir) {
    WorkspaceOptions o;
    o.data_dir = dir;
    o.providers = provider::make_providers("mock:" + qt::fixture("mock_script.json").string());
    o.workers = 1;
    return o;
}

Request req(std::string method, std::string path, json body = nullptr,
            std::map<std::string, std::string> query = {}) {
    Request r;
    r.method = std::move(method);
    r.path = std::move(path);
    r.query = std::move(query);
    if (!body.is_null()) {
        r.body = body.dump();
        r.content_type = "application/json";
    }
    return r;
}

json concepts_body() {
    return json::parse(qt::read_text(qt::fixture("concepts.json")));
}

// Creates project "s", loads the fixture corpus and runs all stages.
void seed(Workspace& ws) {
    auto r = ws.handle(req("POST", "/projects",
                           {{"project_id", "s"},
                            {"overview", qt::read_text(qt::fixture("overview.txt"))},
                            {"concepts", concepts_body()}}));
    ASSERT_EQ(r.status, 201) << r.body;
    r = ws.handle(req("POST", "/projects/s/corpus", {{"text", qt::read_text(qt::fixture("corpus.txt"))}}));
    ASSERT_EQ(r.status, 200) << r.body;
    EXPECT_EQ(r.json()["units_added"], 6);
    r = ws.handle(req("POST", "/projects/s/run"));
    ASSERT_EQ(r.status, 202) << r.body;
    const auto job = ws.wait_for_job(r.json()["job_id"].get<std::string>());
    ASSERT_EQ(job.state, JobState::Done) << (job.error ? job.error->message : "");
    EXPECT_EQ(job.completed_stages, 4u);
}

}  // namespace

TEST(Service, RunJobAndReadOnlyGets) {
    qt::TempDir dir;
    Workspace ws(options_for(dir.path()));
    seed(ws);

    const auto project = ws.handle(req("GET", "/projects/s")).json();
    const auto revision = project["revision"].get<std::uint64_t>();
    EXPECT_EQ(revision, 5u);  // corpus plus four stages

    const auto indicators = ws.handle(req("GET", "/projects/s/indicators")).json();
    EXPECT_EQ(indicators["indicators"].size(), 14u);
    EXPECT_EQ(indicators["revision"], revision);
    ws.handle(req("GET", "/projects/s/network", nullptr, {{"view", "concept"}}));
    ws.handle(req("GET", "/projects/s/search", nullptr, {{"q", "feel sorry"}}));
    EXPECT_EQ(ws.handle(req("GET", "/projects/s")).json()["revision"], revision);

    const auto job = ws.handle(req("GET", "/jobs/j1")).json();
    EXPECT_EQ(job["status"], "done");
    EXPECT_EQ(job["progress"]["completed_stages"], 4);
    EXPECT_EQ(job["stage"], "merge");
}

TEST(Service, EditsBumpRevisionAndStaleWritesConflict) {
    qt::TempDir dir;
    Workspace ws(options_for(dir.path()));
    seed(ws);
    const auto rev = ws.handle(req("GET", "/projects/s")).json()["revision"].get<std::uint64_t>();

    auto r = ws.handle(req("PATCH", "/projects/s/indicators/1", {{"memo", "check"}, {"expected_revision", rev}}));
    ASSERT_EQ(r.status, 200) << r.body;
    EXPECT_EQ(r.json()["memo"], "check");
    EXPECT_EQ(r.json()["revision"], rev + 1);

    r = ws.handle(req("PATCH", "/projects/s/indicators/1", {{"memo", "late"}, {"expected_revision", rev}}));
    EXPECT_EQ(r.status, 409);
    EXPECT_EQ(r.json()["code"], "conflict");
    EXPECT_EQ(r.json()["detail"]["current_revision"], rev + 1);

    r = ws.handle(req("PATCH", "/projects/s/indicators/1", {{"span", {{"start", 0}, {"end", 500}}}}));
    EXPECT_EQ(r.status, 400);

    r = ws.handle(req("PATCH", "/projects/s/indicators/2", {{"text", "sorry for Avery"}}));
    ASSERT_EQ(r.status, 200) << r.body;
    EXPECT_EQ(r.json()["status"], "edited");
    EXPECT_FALSE(r.json()["span"].is_null());
}

TEST(Service, IndicatorDeleteCascadesToEdges) {
    qt::TempDir dir;
    Workspace ws(options_for(dir.path()));
    seed(ws);
    const auto p = store::project_from_json(ws.handle(req("GET", "/projects/s")).json());
    const auto& edge = *std::find_if(p.causal_edges.begin(), p.causal_edges.end(),
                                     [](const CausalEdge& e) { return e.active(); });
    const auto r = ws.handle(req("DELETE", "/projects/s/indicators/" + std::to_string(edge.cause.value)));
    ASSERT_EQ(r.status, 200) << r.body;
    EXPECT_GE(r.json()["edges_deleted"].get<int>(), 1);
    const auto after = store::project_from_json(ws.handle(req("GET", "/projects/s")).json());
    EXPECT_FALSE(after.find_edge(edge.edge_id)->active());
    EXPECT_TRUE(validate_project(after).empty());
}

TEST(Service, ConceptLifecycle) {
    qt::TempDir dir;
    Workspace ws(options_for(dir.path()));
    seed(ws);
    auto r = ws.handle(req("POST", "/projects/s/concepts", {{"name", "Relapse"}, {"color", "#00ff00"}}));
    ASSERT_EQ(r.status, 201) << r.body;
    const auto cid = r.json()["concept_id"].get<std::uint64_t>();
    EXPECT_EQ(cid, 6u);

    EXPECT_EQ(ws.handle(req("POST", "/projects/s/concepts", {{"name", "Relapse"}})).status, 409);
    EXPECT_EQ(ws.handle(req("POST", "/projects/s/concepts", {{"name", "X"}, {"color", "green"}})).status, 400);
    EXPECT_EQ(ws.handle(req("POST", "/projects/s/concepts", json::object())).status, 400);

    r = ws.handle(req("PATCH", "/projects/s/indicators/1", {{"concept_id", cid}}));
    ASSERT_EQ(r.status, 200) << r.body;
    EXPECT_EQ(r.json()["concept_name"], "Relapse");

    r = ws.handle(req("PATCH", "/projects/s/concepts/" + std::to_string(cid), {{"definition", "getting better"}}));
    EXPECT_EQ(r.json()["definition"], "getting better");

    r = ws.handle(req("DELETE", "/projects/s/concepts/" + std::to_string(cid)));
    ASSERT_EQ(r.status, 200) << r.body;
    EXPECT_EQ(r.json()["indicators_unmapped"], 1);
    EXPECT_TRUE(ws.handle(req("GET", "/projects/s/indicators/1")).json()["concept_id"].is_null());
}

TEST(Service, ManualEdges) {
    qt::TempDir dir;
    Workspace ws(options_for(dir.path()));
    seed(ws);
    auto r = ws.handle(req("POST", "/projects/s/edges", {{"cause", 1}, {"effect", 2}}));
    ASSERT_EQ(r.status, 201) << r.body;
    const auto eid = r.json()["edge_id"].get<std::uint64_t>();
    const auto p = store::project_from_json(ws.handle(req("GET", "/projects/s")).json());
    EXPECT_EQ(p.find_edge(EdgeId{eid})->origin, EdgeOrigin::Manual);

    EXPECT_EQ(ws.handle(req("POST", "/projects/s/edges", {{"cause", 1}, {"effect", 1}})).status, 400);
    EXPECT_EQ(ws.handle(req("POST", "/projects/s/edges", {{"cause", 1}, {"effect", 999}})).status, 404);
    EXPECT_EQ(ws.handle(req("DELETE", "/projects/s/edges/" + std::to_string(eid))).status, 200);
    EXPECT_EQ(ws.handle(req("DELETE", "/projects/s/edges/999")).status, 404);
}

TEST(Service, NotFoundAndBadInput) {
    qt::TempDir dir;
    Workspace ws(options_for(dir.path()));
    EXPECT_EQ(ws.handle(req("GET", "/projects/none")).status, 404);
    EXPECT_EQ(ws.handle(req("GET", "/nowhere")).status, 404);
    EXPECT_EQ(ws.handle(req("GET", "/jobs/j9")).status, 404);
    EXPECT_EQ(ws.handle(req("POST", "/projects", {{"project_id", "../x"}})).status, 400);
    ASSERT_EQ(ws.handle(req("POST", "/projects", {{"project_id", "a"}})).status, 201);
    EXPECT_EQ(ws.handle(req("POST", "/projects", {{"project_id", "a"}})).status, 409);
    EXPECT_EQ(ws.handle(req("GET", "/projects/a/indicators/7")).status, 404);
    EXPECT_EQ(ws.handle(req("GET", "/projects/a/indicators/x")).status, 400);
    EXPECT_EQ(ws.handle(req("POST", "/projects/a/run", nullptr, {{"stages", "dance"}})).status, 400);

    Request bad = req("POST", "/projects/a/corpus");
    bad.body = "{not json";
    bad.content_type = "application/json";
    const auto r = ws.handle(bad);
    EXPECT_EQ(r.status, 400);
    EXPECT_EQ(r.json()["code"], "invalid_input");

    const auto empty = ws.handle(req("POST", "/projects/a/corpus", {{"text", "   \n"}}));
    EXPECT_EQ(empty.status, 400);
    EXPECT_EQ(empty.json()["detail"]["kind"], "EmptyCorpus");
}

TEST(Service, FailedStageReportsError) {
    qt::TempDir dir;
    Workspace ws(options_for(dir.path()));
    ASSERT_EQ(ws.handle(req("POST", "/projects", {{"project_id", "b"}})).status, 201);
    ws.handle(req("POST", "/projects/b/corpus", {{"text", "One line."}}));
    // Extraction needs an overview.
    const auto r = ws.handle(req("POST", "/projects/b/run", nullptr, {{"stages", "extract"}}));
    const auto job = ws.wait_for_job(r.json()["job_id"].get<std::string>());
    EXPECT_EQ(job.state, JobState::Failed);
    ASSERT_TRUE(job.error.has_value());
    EXPECT_EQ(ws.handle(req("GET", "/projects/b")).json()["revision"], 1);
}

TEST(Service, DurableAcrossRestart) {
    qt::TempDir dir;
    std::string before;
    {
        Workspace ws(options_for(dir.path()));
        seed(ws);
        ws.handle(req("PATCH", "/projects/s/indicators/3", {{"memo", "kept"}}));
        before = ws.handle(req("GET", "/projects/s")).body;
    }
    EXPECT_TRUE(std::filesystem::exists(dir / "s.qualnet.json"));
    Workspace again(options_for(dir.path()));
    EXPECT_EQ(again.handle(req("GET", "/projects/s")).body, before);
    const auto list = again.handle(req("GET", "/projects")).json();
    ASSERT_EQ(list["projects"].size(), 1u);

    EXPECT_EQ(again.handle(req("DELETE", "/projects/s")).status, 200);
    EXPECT_FALSE(std::filesystem::exists(dir / "s.qualnet.json"));
}

TEST(Service, ExportNetworkSearchEvaluate) {
    qt::TempDir dir;
    Workspace ws(options_for(dir.path()));
    seed(ws);

    auto r = ws.handle(req("GET", "/projects/s/export", nullptr, {{"format", "csv"}}));
    EXPECT_EQ(r.content_type, "text/csv");
    EXPECT_EQ(r.body.rfind("indicator_id,sentence_id,text,concept_name,status\n", 0), 0u);
    r = ws.handle(req("GET", "/projects/s/export"));
    EXPECT_EQ(store::file_from_json(json::parse(r.body)).project.project_id, "s");
    EXPECT_EQ(ws.handle(req("GET", "/projects/s/export", nullptr, {{"format", "xml"}})).status, 400);

    r = ws.handle(req("GET", "/projects/s/network"));
    ASSERT_EQ(r.status, 200) << r.body;
    EXPECT_EQ(r.json()["edges"].size(), 6u);
    r = ws.handle(req("GET", "/projects/s/network", nullptr, {{"fraction", "0.5"}}));
    EXPECT_LE(r.json()["nodes"].size(), 6u);
    EXPECT_EQ(ws.handle(req("GET", "/projects/s/network", nullptr, {{"view", "pie"}})).status, 400);
    r = ws.handle(req("GET", "/projects/s/network/component", nullptr, {{"edge", "1"}}));
    ASSERT_EQ(r.status, 200) << r.body;
    EXPECT_EQ(ws.handle(req("GET", "/projects/s/network/component", nullptr, {{"node", "999"}})).status, 404);

    r = ws.handle(req("GET", "/projects/s/search", nullptr, {{"q", "feel sorry for Avery"}, {"k", "3"}}));
    ASSERT_EQ(r.status, 200) << r.body;
    EXPECT_LE(r.json()["hits"].size(), 3u);
    EXPECT_EQ(ws.handle(req("GET", "/projects/s/search", nullptr, {{"q", " "}})).status, 400);

    const auto gold = json::parse(qt::read_text(qt::fixture("gold.json")));
    r = ws.handle(req("POST", "/projects/s/evaluate", gold));
    ASSERT_EQ(r.status, 200) << r.body;
    EXPECT_NEAR(r.json()["edges"]["precision"].get<double>(), 0.75, 1e-12);
    EXPECT_EQ(ws.handle(req("POST", "/projects/s/evaluate", gold, {{"match", "fuzzy"}})).status, 400);
}

TEST(Service, BaselineEdges) {
    qt::TempDir dir;
    Workspace ws(options_for(dir.path()));
    seed(ws);
    auto r = ws.handle(req("POST", "/projects/s/baseline", nullptr, {{"method", "cooccurrence"}}));
    ASSERT_EQ(r.status, 200) << r.body;
    EXPECT_GT(r.json()["edges_added"].get<int>(), 0);
    EXPECT_EQ(ws.handle(req("POST", "/projects/s/baseline", nullptr, {{"method", "magic"}})).status, 400);
    EXPECT_EQ(ws.handle(req("POST", "/projects/s/rebuild")).status, 200);
}

TEST(Service, HttpRoundTrip) {
    qt::TempDir dir;
    Workspace ws(options_for(dir.path()));
    HttpServer server(ws);
    const int port = server.bind("127.0.0.1", 0);
    ASSERT_GT(port, 0);
    std::thread thread([&] { server.listen(); });

    httplib::Client client("127.0.0.1", port);
    auto res = client.Post("/projects", R"({"project_id":"h","overview":"o"})", "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 201);
    res = client.Post("/projects/h/corpus", "First line.\nSecond line.\n", "text/plain");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    EXPECT_EQ(json::parse(res->body)["units_added"], 2);
    res = client.Get("/projects/h/export?format=csv");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->get_header_value("Content-Type"), "text/csv");
    res = client.Get("/projects/h/indicators/5");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 404);
    EXPECT_EQ(json::parse(res->body)["code"], "not_found");
    res = client.Patch("/projects/h/concepts/1?expected_revision=0", R"({"name":"x"})", "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 409);

    server.stop();
    thread.join();
}
