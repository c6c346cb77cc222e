// Acceptance gate. One PASS/FAIL line per criterion; exit status 1 if any
// criterion fails. `--semeval` runs the two corpus criteria instead and
// exits 77 (skipped) when QUALNET_SEMEVAL_FILE is unset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "qualnet/error.hpp"
#include "qualnet/metrics.hpp"
#include "qualnet/network.hpp"
#include "qualnet/pipeline.hpp"
#include "qualnet/provider.hpp"
#include "qualnet/semeval.hpp"
#include "qualnet/service.hpp"
#include "qualnet/store.hpp"
#include "support/fixtures.hpp"
#include "support/random_project.hpp"

using namespace qualnet;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;
    std::string failure;
};

// Records the first failure; later checks are still evaluated.
struct Check {
    Outcome out;
    void expect(bool cond, const std::string& what) {
        if (!cond && out.ok) {
            out.ok = false;
            out.failure = what;
        }
    }
};

int failures = 0;

void report(const std::string& name, double limit_s, const std::function<Outcome()>& body) {
    const auto start = Clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, "", std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    if (o.ok && secs >= limit_s) {
        o.ok = false;
        o.failure = "over the " + std::to_string(limit_s) + " s limit";
    }
    if (!o.ok) ++failures;
    char timing[32];
    std::snprintf(timing, sizeof timing, "%.3f s", secs);
    std::cout << (o.ok ? "PASS " : "FAIL ") << name << " [" << timing << "]";
    if (!o.detail.empty()) std::cout << " " << o.detail;
    if (!o.failure.empty()) std::cout << " -- " << o.failure;
    std::cout << std::endl;
}

// ---------------------------------------------------------------------------

Outcome pair_oracle() {
    Check c;
    std::mt19937_64 rng(101);
    std::size_t cases = 0;
    for (int round = 0; round < 2000; ++round) {
        const auto n = std::uniform_int_distribution<std::size_t>(0, 12)(rng);
        std::vector<Indicator> storage(n);
        std::vector<std::uint64_t> ids(n);
        std::iota(ids.begin(), ids.end(), 1);
        std::shuffle(ids.begin(), ids.end(), rng);
        for (std::size_t i = 0; i < n; ++i) {
            storage[i].indicator_id = IndicatorId{ids[i]};
            storage[i].sentence_id = SentenceId{1};
            storage[i].text = "t" + std::to_string(ids[i]);
        }
        std::vector<const Indicator*> view;
        for (const auto& ind : storage) view.push_back(&ind);

        std::vector<pipeline::IndicatorPair> expected;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                expected.push_back({storage[i].indicator_id, storage[j].indicator_id});
            }
        }
        c.expect(pipeline::generate_pairs(view) == expected, "mismatch at n=" + std::to_string(n));
        ++cases;
    }
    c.out.detail = std::to_string(cases) + " sentences";
    return c.out;
}

Outcome consolidation_conservation() {
    Check c;
    std::mt19937_64 rng(202);
    std::size_t total_weight = 0;
    for (int round = 0; round < 200; ++round) {
        const auto p = testing::random_project(rng);
        std::map<std::uint64_t, std::optional<ConceptId>> mapped;
        for (const auto& ind : p.indicators) {
            if (ind.live()) mapped[ind.indicator_id.value] = ind.concept_id;
        }
        std::map<std::pair<std::uint64_t, std::uint64_t>, std::size_t> expected;
        std::size_t mapped_edges = 0;
        for (const auto& e : p.causal_edges) {
            if (!e.active()) continue;
            const auto a = mapped.find(e.cause.value);
            const auto b = mapped.find(e.effect.value);
            if (a == mapped.end() || b == mapped.end() || !a->second || !b->second) continue;
            ++expected[{a->second->value, b->second->value}];
            ++mapped_edges;
        }
        const auto graph = network::consolidate(network::build_indicator_graph(p), p.concepts);
        std::size_t weight = 0;
        std::map<std::pair<std::uint64_t, std::uint64_t>, std::size_t> actual;
        for (const auto& ce : graph.edges) {
            weight += ce.weight;
            actual[{ce.cause.value, ce.effect.value}] = ce.weight;
            c.expect(ce.weight == ce.contributing_edge_ids.size(), "weight != contributing ids");
        }
        c.expect(weight == mapped_edges, "weight sum " + std::to_string(weight) + " != " +
                                             std::to_string(mapped_edges) + " in round " + std::to_string(round));
        c.expect(graph.total_indicator_edges == mapped_edges, "total_indicator_edges mismatch");
        // Equality of the (cause, effect) -> weight maps covers reverse pairs:
        // A->B and B->A must stay separate entries with their own weights.
        c.expect(actual == expected, "pair weights differ in round " + std::to_string(round));
        total_weight += weight;
    }
    c.out.detail = "200 projects, " + std::to_string(total_weight) + " mapped edges";
    return c.out;
}

Outcome metrics_oracles() {
    Check c;
    std::mt19937_64 rng(303);
    const std::vector<std::string> vocab = {"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"};
    auto random_set = [&](std::size_t max) {
        std::vector<metrics::Item> out;
        const auto n = std::uniform_int_distribution<std::size_t>(0, max)(rng);
        for (std::size_t i = 0; i < n; ++i) out.push_back(metrics::Item::text(vocab[rng() % vocab.size()]));
        return out;
    };
    const auto exact = metrics::MatchPolicy::exact();

    std::size_t psa_cases = 0;
    while (psa_cases < 500) {
        const auto a = random_set(8);
        const auto b = random_set(8);
        if (a.empty() && b.empty()) continue;
        // Multiset intersection size.
        std::map<std::string, int> count_a, count_b;
        for (const auto& x : a) ++count_a[x.texts[0]];
        for (const auto& x : b) ++count_b[x.texts[0]];
        std::size_t shared = 0;
        for (const auto& [k, v] : count_a) shared += std::min(v, count_b[k]);
        const double bb = static_cast<double>(a.size() - shared);
        const double cc = static_cast<double>(b.size() - shared);
        const double want = 2.0 * shared / (2.0 * shared + bb + cc);
        const auto got = metrics::psa(a, b, exact);
        c.expect(got.a == shared, "psa a count");
        c.expect(std::fabs(got.value - want) <= 1e-12, "psa value");
        ++psa_cases;

        const auto pr = metrics::precision_recall(metrics::match_sets(a, b, exact), a, b);
        std::size_t matched = 0;
        for (const auto& entry : pr.ledger) matched += entry.gold.has_value();
        c.expect(pr.ledger.size() == a.size(), "ledger size");
        c.expect(matched == pr.true_positive && pr.true_positive == shared, "ledger recount");
        c.expect(pr.true_positive + pr.false_positive == a.size(), "tp+fp");
        c.expect(pr.true_positive + pr.false_negative == b.size(), "tp+fn");
    }

    std::size_t kappa_cases = 0, degenerate = 0;
    const std::vector<std::string> labels = {"x", "y", "z", "w"};
    while (kappa_cases < 500) {
        const auto n = std::uniform_int_distribution<std::size_t>(1, 30)(rng);
        const auto k = std::uniform_int_distribution<std::size_t>(2, labels.size())(rng);
        std::vector<std::string> ra(n), rb(n);
        for (std::size_t i = 0; i < n; ++i) {
            ra[i] = labels[rng() % k];
            rb[i] = std::bernoulli_distribution(0.6)(rng) ? ra[i] : labels[rng() % k];
        }
        std::map<std::string, double> ma, mb;
        double agree = 0;
        for (std::size_t i = 0; i < n; ++i) {
            ma[ra[i]] += 1;
            mb[rb[i]] += 1;
            agree += ra[i] == rb[i];
        }
        const double po = agree / n;
        double pe = 0;
        for (const auto& [label, v] : ma) pe += (v / n) * (mb.count(label) ? mb[label] / n : 0.0);
        if (std::fabs(1.0 - pe) < 1e-15) {
            bool threw = false;
            try {
                metrics::kappa(ra, rb);
            } catch (const Error& e) {
                threw = e.kind() == ErrorKind::DegenerateMarginals;
            }
            c.expect(threw, "degenerate marginals not reported");
            ++degenerate;
            continue;
        }
        const double want = (po - pe) / (1.0 - pe);
        const auto got = metrics::kappa(ra, rb);
        c.expect(std::fabs(got.value - want) <= 1e-12, "kappa value");
        c.expect(got.value >= -1.0 - 1e-12 && got.value <= 1.0 + 1e-12, "kappa out of [-1,1]");
        ++kappa_cases;
    }
    c.out.detail = "500 PSA, 500 kappa (" + std::to_string(degenerate) + " degenerate skipped)";
    return c.out;
}

struct UnionFind {
    std::map<std::uint64_t, std::uint64_t> parent;
    std::uint64_t find(std::uint64_t x) {
        if (!parent.count(x)) parent[x] = x;
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(std::uint64_t a, std::uint64_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

Outcome merge_union_find() {
    Check c;
    std::mt19937_64 rng(404);
    for (int round = 0; round < 300; ++round) {
        const auto n = std::uniform_int_distribution<std::uint64_t>(2, 40)(rng);
        const auto k = std::uniform_int_distribution<std::size_t>(0, n)(rng);
        std::vector<std::pair<IndicatorId, IndicatorId>> decisions;
        UnionFind uf;
        for (std::size_t i = 0; i < k; ++i) {
            const auto a = std::uniform_int_distribution<std::uint64_t>(1, n)(rng);
            auto b = std::uniform_int_distribution<std::uint64_t>(1, n - 1)(rng);
            if (b >= a) ++b;
            decisions.emplace_back(IndicatorId{a}, IndicatorId{b});
            uf.unite(a, b);
        }
        std::map<std::uint64_t, std::vector<std::uint64_t>> groups;
        for (const auto& [id, _] : uf.parent) groups[uf.find(id)].push_back(id);
        std::vector<MergeRecord> expected;
        for (auto& [root, members] : groups) {
            if (members.size() < 2) continue;
            std::sort(members.begin(), members.end());
            MergeRecord r{IndicatorId{members.front()}, {}};
            for (std::size_t i = 1; i < members.size(); ++i) r.absorbed.push_back(IndicatorId{members[i]});
            expected.push_back(std::move(r));
        }
        const auto records = pipeline::merge_components(decisions);
        c.expect(records == expected, "components differ in round " + std::to_string(round));

        // Edge conservation on a one-sentence project.
        Project p;
        p.project_id = "m";
        p.units.push_back({UnitId{1}, "s.", 0});
        p.sentences.push_back({SentenceId{1}, UnitId{1}, 0, "s."});
        for (std::uint64_t id = 1; id <= n; ++id) {
            p.indicators.push_back({IndicatorId{id}, SentenceId{1}, "i" + std::to_string(id), std::nullopt,
                                    std::nullopt, IndicatorStatus::Auto, std::nullopt});
        }
        // Distinct directed pairs; only merging may create duplicates.
        const auto attempts = std::uniform_int_distribution<std::size_t>(0, 3 * n)(rng);
        std::set<std::pair<std::uint64_t, std::uint64_t>> seen;
        for (std::size_t t = 0; t < attempts; ++t) {
            const auto a = std::uniform_int_distribution<std::uint64_t>(1, n)(rng);
            auto b = std::uniform_int_distribution<std::uint64_t>(1, n - 1)(rng);
            if (b >= a) ++b;
            if (!seen.insert({a, b}).second) continue;
            CausalEdge edge;
            edge.edge_id = EdgeId{p.causal_edges.size() + 1};
            edge.cause = IndicatorId{a};
            edge.effect = IndicatorId{b};
            edge.sentence_id = SentenceId{1};
            p.causal_edges.push_back(edge);
        }
        std::set<std::pair<std::uint64_t, std::uint64_t>> want_pairs;
        for (const auto& e : p.causal_edges) {
            const auto a = uf.find(e.cause.value), b = uf.find(e.effect.value);
            if (a != b) want_pairs.insert({a, b});
        }
        const auto outcome = pipeline::apply_merges(p, records);
        std::size_t active = 0;
        std::set<std::pair<std::uint64_t, std::uint64_t>> got_pairs;
        for (const auto& e : p.causal_edges) {
            if (!e.active()) continue;
            ++active;
            got_pairs.insert({e.cause.value, e.effect.value});
            c.expect(p.find_indicator(e.cause)->live() && p.find_indicator(e.effect)->live(), "edge on absorbed id");
        }
        c.expect(active + outcome.deduplicated_edges + outcome.collapsed_edges == p.causal_edges.size(), "edge count not conserved");
        c.expect(got_pairs == want_pairs, "rewired pairs differ in round " + std::to_string(round));
        c.expect(active == got_pairs.size(), "duplicate active edges remain");
        c.expect(validate_project(p).empty(), "invalid project after merge");
    }
    c.out.detail = "300 rounds";
    return c.out;
}

std::string mock_network() {
    auto p = testing::fixture_project();
    provider::ScriptedChatProvider chat(provider::MockScript::load(testing::fixture("mock_script.json")));
    provider::HashingEmbedder embed;
    pipeline::run_pipeline(p, {}, {chat, embed});
    const auto graph = network::build_indicator_graph(p);
    return network::network_json(graph, network::consolidate(graph, p.concepts)).dump(2) + "\n";
}

Outcome golden_end_to_end() {
    Check c;
    const auto golden = testing::read_text(testing::source_path("tests/golden/network.json"));
    c.expect(!golden.empty(), "golden file missing");
    const auto produced = mock_network();
    c.expect(produced == golden, "network differs from golden");
    c.expect(mock_network() == produced, "second run differs");
    c.out.detail = std::to_string(produced.size()) + " bytes";
    return c.out;
}

Outcome store_round_trip() {
    Check c;
    std::mt19937_64 rng(505);
    testing::TempDir dir;
    for (int i = 0; i < 100; ++i) {
        const auto p = testing::random_project(rng);
        store::save(p, dir / "a.json");
        const auto back = store::load(dir / "a.json");
        c.expect(back == p, "load != save in round " + std::to_string(i));
        store::save(back, dir / "b.json");
        c.expect(testing::read_text(dir / "a.json") == testing::read_text(dir / "b.json"),
                 "bytes differ in round " + std::to_string(i));
    }
    c.out.detail = "100 projects";
    return c.out;
}

Outcome api_contract() {
    Check c;
    testing::TempDir dir;
    service::WorkspaceOptions options;
    options.data_dir = dir.path();
    options.providers = provider::make_providers("mock:" + testing::fixture("mock_script.json").string());
    service::Workspace ws(std::move(options));

    auto call = [&](const std::string& method, const std::string& path, const json& body = nullptr,
                    std::map<std::string, std::string> query = {}) {
        service::Request r{method, path, std::move(query), body.is_null() ? "" : body.dump(), "application/json"};
        return ws.handle(r);
    };
    auto step = [&](const service::Response& r, int status, const std::string& what) {
        c.expect(r.status == status, what + " returned " + std::to_string(r.status) + ": " + r.body);
        return r.status == status && !r.body.empty() && r.content_type == "application/json" ? r.json() : json{};
    };

    step(call("POST", "/projects",
              {{"project_id", "api"},
               {"overview", testing::read_text(testing::fixture("overview.txt"))},
               {"concepts", json::parse(testing::read_text(testing::fixture("concepts.json")))}}),
         201, "create");
    auto j = step(call("POST", "/projects/api/corpus", {{"text", testing::read_text(testing::fixture("corpus.txt"))}}),
                  200, "upload");
    c.expect(j.value("revision", 0) == 1, "revision after upload");

    j = step(call("POST", "/projects/api/run"), 202, "run");
    const auto job = ws.wait_for_job(j.value("job_id", std::string{}));
    c.expect(job.state == service::JobState::Done, "run job did not finish");
    auto rev = step(call("GET", "/projects/api"), 200, "get").value("revision", 0);
    c.expect(rev == 5, "revision after run " + std::to_string(rev));

    j = step(call("PATCH", "/projects/api/indicators/1", {{"text", "feel sorry"}, {"expected_revision", rev}}), 200,
             "edit indicator");
    c.expect(j.value("revision", 0) == rev + 1, "edit revision");
    step(call("PATCH", "/projects/api/indicators/1", {{"memo", "stale"}, {"expected_revision", rev}}), 409,
         "stale edit");
    ++rev;

    j = step(call("PATCH", "/projects/api/indicators/1", {{"concept_id", 2}, {"expected_revision", rev}}), 200,
             "map concept");
    c.expect(j.value("concept_id", 0) == 2, "concept not applied");
    ++rev;
    j = step(call("POST", "/projects/api/rebuild", {{"expected_revision", rev}}), 200, "rebuild");
    ++rev;
    c.expect(j.value("revision", 0) == rev, "rebuild revision");

    const auto ind = step(call("GET", "/projects/api/network"), 200, "indicator view");
    c.expect(ind.value("revision", 0) == rev, "view changed revision");
    c.expect(ind.contains("nodes") && ind.contains("edges"), "indicator view shape");
    const auto con = step(call("GET", "/projects/api/network", nullptr, {{"view", "concept"}}), 200, "concept view");
    c.expect(con.contains("concept_edges"), "concept view shape");
    const auto eval = step(call("POST", "/projects/api/evaluate",
                                json::parse(testing::read_text(testing::fixture("gold.json")))),
                           200, "evaluate");
    c.expect(eval.contains("edges") && eval.contains("indicators"), "evaluation shape");
    c.expect(step(call("GET", "/projects/api"), 200, "final get").value("revision", 0) == rev,
             "reads changed the revision");
    c.out.detail = "final revision " + std::to_string(rev);
    return c.out;
}

// ---------------------------------------------------------------------------

int semeval_mode() {
    const char* path = std::getenv("QUALNET_SEMEVAL_FILE");
    if (!path || !*path) {
        std::cout << "SKIP semeval: QUALNET_SEMEVAL_FILE is not set" << std::endl;
        return 77;
    }
    const auto text = testing::read_text(path);
    const auto records = semeval::causal_records(ingest::parse_semeval(text));

    // Forward text order: label reads Cause-Effect(e1,e2), counted on the raw text.
    std::size_t forward = 0, causal = 0;
    {
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line == "Cause-Effect(e1,e2)") ++forward, ++causal;
            else if (line == "Cause-Effect(e2,e1)") ++causal;
        }
    }
    const double forward_fraction = causal ? static_cast<double>(forward) / causal : 0.0;

    report("semeval co-occurrence recall 100% and Prec/DirAcc near 38%", 10.0, [&] {
        Check c;
        c.expect(records.size() == causal, "parsed " + std::to_string(records.size()) + " of " +
                                               std::to_string(causal) + " causal records");
        const auto e = semeval::evaluate(records, baseline::Method::Cooccurrence);
        c.expect(!e.report.recall_undefined && e.report.recall == 1.0, "recall below 100%");
        c.expect(std::fabs(e.directed_precision - forward_fraction) <= 1e-12, "Prec/DirAcc != forward fraction");
        c.expect(std::fabs(e.directed_precision - 0.38) <= 0.10, "Prec/DirAcc outside 38% +/- 10 pp");
        c.out.detail = std::to_string(records.size()) + " records, recall " +
                       metrics::format_percent(e.report.recall) + ", Prec/DirAcc " +
                       metrics::format_percent(e.directed_precision);
        return c.out;
    });
    report("semeval causal cues precision >= 60% and recall <= 25%", 10.0, [&] {
        Check c;
        const auto e = semeval::evaluate(records, baseline::Method::Cue);
        c.expect(!e.report.precision_undefined && e.report.precision >= 0.60, "precision below 60%");
        c.expect(e.report.recall <= 0.25, "recall above 25%");
        c.out.detail = "precision " +
                       (e.report.precision_undefined ? std::string("-") : metrics::format_percent(e.report.precision)) +
                       ", recall " + metrics::format_percent(e.report.recall);
        return c.out;
    });
    return failures ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc > 1 && std::string(argv[1]) == "--semeval") return semeval_mode();

    report("pair generation oracle", 1.0, pair_oracle);
    report("consolidation conservation", 5.0, consolidation_conservation);
    report("metrics oracles", 5.0, metrics_oracles);
    report("merge union-find oracle", 2.0, merge_union_find);
    report("golden end-to-end", 5.0, golden_end_to_end);
    report("store round trip", 5.0, store_round_trip);
    report("api contract", 10.0, api_contract);
    return failures ? 1 : 0;
}
