#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "qualnet/model.hpp"
#include "qualnet/prompts.hpp"
#include "qualnet/provider.hpp"

namespace qualnet::pipeline {

enum class CausalVerdict { FirstCausesSecond, SecondCausesFirst, NotRelated };

enum class Stage { Extract, Map, Classify, Merge };

std::string to_string(Stage stage);
std::string to_string(CausalVerdict verdict);
// Comma-separated stage names; throws InvalidInput on unknown names.
std::set<Stage> parse_stages(std::string_view list);

struct PipelineConfig {
    PromptSet prompts;
    double temperature = 0.0;
    std::size_t max_output_chars = 4000;
    std::size_t parallelism = 4;
    std::size_t neighbors = 10;
    std::set<Stage> stages = {Stage::Extract, Stage::Map, Stage::Classify, Stage::Merge};
};

struct Providers {
    provider::ChatProvider& chat;
    provider::EmbeddingProvider& embed;
};

// ---------------------------------------------------------------------------
// Response parsing

// Locates a JSON object with an "indicators" string array anywhere in the
// response. When none parses, one repair pass (strip fences and trailing
// commas, close open strings and brackets) is tried before throwing
// MalformedProviderOutput. Blank entries are dropped.
std::vector<std::string> parse_indicator_list(std::string_view response);

// Tolerant label grammar: "label" (any case), optional ':' or '=', optional
// bracket, then one letter. Without a label, the first standalone letter
// within range is taken. Returns the 0-based option index, or nullopt when
// nothing in range is found.
std::optional<std::size_t> parse_label(std::string_view response, std::size_t option_count);

// ---------------------------------------------------------------------------
// Stages

// Indicators for one sentence. Ids are left unassigned (zero); the caller
// assigns them when committing. Spans come from the first case-insensitive
// occurrence of the text in the sentence, when there is one.
std::vector<Indicator> extract_indicators(const ResearchOverview& overview,
                                          const Sentence& sentence,
                                          provider::ChatProvider& chat,
                                          const PipelineConfig& config = {});

// Asks for one lettered concept. `concepts` is the option order. Throws
// Precondition when concepts is empty or the indicator is already mapped,
// InvalidLabel when the answer is unusable after one re-ask.
ConceptId map_concept(const Indicator& indicator, const Sentence& sentence,
                      const std::vector<Concept>& concepts, provider::ChatProvider& chat,
                      const PipelineConfig& config = {});

// `concepts` is used to render "text (concept name)" for mapped indicators.
CausalVerdict classify_pair(const Sentence& sentence, const Indicator& first,
                            const Indicator& second, const std::vector<Concept>& concepts,
                            provider::ChatProvider& chat, const PipelineConfig& config = {});

struct IndicatorPair {
    IndicatorId first;
    IndicatorId second;
    bool operator==(const IndicatorPair&) const = default;
};

// All unordered pairs (i < j) of the live indicators, in input order.
std::vector<IndicatorPair> generate_pairs(const std::vector<const Indicator*>& indicators);

// Connected components (size >= 2) of the graph whose edges are the
// positive merge decisions. Canonical = lowest id. Records sorted by
// canonical, absorbed ids ascending.
std::vector<MergeRecord> merge_components(
    const std::vector<std::pair<IndicatorId, IndicatorId>>& merge_decisions);

struct MergeOutcome {
    std::vector<MergeRecord> records;        // records written in this call
    std::size_t rewired_edges = 0;           // edges whose endpoint changed
    std::size_t deduplicated_edges = 0;      // exact duplicates soft-deleted
    std::size_t collapsed_edges = 0;         // edges that became self-loops, soft-deleted
    std::size_t provider_calls = 0;
};

// Applies merge records: absorbed indicators are soft-deleted, incident
// active edges are rewired to the canonical id, exact duplicates (same
// cause, effect, sentence) keep the lowest edge id, and edges whose two
// endpoints merged together are soft-deleted. Existing records that share
// an indicator with a new component are folded into it.
MergeOutcome apply_merges(Project& project, const std::vector<MergeRecord>& records);

// Candidate generation (k nearest neighbors by cosine, same concept only),
// one merge prompt per unordered candidate pair, then apply_merges. Live
// mapped indicators whose normalized texts are identical within a concept
// are merged without a provider call.
MergeOutcome merge_indicators(Project& project, provider::EmbeddingProvider& embedder,
                              provider::ChatProvider& chat, const PipelineConfig& config = {});

// ---------------------------------------------------------------------------
// Orchestration

struct StageReport {
    Stage stage = Stage::Extract;
    std::size_t items = 0;           // indicators / mappings / edges / merge records
    std::size_t provider_calls = 0;
    std::chrono::milliseconds duration{0};
    bool skipped = false;
    std::string warning;
};

struct RunReport {
    std::vector<StageReport> stages;
    std::size_t indicators = 0;      // live indicators after the run
    std::size_t edges = 0;           // active edges after the run
    std::size_t merge_records = 0;
    std::uint64_t revision = 0;
    std::optional<std::string> transcript;

    nlohmann::json to_json(bool include_timings = true) const;
};

// Called after every committed stage. May throw to abort the run; stages
// committed before the throw remain.
using StageObserver = std::function<void(const Project&, const StageReport&)>;

// Runs the configured stages in order extract -> map -> classify -> merge.
// Each completed stage rebuilds concept edges and increments the revision
// once. On error the project keeps every previously completed stage.
RunReport run_pipeline(Project& project, const PipelineConfig& config, Providers providers,
                       const StageObserver& observer = {});

}  // namespace qualnet::pipeline
