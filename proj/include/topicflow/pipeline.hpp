#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "topicflow/config.hpp"
#include "topicflow/corpus.hpp"
#include "topicflow/errors.hpp"
#include "topicflow/evolve.hpp"
#include "topicflow/moral.hpp"
#include "topicflow/represent.hpp"
#include "topicflow/stats.hpp"

namespace topicflow {

enum class Stage { Ingest, Model, Evolve, Moral, Stats, Report, Run };

std::string_view to_string(Stage stage) noexcept;
std::optional<Stage> parse_stage(std::string_view text);

namespace artifact {
inline constexpr std::string_view kIngest = "ingest.json";
inline constexpr std::string_view kDocuments = "documents.jsonl";
inline constexpr std::string_view kTopics = "topics.json";
inline constexpr std::string_view kEvolution = "evolution.json";
inline constexpr std::string_view kMoral = "moral.csv";
inline constexpr std::string_view kStats = "stats.json";
inline constexpr std::string_view kManifest = "manifest.json";
inline constexpr std::string_view kReport = "report.md";
}  // namespace artifact

struct IngestArtifact {
    std::size_t records = 0;  // rows parsed and kept
    std::vector<RowError> skipped;
    std::vector<std::string> dropped_ids;
    std::vector<Document> documents;
};

struct TopicRecord {
    int id = 0;
    std::vector<TermWeight> terms;
    std::vector<std::string> doc_ids;

    [[nodiscard]] std::size_t size() const noexcept { return doc_ids.size(); }
};

/// "<id>_<term>_<term>..." over the first `n_terms` terms.
std::string topic_name(const TopicRecord& topic, std::size_t n_terms = 4);

struct MonthModel {
    MonthKey month;
    std::size_t documents = 0;
    std::size_t embedded = 0;  // documents with at least one known word vector
    bool clustered = false;    // false when the month was below the minimum
    std::vector<TopicRecord> topics;
    std::vector<std::string> outlier_ids;

    [[nodiscard]] std::size_t assigned() const noexcept;
};

struct TopicsArtifact {
    std::vector<MonthModel> months;  // ascending
};

struct StatsRun {
    std::string hypothesis;  // H1, H2, H3
    std::string grouping;
    std::optional<Foundation> foundation;
    std::optional<TestResult> result;
    std::vector<std::pair<std::string, double>> group_means;
    std::optional<ContingencyTable> table;
    std::optional<std::string> skipped;  // reason the test could not run
};

struct MonthSummary {
    MonthKey month;
    std::size_t documents = 0;
    std::size_t embedded = 0;
    std::size_t topics = 0;
    std::size_t assigned = 0;
    std::size_t outliers = 0;
};

struct RunManifest {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::size_t records = 0;
    std::size_t skipped_rows = 0;
    std::size_t dropped = 0;
    std::vector<MonthSummary> months;
    std::size_t total_topics = 0;
    std::size_t total_assigned = 0;
    std::size_t total_outliers = 0;

    /// records = dropped + assigned + outliers, and totals equal month sums.
    [[nodiscard]] bool reconciles() const;
};

// Stage computations. Each is deterministic for a fixed config.

IngestArtifact ingest(const RunConfig& config, Warnings* warnings = nullptr);
TopicsArtifact model_topics(const RunConfig& config, const IngestArtifact& corpus, Warnings* warnings = nullptr);
EvolutionGraph evolve_topics(const RunConfig& config, const TopicsArtifact& topics);

/// Document id -> longevity class of the group its topic belongs to.
std::unordered_map<std::string, LongevityClass> document_longevity(const TopicsArtifact& topics,
                                                                  const EvolutionGraph& graph);

/// One row per document, in corpus order, carrying party and longevity.
/// Profiles are filled when a lexicon is given.
std::vector<ScoredDocument> score_documents(const RunConfig& config, std::span<const Document> documents,
                                            const std::unordered_map<std::string, LongevityClass>& longevity,
                                            const MoralLexicon* lexicon);

/// H1 chi-square over party x longevity, then the H2 and H3 Mann-Whitney
/// batteries when `moral_available`.
std::vector<StatsRun> run_statistics(const StatsSettings& settings, std::span<const ScoredDocument> docs,
                                     bool moral_available);

RunManifest build_manifest(const RunConfig& config, const IngestArtifact& corpus, const TopicsArtifact& topics);

// Serialization. Writers produce byte-stable text.

std::string documents_to_jsonl(std::span<const Document> documents);
std::vector<Document> documents_from_jsonl(std::string_view text);
std::string ingest_to_json(const IngestArtifact& artifact);
std::string topics_to_json(const TopicsArtifact& topics);
TopicsArtifact topics_from_json(std::string_view text);
std::string evolution_to_json(const EvolutionGraph& graph, const TopicsArtifact& topics);
EvolutionGraph evolution_from_json(std::string_view text);
std::string moral_to_csv(std::span<const ScoredDocument> docs);
std::vector<ScoredDocument> moral_from_csv(std::string_view text);
std::string stats_to_json(std::span<const StatsRun> runs);
std::vector<StatsRun> stats_from_json(std::string_view text);
std::string manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(std::string_view text);

/// Runs one stage, reading earlier artifacts from the output directory.
void run_stage(Stage stage, const RunConfig& config, Warnings* warnings = nullptr);

/// All stages in order; returns the manifest that was written.
RunManifest run_all(const RunConfig& config, Warnings* warnings = nullptr);

}  // namespace topicflow
