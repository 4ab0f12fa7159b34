#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "topicflow/cluster.hpp"
#include "topicflow/corpus.hpp"
#include "topicflow/embed.hpp"
#include "topicflow/evolve.hpp"
#include "topicflow/represent.hpp"
#include "topicflow/stats.hpp"

namespace topicflow {

enum class EmbeddingSource { WordVectors, Precomputed };
enum class ClusterAlgorithm { Hdbscan, KMeans };

/// Two-sample splits of the longevity classes for H3.
enum class LongevityGrouping { HighVsMedium, MediumVsShort, HighVsShort, HighMediumVsShort, HighVsMediumShort };

inline constexpr LongevityGrouping kAllGroupings[] = {
    LongevityGrouping::HighVsMedium, LongevityGrouping::MediumVsShort, LongevityGrouping::HighVsShort,
    LongevityGrouping::HighMediumVsShort, LongevityGrouping::HighVsMediumShort};

std::string_view to_string(LongevityGrouping g) noexcept;
std::optional<LongevityGrouping> parse_grouping(std::string_view text);
/// Classes on the first and second side of the comparison.
std::pair<std::vector<LongevityClass>, std::vector<LongevityClass>> grouping_sides(LongevityGrouping g);

struct InputPaths {
    std::filesystem::path corpus;
    /// Inferred from the corpus extension when unset.
    std::optional<InputFormat> corpus_format;
    std::optional<std::filesystem::path> stopwords;
    std::optional<std::filesystem::path> lemmas;
    std::optional<std::filesystem::path> word_vectors;
    std::optional<std::filesystem::path> embeddings;
    std::optional<std::filesystem::path> moral_lexicon;
};

struct PreprocessSettings {
    bool drop_retweet_marker = true;
    bool keep_emoji = false;
    bool skip_malformed = false;
};

struct EmbeddingSettings {
    EmbeddingSource source = EmbeddingSource::WordVectors;
    ReductionMethod reduction = ReductionMethod::Identity;
    std::size_t components = 5;
};

struct ClusterSettings {
    ClusterAlgorithm algorithm = ClusterAlgorithm::Hdbscan;
    HdbscanConfig hdbscan;
    std::size_t k = 8;
    std::size_t max_iter = 300;
    double tol = 1e-4;
    /// Months with fewer usable documents get no topics. Defaults to
    /// 2 * min_cluster_size for HDBSCAN and k for k-means.
    std::optional<std::size_t> min_documents;

    [[nodiscard]] std::size_t effective_min_documents() const;
};

struct MoralSettings {
    /// Score lemmas before stopword removal.
    bool pre_stopword = false;
};

struct StatsSettings {
    bool h1 = true;
    bool h2 = true;
    bool h3 = true;
    std::vector<LongevityGrouping> h3_groupings{std::begin(kAllGroupings), std::end(kAllGroupings)};
    Alternative alternative = Alternative::TwoSided;
};

struct RunConfig {
    std::filesystem::path base_dir;  // directory relative paths were resolved against
    InputPaths inputs;
    PreprocessSettings preprocess;
    EmbeddingSettings embedding;
    ClusterSettings cluster;
    VectorizerConfig vectorizer;
    CtfidfConfig ctfidf;
    std::size_t top_k = 10;
    LinkConfig evolve;
    MoralSettings moral;
    StatsSettings stats;
    std::uint64_t seed = 0;
    std::filesystem::path output_dir;
    std::size_t workers = 1;

    [[nodiscard]] InputFormat corpus_format() const;
};

/// Parses config JSON text. Unknown keys, wrong types and out-of-range
/// values throw ConfigError naming the key path. `seed_override` wins over
/// the file; with neither the seed is missing and that is an error too.
RunConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir,
                       std::optional<std::uint64_t> seed_override = std::nullopt);

/// Reads and parses `path`, resolving relative paths against its directory,
/// then checks that every referenced input file exists.
RunConfig validate_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override = std::nullopt);

/// Throws ConfigError naming the key of the first missing input file.
void check_input_files(const RunConfig& config);

/// Fully resolved settings as JSON with sorted keys. Input paths are written
/// relative to base_dir so the text does not depend on the checkout location.
std::string canonical_json(const RunConfig& config, bool include_runtime = true);

/// FNV-1a of canonical_json without output_dir and workers, as 16 hex digits.
std::string config_hash(const RunConfig& config);

}  // namespace topicflow
