#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "topicflow/errors.hpp"

namespace topicflow {

struct VectorizerConfig {
    std::size_t ngram_min = 1;
    std::size_t ngram_max = 1;
    std::size_t min_df = 5;
    std::optional<std::size_t> max_features = 170000;  // nullopt: unlimited

    /// Throws std::invalid_argument on an out-of-range field.
    void validate() const;
};

struct CtfidfConfig {
    bool bm25_weighting = false;
    bool reduce_frequent_words = true;
};

/// Terms in lexicographic order; a term's column is its position.
struct Vocabulary {
    std::vector<std::string> terms;
    std::unordered_map<std::string, std::size_t> index;

    [[nodiscard]] std::size_t size() const noexcept { return terms.size(); }
    [[nodiscard]] std::optional<std::size_t> find(const std::string& term) const;
};

/// n-grams are joined with '_' (tokens never contain it after cleaning).
std::vector<std::string> ngrams(std::span<const std::string> tokens, std::size_t min_n, std::size_t max_n);

/// Keeps n-grams with document frequency >= min_df, then the max_features
/// most frequent (ties lexicographic). Throws DataError when nothing survives.
Vocabulary build_vocabulary(std::span<const std::vector<std::string>> docs, const VectorizerConfig& config);

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

struct ClassTermMatrix {
    CountMatrix counts;  // classes x vocabulary
    /// Average token count per class.
    double average_class_size = 0.0;
    /// Frequency of each term summed over classes.
    std::vector<std::int64_t> term_frequency;

    [[nodiscard]] std::size_t n_classes() const noexcept { return static_cast<std::size_t>(counts.rows()); }
    [[nodiscard]] std::size_t n_terms() const noexcept { return static_cast<std::size_t>(counts.cols()); }
};

/// Builds class-level statistics from raw counts.
ClassTermMatrix make_class_term_matrix(CountMatrix counts);

/// Counts n-grams of every document into the row of its label. Labels must
/// be non-negative; `n_classes` defaults to max label + 1.
ClassTermMatrix class_bag_of_words(std::span<const std::vector<std::string>> docs, std::span<const int> labels,
                                   const Vocabulary& vocab, std::size_t ngram_min = 1, std::size_t ngram_max = 1,
                                   std::optional<std::size_t> n_classes = std::nullopt);

/// Class-based TF-IDF. The term frequency is L1-normalised per class row,
/// optionally square-rooted; the idf factor is log(1 + A/f) or, with BM25
/// weighting, log(1 + (A - f + 0.5)/(f + 0.5)). A class with no tokens gets
/// an all-zero row and a warning.
Eigen::MatrixXd ctfidf(const ClassTermMatrix& m, const CtfidfConfig& config, Warnings* warnings = nullptr);

struct TermWeight {
    std::string term;
    double weight = 0.0;
};

struct TopicRepresentation {
    int topic_id = 0;
    std::vector<TermWeight> terms;  // weight non-increasing
};

/// Per class row, the top_k nonzero-weight terms (ties lexicographic).
std::vector<TopicRepresentation> top_terms(const Eigen::MatrixXd& weights, const Vocabulary& vocab,
                                           std::size_t top_k = 10);

}  // namespace topicflow
