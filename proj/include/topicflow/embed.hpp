#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "topicflow/corpus.hpp"
#include "topicflow/errors.hpp"

namespace topicflow {

struct WordVectorTable {
    std::size_t dim = 0;
    std::unordered_map<std::string, Eigen::VectorXd> vectors;
};

/// Text format "token v1 ... vd", one token per line. An optional leading
/// "count dim" header (word2vec text format) is skipped. Duplicate tokens
/// keep the last vector and emit a warning; a line whose width differs from
/// the first vector line is fatal.
WordVectorTable load_word_vectors(const std::filesystem::path& path, Warnings* warnings = nullptr);

struct EmbeddingMatrix {
    Eigen::MatrixXd values;  // one row per document
    std::vector<std::string> doc_ids;
    /// Row had no in-vocabulary token and holds the zero vector.
    std::vector<bool> all_oov;

    [[nodiscard]] std::size_t rows() const noexcept { return doc_ids.size(); }
    [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(values.cols()); }
};

/// Mean of in-vocabulary token vectors per document.
EmbeddingMatrix embed_documents(std::span<const Document> docs, const WordVectorTable& table);

/// CSV with header "doc_id,e0,e1,...". Rows are reordered to follow
/// `corpus_ids`; unknown ids, missing ids and ragged rows are fatal.
EmbeddingMatrix load_precomputed(const std::filesystem::path& path, std::span<const std::string> corpus_ids);

/// Selects rows by index, preserving order.
EmbeddingMatrix select_rows(const EmbeddingMatrix& x, std::span<const std::size_t> rows);

enum class ReductionMethod { Identity, Pca };

struct PcaModel {
    Eigen::VectorXd mean;
    Eigen::MatrixXd components;          // dim x out_dim, orthonormal columns
    Eigen::VectorXd explained_variance;  // non-increasing
};

/// Eigendecomposition of the sample covariance of `data` (rows are points).
/// Each component is oriented so its largest-magnitude entry is positive.
PcaModel fit_pca(const Eigen::MatrixXd& data, std::size_t out_dim);

/// Identity returns `x` unchanged. PCA is fitted on rows not flagged
/// all_oov; those rows stay zero in the output.
EmbeddingMatrix reduce(const EmbeddingMatrix& x, ReductionMethod method, std::size_t out_dim);

}  // namespace topicflow
