#include "topicflow/represent.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace topicflow {

void VectorizerConfig::validate() const
{
    if (ngram_min < 1 || ngram_min > ngram_max) {
        throw std::invalid_argument("ngram_range must satisfy 1 <= lo <= hi");
    }
    if (min_df < 1) {
        throw std::invalid_argument("min_df must be >= 1");
    }
    if (max_features && *max_features < 1) {
        throw std::invalid_argument("max_features must be >= 1");
    }
}

std::optional<std::size_t> Vocabulary::find(const std::string& term) const
{
    auto it = index.find(term);
    if (it == index.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::vector<std::string> ngrams(std::span<const std::string> tokens, std::size_t min_n, std::size_t max_n)
{
    std::vector<std::string> out;
    for (std::size_t n = min_n; n <= max_n; ++n) {
        if (tokens.size() < n) {
            break;
        }
        for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
            std::string gram = tokens[i];
            for (std::size_t j = 1; j < n; ++j) {
                gram += '_';
                gram += tokens[i + j];
            }
            out.push_back(std::move(gram));
        }
    }
    return out;
}

Vocabulary build_vocabulary(std::span<const std::vector<std::string>> docs, const VectorizerConfig& config)
{
    config.validate();
    std::map<std::string, std::pair<std::size_t, std::size_t>> stats;  // term -> (df, total count)
    for (const auto& doc : docs) {
        std::unordered_set<std::string> seen;
        for (std::string& gram : ngrams(doc, config.ngram_min, config.ngram_max)) {
            auto& entry = stats[gram];
            ++entry.second;
            if (seen.insert(std::move(gram)).second) {
                ++entry.first;
            }
        }
    }
    std::vector<std::pair<std::string, std::size_t>> kept;
    for (auto& [term, counts] : stats) {
        if (counts.first >= config.min_df) {
            kept.emplace_back(term, counts.second);
        }
    }
    if (kept.empty()) {
        throw DataError("empty vocabulary: no term reaches min_df=" + std::to_string(config.min_df) +
                        " (min_df too high)");
    }
    if (config.max_features && kept.size() > *config.max_features) {
        std::stable_sort(kept.begin(), kept.end(),
                         [](const auto& a, const auto& b) { return a.second > b.second; });
        kept.resize(*config.max_features);
    }
    Vocabulary vocab;
    vocab.terms.reserve(kept.size());
    for (auto& entry : kept) {
        vocab.terms.push_back(std::move(entry.first));
    }
    std::sort(vocab.terms.begin(), vocab.terms.end());
    for (std::size_t i = 0; i < vocab.terms.size(); ++i) {
        vocab.index.emplace(vocab.terms[i], i);
    }
    return vocab;
}

ClassTermMatrix make_class_term_matrix(CountMatrix counts)
{
    ClassTermMatrix m;
    m.counts = std::move(counts);
    m.term_frequency.resize(static_cast<std::size_t>(m.counts.cols()));
    for (Eigen::Index j = 0; j < m.counts.cols(); ++j) {
        m.term_frequency[static_cast<std::size_t>(j)] = m.counts.col(j).sum();
    }
    const std::int64_t total = m.counts.sum();
    m.average_class_size = m.counts.rows() > 0 ? static_cast<double>(total) / static_cast<double>(m.counts.rows()) : 0.0;
    return m;
}

ClassTermMatrix class_bag_of_words(std::span<const std::vector<std::string>> docs, std::span<const int> labels,
                                   const Vocabulary& vocab, std::size_t ngram_min, std::size_t ngram_max,
                                   std::optional<std::size_t> n_classes)
{
    if (docs.size() != labels.size()) {
        throw std::invalid_argument("class_bag_of_words: docs and labels differ in length");
    }
    int max_label = -1;
    for (int l : labels) {
        if (l < 0) {
            throw std::invalid_argument("class_bag_of_words: outlier labels must be removed first");
        }
        max_label = std::max(max_label, l);
    }
    const std::size_t rows = n_classes.value_or(static_cast<std::size_t>(max_label + 1));
    if (static_cast<std::size_t>(max_label + 1) > rows) {
        throw std::invalid_argument("class_bag_of_words: label exceeds n_classes");
    }
    CountMatrix counts = CountMatrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(vocab.size()));
    for (std::size_t d = 0; d < docs.size(); ++d) {
        for (const std::string& gram : ngrams(docs[d], ngram_min, ngram_max)) {
            if (auto col = vocab.find(gram)) {
                ++counts(labels[d], static_cast<Eigen::Index>(*col));
            }
        }
    }
    return make_class_term_matrix(std::move(counts));
}

Eigen::MatrixXd ctfidf(const ClassTermMatrix& m, const CtfidfConfig& config, Warnings* warnings)
{
    const Eigen::Index rows = m.counts.rows();
    const Eigen::Index cols = m.counts.cols();
    const double a = m.average_class_size;

    Eigen::VectorXd idf(cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        const auto f = static_cast<double>(m.term_frequency[static_cast<std::size_t>(j)]);
        if (f <= 0.0) {
            throw InvariantError("ctfidf: vocabulary term with zero frequency");
        }
        if (config.bm25_weighting) {
            const double argument = 1.0 + (a - f + 0.5) / (f + 0.5);
            ensure(argument > 0.0, "ctfidf: BM25 log argument must be positive");
            idf(j) = std::log(argument);
        } else {
            idf(j) = std::log(1.0 + a / f);
        }
    }

    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(rows, cols);
    for (Eigen::Index c = 0; c < rows; ++c) {
        const std::int64_t row_total = m.counts.row(c).sum();
        if (row_total == 0) {
            warn(warnings, "ctfidf: class " + std::to_string(c) + " has no tokens; weights set to zero");
            continue;
        }
        for (Eigen::Index j = 0; j < cols; ++j) {
            double tf = static_cast<double>(m.counts(c, j)) / static_cast<double>(row_total);
            if (config.reduce_frequent_words) {
                tf = std::sqrt(tf);
            }
            w(c, j) = tf * idf(j);
        }
    }
    return w;
}

std::vector<TopicRepresentation> top_terms(const Eigen::MatrixXd& weights, const Vocabulary& vocab, std::size_t top_k)
{
    if (static_cast<std::size_t>(weights.cols()) != vocab.size()) {
        throw std::invalid_argument("top_terms: weight columns do not match vocabulary");
    }
    std::vector<TopicRepresentation> out;
    out.reserve(static_cast<std::size_t>(weights.rows()));
    for (Eigen::Index c = 0; c < weights.rows(); ++c) {
        std::vector<std::size_t> candidates;
        for (Eigen::Index j = 0; j < weights.cols(); ++j) {
            if (weights(c, j) != 0.0) {
                candidates.push_back(static_cast<std::size_t>(j));
            }
        }
        // Columns are lexicographic, so a stable sort breaks ties by term.
        std::stable_sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
            return weights(c, static_cast<Eigen::Index>(a)) > weights(c, static_cast<Eigen::Index>(b));
        });
        if (candidates.size() > top_k) {
            candidates.resize(top_k);
        }
        TopicRepresentation rep;
        rep.topic_id = static_cast<int>(c);
        for (std::size_t j : candidates) {
            rep.terms.push_back(TermWeight{vocab.terms[j], weights(c, static_cast<Eigen::Index>(j))});
        }
        out.push_back(std::move(rep));
    }
    return out;
}

}  // namespace topicflow
