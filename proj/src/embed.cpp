#include "topicflow/embed.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "topicflow/csv.hpp"

namespace topicflow {

namespace {

std::vector<std::string_view> split_spaces(std::string_view line)
{
    std::vector<std::string_view> parts;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) {
            ++i;
        }
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') {
            ++i;
        }
        if (i > start) {
            parts.push_back(line.substr(start, i - start));
        }
    }
    return parts;
}

bool parse_double(std::string_view s, double& out)
{
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

bool is_count_header(const std::vector<std::string_view>& parts)
{
    if (parts.size() != 2) {
        return false;
    }
    return std::all_of(parts.begin(), parts.end(), [](std::string_view p) {
        return !p.empty() && std::all_of(p.begin(), p.end(), [](char c) { return c >= '0' && c <= '9'; });
    });
}

}  // namespace

WordVectorTable load_word_vectors(const std::filesystem::path& path, Warnings* warnings)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open word vectors " + path.string());
    }
    WordVectorTable table;
    std::string line;
    std::size_t line_no = 0;
    bool first_content = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        const auto parts = split_spaces(line);
        if (parts.empty()) {
            continue;
        }
        if (first_content) {
            first_content = false;
            if (is_count_header(parts)) {
                continue;
            }
        }
        const std::size_t dim = parts.size() - 1;
        if (table.dim == 0) {
            if (dim < 2) {
                throw DataError(path.string() + ":" + std::to_string(line_no) +
                                ": word vectors need at least 2 dimensions");
            }
            table.dim = dim;
        } else if (dim != table.dim) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(table.dim) + " components, found " + std::to_string(dim));
        }
        Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
        for (std::size_t j = 0; j < dim; ++j) {
            double value = 0.0;
            if (!parse_double(parts[j + 1], value)) {
                throw DataError(path.string() + ":" + std::to_string(line_no) + ": invalid component '" +
                                std::string(parts[j + 1]) + "'");
            }
            v(static_cast<Eigen::Index>(j)) = value;
        }
        auto [it, inserted] = table.vectors.insert_or_assign(std::string(parts[0]), std::move(v));
        if (!inserted) {
            warn(warnings, path.string() + ":" + std::to_string(line_no) + ": duplicate token '" + it->first +
                               "', keeping the last vector");
        }
    }
    if (table.dim == 0) {
        throw DataError(path.string() + ": no word vectors");
    }
    return table;
}

EmbeddingMatrix embed_documents(std::span<const Document> docs, const WordVectorTable& table)
{
    EmbeddingMatrix out;
    const auto dim = static_cast<Eigen::Index>(table.dim);
    out.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(docs.size()), dim);
    out.doc_ids.reserve(docs.size());
    out.all_oov.reserve(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
        std::size_t hits = 0;
        for (const std::string& token : docs[i].tokens) {
            auto it = table.vectors.find(token);
            if (it != table.vectors.end()) {
                sum += it->second;
                ++hits;
            }
        }
        if (hits > 0) {
            out.values.row(static_cast<Eigen::Index>(i)) = (sum / static_cast<double>(hits)).transpose();
        }
        out.doc_ids.push_back(docs[i].id);
        out.all_oov.push_back(hits == 0);
    }
    return out;
}

EmbeddingMatrix load_precomputed(const std::filesystem::path& path, std::span<const std::string> corpus_ids)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open embeddings " + path.string());
    }
    csv::Reader reader(in);
    auto header = reader.next();
    if (!header || header->fields.size() < 2 || header->fields[0] != "doc_id") {
        throw DataError(path.string() + ": header must be 'doc_id,e0,e1,...'");
    }
    const std::size_t dim = header->fields.size() - 1;

    std::unordered_map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < corpus_ids.size(); ++i) {
        position.emplace(corpus_ids[i], i);
    }

    EmbeddingMatrix out;
    out.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(corpus_ids.size()), static_cast<Eigen::Index>(dim));
    out.doc_ids.assign(corpus_ids.begin(), corpus_ids.end());
    out.all_oov.assign(corpus_ids.size(), false);
    std::vector<bool> seen(corpus_ids.size(), false);
    std::vector<std::string> unknown;

    while (auto row = reader.next()) {
        if (row->fields.size() == 1 && row->fields[0].empty()) {
            continue;
        }
        if (row->fields.size() != dim + 1) {
            throw DataError(path.string() + ":" + std::to_string(row->line) + ": expected " + std::to_string(dim) +
                            " components, found " + std::to_string(row->fields.size() - 1));
        }
        auto it = position.find(row->fields[0]);
        if (it == position.end()) {
            unknown.push_back(row->fields[0]);
            continue;
        }
        if (seen[it->second]) {
            throw DataError(path.string() + ":" + std::to_string(row->line) + ": duplicate doc_id '" +
                            row->fields[0] + "'");
        }
        seen[it->second] = true;
        for (std::size_t j = 0; j < dim; ++j) {
            double value = 0.0;
            if (!parse_double(row->fields[j + 1], value)) {
                throw DataError(path.string() + ":" + std::to_string(row->line) + ": invalid component '" +
                                row->fields[j + 1] + "'");
            }
            out.values(static_cast<Eigen::Index>(it->second), static_cast<Eigen::Index>(j)) = value;
        }
    }
    auto join = [](const std::vector<std::string>& ids) {
        std::string s;
        for (const auto& id : ids) {
            s += (s.empty() ? "" : ", ") + id;
        }
        return s;
    };
    if (!unknown.empty()) {
        throw DataError(path.string() + ": ids not in corpus: " + join(unknown));
    }
    std::vector<std::string> missing;
    for (std::size_t i = 0; i < corpus_ids.size(); ++i) {
        if (!seen[i]) {
            missing.push_back(corpus_ids[i]);
        }
    }
    if (!missing.empty()) {
        throw DataError(path.string() + ": missing embeddings for: " + join(missing));
    }
    return out;
}

EmbeddingMatrix select_rows(const EmbeddingMatrix& x, std::span<const std::size_t> rows)
{
    EmbeddingMatrix out;
    out.values.resize(static_cast<Eigen::Index>(rows.size()), x.values.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.values.row(static_cast<Eigen::Index>(i)) = x.values.row(static_cast<Eigen::Index>(rows[i]));
        out.doc_ids.push_back(x.doc_ids[rows[i]]);
        out.all_oov.push_back(x.all_oov[rows[i]]);
    }
    return out;
}

PcaModel fit_pca(const Eigen::MatrixXd& data, std::size_t out_dim)
{
    const auto dim = static_cast<std::size_t>(data.cols());
    if (out_dim == 0 || out_dim > dim) {
        throw std::invalid_argument("PCA out_dim must be in [1, " + std::to_string(dim) + "], got " +
                                    std::to_string(out_dim));
    }
    if (data.rows() < 2) {
        throw std::invalid_argument("PCA needs at least two rows");
    }
    PcaModel model;
    model.mean = data.colwise().mean().transpose();
    const Eigen::MatrixXd centered = data.rowwise() - model.mean.transpose();
    const Eigen::MatrixXd covariance = (centered.transpose() * centered) / static_cast<double>(data.rows() - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(covariance);
    if (solver.info() != Eigen::Success) {
        throw InvariantError("PCA eigendecomposition did not converge");
    }
    // Eigen returns ascending eigenvalues.
    std::vector<Eigen::Index> order(dim);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return solver.eigenvalues()(a) > solver.eigenvalues()(b);
    });
    model.components.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(out_dim));
    model.explained_variance.resize(static_cast<Eigen::Index>(out_dim));
    for (std::size_t k = 0; k < out_dim; ++k) {
        Eigen::VectorXd axis = solver.eigenvectors().col(order[k]);
        Eigen::Index pivot = 0;
        for (Eigen::Index j = 1; j < axis.size(); ++j) {
            if (std::abs(axis(j)) > std::abs(axis(pivot))) {
                pivot = j;
            }
        }
        if (axis(pivot) < 0) {
            axis = -axis;
        }
        model.components.col(static_cast<Eigen::Index>(k)) = axis;
        model.explained_variance(static_cast<Eigen::Index>(k)) = std::max(0.0, solver.eigenvalues()(order[k]));
    }
    return model;
}

EmbeddingMatrix reduce(const EmbeddingMatrix& x, ReductionMethod method, std::size_t out_dim)
{
    if (method == ReductionMethod::Identity) {
        return x;
    }
    if (out_dim == 0 || out_dim > x.dim()) {
        throw std::invalid_argument("PCA out_dim must be in [1, " + std::to_string(x.dim()) + "], got " +
                                    std::to_string(out_dim));
    }
    std::vector<std::size_t> fit_rows;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        if (!x.all_oov[i]) {
            fit_rows.push_back(i);
        }
    }
    const Eigen::MatrixXd fit_data = select_rows(x, fit_rows).values;
    const PcaModel model = fit_pca(fit_data, out_dim);

    EmbeddingMatrix out;
    out.doc_ids = x.doc_ids;
    out.all_oov = x.all_oov;
    out.values = Eigen::MatrixXd::Zero(x.values.rows(), static_cast<Eigen::Index>(out_dim));
    for (std::size_t i : fit_rows) {
        const auto r = static_cast<Eigen::Index>(i);
        out.values.row(r) = (x.values.row(r) - model.mean.transpose()) * model.components;
    }
    return out;
}

}  // namespace topicflow
