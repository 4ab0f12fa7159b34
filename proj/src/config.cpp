#include "topicflow/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "topicflow/rng.hpp"

namespace topicflow {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

/// One JSON object being read; tracks consumed keys so leftovers can be
/// reported with their full path.
class Section {
  public:
    Section(const json& node, std::string path) : node_(node), path_(std::move(path))
    {
        if (!node_.is_object()) {
            fail("", "expected an object");
        }
    }

    [[noreturn]] void fail(std::string_view key, const std::string& message) const
    {
        throw ConfigError(key_path(key) + ": " + message);
    }

    [[nodiscard]] std::string key_path(std::string_view key) const
    {
        if (key.empty()) {
            return path_.empty() ? "<root>" : path_;
        }
        return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
    }

    const json* find(std::string_view key)
    {
        seen_.emplace(key);
        auto it = node_.find(std::string(key));
        if (it == node_.end()) {
            return nullptr;
        }
        return &*it;
    }

    std::optional<Section> section(std::string_view key)
    {
        const json* v = find(key);
        if (v == nullptr) {
            return std::nullopt;
        }
        return Section(*v, key_path(key));
    }

    bool boolean(std::string_view key, bool fallback)
    {
        const json* v = find(key);
        if (v == nullptr) {
            return fallback;
        }
        if (!v->is_boolean()) {
            fail(key, "expected true or false");
        }
        return v->get<bool>();
    }

    std::uint64_t unsigned_integer(std::string_view key, std::uint64_t fallback, std::uint64_t min_value)
    {
        const json* v = find(key);
        if (v == nullptr) {
            return fallback;
        }
        return as_unsigned(key, *v, min_value);
    }

    std::optional<std::uint64_t> optional_unsigned(std::string_view key, std::uint64_t min_value)
    {
        const json* v = find(key);
        if (v == nullptr || v->is_null()) {
            return std::nullopt;
        }
        return as_unsigned(key, *v, min_value);
    }

    double number(std::string_view key, double fallback, double lo, double hi)
    {
        const json* v = find(key);
        if (v == nullptr) {
            return fallback;
        }
        if (!v->is_number()) {
            fail(key, "expected a number");
        }
        const double x = v->get<double>();
        if (!(x >= lo && x <= hi)) {
            std::ostringstream msg;
            msg << "must lie in [" << lo << ", " << hi << "], got " << x;
            fail(key, msg.str());
        }
        return x;
    }

    std::optional<std::string> string(std::string_view key)
    {
        const json* v = find(key);
        if (v == nullptr || v->is_null()) {
            return std::nullopt;
        }
        if (!v->is_string()) {
            fail(key, "expected a string");
        }
        return v->get<std::string>();
    }

    std::uint64_t as_unsigned(std::string_view key, const json& v, std::uint64_t min_value) const
    {
        if (v.is_number_unsigned()) {
            const auto x = v.get<std::uint64_t>();
            if (x < min_value) {
                fail(key, "must be >= " + std::to_string(min_value) + ", got " + std::to_string(x));
            }
            return x;
        }
        if (v.is_number_integer()) {
            fail(key, "must be >= " + std::to_string(min_value) + ", got " + std::to_string(v.get<std::int64_t>()));
        }
        fail(key, "expected a non-negative integer");
    }

    void finish() const
    {
        for (auto it = node_.begin(); it != node_.end(); ++it) {
            if (!seen_.contains(it.key())) {
                throw ConfigError(key_path(it.key()) + ": unknown key");
            }
        }
    }

  private:
    const json& node_;
    std::string path_;
    std::set<std::string, std::less<>> seen_;
};

fs::path resolve(const fs::path& base, const std::string& text)
{
    fs::path p(text);
    if (p.is_relative()) {
        p = base / p;
    }
    return p.lexically_normal();
}

std::string_view reduction_name(ReductionMethod m) { return m == ReductionMethod::Pca ? "pca" : "identity"; }
std::string_view source_name(EmbeddingSource s) { return s == EmbeddingSource::Precomputed ? "precomputed" : "word2vec"; }
std::string_view algorithm_name(ClusterAlgorithm a) { return a == ClusterAlgorithm::KMeans ? "kmeans" : "hdbscan"; }
std::string_view format_name(InputFormat f) { return f == InputFormat::JsonLines ? "jsonl" : "csv"; }

std::optional<InputFormat> parse_format(std::string_view text)
{
    if (text == "csv") {
        return InputFormat::Csv;
    }
    if (text == "json" || text == "jsonl") {
        return InputFormat::JsonLines;
    }
    return std::nullopt;
}

void read_inputs(Section s, const fs::path& base, InputPaths& in)
{
    auto path_of = [&](std::string_view key) -> std::optional<fs::path> {
        if (auto text = s.string(key)) {
            if (text->empty()) {
                s.fail(key, "path is empty");
            }
            return resolve(base, *text);
        }
        return std::nullopt;
    };
    auto corpus = path_of("corpus");
    if (!corpus) {
        s.fail("corpus", "required");
    }
    in.corpus = *corpus;
    if (auto f = s.string("corpus_format")) {
        in.corpus_format = parse_format(*f);
        if (!in.corpus_format) {
            s.fail("corpus_format", "expected 'csv' or 'jsonl', got '" + *f + "'");
        }
    }
    in.stopwords = path_of("stopwords");
    in.lemmas = path_of("lemmas");
    in.word_vectors = path_of("word_vectors");
    in.embeddings = path_of("embeddings");
    in.moral_lexicon = path_of("moral_lexicon");
    s.finish();
}

void read_embedding(std::optional<Section> s, const InputPaths& in, EmbeddingSettings& e)
{
    e.source = in.embeddings ? EmbeddingSource::Precomputed : EmbeddingSource::WordVectors;
    if (s) {
        if (auto src = s->string("source")) {
            if (*src == "word2vec" || *src == "word_vectors") {
                e.source = EmbeddingSource::WordVectors;
            } else if (*src == "precomputed") {
                e.source = EmbeddingSource::Precomputed;
            } else {
                s->fail("source", "expected 'word2vec' or 'precomputed', got '" + *src + "'");
            }
        }
        if (auto red = s->string("reduction")) {
            if (*red == "identity" || *red == "base") {
                e.reduction = ReductionMethod::Identity;
            } else if (*red == "pca") {
                e.reduction = ReductionMethod::Pca;
            } else {
                s->fail("reduction", "expected 'identity' or 'pca', got '" + *red + "'");
            }
        }
        e.components = s->unsigned_integer("components", e.components, 1);
        s->finish();
    }
    if (e.source == EmbeddingSource::WordVectors && !in.word_vectors) {
        throw ConfigError("inputs.word_vectors: required when embedding.source is word2vec");
    }
    if (e.source == EmbeddingSource::Precomputed && !in.embeddings) {
        throw ConfigError("inputs.embeddings: required when embedding.source is precomputed");
    }
}

void read_cluster(Section s, ClusterSettings& c)
{
    if (auto alg = s.string("algorithm")) {
        if (*alg == "hdbscan") {
            c.algorithm = ClusterAlgorithm::Hdbscan;
        } else if (*alg == "kmeans") {
            c.algorithm = ClusterAlgorithm::KMeans;
        } else {
            s.fail("algorithm", "expected 'hdbscan' or 'kmeans', got '" + *alg + "'");
        }
    }
    c.hdbscan.min_cluster_size = s.unsigned_integer("min_cluster_size", c.hdbscan.min_cluster_size, 2);
    c.hdbscan.min_samples = s.unsigned_integer("min_samples", c.hdbscan.min_samples, 1);
    c.k = s.unsigned_integer("k", c.k, 1);
    c.max_iter = s.unsigned_integer("max_iter", c.max_iter, 1);
    c.tol = s.number("tol", c.tol, 0.0, 1e6);
    c.min_documents = s.optional_unsigned("min_documents", 1);
    s.finish();
}

void read_vectorizer(Section s, VectorizerConfig& v)
{
    if (const json* range = s.find("ngram_range")) {
        if (!range->is_array() || range->size() != 2 || !(*range)[0].is_number_unsigned() ||
            !(*range)[1].is_number_unsigned()) {
            s.fail("ngram_range", "expected [lo, hi] with positive integers");
        }
        v.ngram_min = (*range)[0].get<std::size_t>();
        v.ngram_max = (*range)[1].get<std::size_t>();
        if (v.ngram_min < 1 || v.ngram_min > v.ngram_max) {
            s.fail("ngram_range", "must satisfy 1 <= lo <= hi");
        }
    }
    v.min_df = s.unsigned_integer("min_df", v.min_df, 1);
    if (const json* mf = s.find("max_features")) {
        v.max_features = mf->is_null() ? std::nullopt : std::optional<std::size_t>(s.as_unsigned("max_features", *mf, 1));
    }
    s.finish();
}

void read_stats(Section s, StatsSettings& st)
{
    st.h1 = s.boolean("h1", st.h1);
    st.h2 = s.boolean("h2", st.h2);
    st.h3 = s.boolean("h3", st.h3);
    if (const json* g = s.find("h3_groupings")) {
        if (!g->is_array()) {
            s.fail("h3_groupings", "expected a list of grouping names");
        }
        st.h3_groupings.clear();
        for (const json& item : *g) {
            const auto parsed = item.is_string() ? parse_grouping(item.get<std::string>()) : std::nullopt;
            if (!parsed) {
                s.fail("h3_groupings", "unknown grouping " + item.dump());
            }
            st.h3_groupings.push_back(*parsed);
        }
    }
    if (auto alt = s.string("alternative")) {
        try {
            st.alternative = parse_alternative(*alt);
        } catch (const std::invalid_argument&) {
            s.fail("alternative", "expected 'two-sided', 'less' or 'greater', got '" + *alt + "'");
        }
    }
    s.finish();
}

std::string relative_text(const fs::path& p, const fs::path& base)
{
    const fs::path rel = p.lexically_relative(base.lexically_normal());
    return (rel.empty() ? p : rel).generic_string();
}

}  // namespace

std::string_view to_string(LongevityGrouping g) noexcept
{
    switch (g) {
    case LongevityGrouping::HighVsMedium: return "high_vs_medium";
    case LongevityGrouping::MediumVsShort: return "medium_vs_short";
    case LongevityGrouping::HighVsShort: return "high_vs_short";
    case LongevityGrouping::HighMediumVsShort: return "high_medium_vs_short";
    case LongevityGrouping::HighVsMediumShort: return "high_vs_medium_short";
    }
    return "?";
}

std::optional<LongevityGrouping> parse_grouping(std::string_view text)
{
    for (LongevityGrouping g : kAllGroupings) {
        if (to_string(g) == text) {
            return g;
        }
    }
    return std::nullopt;
}

std::pair<std::vector<LongevityClass>, std::vector<LongevityClass>> grouping_sides(LongevityGrouping g)
{
    using L = LongevityClass;
    switch (g) {
    case LongevityGrouping::HighVsMedium: return {{L::High}, {L::Medium}};
    case LongevityGrouping::MediumVsShort: return {{L::Medium}, {L::Short}};
    case LongevityGrouping::HighVsShort: return {{L::High}, {L::Short}};
    case LongevityGrouping::HighMediumVsShort: return {{L::High, L::Medium}, {L::Short}};
    case LongevityGrouping::HighVsMediumShort: return {{L::High}, {L::Medium, L::Short}};
    }
    return {};
}

std::size_t ClusterSettings::effective_min_documents() const
{
    if (min_documents) {
        return *min_documents;
    }
    return algorithm == ClusterAlgorithm::KMeans ? k : 2 * hdbscan.min_cluster_size;
}

InputFormat RunConfig::corpus_format() const
{
    if (inputs.corpus_format) {
        return *inputs.corpus_format;
    }
    const std::string ext = inputs.corpus.extension().string();
    return (ext == ".jsonl" || ext == ".json" || ext == ".ndjson") ? InputFormat::JsonLines : InputFormat::Csv;
}

RunConfig parse_config(std::string_view json_text, const fs::path& base_dir, std::optional<std::uint64_t> seed_override)
{
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig cfg;
    cfg.base_dir = base_dir.lexically_normal();
    Section top(root, "");

    auto inputs = top.section("inputs");
    if (!inputs) {
        top.fail("inputs", "required");
    }
    read_inputs(*inputs, cfg.base_dir, cfg.inputs);

    if (auto s = top.section("preprocess")) {
        cfg.preprocess.drop_retweet_marker = s->boolean("drop_retweet_marker", cfg.preprocess.drop_retweet_marker);
        cfg.preprocess.keep_emoji = s->boolean("keep_emoji", cfg.preprocess.keep_emoji);
        cfg.preprocess.skip_malformed = s->boolean("skip_malformed", cfg.preprocess.skip_malformed);
        s->finish();
    }
    read_embedding(top.section("embedding"), cfg.inputs, cfg.embedding);
    if (auto s = top.section("cluster")) {
        read_cluster(*s, cfg.cluster);
    }
    if (auto s = top.section("vectorizer")) {
        read_vectorizer(*s, cfg.vectorizer);
    }
    if (auto s = top.section("ctfidf")) {
        cfg.ctfidf.bm25_weighting = s->boolean("bm25_weighting", cfg.ctfidf.bm25_weighting);
        cfg.ctfidf.reduce_frequent_words = s->boolean("reduce_frequent_words", cfg.ctfidf.reduce_frequent_words);
        cfg.top_k = s->unsigned_integer("top_k", cfg.top_k, 1);
        s->finish();
    }
    if (auto s = top.section("evolve")) {
        cfg.evolve.threshold = s->number("threshold", cfg.evolve.threshold, -1.0, 1.0);
        cfg.evolve.inclusive = s->boolean("inclusive", cfg.evolve.inclusive);
        cfg.evolve.gap_tolerance = static_cast<int>(s->unsigned_integer("gap_tolerance", 0, 0));
        if (cfg.evolve.gap_tolerance > 24) {
            s->fail("gap_tolerance", "must be <= 24");
        }
        s->finish();
    }
    if (auto s = top.section("moral")) {
        cfg.moral.pre_stopword = s->boolean("pre_stopword", cfg.moral.pre_stopword);
        s->finish();
    }
    if (auto s = top.section("stats")) {
        read_stats(*s, cfg.stats);
    }

    const json* seed = top.find("seed");
    if (seed_override) {
        cfg.seed = *seed_override;
        if (seed != nullptr) {
            top.as_unsigned("seed", *seed, 0);
        }
    } else if (seed != nullptr) {
        cfg.seed = top.as_unsigned("seed", *seed, 0);
    } else {
        top.fail("seed", "required (set it in the config or pass --seed)");
    }
    cfg.output_dir = resolve(cfg.base_dir, top.string("output_dir").value_or("out"));
    cfg.workers = top.unsigned_integer("workers", 1, 1);
    top.finish();
    return cfg;
}

void check_input_files(const RunConfig& config)
{
    auto check = [](const char* key, const std::optional<fs::path>& p) {
        std::error_code ec;
        if (p && !fs::is_regular_file(*p, ec)) {
            throw ConfigError(std::string("inputs.") + key + ": file not found: " + p->string());
        }
    };
    check("corpus", config.inputs.corpus);
    check("stopwords", config.inputs.stopwords);
    check("lemmas", config.inputs.lemmas);
    check("word_vectors", config.inputs.word_vectors);
    check("embeddings", config.inputs.embeddings);
    check("moral_lexicon", config.inputs.moral_lexicon);
}

RunConfig validate_config(const fs::path& path, std::optional<std::uint64_t> seed_override)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }
    std::ostringstream text;
    text << in.rdbuf();
    fs::path base = path.parent_path();
    if (base.empty()) {
        base = ".";
    }
    RunConfig cfg = parse_config(text.str(), fs::absolute(base), seed_override);
    check_input_files(cfg);
    return cfg;
}

std::string canonical_json(const RunConfig& c, bool include_runtime)
{
    // nlohmann::json keeps object keys sorted.
    json j;
    auto put_path = [&](const char* key, const std::optional<fs::path>& p) {
        j["inputs"][key] = p ? json(relative_text(*p, c.base_dir)) : json(nullptr);
    };
    put_path("corpus", c.inputs.corpus);
    j["inputs"]["corpus_format"] = format_name(c.corpus_format());
    put_path("stopwords", c.inputs.stopwords);
    put_path("lemmas", c.inputs.lemmas);
    put_path("word_vectors", c.inputs.word_vectors);
    put_path("embeddings", c.inputs.embeddings);
    put_path("moral_lexicon", c.inputs.moral_lexicon);

    j["preprocess"] = {{"drop_retweet_marker", c.preprocess.drop_retweet_marker},
                       {"keep_emoji", c.preprocess.keep_emoji},
                       {"skip_malformed", c.preprocess.skip_malformed}};
    j["embedding"] = {{"source", source_name(c.embedding.source)},
                      {"reduction", reduction_name(c.embedding.reduction)},
                      {"components", c.embedding.components}};
    j["cluster"] = {{"algorithm", algorithm_name(c.cluster.algorithm)},
                    {"min_cluster_size", c.cluster.hdbscan.min_cluster_size},
                    {"min_samples", c.cluster.hdbscan.min_samples},
                    {"k", c.cluster.k},
                    {"max_iter", c.cluster.max_iter},
                    {"tol", c.cluster.tol},
                    {"min_documents", c.cluster.effective_min_documents()}};
    j["vectorizer"] = {{"ngram_range", {c.vectorizer.ngram_min, c.vectorizer.ngram_max}},
                       {"min_df", c.vectorizer.min_df},
                       {"max_features", c.vectorizer.max_features ? json(*c.vectorizer.max_features) : json(nullptr)}};
    j["ctfidf"] = {{"bm25_weighting", c.ctfidf.bm25_weighting},
                   {"reduce_frequent_words", c.ctfidf.reduce_frequent_words},
                   {"top_k", c.top_k}};
    j["evolve"] = {{"threshold", c.evolve.threshold},
                   {"inclusive", c.evolve.inclusive},
                   {"gap_tolerance", c.evolve.gap_tolerance}};
    j["moral"] = {{"pre_stopword", c.moral.pre_stopword}};
    json groupings = json::array();
    for (LongevityGrouping g : c.stats.h3_groupings) {
        groupings.push_back(to_string(g));
    }
    j["stats"] = {{"h1", c.stats.h1},
                  {"h2", c.stats.h2},
                  {"h3", c.stats.h3},
                  {"h3_groupings", groupings},
                  {"alternative", to_string(c.stats.alternative)}};
    j["seed"] = c.seed;
    if (include_runtime) {
        j["output_dir"] = relative_text(c.output_dir, c.base_dir);
        j["workers"] = c.workers;
    }
    return j.dump(2);
}

std::string config_hash(const RunConfig& config)
{
    const std::uint64_t h = fnv1a(canonical_json(config, false));
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace topicflow
