#include "topicflow/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <thread>
#include <unordered_set>

#include <json.hpp>

#include "topicflow/cluster.hpp"
#include "topicflow/csv.hpp"
#include "topicflow/embed.hpp"
#include "topicflow/report.hpp"
#include "topicflow/rng.hpp"

namespace topicflow {

namespace fs = std::filesystem;
using nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

[[noreturn]] void rethrow_with_context(const std::string& prefix, const std::exception_ptr& error)
{
    try {
        std::rethrow_exception(error);
    } catch (const ConfigError& e) {
        throw ConfigError(prefix + e.what());
    } catch (const DataError& e) {
        throw DataError(prefix + e.what());
    } catch (const InvariantError& e) {
        throw InvariantError(prefix + e.what());
    } catch (const std::exception& e) {
        throw InvariantError(prefix + e.what());
    }
}

std::string read_file(const fs::path& path, std::string_view hint)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("missing artifact " + path.string() + " (" + std::string(hint) + ")");
    }
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

void write_file(const fs::path& path, const std::string& content)
{
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ConfigError("cannot write " + path.string());
    }
    out << content;
    if (!out) {
        throw ConfigError("failed writing " + path.string());
    }
}

fs::path artifact_path(const RunConfig& config, std::string_view name) { return config.output_dir / std::string(name); }

json parse_json(std::string_view text, std::string_view what)
{
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string(what) + ": " + e.what());
    }
}

MonthKey month_of(const json& j)
{
    const auto m = MonthKey::parse(j.get<std::string>());
    if (!m) {
        throw DataError("invalid month '" + j.get<std::string>() + "'");
    }
    return *m;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep)
{
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) {
            out += sep;
        }
        out += parts[i];
    }
    return out;
}

MonthModel model_month(const RunConfig& config, MonthKey month, std::span<const Document> docs,
                       const EmbeddingMatrix& embedding, Warnings* warnings)
{
    MonthModel model;
    model.month = month;
    model.documents = docs.size();

    std::vector<std::size_t> usable;
    for (std::size_t i = 0; i < embedding.rows(); ++i) {
        if (!embedding.all_oov[i]) {
            usable.push_back(i);
        }
    }
    model.embedded = usable.size();
    auto all_outliers = [&] {
        for (const Document& d : docs) {
            model.outlier_ids.push_back(d.id);
        }
    };

    std::size_t minimum = config.cluster.effective_min_documents();
    if (config.cluster.algorithm == ClusterAlgorithm::Hdbscan) {
        minimum = std::max(minimum, config.cluster.hdbscan.min_samples);
    }
    if (usable.size() < minimum) {
        warn(warnings, "month " + month.to_string() + ": " + std::to_string(usable.size()) +
                           " usable documents, below the minimum of " + std::to_string(minimum) + "; no topics");
        all_outliers();
        return model;
    }
    model.clustered = true;

    const EmbeddingMatrix selected = select_rows(embedding, usable);
    if (config.embedding.reduction == ReductionMethod::Pca && config.embedding.components > selected.dim()) {
        throw ConfigError("embedding.components (" + std::to_string(config.embedding.components) +
                          ") exceeds the embedding dimension " + std::to_string(selected.dim()));
    }
    const EmbeddingMatrix reduced = reduce(selected, config.embedding.reduction, config.embedding.components);

    ClusterAssignment assignment;
    if (config.cluster.algorithm == ClusterAlgorithm::Hdbscan) {
        assignment = hdbscan(reduced.values, config.cluster.hdbscan);
    } else {
        KMeansConfig km;
        km.k = config.cluster.k;
        km.seed = stream_seed(config.seed, "kmeans/" + month.to_string());
        km.max_iter = config.cluster.max_iter;
        km.tol = config.cluster.tol;
        assignment = kmeans(reduced.values, km);
    }
    if (assignment.n_clusters == 0) {
        warn(warnings, "month " + month.to_string() + ": clustering found no topics");
        all_outliers();
        return model;
    }

    std::vector<int> doc_label(docs.size(), -1);
    for (std::size_t r = 0; r < usable.size(); ++r) {
        doc_label[usable[r]] = assignment.labels[r];
    }
    std::vector<std::vector<std::string>> class_docs;
    std::vector<int> labels;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (doc_label[i] >= 0) {
            class_docs.push_back(docs[i].tokens);
            labels.push_back(doc_label[i]);
        }
    }
    const Vocabulary vocab = build_vocabulary(class_docs, config.vectorizer);
    const ClassTermMatrix m = class_bag_of_words(class_docs, labels, vocab, config.vectorizer.ngram_min,
                                                 config.vectorizer.ngram_max, assignment.n_clusters);
    const Eigen::MatrixXd weights = ctfidf(m, config.ctfidf, warnings);
    std::vector<TopicRepresentation> reps = top_terms(weights, vocab, config.top_k);

    model.topics.resize(assignment.n_clusters);
    for (std::size_t c = 0; c < assignment.n_clusters; ++c) {
        model.topics[c].id = static_cast<int>(c);
        model.topics[c].terms = std::move(reps[c].terms);
    }
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (doc_label[i] >= 0) {
            model.topics[static_cast<std::size_t>(doc_label[i])].doc_ids.push_back(docs[i].id);
        } else {
            model.outlier_ids.push_back(docs[i].id);
        }
    }
    return model;
}

template <typename Task>
void parallel_for(std::size_t n, std::size_t workers, Task task)
{
    std::atomic<std::size_t> next{0};
    auto loop = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            task(i);
        }
    };
    const std::size_t threads = std::min(workers, n);
    if (threads <= 1) {
        loop();
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back(loop);
    }
    for (std::thread& t : pool) {
        t.join();
    }
}

// Present scores of `f` among the documents accepted by `keep`.
std::vector<double> present_scores(std::span<const ScoredDocument> docs, Foundation f,
                                   const std::function<bool(const ScoredDocument&)>& keep)
{
    std::vector<double> out;
    for (const ScoredDocument& d : docs) {
        if (keep(d)) {
            if (const auto& s = d.profile.score(f)) {
                out.push_back(*s);
            }
        }
    }
    return out;
}

StatsRun two_sample(std::string hypothesis, std::string grouping, Foundation f, const std::string& label_a,
                    const std::vector<double>& a, const std::string& label_b, const std::vector<double>& b,
                    Alternative alternative)
{
    StatsRun run;
    run.hypothesis = std::move(hypothesis);
    run.grouping = std::move(grouping);
    run.foundation = f;
    if (a.empty() || b.empty()) {
        run.skipped = "no " + std::string(column_name(f)) + " scores for " + (a.empty() ? label_a : label_b);
        return run;
    }
    run.group_means = {{label_a, stable_mean(a)}, {label_b, stable_mean(b)}};
    const bool identical =
        std::all_of(a.begin(), a.end(), [&](double v) { return v == a.front(); }) &&
        std::all_of(b.begin(), b.end(), [&](double v) { return v == a.front(); });
    if (a.size() + b.size() < 3 && !identical) {
        run.skipped = "fewer than three observations";
        return run;
    }
    run.result = mann_whitney_u(a, b, alternative);
    return run;
}

std::string class_list(const std::vector<LongevityClass>& classes)
{
    std::vector<std::string> names;
    for (LongevityClass c : classes) {
        names.emplace_back(to_string(c));
    }
    return join(names, "/");
}

std::optional<Foundation> foundation_from_column(std::string_view name)
{
    for (Foundation f : kFoundations) {
        if (column_name(f) == name) {
            return f;
        }
    }
    return std::nullopt;
}

IngestArtifact ingest_from_json(std::string_view text)
{
    const json j = parse_json(text, "ingest.json");
    IngestArtifact a;
    try {
        a.records = j.at("records").get<std::size_t>();
        for (const json& s : j.at("skipped_rows")) {
            a.skipped.push_back(RowError{s.at("line").get<std::size_t>(), s.at("message").get<std::string>()});
        }
        a.dropped_ids = j.at("dropped_ids").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw DataError(std::string("ingest.json: ") + e.what());
    }
    return a;
}

std::vector<Document> load_documents(const RunConfig& config)
{
    return documents_from_jsonl(read_file(artifact_path(config, artifact::kDocuments), "run the ingest stage first"));
}

TopicsArtifact load_topics(const RunConfig& config)
{
    return topics_from_json(read_file(artifact_path(config, artifact::kTopics), "run the model stage first"));
}

EvolutionGraph load_evolution(const RunConfig& config)
{
    return evolution_from_json(read_file(artifact_path(config, artifact::kEvolution), "run the evolve stage first"));
}

std::optional<MoralLexicon> load_configured_lexicon(const RunConfig& config, Warnings* warnings)
{
    if (!config.inputs.moral_lexicon) {
        return std::nullopt;
    }
    return load_lexicon(*config.inputs.moral_lexicon, warnings);
}

std::vector<ScoredDocument> stats_inputs(const RunConfig& config, bool moral_available)
{
    const std::vector<Document> docs = load_documents(config);
    const TopicsArtifact topics = load_topics(config);
    const EvolutionGraph graph = load_evolution(config);
    std::vector<ScoredDocument> rows = score_documents(config, docs, document_longevity(topics, graph), nullptr);
    if (!moral_available) {
        return rows;
    }
    const std::vector<ScoredDocument> scored =
        moral_from_csv(read_file(artifact_path(config, artifact::kMoral), "run the moral stage first"));
    std::unordered_map<std::string, const ScoredDocument*> by_id;
    for (const ScoredDocument& s : scored) {
        by_id.emplace(s.doc_id, &s);
    }
    if (scored.size() != rows.size()) {
        throw DataError("moral.csv does not match documents.jsonl; rerun the moral stage");
    }
    for (ScoredDocument& row : rows) {
        auto it = by_id.find(row.doc_id);
        if (it == by_id.end()) {
            throw DataError("moral.csv has no row for document '" + row.doc_id + "'; rerun the moral stage");
        }
        row.profile = it->second->profile;
    }
    return rows;
}

}  // namespace

std::string_view to_string(Stage stage) noexcept
{
    switch (stage) {
    case Stage::Ingest: return "ingest";
    case Stage::Model: return "model";
    case Stage::Evolve: return "evolve";
    case Stage::Moral: return "moral";
    case Stage::Stats: return "stats";
    case Stage::Report: return "report";
    case Stage::Run: return "run";
    }
    return "?";
}

std::optional<Stage> parse_stage(std::string_view text)
{
    for (Stage s : {Stage::Ingest, Stage::Model, Stage::Evolve, Stage::Moral, Stage::Stats, Stage::Report, Stage::Run}) {
        if (to_string(s) == text) {
            return s;
        }
    }
    return std::nullopt;
}

std::string topic_name(const TopicRecord& topic, std::size_t n_terms)
{
    std::string name = std::to_string(topic.id);
    for (std::size_t i = 0; i < topic.terms.size() && i < n_terms; ++i) {
        name += '_';
        name += topic.terms[i].term;
    }
    return name;
}

std::size_t MonthModel::assigned() const noexcept
{
    std::size_t n = 0;
    for (const TopicRecord& t : topics) {
        n += t.size();
    }
    return n;
}

bool RunManifest::reconciles() const
{
    std::size_t topics = 0;
    std::size_t assigned = 0;
    std::size_t outliers = 0;
    std::size_t documents = 0;
    for (const MonthSummary& m : months) {
        if (m.assigned + m.outliers != m.documents) {
            return false;
        }
        topics += m.topics;
        assigned += m.assigned;
        outliers += m.outliers;
        documents += m.documents;
    }
    return topics == total_topics && assigned == total_assigned && outliers == total_outliers &&
           documents + dropped == records && records == dropped + total_assigned + total_outliers;
}

IngestArtifact ingest(const RunConfig& config, Warnings* warnings)
{
    std::ifstream in(config.inputs.corpus, std::ios::binary);
    if (!in) {
        throw ConfigError("inputs.corpus: cannot open " + config.inputs.corpus.string());
    }
    ParseOptions options;
    options.skip_malformed = config.preprocess.skip_malformed;
    ParseResult parsed = parse_records(in, config.corpus_format(), options);
    for (const RowError& e : parsed.skipped) {
        warn(warnings, "skipped corpus line " + std::to_string(e.line) + ": " + e.message);
    }
    if (parsed.records.empty()) {
        throw DataError("no documents in " + config.inputs.corpus.filename().string());
    }

    PreprocessConfig pre;
    if (config.inputs.stopwords) {
        pre.stopwords = load_stopwords(*config.inputs.stopwords);
    }
    if (config.inputs.lemmas) {
        pre.lemma_table = load_lemma_table(*config.inputs.lemmas);
    }
    pre.drop_retweet_marker = config.preprocess.drop_retweet_marker;
    pre.keep_emoji = config.preprocess.keep_emoji;
    pre.validate();

    PreprocessResult result = preprocess(parsed.records, pre);
    if (result.documents.empty()) {
        throw DataError("no documents left after preprocessing");
    }
    IngestArtifact artifact;
    artifact.records = parsed.records.size();
    artifact.skipped = std::move(parsed.skipped);
    artifact.dropped_ids = std::move(result.dropped_ids);
    artifact.documents = std::move(result.documents);
    return artifact;
}

TopicsArtifact model_topics(const RunConfig& config, const IngestArtifact& corpus, Warnings* warnings)
{
    if (corpus.documents.empty()) {
        throw DataError("no documents");
    }
    const auto bins = bin_by_month(corpus.documents);
    std::vector<std::pair<MonthKey, const std::vector<Document>*>> months;
    for (const auto& [month, docs] : bins) {
        months.emplace_back(month, &docs);
    }

    std::optional<WordVectorTable> table;
    std::optional<EmbeddingMatrix> precomputed;
    std::unordered_map<std::string, std::size_t> row_of;
    if (config.embedding.source == EmbeddingSource::WordVectors) {
        table = load_word_vectors(*config.inputs.word_vectors, warnings);
    } else {
        std::vector<std::string> ids;
        ids.reserve(corpus.documents.size());
        for (const Document& d : corpus.documents) {
            ids.push_back(d.id);
        }
        precomputed = load_precomputed(*config.inputs.embeddings, ids);
        for (std::size_t i = 0; i < ids.size(); ++i) {
            row_of.emplace(ids[i], i);
        }
    }

    std::vector<MonthModel> results(months.size());
    std::vector<Warnings> month_warnings(months.size());
    std::vector<std::exception_ptr> errors(months.size());
    parallel_for(months.size(), config.workers, [&](std::size_t i) {
        try {
            const std::vector<Document>& docs = *months[i].second;
            EmbeddingMatrix emb;
            if (table) {
                emb = embed_documents(docs, *table);
            } else {
                std::vector<std::size_t> rows;
                rows.reserve(docs.size());
                for (const Document& d : docs) {
                    rows.push_back(row_of.at(d.id));
                }
                emb = select_rows(*precomputed, rows);
            }
            results[i] = model_month(config, months[i].first, docs, emb, &month_warnings[i]);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    });
    for (std::size_t i = 0; i < months.size(); ++i) {
        if (errors[i]) {
            rethrow_with_context("stage model, month " + months[i].first.to_string() + ": ", errors[i]);
        }
        if (warnings != nullptr) {
            warnings->append(month_warnings[i]);
        }
    }
    TopicsArtifact artifact;
    artifact.months = std::move(results);
    return artifact;
}

EvolutionGraph evolve_topics(const RunConfig& config, const TopicsArtifact& topics)
{
    std::vector<MonthTopics> months;
    months.reserve(topics.months.size());
    for (const MonthModel& m : topics.months) {
        MonthTopics mt;
        mt.month = m.month;
        for (const TopicRecord& t : m.topics) {
            mt.topics.push_back(TopicRepresentation{t.id, t.terms});
        }
        months.push_back(std::move(mt));
    }
    const std::vector<EvolutionEdge> edges = link_all(months, config.evolve);
    return build_graph(std::span<const MonthTopics>(months), edges);
}

std::unordered_map<std::string, LongevityClass> document_longevity(const TopicsArtifact& topics,
                                                                  const EvolutionGraph& graph)
{
    std::unordered_map<std::string, LongevityClass> out;
    for (const MonthModel& m : topics.months) {
        for (const TopicRecord& t : m.topics) {
            const auto stage = graph.find(StageRef{m.month, t.id});
            if (!stage) {
                throw DataError("topic " + std::to_string(t.id) + " of " + m.month.to_string() +
                                " is missing from the evolution graph");
            }
            const LongevityClass c = graph.groups[graph.stages[*stage].group].longevity_class;
            for (const std::string& id : t.doc_ids) {
                out.emplace(id, c);
            }
        }
    }
    return out;
}

std::vector<ScoredDocument> score_documents(const RunConfig& config, std::span<const Document> documents,
                                            const std::unordered_map<std::string, LongevityClass>& longevity,
                                            const MoralLexicon* lexicon)
{
    std::vector<ScoredDocument> out;
    out.reserve(documents.size());
    for (const Document& d : documents) {
        ScoredDocument s;
        s.doc_id = d.id;
        s.party = d.party;
        s.month = d.month;
        if (auto it = longevity.find(d.id); it != longevity.end()) {
            s.longevity = it->second;
        }
        if (lexicon != nullptr) {
            s.profile = score_document(config.moral.pre_stopword ? d.all_lemmas : d.tokens, *lexicon);
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<StatsRun> run_statistics(const StatsSettings& settings, std::span<const ScoredDocument> docs,
                                     bool moral_available)
{
    std::vector<StatsRun> runs;
    if (settings.h1) {
        StatsRun run;
        run.hypothesis = "H1";
        run.grouping = "party_x_longevity";
        const std::vector<Party> parties = {Party::Democrat, Party::Republican, Party::Independent};
        const std::vector<LongevityClass> classes = {LongevityClass::High, LongevityClass::Medium,
                                                     LongevityClass::Short};
        std::vector<std::vector<std::int64_t>> counts(3, std::vector<std::int64_t>(3, 0));
        for (const ScoredDocument& d : docs) {
            if (d.longevity) {
                ++counts[static_cast<std::size_t>(d.party)][static_cast<std::size_t>(*d.longevity)];
            }
        }
        ContingencyTable table;
        std::vector<std::size_t> keep_cols;
        for (std::size_t c = 0; c < classes.size(); ++c) {
            std::int64_t total = 0;
            for (const auto& row : counts) {
                total += row[c];
            }
            if (total > 0) {
                keep_cols.push_back(c);
                table.col_labels.emplace_back(to_string(classes[c]));
            }
        }
        for (std::size_t r = 0; r < parties.size(); ++r) {
            std::vector<std::int64_t> row;
            for (std::size_t c : keep_cols) {
                row.push_back(counts[r][c]);
            }
            if (std::any_of(row.begin(), row.end(), [](std::int64_t v) { return v > 0; })) {
                table.counts.push_back(std::move(row));
                table.row_labels.emplace_back(to_string(parties[r]));
            }
        }
        if (table.rows() < 2 || table.col_labels.size() < 2) {
            run.skipped = "needs at least two parties and two longevity classes with documents";
        } else {
            run.result = chi_square(table);
        }
        run.table = std::move(table);
        runs.push_back(std::move(run));
    }
    if (!moral_available) {
        return runs;
    }
    if (settings.h2) {
        for (Foundation f : kFoundations) {
            const auto dem = present_scores(docs, f, [](const ScoredDocument& d) { return d.party == Party::Democrat; });
            const auto rep =
                present_scores(docs, f, [](const ScoredDocument& d) { return d.party == Party::Republican; });
            runs.push_back(two_sample("H2", "democrat_vs_republican", f, "Democrat", dem, "Republican", rep,
                                      settings.alternative));
        }
    }
    if (settings.h3) {
        for (LongevityGrouping g : settings.h3_groupings) {
            const auto [first, second] = grouping_sides(g);
            auto member_of = [](const std::vector<LongevityClass>& side) {
                return [&side](const ScoredDocument& d) {
                    return d.longevity && std::find(side.begin(), side.end(), *d.longevity) != side.end();
                };
            };
            for (Foundation f : kFoundations) {
                const auto a = present_scores(docs, f, member_of(first));
                const auto b = present_scores(docs, f, member_of(second));
                runs.push_back(two_sample("H3", std::string(to_string(g)), f, class_list(first), a,
                                          class_list(second), b, settings.alternative));
            }
        }
    }
    return runs;
}

RunManifest build_manifest(const RunConfig& config, const IngestArtifact& corpus, const TopicsArtifact& topics)
{
    RunManifest m;
    m.config_hash = config_hash(config);
    m.seed = config.seed;
    m.records = corpus.records;
    m.skipped_rows = corpus.skipped.size();
    m.dropped = corpus.dropped_ids.size();
    for (const MonthModel& month : topics.months) {
        MonthSummary s;
        s.month = month.month;
        s.documents = month.documents;
        s.embedded = month.embedded;
        s.topics = month.topics.size();
        s.assigned = month.assigned();
        s.outliers = month.outlier_ids.size();
        m.total_topics += s.topics;
        m.total_assigned += s.assigned;
        m.total_outliers += s.outliers;
        m.months.push_back(s);
    }
    return m;
}

std::string documents_to_jsonl(std::span<const Document> documents)
{
    std::string out;
    for (const Document& d : documents) {
        ojson j;
        j["id"] = d.id;
        j["author"] = d.author;
        j["party"] = std::string(1, party_code(d.party));
        j["account_type"] = to_string(d.account_type);
        j["month"] = d.month.to_string();
        j["tokens"] = d.tokens;
        j["all_lemmas"] = d.all_lemmas;
        j["hashtags"] = d.hashtags;
        j["mentions"] = d.mentions;
        j["urls"] = d.urls;
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::vector<Document> documents_from_jsonl(std::string_view text)
{
    std::vector<Document> docs;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        const std::size_t end = std::min(text.find('\n', start), text.size());
        const std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (line.empty()) {
            continue;
        }
        try {
            const json j = json::parse(line);
            Document d;
            d.id = j.at("id").get<std::string>();
            d.author = j.at("author").get<std::string>();
            const auto party = parse_party(j.at("party").get<std::string>());
            const auto account = parse_account_type(j.at("account_type").get<std::string>());
            if (!party || !account) {
                throw DataError("invalid party or account type");
            }
            d.party = *party;
            d.account_type = *account;
            d.month = month_of(j.at("month"));
            d.tokens = j.at("tokens").get<std::vector<std::string>>();
            d.all_lemmas = j.at("all_lemmas").get<std::vector<std::string>>();
            d.hashtags = j.at("hashtags").get<std::vector<std::string>>();
            d.mentions = j.at("mentions").get<std::vector<std::string>>();
            d.urls = j.at("urls").get<std::vector<std::string>>();
            docs.push_back(std::move(d));
        } catch (const std::exception& e) {
            throw DataError("documents.jsonl line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return docs;
}

std::string ingest_to_json(const IngestArtifact& a)
{
    ojson j;
    j["records"] = a.records;
    j["documents"] = a.documents.size();
    ojson skipped = ojson::array();
    for (const RowError& e : a.skipped) {
        skipped.push_back({{"line", e.line}, {"message", e.message}});
    }
    j["skipped_rows"] = skipped;
    j["dropped_ids"] = a.dropped_ids;
    return j.dump(2) + "\n";
}

std::string topics_to_json(const TopicsArtifact& topics)
{
    ojson months = ojson::array();
    for (const MonthModel& m : topics.months) {
        ojson jm;
        jm["month"] = m.month.to_string();
        jm["documents"] = m.documents;
        jm["embedded"] = m.embedded;
        jm["clustered"] = m.clustered;
        jm["outliers"] = m.outlier_ids.size();
        ojson list = ojson::array();
        for (const TopicRecord& t : m.topics) {
            ojson jt;
            jt["id"] = t.id;
            jt["name"] = topic_name(t);
            jt["size"] = t.size();
            ojson terms = ojson::array();
            ojson weights = ojson::array();
            for (const TermWeight& tw : t.terms) {
                terms.push_back(tw.term);
                weights.push_back(tw.weight);
            }
            jt["terms"] = terms;
            jt["weights"] = weights;
            jt["doc_ids"] = t.doc_ids;
            list.push_back(std::move(jt));
        }
        jm["topics"] = list;
        jm["outlier_ids"] = m.outlier_ids;
        months.push_back(std::move(jm));
    }
    ojson j;
    j["months"] = months;
    return j.dump(2) + "\n";
}

TopicsArtifact topics_from_json(std::string_view text)
{
    const json j = parse_json(text, "topics.json");
    TopicsArtifact out;
    try {
        for (const json& jm : j.at("months")) {
            MonthModel m;
            m.month = month_of(jm.at("month"));
            m.documents = jm.at("documents").get<std::size_t>();
            m.embedded = jm.at("embedded").get<std::size_t>();
            m.clustered = jm.at("clustered").get<bool>();
            for (const json& jt : jm.at("topics")) {
                TopicRecord t;
                t.id = jt.at("id").get<int>();
                const auto terms = jt.at("terms").get<std::vector<std::string>>();
                const auto weights = jt.at("weights").get<std::vector<double>>();
                if (terms.size() != weights.size()) {
                    throw DataError("terms and weights differ in length");
                }
                for (std::size_t i = 0; i < terms.size(); ++i) {
                    t.terms.push_back(TermWeight{terms[i], weights[i]});
                }
                t.doc_ids = jt.at("doc_ids").get<std::vector<std::string>>();
                m.topics.push_back(std::move(t));
            }
            m.outlier_ids = jm.at("outlier_ids").get<std::vector<std::string>>();
            out.months.push_back(std::move(m));
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("topics.json: ") + e.what());
    }
    return out;
}

std::string evolution_to_json(const EvolutionGraph& graph, const TopicsArtifact& topics)
{
    std::map<StageRef, std::string> names;
    for (const MonthModel& m : topics.months) {
        for (const TopicRecord& t : m.topics) {
            names[StageRef{m.month, t.id}] = topic_name(t);
        }
    }
    auto stage_id = [&](const StageRef& ref) { return graph.stages[graph.find(ref).value()].stage_id; };

    ojson stages = ojson::array();
    for (const TopicStage& s : graph.stages) {
        ojson js;
        js["stage_id"] = s.stage_id;
        js["month"] = s.ref.month.to_string();
        js["topic"] = s.ref.topic;
        auto it = names.find(s.ref);
        js["name"] = it == names.end() ? std::string() : it->second;
        js["role"] = to_string(s.role);
        js["in_degree"] = s.in_degree;
        js["out_degree"] = s.out_degree;
        js["split"] = s.is_split();
        js["merge"] = s.is_merge();
        js["group"] = graph.groups[s.group].letter;
        stages.push_back(std::move(js));
    }
    ojson edges = ojson::array();
    for (const EvolutionEdge& e : graph.edges) {
        ojson je;
        je["from"] = stage_id(e.from);
        je["to"] = stage_id(e.to);
        je["from_month"] = e.from.month.to_string();
        je["from_topic"] = e.from.topic;
        je["to_month"] = e.to.month.to_string();
        je["to_topic"] = e.to.topic;
        je["similarity"] = e.similarity;
        je["strong"] = e.strong;
        edges.push_back(std::move(je));
    }
    ojson groups = ojson::array();
    for (const TopicGroup& g : graph.groups) {
        ojson jg;
        jg["group"] = g.letter;
        jg["longevity_months"] = g.longevity_months;
        jg["longevity_class"] = to_string(g.longevity_class);
        jg["first_month"] = graph.stages[g.members.front()].ref.month.to_string();
        jg["last_month"] = graph.stages[g.members.back()].ref.month.to_string();
        std::vector<std::string> ids;
        for (std::size_t idx : g.members) {
            ids.push_back(graph.stages[idx].stage_id);
        }
        jg["stages"] = ids;
        groups.push_back(std::move(jg));
    }
    ojson j;
    j["stages"] = stages;
    j["edges"] = edges;
    j["groups"] = groups;
    return j.dump(2) + "\n";
}

EvolutionGraph evolution_from_json(std::string_view text)
{
    const json j = parse_json(text, "evolution.json");
    std::vector<StageRef> stages;
    std::vector<EvolutionEdge> edges;
    try {
        for (const json& js : j.at("stages")) {
            stages.push_back(StageRef{month_of(js.at("month")), js.at("topic").get<int>()});
        }
        for (const json& je : j.at("edges")) {
            EvolutionEdge e;
            e.from = StageRef{month_of(je.at("from_month")), je.at("from_topic").get<int>()};
            e.to = StageRef{month_of(je.at("to_month")), je.at("to_topic").get<int>()};
            e.similarity = je.at("similarity").get<double>();
            e.strong = je.at("strong").get<bool>();
            edges.push_back(e);
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("evolution.json: ") + e.what());
    }
    return build_graph(std::span<const StageRef>(stages), edges);
}

std::string moral_to_csv(std::span<const ScoredDocument> docs)
{
    std::ostringstream out;
    std::vector<std::string> header = {"doc_id", "party", "longevity_class"};
    for (Foundation f : kFoundations) {
        header.emplace_back(column_name(f));
    }
    csv::write_row(out, header);
    for (const ScoredDocument& d : docs) {
        std::vector<std::string> row = {d.doc_id, std::string(1, party_code(d.party)),
                                        d.longevity ? std::string(to_string(*d.longevity)) : std::string()};
        for (Foundation f : kFoundations) {
            const auto& s = d.profile.score(f);
            row.push_back(s ? csv::format_number(*s) : std::string());
        }
        csv::write_row(out, row);
    }
    return out.str();
}

std::vector<ScoredDocument> moral_from_csv(std::string_view text)
{
    std::istringstream in{std::string(text)};
    csv::Reader reader(in);
    const auto header = reader.next();
    if (!header || header->fields.size() != 3 + kFoundations.size() || header->fields[0] != "doc_id") {
        throw DataError("moral.csv: unexpected header");
    }
    std::vector<Foundation> order;
    for (std::size_t i = 3; i < header->fields.size(); ++i) {
        const auto f = foundation_from_column(header->fields[i]);
        if (!f) {
            throw DataError("moral.csv: unknown column '" + header->fields[i] + "'");
        }
        order.push_back(*f);
    }
    std::vector<ScoredDocument> out;
    while (auto row = reader.next()) {
        const std::string where = "moral.csv line " + std::to_string(row->line) + ": ";
        if (row->fields.size() != header->fields.size()) {
            throw DataError(where + "wrong field count");
        }
        ScoredDocument d;
        d.doc_id = row->fields[0];
        const auto party = parse_party(row->fields[1]);
        if (!party) {
            throw DataError(where + "invalid party");
        }
        d.party = *party;
        if (!row->fields[2].empty()) {
            d.longevity = parse_longevity_class(row->fields[2]);
            if (!d.longevity) {
                throw DataError(where + "invalid longevity class");
            }
        }
        for (std::size_t i = 0; i < order.size(); ++i) {
            const std::string& cell = row->fields[3 + i];
            if (cell.empty()) {
                continue;
            }
            try {
                std::size_t used = 0;
                const double v = std::stod(cell, &used);
                if (used != cell.size()) {
                    throw std::invalid_argument("trailing characters");
                }
                d.profile.scores[index_of(order[i])] = v;
                d.profile.matched[index_of(order[i])] = 1;
            } catch (const std::exception&) {
                throw DataError(where + "invalid score '" + cell + "'");
            }
        }
        out.push_back(std::move(d));
    }
    return out;
}

std::string stats_to_json(std::span<const StatsRun> runs)
{
    ojson list = ojson::array();
    for (const StatsRun& r : runs) {
        ojson j;
        j["hypothesis"] = r.hypothesis;
        j["grouping"] = r.grouping;
        j["foundation"] = r.foundation ? ojson(column_name(*r.foundation)) : ojson(nullptr);
        j["method"] = r.result ? ojson(r.result->method) : ojson(nullptr);
        j["statistic"] = r.result ? ojson(r.result->statistic) : ojson(nullptr);
        j["p_value"] = r.result ? ojson(r.result->p_value) : ojson(nullptr);
        if (r.result && r.result->df) {
            j["df"] = *r.result->df;
        }
        if (r.result && r.result->n1) {
            j["n1"] = *r.result->n1;
            j["n2"] = *r.result->n2;
        }
        ojson means = ojson::object();
        for (const auto& [label, value] : r.group_means) {
            means[label] = value;
        }
        j["group_means"] = means;
        if (r.table) {
            j["table"] = {{"rows", r.table->row_labels}, {"cols", r.table->col_labels}, {"counts", r.table->counts}};
        }
        j["skipped"] = r.skipped ? ojson(*r.skipped) : ojson(nullptr);
        list.push_back(std::move(j));
    }
    return list.dump(2) + "\n";
}

std::vector<StatsRun> stats_from_json(std::string_view text)
{
    const json list = parse_json(text, "stats.json");
    std::vector<StatsRun> out;
    try {
        for (const json& j : list) {
            StatsRun r;
            r.hypothesis = j.at("hypothesis").get<std::string>();
            r.grouping = j.at("grouping").get<std::string>();
            if (!j.at("foundation").is_null()) {
                r.foundation = foundation_from_column(j.at("foundation").get<std::string>());
            }
            if (!j.at("p_value").is_null()) {
                TestResult t;
                t.method = j.at("method").get<std::string>();
                t.statistic = j.at("statistic").get<double>();
                t.p_value = j.at("p_value").get<double>();
                if (j.contains("df")) {
                    t.df = j.at("df").get<int>();
                }
                if (j.contains("n1")) {
                    t.n1 = j.at("n1").get<std::size_t>();
                    t.n2 = j.at("n2").get<std::size_t>();
                }
                r.result = t;
            }
            // Parsed as ordered_json so labels keep their written order.
            const ojson means = ojson::parse(j.at("group_means").dump());
            for (auto it = means.begin(); it != means.end(); ++it) {
                r.group_means.emplace_back(it.key(), it.value().get<double>());
            }
            if (j.contains("table")) {
                ContingencyTable t;
                t.row_labels = j["table"].at("rows").get<std::vector<std::string>>();
                t.col_labels = j["table"].at("cols").get<std::vector<std::string>>();
                t.counts = j["table"].at("counts").get<std::vector<std::vector<std::int64_t>>>();
                r.table = std::move(t);
            }
            if (!j.at("skipped").is_null()) {
                r.skipped = j.at("skipped").get<std::string>();
            }
            out.push_back(std::move(r));
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("stats.json: ") + e.what());
    }
    return out;
}

std::string manifest_to_json(const RunManifest& m)
{
    ojson j;
    j["config_hash"] = m.config_hash;
    j["seed"] = m.seed;
    j["records"] = m.records;
    j["skipped_rows"] = m.skipped_rows;
    j["dropped"] = m.dropped;
    ojson months = ojson::array();
    for (const MonthSummary& s : m.months) {
        months.push_back({{"month", s.month.to_string()},
                          {"documents", s.documents},
                          {"embedded", s.embedded},
                          {"topics", s.topics},
                          {"assigned", s.assigned},
                          {"outliers", s.outliers}});
    }
    j["months"] = months;
    j["totals"] = {{"topics", m.total_topics}, {"assigned", m.total_assigned}, {"outliers", m.total_outliers}};
    j["reconciled"] = m.reconciles();
    return j.dump(2) + "\n";
}

RunManifest manifest_from_json(std::string_view text)
{
    const json j = parse_json(text, "manifest.json");
    RunManifest m;
    try {
        m.config_hash = j.at("config_hash").get<std::string>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.records = j.at("records").get<std::size_t>();
        m.skipped_rows = j.at("skipped_rows").get<std::size_t>();
        m.dropped = j.at("dropped").get<std::size_t>();
        for (const json& js : j.at("months")) {
            MonthSummary s;
            s.month = month_of(js.at("month"));
            s.documents = js.at("documents").get<std::size_t>();
            s.embedded = js.at("embedded").get<std::size_t>();
            s.topics = js.at("topics").get<std::size_t>();
            s.assigned = js.at("assigned").get<std::size_t>();
            s.outliers = js.at("outliers").get<std::size_t>();
            m.months.push_back(s);
        }
        m.total_topics = j.at("totals").at("topics").get<std::size_t>();
        m.total_assigned = j.at("totals").at("assigned").get<std::size_t>();
        m.total_outliers = j.at("totals").at("outliers").get<std::size_t>();
    } catch (const json::exception& e) {
        throw DataError(std::string("manifest.json: ") + e.what());
    }
    return m;
}

void run_stage(Stage stage, const RunConfig& config, Warnings* warnings)
{
    if (stage == Stage::Run) {
        run_all(config, warnings);
        return;
    }
    try {
        switch (stage) {
        case Stage::Ingest: {
            const IngestArtifact a = ingest(config, warnings);
            write_file(artifact_path(config, artifact::kDocuments), documents_to_jsonl(a.documents));
            write_file(artifact_path(config, artifact::kIngest), ingest_to_json(a));
            break;
        }
        case Stage::Model: {
            IngestArtifact a;
            a.documents = load_documents(config);
            write_file(artifact_path(config, artifact::kTopics), topics_to_json(model_topics(config, a, warnings)));
            break;
        }
        case Stage::Evolve: {
            const TopicsArtifact topics = load_topics(config);
            write_file(artifact_path(config, artifact::kEvolution),
                       evolution_to_json(evolve_topics(config, topics), topics));
            break;
        }
        case Stage::Moral: {
            const auto lexicon = load_configured_lexicon(config, warnings);
            const fs::path out = artifact_path(config, artifact::kMoral);
            if (!lexicon) {
                warn(warnings, "no moral lexicon configured; moral scoring skipped");
                fs::remove(out);
                break;
            }
            const std::vector<Document> docs = load_documents(config);
            const auto longevity = document_longevity(load_topics(config), load_evolution(config));
            write_file(out, moral_to_csv(score_documents(config, docs, longevity, &*lexicon)));
            break;
        }
        case Stage::Stats: {
            const bool moral = config.inputs.moral_lexicon.has_value();
            const auto rows = stats_inputs(config, moral);
            write_file(artifact_path(config, artifact::kStats), stats_to_json(run_statistics(config.stats, rows, moral)));
            break;
        }
        case Stage::Report: {
            IngestArtifact a =
                ingest_from_json(read_file(artifact_path(config, artifact::kIngest), "run the ingest stage first"));
            const TopicsArtifact topics = load_topics(config);
            const EvolutionGraph graph = load_evolution(config);
            const auto runs =
                stats_from_json(read_file(artifact_path(config, artifact::kStats), "run the stats stage first"));
            const RunManifest manifest = build_manifest(config, a, topics);
            ensure(manifest.reconciles(), "manifest counts do not reconcile");
            std::size_t topic_count = 0;
            for (const MonthModel& m : topics.months) {
                topic_count += m.topics.size();
            }
            ensure(graph.stages.size() == topic_count, "evolution graph and topics disagree");
            write_file(artifact_path(config, artifact::kManifest), manifest_to_json(manifest));
            write_file(artifact_path(config, artifact::kReport),
                       render_report(manifest, topics, graph, runs, config.inputs.moral_lexicon.has_value()));
            break;
        }
        case Stage::Run: break;
        }
    } catch (...) {
        const std::exception_ptr error = std::current_exception();
        try {
            std::rethrow_exception(error);
        } catch (const std::exception& e) {
            if (std::string_view(e.what()).starts_with("stage ")) {
                throw;
            }
        }
        rethrow_with_context("stage " + std::string(to_string(stage)) + ": ", error);
    }
}

RunManifest run_all(const RunConfig& config, Warnings* warnings)
{
    for (Stage s : {Stage::Ingest, Stage::Model, Stage::Evolve, Stage::Moral, Stage::Stats, Stage::Report}) {
        run_stage(s, config, warnings);
    }
    return manifest_from_json(read_file(artifact_path(config, artifact::kManifest), "report stage output"));
}

}  // namespace topicflow
