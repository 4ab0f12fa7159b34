#include <doctest.h>

#include <cstdlib>
#include <set>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "support.hpp"
#include "topicflow/config.hpp"
#include "topicflow/errors.hpp"
#include "topicflow/pipeline.hpp"

using namespace topicflow;
namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kArtifacts = {"ingest.json", "documents.jsonl", "topics.json", "evolution.json",
                                             "moral.csv",   "stats.json",      "manifest.json", "report.md"};

fs::path synthetic_dir()
{
    return test::data_dir() / "synthetic";
}

/// The bundled synthetic config writing to `out`.
RunConfig synthetic_config(const fs::path& out, std::size_t workers = 4)
{
    RunConfig c = parse_config(test::read_file(synthetic_dir() / "config.json"), synthetic_dir());
    c.output_dir = out;
    c.workers = workers;
    return c;
}

/// Synthetic inputs with `corpus` swapped in; optionally without the lexicon.
RunConfig custom_config(const test::TempDir& dir, std::string_view corpus, bool lexicon = true)
{
    test::write_file(dir / "corpus.csv", corpus);
    nlohmann::json j = {{"inputs",
                         {{"corpus", (dir / "corpus.csv").string()},
                          {"stopwords", (test::data_dir() / "stopwords_en.txt").string()},
                          {"lemmas", (test::data_dir() / "lemmas_en.tsv").string()},
                          {"word_vectors", (synthetic_dir() / "word_vectors.txt").string()}}},
                        {"seed", 5},
                        {"output_dir", (dir / "out").string()}};
    if (lexicon) {
        j["inputs"]["moral_lexicon"] = (synthetic_dir() / "moral_lexicon.tsv").string();
    }
    test::write_file(dir / "config.json", j.dump());
    return validate_config(dir / "config.json");
}

/// Header plus the synthetic rows whose timestamp starts with `prefix`.
std::string synthetic_rows(std::string_view prefix)
{
    std::istringstream in(test::read_file(synthetic_dir() / "corpus.csv"));
    std::string line;
    std::getline(in, line);
    std::string out = line + "\n";
    while (std::getline(in, line)) {
        const auto comma = line.find(',');
        if (line.compare(comma + 1, prefix.size(), prefix) == 0) {
            out += line + "\n";
        }
    }
    return out;
}

int run_cli(const std::string& args)
{
    const std::string command = std::string(TOPICFLOW_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(command.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("run_all on the synthetic corpus matches the golden manifest")
{
    test::TempDir dir("pipeline");
    const RunManifest m = run_all(synthetic_config(dir.path()));
    CHECK(m.reconciles());
    CHECK(m.records == m.dropped + m.total_assigned + m.total_outliers);
    CHECK(test::read_file(dir / "manifest.json") == test::read_file(synthetic_dir() / "golden_manifest.json"));
    for (const std::string& name : kArtifacts) {
        CHECK(fs::exists(dir / name));
    }
}

TEST_CASE("repeated runs and worker counts give byte-identical artifacts")
{
    test::TempDir a("pipeline");
    test::TempDir b("pipeline");
    test::TempDir c("pipeline");
    run_all(synthetic_config(a.path(), 4));
    run_all(synthetic_config(b.path(), 4));
    run_all(synthetic_config(c.path(), 1));
    for (const std::string& name : kArtifacts) {
        CAPTURE(name);
        const std::string first = test::read_file(a / name);
        CHECK_FALSE(first.empty());
        CHECK(first == test::read_file(b / name));
        CHECK(first == test::read_file(c / name));
    }
}

TEST_CASE("stage-by-stage execution equals run_all")
{
    test::TempDir whole("pipeline");
    test::TempDir staged("pipeline");
    run_all(synthetic_config(whole.path()));
    const RunConfig config = synthetic_config(staged.path());
    for (Stage s : {Stage::Ingest, Stage::Model, Stage::Evolve, Stage::Moral, Stage::Stats, Stage::Report}) {
        run_stage(s, config);
    }
    for (const std::string& name : kArtifacts) {
        CAPTURE(name);
        CHECK(test::read_file(whole / name) == test::read_file(staged / name));
    }
}

TEST_CASE("a stage without its inputs fails")
{
    test::TempDir dir("pipeline");
    CHECK_THROWS(run_stage(Stage::Evolve, synthetic_config(dir.path())));
}

TEST_CASE("artifacts are mutually consistent")
{
    test::TempDir dir("pipeline");
    run_all(synthetic_config(dir.path()));
    const TopicsArtifact topics = topics_from_json(test::read_file(dir / "topics.json"));
    const EvolutionGraph graph = evolution_from_json(test::read_file(dir / "evolution.json"));
    const RunManifest manifest = manifest_from_json(test::read_file(dir / "manifest.json"));

    std::set<std::pair<std::string, int>> present;
    std::set<std::string> assigned;
    for (const MonthModel& month : topics.months) {
        for (const TopicRecord& t : month.topics) {
            present.emplace(month.month.to_string(), t.id);
            for (const std::string& id : t.doc_ids) {
                CHECK(assigned.insert(id).second);
            }
        }
        for (const std::string& id : month.outlier_ids) {
            CHECK(assigned.insert(id).second);
        }
    }
    CHECK(assigned.size() == manifest.total_assigned + manifest.total_outliers);
    CHECK(graph.stages.size() == present.size());
    CHECK(graph.stages.size() == manifest.total_topics);
    for (const TopicStage& s : graph.stages) {
        CHECK(present.contains({s.ref.month.to_string(), s.ref.topic}));
        CHECK(graph.groups.at(s.group).letter == s.stage_id.substr(0, graph.groups.at(s.group).letter.size()));
    }
    for (const EvolutionEdge& e : graph.edges) {
        CHECK(graph.find(e.from).has_value());
        CHECK(graph.find(e.to).has_value());
        CHECK(e.from.month < e.to.month);
    }
    std::size_t members = 0;
    for (const TopicGroup& g : graph.groups) {
        members += g.members.size();
        CHECK(g.longevity_class == classify_longevity(g.longevity_months));
    }
    CHECK(members == graph.stages.size());

    // Every scored document belongs to the ingested corpus.
    const auto docs = documents_from_jsonl(test::read_file(dir / "documents.jsonl"));
    const auto scored = moral_from_csv(test::read_file(dir / "moral.csv"));
    CHECK(scored.size() == docs.size());
    CHECK(docs.size() == manifest.records - manifest.dropped);
}

TEST_CASE("report tables")
{
    test::TempDir dir("pipeline");
    run_all(synthetic_config(dir.path()));
    const std::string report = test::read_file(dir / "report.md");
    const auto h2 = report.find("## H2");
    REQUIRE(h2 != std::string::npos);
    const std::string section = report.substr(h2, report.find("## H3") - h2);
    CHECK(section.find("| Moral Foundation | p-value | Dem. Avg. | Rep. Avg. |") != std::string::npos);
    for (const char* f : {"| Care |", "| Fairness |", "| Loyalty |", "| Authority |", "| Purity |"}) {
        CHECK(section.find(f) != std::string::npos);
    }
    CHECK(report.find("| Year | Month | Nbr. Topics | Two Most Frequent Topics |") != std::string::npos);
    CHECK(report.find("N/A") != std::string::npos);  // January has too few documents
}

TEST_CASE("without a lexicon the moral sections are omitted")
{
    test::TempDir dir("pipeline");
    Warnings warnings;
    run_all(custom_config(dir, synthetic_rows("2021-0"), false), &warnings);
    const std::string report = test::read_file(dir / "out" / "report.md");
    CHECK(report.find("omitted") != std::string::npos);
    CHECK(report.find("## H1") != std::string::npos);
    CHECK(report.find("## H2") == std::string::npos);
    const auto runs = stats_from_json(test::read_file(dir / "out" / "stats.json"));
    for (const StatsRun& r : runs) {
        CHECK(r.hypothesis == "H1");
    }
}

TEST_CASE("a single month yields stages and no edges")
{
    test::TempDir dir("pipeline");
    const RunManifest m = run_all(custom_config(dir, synthetic_rows("2021-02")));
    REQUIRE(m.months.size() == 1);
    CHECK(m.total_topics > 0);
    const EvolutionGraph graph = evolution_from_json(test::read_file(dir / "out" / "evolution.json"));
    CHECK(graph.stages.size() == m.total_topics);
    CHECK(graph.edges.empty());
    for (const TopicGroup& g : graph.groups) {
        CHECK(g.longevity_months == 1);
    }
}

TEST_CASE("an empty corpus is a data error")
{
    test::TempDir dir("pipeline");
    const RunConfig config = custom_config(dir, "id,timestamp,author,party,account_type,text\n");
    try {
        run_all(config);
        FAIL("expected a DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("no documents") != std::string::npos);
    }
}

TEST_CASE("command-line exit codes")
{
    test::TempDir dir("cli");
    const std::string config = (synthetic_dir() / "config.json").string();
    const std::string out = " --out " + (dir / "out").string();
    CHECK(run_cli("validate --config " + config) == 0);
    CHECK(run_cli("run --config " + config + out) == 0);
    CHECK(fs::exists(dir / "out" / "report.md"));
    CHECK(run_cli("model --config " + config + out + " --workers 1") == 0);

    CHECK(run_cli("run --config " + (dir / "absent.json").string()) == 2);
    CHECK(run_cli("run") == 2);
    CHECK(run_cli("frobnicate --config " + config) == 2);
    test::write_file(dir / "unknown.json", R"({"inputs": {"corpus": "x.csv"}, "seed": 1, "colour": 2})");
    CHECK(run_cli("validate --config " + (dir / "unknown.json").string()) == 2);

    custom_config(dir, "id,timestamp,author,party,account_type,text\n");
    CHECK(run_cli("run --config " + (dir / "config.json").string()) == 3);
    custom_config(dir, "id,timestamp,author,party,account_type,text\nx1,not-a-date,a,D,personal,hello\n");
    CHECK(run_cli("ingest --config " + (dir / "config.json").string()) == 3);
}
