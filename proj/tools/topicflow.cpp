// Command-line driver: one subcommand per pipeline stage plus `run`.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "topicflow/config.hpp"
#include "topicflow/errors.hpp"
#include "topicflow/pipeline.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitInternal = 4;

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::string format;
};

topicflow::RunConfig load(const Options& opt)
{
    topicflow::RunConfig cfg = topicflow::validate_config(opt.config, opt.seed);
    if (!opt.out.empty()) {
        cfg.output_dir = std::filesystem::absolute(opt.out).lexically_normal();
    }
    if (opt.workers) {
        cfg.workers = *opt.workers;
    }
    if (opt.format == "csv") {
        cfg.inputs.corpus_format = topicflow::InputFormat::Csv;
    } else if (opt.format == "json" || opt.format == "jsonl") {
        cfg.inputs.corpus_format = topicflow::InputFormat::JsonLines;
    }
    return cfg;
}

std::string describe(const std::string& name)
{
    if (name == "run") {
        return "Run every stage";
    }
    if (name == "validate") {
        return "Print the resolved configuration";
    }
    return "Run the " + name + " stage";
}

int execute(const std::string& command, const Options& opt)
{
    const topicflow::RunConfig cfg = load(opt);
    if (command == "validate") {
        std::cout << topicflow::canonical_json(cfg) << "\n";
        return 0;
    }
    const auto stage = topicflow::parse_stage(command);
    if (!stage) {
        throw topicflow::ConfigError("unknown command '" + command + "'");
    }
    topicflow::Warnings warnings;
    if (*stage == topicflow::Stage::Run) {
        const topicflow::RunManifest m = topicflow::run_all(cfg, &warnings);
        for (const std::string& w : warnings.messages) {
            std::cerr << "warning: " << w << "\n";
        }
        std::cout << "run complete: " << m.records - m.dropped << " documents, " << m.months.size() << " months, "
                  << m.total_topics << " topics, " << m.total_assigned << " assigned, " << m.total_outliers
                  << " outliers -> " << cfg.output_dir.string() << "\n";
        return 0;
    }
    topicflow::run_stage(*stage, cfg, &warnings);
    for (const std::string& w : warnings.messages) {
        std::cerr << "warning: " << w << "\n";
    }
    std::cout << command << " complete -> " << cfg.output_dir.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Monthly topic modelling, topic evolution and moral-foundation statistics"};
    app.require_subcommand(1);
    Options opt;
    std::string selected;
    for (const char* name : {"ingest", "model", "evolve", "moral", "stats", "report", "run", "validate"}) {
        CLI::App* sub = app.add_subcommand(name, describe(name));
        sub->add_option("--config", opt.config, "Run configuration (JSON)")->required();
        sub->add_option("--out", opt.out, "Output directory, overrides output_dir");
        sub->add_option("--seed", opt.seed, "Random seed, overrides the config");
        sub->add_option("--workers", opt.workers, "Months processed in parallel")->check(CLI::PositiveNumber);
        sub->add_option("--format", opt.format, "Corpus format")->check(CLI::IsMember({"json", "jsonl", "csv"}));
        sub->callback([&selected, name] { selected = name; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        return execute(selected, opt);
    } catch (const topicflow::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const topicflow::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const topicflow::InvariantError& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}
