#pragma once

#include <span>
#include <string>

#include "topicflow/evolve.hpp"
#include "topicflow/pipeline.hpp"

namespace topicflow {

/// Markdown summary: run totals, per-month topics, topic groups with
/// longevity, the party x longevity test and the moral-foundation tables.
/// Moral sections are replaced by a notice when no lexicon was configured.
std::string render_report(const RunManifest& manifest, const TopicsArtifact& topics, const EvolutionGraph& graph,
                          std::span<const StatsRun> runs, bool moral_available);

}  // namespace topicflow
