#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "topicflow/corpus.hpp"
#include "topicflow/represent.hpp"

namespace topicflow {

/// One topic in one month.
struct StageRef {
    MonthKey month;
    int topic = 0;

    auto operator<=>(const StageRef&) const = default;
};

struct MonthTopics {
    MonthKey month;
    std::vector<TopicRepresentation> topics;
};

/// Sorted union of the terms of two representations.
std::vector<std::string> joint_vocabulary(const TopicRepresentation& a, const TopicRepresentation& b);

/// Term weights laid out over `joint_vocab`; absent terms are 0.
std::vector<double> representation_vector(const TopicRepresentation& rep, std::span<const std::string> joint_vocab);

/// u.v / (|u| |v|), 0 when either vector is zero. Lengths must match.
double cosine(std::span<const double> u, std::span<const double> v);

double representation_similarity(const TopicRepresentation& a, const TopicRepresentation& b);

struct LinkConfig {
    double threshold = 0.0;
    /// Accept similarity == threshold as well (the ">= 0" reading).
    bool inclusive = false;
    /// Months a topic may skip and still continue; 0 = consecutive only.
    int gap_tolerance = 0;
};

struct EvolutionEdge {
    StageRef from;
    StageRef to;
    double similarity = 0.0;
    bool strong = false;  // similarity > 0.5
};

/// Candidate pairs pass the threshold; a pair is kept when the target is the
/// source's best successor or the source is the target's best predecessor.
/// Ties go to the lower topic id.
std::vector<EvolutionEdge> link_months(const MonthTopics& current, const MonthTopics& next, const LinkConfig& config);

/// Links every consecutive pair in `months` (sorted by month). With a gap
/// tolerance, stages left without a successor are then linked across up to
/// that many empty months to stages still without a predecessor.
std::vector<EvolutionEdge> link_all(std::span<const MonthTopics> months, const LinkConfig& config);

enum class StageRole { Emergence, Stagnation, Disappearance };
enum class LongevityClass { High, Medium, Short };

std::string_view to_string(StageRole role) noexcept;
std::string_view to_string(LongevityClass c) noexcept;
std::optional<LongevityClass> parse_longevity_class(std::string_view text);

/// High: more than six months; Medium: five or six; Short: fewer than five.
LongevityClass classify_longevity(int months);

struct TopicStage {
    StageRef ref;
    std::string stage_id;  // group letter + ordinal, e.g. "B3"
    StageRole role = StageRole::Emergence;
    std::size_t in_degree = 0;
    std::size_t out_degree = 0;
    std::size_t group = 0;  // index into EvolutionGraph::groups

    [[nodiscard]] bool is_split() const noexcept { return out_degree > 1; }
    [[nodiscard]] bool is_merge() const noexcept { return in_degree > 1; }
};

struct TopicGroup {
    std::string letter;
    std::vector<std::size_t> members;  // stage indices, ordered by (month, topic)
    int longevity_months = 1;
    LongevityClass longevity_class = LongevityClass::Short;
};

struct EvolutionGraph {
    std::vector<TopicStage> stages;  // ordered by (month, topic)
    std::vector<EvolutionEdge> edges;
    std::vector<TopicGroup> groups;

    [[nodiscard]] std::optional<std::size_t> find(const StageRef& ref) const;
};

/// Weakly connected components lettered A, B, ... by first month, then
/// descending stage count, then earliest stage. Longevity is the inclusive
/// calendar-month span of the longest root-to-leaf branch.
std::vector<TopicGroup> group_and_longevity(const EvolutionGraph& graph);

/// Assigns roles from edge degrees (no incoming: Emergence; incoming but no
/// outgoing: Disappearance; both: Stagnation), groups, and stage ids.
/// Edges must join known stages forward in time.
EvolutionGraph build_graph(std::span<const StageRef> stages, std::span<const EvolutionEdge> edges);

EvolutionGraph build_graph(std::span<const MonthTopics> months, std::span<const EvolutionEdge> edges);

/// Spreadsheet-style letters: 0 -> A, 25 -> Z, 26 -> AA.
std::string group_letter(std::size_t index);

}  // namespace topicflow
