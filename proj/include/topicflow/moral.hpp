#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "topicflow/corpus.hpp"
#include "topicflow/errors.hpp"
#include "topicflow/evolve.hpp"

namespace topicflow {

enum class Foundation { Care, Fairness, Loyalty, Authority, Purity };

inline constexpr std::array<Foundation, 5> kFoundations = {Foundation::Care, Foundation::Fairness, Foundation::Loyalty,
                                                           Foundation::Authority, Foundation::Purity};

inline constexpr double kMinStrength = 1.0;
inline constexpr double kMaxStrength = 9.0;

/// Capitalised name, e.g. "Care".
std::string_view to_string(Foundation f) noexcept;
/// Lowercase column name, e.g. "care".
std::string_view column_name(Foundation f) noexcept;
/// Case-insensitive; also accepts the paired names ("care/harm", "harm").
std::optional<Foundation> parse_foundation(std::string_view text);

constexpr std::size_t index_of(Foundation f) noexcept { return static_cast<std::size_t>(f); }

struct LexiconEntry {
    Foundation foundation = Foundation::Care;
    double strength = 5.0;
};

struct MoralLexicon {
    std::unordered_map<std::string, std::vector<LexiconEntry>> entries;

    /// Sets or replaces the (lemma, foundation) strength. Returns false when an
    /// existing value was replaced. Throws std::invalid_argument out of [1, 9].
    bool set(const std::string& lemma, Foundation f, double strength);
    [[nodiscard]] std::size_t size() const noexcept;
};

/// TSV "lemma<TAB>foundation<TAB>strength", an optional header row, '#'
/// comments. Out-of-range strengths and unknown foundations are fatal with
/// the line number; a repeated (lemma, foundation) keeps the last value.
MoralLexicon load_lexicon(const std::filesystem::path& path, Warnings* warnings = nullptr);

struct MoralProfile {
    std::array<std::optional<double>, 5> scores{};
    std::array<std::size_t, 5> matched{};

    [[nodiscard]] const std::optional<double>& score(Foundation f) const { return scores[index_of(f)]; }
};

/// Per foundation, the mean strength over matched token occurrences.
MoralProfile score_document(std::span<const std::string> tokens, const MoralLexicon& lexicon);

struct ScoredDocument {
    std::string doc_id;
    Party party = Party::Democrat;
    MonthKey month;
    std::optional<LongevityClass> longevity;
    MoralProfile profile;
};

enum class GroupKey { Party, LongevityClass, Month };

/// "party", "longevity_class" or "month"; anything else throws
/// std::invalid_argument.
GroupKey parse_group_key(std::string_view text);

struct GroupAggregate {
    std::string group;
    std::array<std::optional<double>, 5> mean{};
    std::array<std::size_t, 5> count{};
};

/// Mean of present scores per group and foundation. Groups come out in a
/// fixed order (party D, R, I; longevity High, Medium, Short; months
/// ascending). Documents without a longevity class are skipped under that key.
std::vector<GroupAggregate> aggregate_scores(std::span<const ScoredDocument> docs, GroupKey key,
                                             Warnings* warnings = nullptr);

/// Order-independent mean: values are sorted before summation.
double stable_mean(std::vector<double> values);

}  // namespace topicflow
