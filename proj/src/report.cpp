#include "topicflow/report.hpp"

#include <array>
#include <map>
#include <sstream>

#include "topicflow/config.hpp"
#include "topicflow/csv.hpp"

namespace topicflow {

namespace {

constexpr std::array<const char*, 12> kMonthNames = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                                     "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};

std::string spaced_name(const TopicRecord& t, std::size_t n_terms = 4)
{
    std::string out = std::to_string(t.id);
    for (std::size_t i = 0; i < t.terms.size() && i < n_terms; ++i) {
        out += ' ';
        out += t.terms[i].term;
    }
    return out;
}

std::string p_text(const StatsRun& r)
{
    return r.result ? csv::format_fixed(r.result->p_value, 4) : std::string("n/a");
}

std::string mean_text(const StatsRun& r, std::size_t i)
{
    return i < r.group_means.size() ? csv::format_fixed(r.group_means[i].second, 2) : std::string("n/a");
}

std::string grouping_title(std::string_view name)
{
    const auto g = parse_grouping(name);
    if (!g) {
        return std::string(name);
    }
    auto side = [](const std::vector<LongevityClass>& classes) {
        std::string out;
        for (std::size_t i = 0; i < classes.size(); ++i) {
            out += (i > 0 ? "/" : "");
            out += to_string(classes[i]);
        }
        return out;
    };
    const auto [a, b] = grouping_sides(*g);
    return side(a) + " vs. " + side(b);
}

void foundation_table(std::ostringstream& out, std::span<const StatsRun> runs, const std::string& col_a,
                      const std::string& col_b)
{
    out << "| Moral Foundation | p-value | " << col_a << " | " << col_b << " |\n";
    out << "|---|---|---|---|\n";
    for (const StatsRun& r : runs) {
        out << "| " << (r.foundation ? to_string(*r.foundation) : "?") << " | " << p_text(r) << " | "
            << mean_text(r, 0) << " | " << mean_text(r, 1) << " |\n";
    }
    for (const StatsRun& r : runs) {
        if (r.skipped) {
            out << "\n" << (r.foundation ? to_string(*r.foundation) : "?") << ": not tested (" << *r.skipped << ").\n";
        }
    }
}

}  // namespace

std::string render_report(const RunManifest& manifest, const TopicsArtifact& topics, const EvolutionGraph& graph,
                          std::span<const StatsRun> runs, bool moral_available)
{
    std::ostringstream out;
    const std::size_t documents = manifest.records - manifest.dropped;
    out << "# Topic evolution report\n\n";
    out << "| Item | Value |\n|---|---|\n";
    out << "| Config hash | `" << manifest.config_hash << "` |\n";
    out << "| Seed | " << manifest.seed << " |\n";
    out << "| Records | " << manifest.records << " |\n";
    out << "| Skipped rows | " << manifest.skipped_rows << " |\n";
    out << "| Dropped after cleaning | " << manifest.dropped << " |\n";
    out << "| Documents | " << documents << " |\n";
    out << "| Months | " << manifest.months.size() << " |\n";
    out << "| Topics extracted | " << manifest.total_topics << " |\n";
    out << "| Documents assigned to a topic | " << manifest.total_assigned << " |\n";
    out << "| Outliers | " << manifest.total_outliers << " |\n";
    if (documents > 0) {
        out << "| Assignment rate | "
            << csv::format_fixed(100.0 * static_cast<double>(manifest.total_assigned) / static_cast<double>(documents), 1)
            << "% |\n";
    }

    out << "\n## Topics per month\n\n";
    out << "| Year | Month | Nbr. Topics | Two Most Frequent Topics |\n|---|---|---|---|\n";
    int last_year = -1;
    for (const MonthModel& m : topics.months) {
        std::string names;
        for (std::size_t i = 0; i < m.topics.size() && i < 2; ++i) {
            names += (i > 0 ? "; " : "") + spaced_name(m.topics[i]);
        }
        out << "| " << (m.month.year != last_year ? std::to_string(m.month.year) : std::string()) << " | "
            << kMonthNames[static_cast<std::size_t>(m.month.month - 1)] << " | " << m.topics.size() << " | "
            << (names.empty() ? "N/A" : names) << " |\n";
        last_year = m.month.year;
    }

    std::map<StageRef, std::string> names;
    for (const MonthModel& m : topics.months) {
        for (const TopicRecord& t : m.topics) {
            names[StageRef{m.month, t.id}] = topic_name(t);
        }
    }
    out << "\n## Topic groups\n\n";
    if (graph.groups.empty()) {
        out << "No topics were found, so there are no groups.\n";
    } else {
        out << "| Group | Longevity (months) | Class | Span | Topics |\n|---|---|---|---|---|\n";
        for (const TopicGroup& g : graph.groups) {
            std::string members;
            for (std::size_t i = 0; i < g.members.size(); ++i) {
                const TopicStage& s = graph.stages[g.members[i]];
                members += (i > 0 ? ", " : "") + s.stage_id + " " + names[s.ref];
            }
            out << "| " << g.letter << " | " << g.longevity_months << " | " << to_string(g.longevity_class) << " | "
                << graph.stages[g.members.front()].ref.month.to_string() << " to "
                << graph.stages[g.members.back()].ref.month.to_string() << " | " << members << " |\n";
        }
    }

    std::vector<StatsRun> h2;
    std::map<std::string, std::vector<StatsRun>> h3;
    std::vector<std::string> h3_order;
    for (const StatsRun& r : runs) {
        if (r.hypothesis == "H1") {
            out << "\n## H1: party and longevity\n\n";
            if (r.table) {
                out << "| Party |";
                for (const std::string& c : r.table->col_labels) {
                    out << " " << c << " |";
                }
                out << "\n|---|";
                for (std::size_t i = 0; i < r.table->col_labels.size(); ++i) {
                    out << "---|";
                }
                out << "\n";
                for (std::size_t i = 0; i < r.table->row_labels.size(); ++i) {
                    out << "| " << r.table->row_labels[i] << " |";
                    for (std::int64_t v : r.table->counts[i]) {
                        out << " " << v << " |";
                    }
                    out << "\n";
                }
                out << "\n";
            }
            if (r.result) {
                out << "Chi-square statistic " << csv::format_fixed(r.result->statistic, 4) << ", df "
                    << r.result->df.value_or(0) << ", p-value " << p_text(r) << ".\n";
            } else {
                out << "Not tested: " << r.skipped.value_or("no data") << ".\n";
            }
        } else if (r.hypothesis == "H2") {
            h2.push_back(r);
        } else if (r.hypothesis == "H3") {
            if (!h3.contains(r.grouping)) {
                h3_order.push_back(r.grouping);
            }
            h3[r.grouping].push_back(r);
        }
    }

    if (!moral_available) {
        out << "\n## Moral foundations\n\nMoral foundation sections omitted: no moral lexicon was configured.\n";
        return out.str();
    }
    if (!h2.empty()) {
        out << "\n## H2: moral foundations by party\n\n";
        foundation_table(out, h2, "Dem. Avg.", "Rep. Avg.");
    }
    if (!h3_order.empty()) {
        out << "\n## H3: moral foundations by longevity\n";
        for (const std::string& g : h3_order) {
            const auto& list = h3[g];
            out << "\n### " << grouping_title(g) << "\n\n";
            const std::string a = list.front().group_means.size() > 0 ? list.front().group_means[0].first : "First";
            const std::string b = list.front().group_means.size() > 1 ? list.front().group_means[1].first : "Second";
            foundation_table(out, list, a + " Avg.", b + " Avg.");
        }
    }
    return out.str();
}

}  // namespace topicflow
