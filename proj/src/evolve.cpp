#include "topicflow/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <tuple>

#include "topicflow/errors.hpp"

namespace topicflow {

std::vector<std::string> joint_vocabulary(const TopicRepresentation& a, const TopicRepresentation& b)
{
    std::vector<std::string> vocab;
    for (const auto& t : a.terms) {
        vocab.push_back(t.term);
    }
    for (const auto& t : b.terms) {
        vocab.push_back(t.term);
    }
    std::sort(vocab.begin(), vocab.end());
    vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
    return vocab;
}

std::vector<double> representation_vector(const TopicRepresentation& rep, std::span<const std::string> joint_vocab)
{
    std::vector<double> v(joint_vocab.size(), 0.0);
    for (const auto& t : rep.terms) {
        auto it = std::find(joint_vocab.begin(), joint_vocab.end(), t.term);
        if (it != joint_vocab.end()) {
            v[static_cast<std::size_t>(it - joint_vocab.begin())] = t.weight;
        }
    }
    return v;
}

double cosine(std::span<const double> u, std::span<const double> v)
{
    if (u.size() != v.size()) {
        throw std::invalid_argument("cosine: vectors differ in length");
    }
    double dot = 0.0;
    double nu = 0.0;
    double nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0 || nv == 0.0) {
        return 0.0;
    }
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

double representation_similarity(const TopicRepresentation& a, const TopicRepresentation& b)
{
    const auto vocab = joint_vocabulary(a, b);
    const auto u = representation_vector(a, vocab);
    const auto v = representation_vector(b, vocab);
    return cosine(u, v);
}

namespace {

bool passes(double similarity, const LinkConfig& config)
{
    return config.inclusive ? similarity >= config.threshold : similarity > config.threshold;
}

/// Mutual-best union between a subset of topics in one month and a subset in
/// a later month.
std::vector<EvolutionEdge> link_subsets(const MonthTopics& from, std::span<const std::size_t> from_idx,
                                        const MonthTopics& to, std::span<const std::size_t> to_idx,
                                        const LinkConfig& config)
{
    const std::size_t rows = from_idx.size();
    const std::size_t cols = to_idx.size();
    std::vector<double> sim(rows * cols, 0.0);
    std::vector<bool> candidate(rows * cols, false);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            const double s = representation_similarity(from.topics[from_idx[i]], to.topics[to_idx[j]]);
            sim[i * cols + j] = s;
            candidate[i * cols + j] = passes(s, config);
        }
    }
    constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    std::vector<std::size_t> best_successor(rows, kNone);
    std::vector<std::size_t> best_predecessor(cols, kNone);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            if (!candidate[i * cols + j]) {
                continue;
            }
            if (best_successor[i] == kNone || sim[i * cols + j] > sim[i * cols + best_successor[i]]) {
                best_successor[i] = j;
            }
            if (best_predecessor[j] == kNone || sim[i * cols + j] > sim[best_predecessor[j] * cols + j]) {
                best_predecessor[j] = i;
            }
        }
    }
    std::vector<EvolutionEdge> edges;
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            if (!candidate[i * cols + j] || (best_successor[i] != j && best_predecessor[j] != i)) {
                continue;
            }
            const double s = sim[i * cols + j];
            edges.push_back(EvolutionEdge{StageRef{from.month, from.topics[from_idx[i]].topic_id},
                                          StageRef{to.month, to.topics[to_idx[j]].topic_id}, s, s > 0.5});
        }
    }
    return edges;
}

std::vector<std::size_t> all_indices(const MonthTopics& m)
{
    std::vector<std::size_t> idx(m.topics.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return idx;
}

}  // namespace

std::vector<EvolutionEdge> link_months(const MonthTopics& current, const MonthTopics& next, const LinkConfig& config)
{
    const auto a = all_indices(current);
    const auto b = all_indices(next);
    return link_subsets(current, a, next, b, config);
}

std::vector<EvolutionEdge> link_all(std::span<const MonthTopics> months, const LinkConfig& config)
{
    if (config.gap_tolerance < 0) {
        throw std::invalid_argument("gap_tolerance must be >= 0");
    }
    std::map<int, std::size_t> by_ordinal;
    for (std::size_t i = 0; i < months.size(); ++i) {
        by_ordinal[months[i].month.ordinal()] = i;
    }
    std::vector<EvolutionEdge> edges;
    for (std::size_t i = 0; i < months.size(); ++i) {
        auto it = by_ordinal.find(months[i].month.ordinal() + 1);
        if (it == by_ordinal.end()) {
            continue;
        }
        auto linked = link_months(months[i], months[it->second], config);
        edges.insert(edges.end(), linked.begin(), linked.end());
    }
    for (int gap = 1; gap <= config.gap_tolerance; ++gap) {
        for (std::size_t i = 0; i < months.size(); ++i) {
            auto it = by_ordinal.find(months[i].month.ordinal() + 1 + gap);
            if (it == by_ordinal.end()) {
                continue;
            }
            const MonthTopics& target = months[it->second];
            std::vector<std::size_t> open_ends;
            for (std::size_t t = 0; t < months[i].topics.size(); ++t) {
                const StageRef ref{months[i].month, months[i].topics[t].topic_id};
                if (std::none_of(edges.begin(), edges.end(), [&](const EvolutionEdge& e) { return e.from == ref; })) {
                    open_ends.push_back(t);
                }
            }
            std::vector<std::size_t> open_starts;
            for (std::size_t t = 0; t < target.topics.size(); ++t) {
                const StageRef ref{target.month, target.topics[t].topic_id};
                if (std::none_of(edges.begin(), edges.end(), [&](const EvolutionEdge& e) { return e.to == ref; })) {
                    open_starts.push_back(t);
                }
            }
            if (open_ends.empty() || open_starts.empty()) {
                continue;
            }
            auto bridged = link_subsets(months[i], open_ends, target, open_starts, config);
            edges.insert(edges.end(), bridged.begin(), bridged.end());
        }
    }
    std::stable_sort(edges.begin(), edges.end(), [](const EvolutionEdge& a, const EvolutionEdge& b) {
        return std::tie(a.from, a.to) < std::tie(b.from, b.to);
    });
    return edges;
}

std::string_view to_string(StageRole role) noexcept
{
    switch (role) {
    case StageRole::Emergence: return "emergence";
    case StageRole::Stagnation: return "stagnation";
    case StageRole::Disappearance: return "disappearance";
    }
    return "?";
}

std::string_view to_string(LongevityClass c) noexcept
{
    switch (c) {
    case LongevityClass::High: return "High";
    case LongevityClass::Medium: return "Medium";
    case LongevityClass::Short: return "Short";
    }
    return "?";
}

std::optional<LongevityClass> parse_longevity_class(std::string_view text)
{
    if (text == "High" || text == "high") {
        return LongevityClass::High;
    }
    if (text == "Medium" || text == "medium") {
        return LongevityClass::Medium;
    }
    if (text == "Short" || text == "short" || text == "Low" || text == "low") {
        return LongevityClass::Short;
    }
    return std::nullopt;
}

LongevityClass classify_longevity(int months)
{
    if (months < 1) {
        throw std::invalid_argument("longevity must be at least one month");
    }
    if (months > 6) {
        return LongevityClass::High;
    }
    if (months >= 5) {
        return LongevityClass::Medium;
    }
    return LongevityClass::Short;
}

std::string group_letter(std::size_t index)
{
    std::string s;
    std::size_t n = index + 1;
    while (n > 0) {
        const std::size_t rem = (n - 1) % 26;
        s.insert(s.begin(), static_cast<char>('A' + rem));
        n = (n - 1) / 26;
    }
    return s;
}

std::optional<std::size_t> EvolutionGraph::find(const StageRef& ref) const
{
    auto it = std::lower_bound(stages.begin(), stages.end(), ref,
                               [](const TopicStage& s, const StageRef& r) { return s.ref < r; });
    if (it == stages.end() || it->ref != ref) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - stages.begin());
}

std::vector<TopicGroup> group_and_longevity(const EvolutionGraph& graph)
{
    const std::size_t n = graph.stages.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    std::vector<std::vector<std::size_t>> successors(n);
    std::vector<std::size_t> in_degree(n, 0);
    for (const EvolutionEdge& e : graph.edges) {
        const auto a = graph.find(e.from);
        const auto b = graph.find(e.to);
        ensure(a.has_value() && b.has_value(), "group_and_longevity: edge references an unknown stage");
        successors[*a].push_back(*b);
        ++in_degree[*b];
        const std::size_t ra = find(*a);
        const std::size_t rb = find(*b);
        if (ra != rb) {
            parent[std::max(ra, rb)] = std::min(ra, rb);
        }
    }

    // Latest month reachable from each stage; stages are sorted by month and
    // edges point forward, so a reverse sweep sees successors first.
    std::vector<int> latest(n, 0);
    for (std::size_t i = n; i-- > 0;) {
        latest[i] = graph.stages[i].ref.month.ordinal();
        for (std::size_t s : successors[i]) {
            latest[i] = std::max(latest[i], latest[s]);
        }
    }

    std::map<std::size_t, std::vector<std::size_t>> components;
    for (std::size_t i = 0; i < n; ++i) {
        components[find(i)].push_back(i);
    }
    std::vector<TopicGroup> groups;
    for (auto& [root, members] : components) {
        TopicGroup g;
        g.members = members;  // already in stage order
        int longest = 1;
        for (std::size_t m : members) {
            if (in_degree[m] == 0) {
                longest = std::max(longest, latest[m] - graph.stages[m].ref.month.ordinal() + 1);
            }
        }
        g.longevity_months = longest;
        g.longevity_class = classify_longevity(longest);
        groups.push_back(std::move(g));
    }
    std::stable_sort(groups.begin(), groups.end(), [&](const TopicGroup& a, const TopicGroup& b) {
        const StageRef& fa = graph.stages[a.members.front()].ref;
        const StageRef& fb = graph.stages[b.members.front()].ref;
        if (fa.month != fb.month) {
            return fa.month < fb.month;
        }
        if (a.members.size() != b.members.size()) {
            return a.members.size() > b.members.size();
        }
        return fa < fb;
    });
    for (std::size_t i = 0; i < groups.size(); ++i) {
        groups[i].letter = group_letter(i);
    }
    return groups;
}

EvolutionGraph build_graph(std::span<const StageRef> stages, std::span<const EvolutionEdge> edges)
{
    EvolutionGraph graph;
    graph.stages.reserve(stages.size());
    for (const StageRef& ref : stages) {
        TopicStage s;
        s.ref = ref;
        graph.stages.push_back(s);
    }
    std::sort(graph.stages.begin(), graph.stages.end(),
              [](const TopicStage& a, const TopicStage& b) { return a.ref < b.ref; });
    for (std::size_t i = 1; i < graph.stages.size(); ++i) {
        if (graph.stages[i].ref == graph.stages[i - 1].ref) {
            throw std::invalid_argument("build_graph: duplicate stage " + graph.stages[i].ref.month.to_string() +
                                        "/" + std::to_string(graph.stages[i].ref.topic));
        }
    }
    graph.edges.assign(edges.begin(), edges.end());
    std::stable_sort(graph.edges.begin(), graph.edges.end(), [](const EvolutionEdge& a, const EvolutionEdge& b) {
        return std::tie(a.from, a.to) < std::tie(b.from, b.to);
    });
    for (const EvolutionEdge& e : graph.edges) {
        const auto a = graph.find(e.from);
        const auto b = graph.find(e.to);
        if (!a || !b) {
            throw std::invalid_argument("build_graph: edge references an unknown stage");
        }
        if (!(e.from.month < e.to.month)) {
            throw std::invalid_argument("build_graph: edges must point forward in time");
        }
        ++graph.stages[*a].out_degree;
        ++graph.stages[*b].in_degree;
    }
    for (TopicStage& s : graph.stages) {
        if (s.in_degree == 0) {
            s.role = StageRole::Emergence;
        } else if (s.out_degree == 0) {
            s.role = StageRole::Disappearance;
        } else {
            s.role = StageRole::Stagnation;
        }
    }
    graph.groups = group_and_longevity(graph);
    for (std::size_t g = 0; g < graph.groups.size(); ++g) {
        const TopicGroup& group = graph.groups[g];
        for (std::size_t k = 0; k < group.members.size(); ++k) {
            TopicStage& s = graph.stages[group.members[k]];
            s.group = g;
            s.stage_id = group.letter + std::to_string(k + 1);
        }
    }
    return graph;
}

EvolutionGraph build_graph(std::span<const MonthTopics> months, std::span<const EvolutionEdge> edges)
{
    std::vector<StageRef> refs;
    for (const MonthTopics& m : months) {
        for (const TopicRepresentation& t : m.topics) {
            refs.push_back(StageRef{m.month, t.topic_id});
        }
    }
    return build_graph(refs, edges);
}

}  // namespace topicflow
