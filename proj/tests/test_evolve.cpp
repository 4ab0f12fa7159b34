#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "fixtures.hpp"
#include "support.hpp"
#include "topicflow/evolve.hpp"

using namespace topicflow;

namespace {

TopicRepresentation rep(int id, std::vector<std::pair<std::string, double>> terms)
{
    TopicRepresentation r;
    r.topic_id = id;
    for (auto& [t, w] : terms) {
        r.terms.push_back(TermWeight{t, w});
    }
    return r;
}

/// Longest inclusive month span over every root-to-leaf path, by explicit
/// path enumeration.
int longevity_by_paths(const std::vector<StageRef>& stages, const std::vector<EvolutionEdge>& edges,
                       const std::vector<std::size_t>& members)
{
    const std::set<std::size_t> in_group(members.begin(), members.end());
    auto index_of = [&](const StageRef& r) {
        return static_cast<std::size_t>(std::find(stages.begin(), stages.end(), r) - stages.begin());
    };
    std::vector<std::vector<std::size_t>> next(stages.size());
    std::vector<bool> has_parent(stages.size(), false);
    for (const EvolutionEdge& e : edges) {
        next[index_of(e.from)].push_back(index_of(e.to));
        has_parent[index_of(e.to)] = true;
    }
    int best = 0;
    std::function<void(std::size_t, int)> walk = [&](std::size_t at, int start) {
        if (next[at].empty()) {
            best = std::max(best, stages[at].month.ordinal() - start + 1);
            return;
        }
        for (std::size_t n : next[at]) {
            walk(n, start);
        }
    };
    for (std::size_t m : in_group) {
        if (!has_parent[m]) {
            walk(m, stages[m].month.ordinal());
        }
    }
    return best;
}

struct RandomGraph {
    std::vector<StageRef> stages;
    std::vector<EvolutionEdge> edges;
};

/// Up to `max_stages` stages over `months` months with random forward edges
/// between consecutive months.
RandomGraph random_graph(Rng& rng, int months, std::size_t max_stages, bool chains_only)
{
    RandomGraph g;
    std::vector<std::vector<StageRef>> by_month(static_cast<std::size_t>(months));
    for (std::size_t i = 0; i < max_stages; ++i) {
        const int m = static_cast<int>(rng.index(static_cast<std::size_t>(months)));
        const StageRef r{MonthKey{2021 + m / 12, m % 12 + 1}, static_cast<int>(by_month[static_cast<std::size_t>(m)].size())};
        by_month[static_cast<std::size_t>(m)].push_back(r);
        g.stages.push_back(r);
    }
    std::set<StageRef> used_from;
    std::set<StageRef> used_to;
    for (int m = 0; m + 1 < months; ++m) {
        for (const StageRef& a : by_month[static_cast<std::size_t>(m)]) {
            for (const StageRef& b : by_month[static_cast<std::size_t>(m + 1)]) {
                if (rng.uniform() >= 0.5) {
                    continue;
                }
                if (chains_only && (used_from.contains(a) || used_to.contains(b))) {
                    continue;
                }
                used_from.insert(a);
                used_to.insert(b);
                const double s = 0.05 + 0.9 * rng.uniform();
                g.edges.push_back(EvolutionEdge{a, b, s, s > 0.5});
            }
        }
    }
    return g;
}

}  // namespace

TEST_CASE("representation vectors and cosine")
{
    const auto a = rep(0, {{"a", 0.5}});
    const auto b = rep(1, {{"b", 0.3}});
    const std::vector<std::string> vocab = {"a", "b"};
    CHECK(representation_vector(a, vocab) == std::vector<double>{0.5, 0.0});
    CHECK(joint_vocabulary(a, b) == vocab);
    CHECK(cosine(representation_vector(a, vocab), representation_vector(b, vocab)) == 0.0);
    CHECK(representation_vector(a, vocab) == representation_vector(rep(5, {{"a", 0.5}}), vocab));
    CHECK(representation_vector(TopicRepresentation{}, vocab) == std::vector<double>{0.0, 0.0});

    const std::vector<double> u = {1, 1, 0};
    const std::vector<double> v = {1, 0, 0};
    const std::vector<double> zero = {0, 0, 0};
    CHECK(cosine(u, u) == doctest::Approx(1.0));
    CHECK(cosine(u, v) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(cosine(u, zero) == 0.0);
    CHECK(representation_similarity(a, a) == doctest::Approx(1.0));
}

TEST_CASE("link_months keep rule")
{
    const MonthKey jan{2021, 1};
    const MonthKey feb{2021, 2};
    SUBCASE("single strong edge")
    {
        const MonthTopics m1{jan, {rep(0, {{"x", 1.0}})}};
        const MonthTopics m2{feb, {rep(0, {{"x", 0.9}, {"y", 0.1}})}};
        const auto edges = link_months(m1, m2, LinkConfig{});
        REQUIRE(edges.size() == 1);
        CHECK(edges[0].strong);
        CHECK(edges[0].similarity > 0.9);
    }
    SUBCASE("best predecessor keeps a second successor")
    {
        // t = (1, 1, 0); u1 is t's best successor, t is u2's only predecessor.
        const MonthTopics m1{jan, {rep(0, {{"a", 1.0}, {"b", 1.0}})}};
        const MonthTopics m2{feb, {rep(0, {{"a", 1.0}, {"b", 0.8}}), rep(1, {{"b", 1.0}, {"c", 1.0}})}};
        const auto edges = link_months(m1, m2, LinkConfig{});
        CHECK(edges.size() == 2);
    }
    SUBCASE("zero similarity never links unless inclusive")
    {
        const MonthTopics m1{jan, {rep(0, {{"a", 1.0}})}};
        const MonthTopics m2{feb, {rep(0, {{"b", 1.0}})}};
        CHECK(link_months(m1, m2, LinkConfig{}).empty());
        CHECK(link_months(m1, m2, LinkConfig{0.0, true, 0}).size() == 1);
    }
}

TEST_CASE("non-best pairs are dropped")
{
    const MonthKey jan{2021, 1};
    const MonthKey feb{2021, 2};
    // t0 prefers u0 and u0 prefers t0; t1 prefers u1 and u1 prefers t1; the
    // weaker cross pair t0-u1 is neither side's best.
    const MonthTopics m1{jan, {rep(0, {{"a", 1.0}, {"c", 0.1}}), rep(1, {{"b", 1.0}, {"c", 0.2}})}};
    const MonthTopics m2{feb, {rep(0, {{"a", 1.0}}), rep(1, {{"b", 1.0}, {"c", 0.3}})}};
    const auto edges = link_months(m1, m2, LinkConfig{});
    REQUIRE(edges.size() == 2);
    CHECK(edges[0].from.topic == 0);
    CHECK(edges[0].to.topic == 0);
    CHECK(edges[1].from.topic == 1);
    CHECK(edges[1].to.topic == 1);
}

TEST_CASE("roles follow degrees")
{
    const std::vector<StageRef> lone = {fixture::at(3)};
    const EvolutionGraph g = build_graph(lone, std::vector<EvolutionEdge>{});
    CHECK(g.stages[0].role == StageRole::Emergence);
    CHECK(g.groups[0].longevity_months == 1);
    CHECK(g.stages[0].stage_id == "A1");

    const std::vector<StageRef> chain = {fixture::at(1), fixture::at(2), fixture::at(3)};
    const std::vector<EvolutionEdge> edges = {fixture::edge(chain[0], chain[1]), fixture::edge(chain[1], chain[2])};
    const EvolutionGraph c = build_graph(chain, edges);
    CHECK(c.stages[0].role == StageRole::Emergence);
    CHECK(c.stages[1].role == StageRole::Stagnation);
    CHECK(c.stages[2].role == StageRole::Disappearance);

    const std::vector<EvolutionEdge> backward = {fixture::edge(chain[1], chain[0])};
    CHECK_THROWS_AS(build_graph(chain, backward), std::invalid_argument);
}

TEST_CASE("timeline fixtures")
{
    for (const fixture::StageGraphCase& tc : fixture::timeline_cases()) {
        CAPTURE(tc.name);
        const EvolutionGraph g = build_graph(tc.stages, tc.edges);
        REQUIRE(g.groups.size() == 1);
        CHECK(g.groups[0].longevity_months == tc.longevity);
        REQUIRE(g.stages.size() == tc.roles.size());
        for (std::size_t i = 0; i < g.stages.size(); ++i) {
            CAPTURE(i);
            CHECK(g.stages[i].role == tc.roles[i]);
            CHECK(g.stages[i].is_split() == tc.splits[i]);
            CHECK(g.stages[i].is_merge() == tc.merges[i]);
            CHECK(g.stages[i].stage_id == "A" + std::to_string(i + 1));
        }
    }
    const auto cases = fixture::timeline_cases();
    const EvolutionGraph d = build_graph(cases[3].stages, cases[3].edges);
    CHECK(d.stages[3].in_degree == 2);
}

TEST_CASE("longevity classes")
{
    CHECK(classify_longevity(7) == LongevityClass::High);
    CHECK(classify_longevity(5) == LongevityClass::Medium);
    CHECK(classify_longevity(6) == LongevityClass::Medium);
    CHECK(classify_longevity(4) == LongevityClass::Short);
    CHECK(classify_longevity(1) == LongevityClass::Short);
    CHECK_THROWS(classify_longevity(0));
    CHECK(parse_longevity_class("medium") == LongevityClass::Medium);
}

TEST_CASE("groups are lettered by first month then size")
{
    using fixture::at;
    const std::vector<StageRef> stages = {at(1, 0), at(1, 1), at(2, 0), at(2, 1), at(3, 0), at(2, 2)};
    const std::vector<EvolutionEdge> edges = {fixture::edge(at(1, 1), at(2, 1)), fixture::edge(at(2, 1), at(3, 0))};
    const EvolutionGraph g = build_graph(stages, edges);
    REQUIRE(g.groups.size() == 4);
    CHECK(g.stages[*g.find(at(1, 1))].stage_id == "A1");
    CHECK(g.stages[*g.find(at(3, 0))].stage_id == "A3");
    CHECK(g.stages[*g.find(at(1, 0))].stage_id == "B1");
    CHECK(g.stages[*g.find(at(2, 0))].stage_id == "C1");
    CHECK(g.stages[*g.find(at(2, 2))].stage_id == "D1");
    CHECK(group_letter(25) == "Z");
    CHECK(group_letter(26) == "AA");
}

TEST_CASE("chain longevity matches path enumeration")
{
    Rng rng(41);
    for (int trial = 0; trial < 300; ++trial) {
        const RandomGraph rg = random_graph(rng, 1 + static_cast<int>(rng.index(8)), 1 + rng.index(12), true);
        const EvolutionGraph g = build_graph(rg.stages, rg.edges);
        std::vector<StageRef> sorted;
        for (const TopicStage& s : g.stages) {
            sorted.push_back(s.ref);
        }
        for (const TopicGroup& group : g.groups) {
            CHECK(group.longevity_months == longevity_by_paths(sorted, rg.edges, group.members));
        }
    }
}

TEST_CASE("graph invariants on random DAGs")
{
    Rng rng(43);
    for (int trial = 0; trial < 200; ++trial) {
        const int months = 1 + static_cast<int>(rng.index(10));
        const RandomGraph rg = random_graph(rng, months, 1 + rng.index(14), false);
        const EvolutionGraph g = build_graph(rg.stages, rg.edges);
        std::vector<StageRef> sorted;
        for (const TopicStage& s : g.stages) {
            sorted.push_back(s.ref);
        }

        std::vector<int> seen(g.stages.size(), 0);
        std::set<std::string> ids;
        for (std::size_t gi = 0; gi < g.groups.size(); ++gi) {
            const TopicGroup& group = g.groups[gi];
            CHECK(group.longevity_months >= 1);
            CHECK(group.longevity_months <= months);
            CHECK(group.longevity_months == longevity_by_paths(sorted, rg.edges, group.members));
            for (std::size_t m : group.members) {
                ++seen[m];
                CHECK(g.stages[m].group == gi);
            }
        }
        for (const TopicStage& s : g.stages) {
            ids.insert(s.stage_id);
        }
        CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
        CHECK(ids.size() == g.stages.size());

        // Dropping weak edges never lengthens a group.
        std::vector<EvolutionEdge> strong;
        std::copy_if(rg.edges.begin(), rg.edges.end(), std::back_inserter(strong),
                     [](const EvolutionEdge& e) { return e.similarity > 0.5; });
        const EvolutionGraph pruned = build_graph(rg.stages, strong);
        for (const TopicStage& s : pruned.stages) {
            const auto original = g.find(s.ref);
            REQUIRE(original);
            CHECK(pruned.groups[s.group].longevity_months <= g.groups[g.stages[*original].group].longevity_months);
        }
    }
}

TEST_CASE("graph is invariant to topic-id permutation within a month")
{
    Rng rng(47);
    for (int trial = 0; trial < 100; ++trial) {
        const RandomGraph rg = random_graph(rng, 5, 10, false);
        // Reverse topic ids within each month.
        std::map<MonthKey, int> count;
        for (const StageRef& s : rg.stages) {
            ++count[s.month];
        }
        auto flip = [&](StageRef r) { return StageRef{r.month, count[r.month] - 1 - r.topic}; };
        RandomGraph permuted;
        for (const StageRef& s : rg.stages) {
            permuted.stages.push_back(flip(s));
        }
        for (const EvolutionEdge& e : rg.edges) {
            permuted.edges.push_back(EvolutionEdge{flip(e.from), flip(e.to), e.similarity, e.strong});
        }
        const EvolutionGraph a = build_graph(rg.stages, rg.edges);
        const EvolutionGraph b = build_graph(permuted.stages, permuted.edges);
        std::multiset<std::pair<std::size_t, int>> shape_a;
        std::multiset<std::pair<std::size_t, int>> shape_b;
        for (const TopicGroup& g : a.groups) {
            shape_a.insert({g.members.size(), g.longevity_months});
        }
        for (const TopicGroup& g : b.groups) {
            shape_b.insert({g.members.size(), g.longevity_months});
        }
        CHECK(shape_a == shape_b);
        for (const TopicStage& s : a.stages) {
            const TopicStage& t = b.stages[*b.find(flip(s.ref))];
            CHECK(s.role == t.role);
            CHECK(s.in_degree == t.in_degree);
            CHECK(s.out_degree == t.out_degree);
        }
    }
}

TEST_CASE("link_all bridges gaps only when tolerated")
{
    const std::vector<MonthTopics> months = {
        MonthTopics{MonthKey{2021, 1}, {rep(0, {{"a", 1.0}})}},
        MonthTopics{MonthKey{2021, 2}, {rep(0, {{"a", 1.0}}), rep(1, {{"q", 1.0}})}},
        MonthTopics{MonthKey{2021, 4}, {rep(0, {{"a", 0.5}, {"b", 0.5}})}},
    };
    CHECK(link_all(months, LinkConfig{}).size() == 1);
    const auto bridged = link_all(months, LinkConfig{0.0, false, 1});
    REQUIRE(bridged.size() == 2);
    CHECK(bridged[1].from.month == MonthKey{2021, 2});
    CHECK(bridged[1].to.month == MonthKey{2021, 4});
    const EvolutionGraph g = build_graph(months, bridged);
    CHECK(g.groups[0].longevity_months == 4);

    const std::vector<MonthTopics> one = {months[0]};
    CHECK(link_all(one, LinkConfig{}).empty());
}
