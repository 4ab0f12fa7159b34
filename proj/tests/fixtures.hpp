#pragma once

// Hand-built stage graphs for the four timeline cases: a two-stage topic, a
// topic that skips a month, a split and a merge. All start in January 2021.

#include <string>
#include <vector>

#include "topicflow/evolve.hpp"

namespace topicflow::fixture {

struct StageGraphCase {
    std::string name;
    std::vector<StageRef> stages;
    std::vector<EvolutionEdge> edges;
    int longevity = 0;
    // Expected per stage in (month, topic) order.
    std::vector<StageRole> roles;
    std::vector<bool> splits;
    std::vector<bool> merges;
};

inline StageRef at(int month, int topic = 0)
{
    return StageRef{MonthKey{2021, month}, topic};
}

inline EvolutionEdge edge(StageRef from, StageRef to, double similarity = 0.8)
{
    return EvolutionEdge{from, to, similarity, similarity > 0.5};
}

inline std::vector<StageGraphCase> timeline_cases()
{
    using R = StageRole;
    std::vector<StageGraphCase> cases;

    // (a) January to February.
    cases.push_back({"a", {at(1), at(2)}, {edge(at(1), at(2))}, 2, {R::Emergence, R::Disappearance}, {false, false},
                     {false, false}});

    // (b) Three stages spanning January to April; March has no stage.
    cases.push_back({"b",
                     {at(1), at(2), at(4)},
                     {edge(at(1), at(2)), edge(at(2), at(4), 0.4)},
                     4,
                     {R::Emergence, R::Stagnation, R::Disappearance},
                     {false, false, false},
                     {false, false, false}});

    // (c) C1 splits into a one-month branch and a three-month branch.
    cases.push_back({"c",
                     {at(1), at(2, 0), at(2, 1), at(3, 1), at(4, 1)},
                     {edge(at(1), at(2, 0)), edge(at(1), at(2, 1)), edge(at(2, 1), at(3, 1)), edge(at(3, 1), at(4, 1))},
                     4,
                     {R::Emergence, R::Disappearance, R::Stagnation, R::Stagnation, R::Disappearance},
                     {true, false, false, false, false},
                     {false, false, false, false, false}});

    // (d) D3 emerges in March unrelated to D1/D2 and merges with them into D4.
    cases.push_back({"d",
                     {at(1), at(2), at(3), at(4)},
                     {edge(at(1), at(2)), edge(at(2), at(4), 0.3), edge(at(3), at(4))},
                     4,
                     {R::Emergence, R::Stagnation, R::Emergence, R::Disappearance},
                     {false, false, false, false},
                     {false, false, false, true}});
    return cases;
}

}  // namespace topicflow::fixture
