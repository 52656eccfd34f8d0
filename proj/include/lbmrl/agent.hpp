#pragma once

#include "lbmrl/mdp.hpp"

namespace lbmrl {

// Shared surface of the episodic learners: plan a greedy policy for the next
// episode, report the optimistic initial value it was planned from, then absorb
// the executed trajectory.
class EpisodeAgent {
public:
    virtual ~EpisodeAgent() = default;

    virtual PolicyTable plan() = 0;
    // Optimistic estimate V_1^k(s_init) from the most recent plan().
    virtual double planned_value() const = 0;
    virtual void observe(const EpisodeLog& episode) = 0;
    // Number of episodes absorbed so far.
    virtual int episodes_seen() const = 0;
};

}  // namespace lbmrl
