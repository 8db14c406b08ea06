#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "clarirl/types.hpp"
#include "clarirl/world.hpp"

namespace clarirl {

class GoalSamplingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct GoalSamplerConfig {
    // Weight of drawing 1, 2, ... sub-goals per dialogue.
    std::vector<double> subgoal_count_weights{0.5, 0.5};
    double ambiguity_rate = 1.0;
    // Among ambiguous goals, probability of two ambiguous slots instead of one.
    double multi_ambiguity_rate = 0.3;
    int resample_budget = 50;
};

// Goals are anchored on a target entity so every constraint set has a match.
// Each ambiguous slot keeps >=2 values that still match the remaining
// constraints. Throws GoalSamplingError when the resample budget runs out.
UserGoal sample_goal(const Database& db, const GoalSamplerConfig& cfg, std::uint64_t seed);

std::string make_identifier(std::uint64_t seed, char prefix, int length = 8);

}  // namespace clarirl
