#pragma once

// Per-generation reward: structure plus judged clarification quality.

#include "clarirl/judge.hpp"
#include "clarirl/types.hpp"

namespace clarirl {

inline constexpr double kPartialFormatCredit = 0.5;

// 1 when think and clarify are both present and the output is defect-free,
// 0.5 when exactly one is, 0 otherwise.
double format_reward(const FormatVerdict& verdict);

struct ClarifyScore {
    double score = 0.0;
    JudgeProvenance provenance = JudgeProvenance::None;
};

// An empty question scores 0 without consulting the judge. JudgeError
// propagates to the caller.
ClarifyScore clarify_reward(const std::string& conversation, const std::string& question,
                            ClarifyJudge& judge, const AmbiguityState* truth);

RewardBreakdown total_reward(const AgentOutput& out, const FormatVerdict& verdict,
                             const std::string& conversation, ClarifyJudge& judge,
                             const AmbiguityState* truth);

}  // namespace clarirl
