#include "clarirl/reward.hpp"

#include <algorithm>
#include <cctype>

namespace clarirl {

double format_reward(const FormatVerdict& verdict) {
    if (!verdict.well_formed || !verdict.defects.empty()) return 0.0;
    const int present = (verdict.has_think ? 1 : 0) + (verdict.has_clarify ? 1 : 0);
    if (present == 2) return 1.0;
    if (present == 1) return kPartialFormatCredit;
    return 0.0;
}

ClarifyScore clarify_reward(const std::string& conversation, const std::string& question,
                            ClarifyJudge& judge, const AmbiguityState* truth) {
    const bool blank = std::all_of(question.begin(), question.end(),
                                   [](unsigned char c) { return std::isspace(c) != 0; });
    if (blank) return {};
    JudgeVerdict v = judge.score(JudgeRequest{conversation, question}, truth);
    return {static_cast<double>(v.score), judge.provenance()};
}

RewardBreakdown total_reward(const AgentOutput& out, const FormatVerdict& verdict,
                             const std::string& conversation, ClarifyJudge& judge,
                             const AmbiguityState* truth) {
    RewardBreakdown r;
    r.r_format = format_reward(verdict);
    r.defects = verdict.defects;
    if (out.clarify) {
        ClarifyScore c = clarify_reward(conversation, *out.clarify, judge, truth);
        r.r_clarify = c.score;
        r.judge_provenance = c.provenance;
    }
    r.r_total = r.r_format + r.r_clarify;
    return r;
}

}  // namespace clarirl
