#pragma once

// Goal-conditioned rule-based user simulator. The simulator knows the hidden
// goal; it withholds ambiguous slots until a clarification question asks for
// them and reacts to bookings and informative responses.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "clarirl/types.hpp"
#include "clarirl/world.hpp"

namespace clarirl {

// Surface templates. {request}, {phrase}, {needs} are substituted.
struct PersonaPack {
    std::string name;
    std::string opening;      // first request
    std::string next;         // follow-up sub-goal announcement
    std::string reveal;       // answer revealing an ambiguous slot
    std::string repeat;       // restating something already said
    std::string unhelpful;    // question with no usable slot
    std::string acknowledge;
    std::string nudge;
    std::string rejection;
    std::string complete;
};

std::vector<PersonaPack> default_persona_packs();
// JSON: {"packs": [{"name": ..., "opening": ..., ...}, ...]}.
std::vector<PersonaPack> load_persona_packs(const std::filesystem::path& path);

// Keyword lexicon: every clarifiable slot has at least three trigger phrases,
// matched on word boundaries over the lowercased question.
const std::vector<std::pair<std::string, std::vector<std::string>>>& slot_lexicon();
std::optional<std::string> detect_slot(std::string_view question);

struct SimulatorState {
    UserGoal goal;
    std::set<std::pair<Domain, std::string>> revealed;
    std::set<std::pair<Domain, std::string>> asked;
    std::size_t pending_subgoal_index = 0;
    std::uint64_t persona_seed = 0;
    std::vector<bool> booked;                    // per sub-goal
    std::vector<std::set<std::string>> surfaced;  // requestables surfaced per sub-goal

    bool all_done() const { return pending_subgoal_index >= goal.sub_goals.size(); }
    const SubGoal* pending() const;
};

struct SimulatorConfig {
    // Divergence knob: when true the opening also states ambiguous slots.
    bool volunteer_ambiguous = false;
};

class UserSimulator {
public:
    explicit UserSimulator(const Database& db, std::vector<PersonaPack> packs = default_persona_packs(),
                           SimulatorConfig cfg = {});

    SimulatorState init(const UserGoal& goal, std::uint64_t persona_seed) const;

    UserReply first_utterance(const UserGoal& goal, std::uint64_t persona_seed) const;

    std::pair<UserReply, SimulatorState> respond(SimulatorState state,
                                                 std::string_view clarify_question) const;

    // Reaction to a booking confirmation produced by `call`.
    std::pair<UserReply, SimulatorState> react_booking(SimulatorState state, const ApiCall& call,
                                                       const ApiResult& result) const;
    // Reaction to a plain agent response.
    std::pair<UserReply, SimulatorState> react_response(SimulatorState state,
                                                        std::string_view response) const;

    // Ground truth about ambiguity for the pending sub-goal.
    AmbiguityState truth(const SimulatorState& state) const;

    const PersonaPack& persona(std::uint64_t persona_seed) const;

private:
    UserReply describe_subgoal(const UserGoal& goal, std::size_t index, const std::string& tmpl) const;
    std::pair<UserReply, SimulatorState> advance(SimulatorState state) const;
    bool booking_satisfies(const SubGoal& sg, const ApiCall& call, const ApiResult& result) const;

    const Database* db_;
    std::vector<PersonaPack> packs_;
    SimulatorConfig cfg_;
};

// Natural phrase for a slot value ("in the centre", "italian food", ...).
std::string slot_phrase(Domain d, const std::string& slot, const std::string& value);

}  // namespace clarirl
