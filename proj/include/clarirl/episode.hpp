#pragma once

// The episode loop: routes agent outputs to the simulator or the API layer,
// enforces the turn cap and audits success.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "clarirl/types.hpp"
#include "clarirl/user_sim.hpp"
#include "clarirl/world.hpp"

namespace clarirl {

inline constexpr std::string_view kDoneToken = "[DONE]";

class EpisodeError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

struct BookingRecord {
    Domain domain = Domain::Restaurant;
    std::string booking_ref;
    std::string entity_id;
    SlotMap args;

    friend bool operator==(const BookingRecord&, const BookingRecord&) = default;
};

struct EpisodeState {
    UserGoal goal;
    SimulatorState sim;
    Trajectory trajectory;
    std::vector<BookingRecord> bookings;
    int turn_budget_remaining = kMaxTurns;
    std::uint64_t world_seed = 0;
    std::uint64_t episode_id = 0;
    bool done = false;
};

struct StepOutcome {
    Observation observation;
    bool done = false;
};

EpisodeState start_episode(const UserSimulator& sim, const Database& db, const UserGoal& goal,
                           std::uint64_t persona_seed, std::uint64_t episode_id);

// Appends exactly one Turn. Throws EpisodeError when the state is terminal.
StepOutcome step(EpisodeState& state, const AgentOutput& out, const UserSimulator& sim,
                 const Database& db);

// Deterministic audit over bookings and agent-visible responses.
bool check_success(const EpisodeState& state, const Database& db);
bool subgoal_booked(const SubGoal& sg, const std::vector<BookingRecord>& bookings, const Database& db);
// Re-audit from logged data only: bookings are recovered from the
// confirmations recorded in the trajectory.
std::vector<BookingRecord> bookings_from(const Trajectory& trajectory);
bool check_success(const UserGoal& goal, const Trajectory& trajectory, const Database& db);
bool requestable_surfaced(const SubGoal& sg, const std::string& slot, const Trajectory& trajectory,
                          const Database& db);

}  // namespace clarirl
