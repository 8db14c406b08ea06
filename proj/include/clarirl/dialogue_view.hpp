#pragma once

// Agent-side dialogue state tracking. Everything here is derived from the
// visible trajectory only: user utterances with their symbolic informs and
// API results. Hidden goal internals never enter.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "clarirl/types.hpp"

namespace clarirl {

enum class ObservationKind {
    None,
    UserRequest,
    UserReveal,
    UserRepeat,
    UserUnhelpful,
    UserAcknowledge,
    UserNudge,
    UserRejection,
    UserComplete,
    ApiQuery,
    ApiBooking,
    ApiError,
};
std::string_view to_string(ObservationKind k);

enum class Stage { Clarify, Query, Book, Inform, Idle };
std::string_view to_string(Stage s);

struct DialogueView {
    std::optional<Domain> pending_domain;
    std::map<Domain, SlotMap> known;         // constraints the user stated or revealed
    std::map<Domain, SlotMap> booking_info;  // reservation details the user stated
    std::map<Domain, std::set<std::string>> requests;
    std::map<Domain, std::vector<Entity>> last_results;
    std::map<Domain, SlotMap> last_query_constraints;
    std::set<Domain> booked;    // bookings the user accepted
    std::set<Domain> informed;  // domains whose requested values were given
    bool last_booking_rejected = false;
    std::optional<ApiCall> last_booking_call;
    int clarifies = 0;
    int bookings = 0;
    int turns = 0;
    std::set<std::pair<Domain, std::string>> mentioned;
    std::set<std::pair<Domain, std::string>> revealed;
    std::set<std::pair<Domain, std::string>> asked;
    ObservationKind last_observation = ObservationKind::None;

    // Constraint slots of the pending domain the user has not stated yet.
    std::vector<std::string> missing_slots() const;
    // With ignore_missing the stage is computed as if nothing were missing.
    Stage stage(bool ignore_missing = false) const;
};

DialogueView build_view(const Trajectory& trajectory);

struct SlotFlags {
    bool mentioned = false;
    bool revealed = false;
    bool in_pending_subgoal = false;
};

struct ContextFeatures {
    std::map<std::string, SlotFlags> slots;
    std::vector<std::string> missing;
    Stage stage = Stage::Idle;
    int turns_used = 0;
    int clarifies_asked = 0;
    int bookings_made = 0;
    ObservationKind last_observation = ObservationKind::None;
};

ContextFeatures extract_features(const DialogueView& view);

// Sparse feature vector phi used by the policy. Clarification features
// (missing:<slot>) fire only while a slot is missing; the
// stage:<name> features fire only once nothing is missing.
using FeatureVector = std::vector<std::pair<std::string, double>>;
FeatureVector feature_vector(const ContextFeatures& f);

// "User:" / "Agent:" / "API:" lines. Reasoning text is never included.
std::string render_conversation(const Trajectory& trajectory);

// The trajectory truncated to its first `turns` turns.
Trajectory prefix(const Trajectory& trajectory, std::size_t turns);

}  // namespace clarirl
