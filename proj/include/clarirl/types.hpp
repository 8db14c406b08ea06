#pragma once

// Shared domain vocabulary: schemas, goals, agent outputs, observations and
// trajectories. Everything here is plain value data.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace clarirl {

inline constexpr int kMaxTurns = 20;

enum class Domain { Restaurant, Hotel, Attraction, Train, Taxi };

inline constexpr std::array<Domain, 5> kAllDomains{
    Domain::Restaurant, Domain::Hotel, Domain::Attraction, Domain::Train, Domain::Taxi};

std::string_view to_string(Domain d);
// Throws std::invalid_argument for unknown names.
Domain domain_from_string(std::string_view name);

enum class SlotKind { Categorical, Time, Integer, Identifier };

struct SlotSpec {
    std::string name;
    SlotKind kind = SlotKind::Categorical;
    std::vector<std::string> values;  // categorical vocabulary
    int min = 0;                      // integer range, inclusive
    int max = 0;
};

enum class ApiKind { Query, Book };

struct ApiSpec {
    std::string name;
    ApiKind kind = ApiKind::Query;
    std::vector<std::string> args;
    // Book APIs: args that parameterize the reservation instead of selecting
    // an entity (people, day, time, stay, ...).
    std::vector<std::string> booking_params;

    bool takes(std::string_view arg) const;
    bool is_booking_param(std::string_view arg) const;
};

struct DomainSchema {
    Domain domain = Domain::Restaurant;
    std::vector<SlotSpec> slots;
    std::vector<ApiSpec> api_specs;
    // Slots a goal always constrains for this domain (public knowledge).
    std::vector<std::string> constraint_slots;
    // Subset of constraint_slots that may be left ambiguous.
    std::vector<std::string> ambiguity_slots;
    // Reservation details carried by a booking sub-goal.
    std::vector<std::string> booking_slots;
    // Attributes a user may request for information-only sub-goals.
    std::vector<std::string> requestable_slots;

    const SlotSpec* find_slot(std::string_view name) const;
    bool declares(std::string_view name) const { return find_slot(name) != nullptr; }
    const ApiSpec* query_api() const;
    const ApiSpec* book_api() const;
};

const std::vector<DomainSchema>& standard_schemas();
const DomainSchema& schema_for(Domain d);
// Looks an API up by name across all domains; nullptr when unknown.
const ApiSpec* find_api(std::string_view name, Domain* domain_out = nullptr);

// Time slots hold "HH:MM"; lexicographic order equals chronological order.
bool is_time_slot(std::string_view slot);

using SlotMap = std::map<std::string, std::string>;

struct SubGoal {
    Domain domain = Domain::Restaurant;
    SlotMap constraints;
    std::set<std::string> requestables;
    std::optional<SlotMap> booking;

    friend bool operator==(const SubGoal&, const SubGoal&) = default;
};

struct Ambiguity {
    Domain domain = Domain::Restaurant;
    std::string slot;
    std::vector<std::string> candidates;
    std::string reveal;

    friend bool operator==(const Ambiguity&, const Ambiguity&) = default;
};

struct UserGoal {
    std::string goal_id;
    std::vector<SubGoal> sub_goals;
    std::vector<Ambiguity> ambiguity_spec;

    const Ambiguity* find_ambiguity(Domain d, std::string_view slot) const;
    bool is_ambiguous(Domain d, std::string_view slot) const {
        return find_ambiguity(d, slot) != nullptr;
    }

    friend bool operator==(const UserGoal&, const UserGoal&) = default;
};

// Empty result means the goal is valid.
std::vector<std::string> validate_goal(const UserGoal& goal,
                                       std::span<const DomainSchema> schemas);

enum class ActionKind { Clarify, Respond, ApiCall };

struct ApiCall {
    std::string name;
    std::vector<std::pair<std::string, std::string>> args;  // call order kept

    const std::string* arg(std::string_view key) const;
    friend bool operator==(const ApiCall&, const ApiCall&) = default;
};

struct AgentOutput {
    std::optional<std::string> think;
    std::optional<std::string> clarify;
    std::optional<std::string> response;
    std::optional<ApiCall> api_call;
    std::string raw;

    ActionKind kind() const;
    // What the user sees: clarify text, else the response, else the call.
    std::string visible_text() const;
    // Field equality ignoring raw.
    bool same_content(const AgentOutput& other) const;
};

enum class Defect { UnclosedTag, OrderViolation, DuplicateTag, EmptySegment, MalformedApiCall };

inline constexpr std::array<Defect, 5> kAllDefects{Defect::UnclosedTag, Defect::OrderViolation,
                                                    Defect::DuplicateTag, Defect::EmptySegment,
                                                    Defect::MalformedApiCall};

std::string_view to_string(Defect d);
Defect defect_from_string(std::string_view name);

struct FormatVerdict {
    bool well_formed = false;
    bool has_think = false;
    bool has_clarify = false;
    std::vector<Defect> defects;

    bool has(Defect d) const;
    friend bool operator==(const FormatVerdict&, const FormatVerdict&) = default;
};

enum class JudgeProvenance { Oracle, Remote, None };
std::string_view to_string(JudgeProvenance p);

struct RewardBreakdown {
    double r_format = 0.0;
    double r_clarify = 0.0;
    double r_total = 0.0;
    std::vector<Defect> defects;
    JudgeProvenance judge_provenance = JudgeProvenance::None;

    friend bool operator==(const RewardBreakdown&, const RewardBreakdown&) = default;
};

struct Entity {
    Domain domain = Domain::Restaurant;
    std::string id;
    SlotMap attributes;

    const std::string* attr(std::string_view slot) const;
    friend bool operator==(const Entity&, const Entity&) = default;
};

enum class ApiResultKind { QueryResult, BookingConfirmation, ApiError };
enum class ApiErrorCode { UnknownApi, UnknownArg, NoMatch, AmbiguousMatch };

std::string_view to_string(ApiErrorCode c);

struct ApiResult {
    ApiResultKind kind = ApiResultKind::ApiError;
    std::vector<Entity> entities;
    std::optional<std::string> booking_ref;
    std::optional<std::string> entity_id;  // booked entity
    std::optional<ApiErrorCode> error;
    std::string message;

    friend bool operator==(const ApiResult&, const ApiResult&) = default;
};

enum class ReplyFlag { Request, Reveal, Repeat, Unhelpful, Acknowledge, Nudge, Rejection, Complete };
std::string_view to_string(ReplyFlag f);

// A simulator utterance with its symbolic content. informs and
// booking_informs hold only values the user actually uttered.
struct UserReply {
    std::string text;
    std::optional<Domain> domain;
    SlotMap informs;
    SlotMap booking_informs;
    std::set<std::string> requests;
    ReplyFlag flag = ReplyFlag::Acknowledge;
    bool completion = false;

    friend bool operator==(const UserReply&, const UserReply&) = default;
};

struct Observation {
    std::optional<UserReply> user;
    std::optional<ApiResult> api;

    std::string text() const;
    friend bool operator==(const Observation&, const Observation&) = default;
};

struct Turn {
    int index = 0;
    std::optional<std::string> reasoning;
    AgentOutput action;
    Observation observation;
    std::string speaker_visible_text;
    std::optional<RewardBreakdown> reward;
};

enum class EpisodeStatus { InProgress, Success, Failure, TurnLimit };
enum class Termination { None, UserComplete, AgentDone, TurnLimit };

std::string_view to_string(EpisodeStatus s);
std::string_view to_string(Termination t);

struct Trajectory {
    std::string goal_ref;
    std::string initial_query;
    UserReply initial_reply;
    std::vector<Turn> turns;
    EpisodeStatus status = EpisodeStatus::InProgress;
    Termination terminated_by = Termination::None;
    int turn_count = 0;
};

bool operator==(const Turn& a, const Turn& b);
bool operator==(const Trajectory& a, const Trajectory& b);
bool operator==(const AgentOutput& a, const AgentOutput& b);

// In-simulator ground truth about ambiguity at one decision point.
struct AmbiguityState {
    std::optional<Domain> pending_domain;
    std::vector<std::string> ambiguous_slots;  // of the pending sub-goal
    std::set<std::string> revealed;            // pending-domain slots already revealed
    std::set<std::string> asked;               // pending-domain slots already asked

    friend bool operator==(const AmbiguityState&, const AmbiguityState&) = default;
};

}  // namespace clarirl
