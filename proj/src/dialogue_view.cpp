#include "clarirl/dialogue_view.hpp"

#include <algorithm>

#include "clarirl/user_sim.hpp"

namespace clarirl {

std::string_view to_string(ObservationKind k) {
    switch (k) {
        case ObservationKind::None: return "none";
        case ObservationKind::UserRequest: return "user_request";
        case ObservationKind::UserReveal: return "user_reveal";
        case ObservationKind::UserRepeat: return "user_repeat";
        case ObservationKind::UserUnhelpful: return "user_unhelpful";
        case ObservationKind::UserAcknowledge: return "user_acknowledge";
        case ObservationKind::UserNudge: return "user_nudge";
        case ObservationKind::UserRejection: return "user_rejection";
        case ObservationKind::UserComplete: return "user_complete";
        case ObservationKind::ApiQuery: return "api_query";
        case ObservationKind::ApiBooking: return "api_booking";
        case ObservationKind::ApiError: return "api_error";
    }
    return "none";
}

std::string_view to_string(Stage s) {
    switch (s) {
        case Stage::Clarify: return "clarify";
        case Stage::Query: return "query";
        case Stage::Book: return "book";
        case Stage::Inform: return "inform";
        case Stage::Idle: return "idle";
    }
    return "idle";
}

namespace {

ObservationKind kind_of(ReplyFlag f) {
    switch (f) {
        case ReplyFlag::Request: return ObservationKind::UserRequest;
        case ReplyFlag::Reveal: return ObservationKind::UserReveal;
        case ReplyFlag::Repeat: return ObservationKind::UserRepeat;
        case ReplyFlag::Unhelpful: return ObservationKind::UserUnhelpful;
        case ReplyFlag::Acknowledge: return ObservationKind::UserAcknowledge;
        case ReplyFlag::Nudge: return ObservationKind::UserNudge;
        case ReplyFlag::Rejection: return ObservationKind::UserRejection;
        case ReplyFlag::Complete: return ObservationKind::UserComplete;
    }
    return ObservationKind::None;
}

void apply_user(DialogueView& v, const UserReply& r) {
    if (r.flag == ReplyFlag::Request && r.domain) v.pending_domain = r.domain;
    v.last_observation = kind_of(r.flag);
    if (r.flag == ReplyFlag::Rejection) v.last_booking_rejected = true;
    std::optional<Domain> d = r.domain ? r.domain : v.pending_domain;
    if (!d) return;
    for (const auto& [k, val] : r.informs) {
        v.known[*d][k] = val;
        v.mentioned.insert({*d, k});
        if (r.flag == ReplyFlag::Reveal) v.revealed.insert({*d, k});
    }
    for (const auto& [k, val] : r.booking_informs) {
        v.booking_info[*d][k] = val;
        v.mentioned.insert({*d, k});
    }
    if (r.flag == ReplyFlag::Request) v.requests[*d].insert(r.requests.begin(), r.requests.end());
}

}  // namespace

std::vector<std::string> DialogueView::missing_slots() const {
    std::vector<std::string> out;
    if (!pending_domain) return out;
    auto it = known.find(*pending_domain);
    for (const auto& slot : schema_for(*pending_domain).constraint_slots)
        if (it == known.end() || !it->second.contains(slot)) out.push_back(slot);
    return out;
}

Stage DialogueView::stage(bool ignore_missing) const {
    if (!pending_domain) return Stage::Idle;
    const Domain d = *pending_domain;
    if (!ignore_missing && !missing_slots().empty()) return Stage::Clarify;
    if (d == Domain::Taxi) return booked.contains(d) ? Stage::Idle : Stage::Book;

    auto known_it = known.find(d);
    const SlotMap known_d = known_it == known.end() ? SlotMap{} : known_it->second;
    auto snap = last_query_constraints.find(d);
    if (snap == last_query_constraints.end() || snap->second != known_d) return Stage::Query;

    auto res = last_results.find(d);
    const bool have_results = res != last_results.end() && !res->second.empty();
    auto info = booking_info.find(d);
    if (info != booking_info.end() && !info->second.empty() && !booked.contains(d))
        return have_results ? Stage::Book : Stage::Idle;
    auto req = requests.find(d);
    if (req != requests.end() && !req->second.empty() && !informed.contains(d) && have_results)
        return Stage::Inform;
    return Stage::Idle;
}

DialogueView build_view(const Trajectory& trajectory) {
    DialogueView v;
    apply_user(v, trajectory.initial_reply);
    for (const auto& turn : trajectory.turns) {
        ++v.turns;
        const std::optional<Domain> pending = v.pending_domain;
        const Observation& obs = turn.observation;
        switch (turn.action.kind()) {
            case ActionKind::Clarify:
                ++v.clarifies;
                if (pending)
                    if (auto slot = detect_slot(*turn.action.clarify)) v.asked.insert({*pending, *slot});
                break;
            case ActionKind::ApiCall: {
                const ApiCall& call = *turn.action.api_call;
                Domain d{};
                if (!find_api(call.name, &d) || !obs.api) break;
                const ApiResult& res = *obs.api;
                if (res.kind == ApiResultKind::QueryResult) {
                    v.last_results[d] = res.entities;
                    SlotMap snap;
                    for (const auto& [k, val] : call.args) snap[k] = val;
                    v.last_query_constraints[d] = std::move(snap);
                    v.last_booking_rejected = false;
                    v.last_observation = ObservationKind::ApiQuery;
                } else if (res.kind == ApiResultKind::BookingConfirmation) {
                    ++v.bookings;
                    v.last_booking_call = call;
                    v.last_observation = ObservationKind::ApiBooking;
                    const bool rejected = obs.user && obs.user->flag == ReplyFlag::Rejection;
                    if (!rejected) {
                        v.booked.insert(d);
                        v.last_booking_rejected = false;
                    }
                } else {
                    v.last_observation = ObservationKind::ApiError;
                }
                break;
            }
            case ActionKind::Respond:
                if (pending && obs.user && obs.user->flag != ReplyFlag::Nudge) v.informed.insert(*pending);
                break;
        }
        if (obs.user) apply_user(v, *obs.user);
    }
    return v;
}

ContextFeatures extract_features(const DialogueView& view) {
    ContextFeatures f;
    f.missing = view.missing_slots();
    f.stage = view.stage();
    f.turns_used = view.turns;
    f.clarifies_asked = view.clarifies;
    f.bookings_made = view.bookings;
    f.last_observation = view.last_observation;
    if (view.pending_domain) {
        const Domain d = *view.pending_domain;
        for (const auto& slot : schema_for(d).constraint_slots) f.slots[slot].in_pending_subgoal = true;
        for (const auto& [dom, slot] : view.mentioned)
            if (dom == d) f.slots[slot].mentioned = true;
        for (const auto& [dom, slot] : view.revealed)
            if (dom == d) f.slots[slot].revealed = true;
    }
    return f;
}

FeatureVector feature_vector(const ContextFeatures& f) {
    FeatureVector phi;
    if (!f.missing.empty()) {
        for (const auto& slot : f.missing) phi.emplace_back("missing:" + slot, 1.0);
        return phi;
    }
    phi.emplace_back("stage:" + std::string(to_string(f.stage)), 1.0);
    return phi;
}

std::string render_conversation(const Trajectory& trajectory) {
    std::string out = "User: " + trajectory.initial_query;
    for (const auto& turn : trajectory.turns) {
        out += "\nAgent: " + turn.speaker_visible_text;
        if (turn.observation.api) out += "\nAPI: " + turn.observation.api->message;
        if (turn.observation.user) out += "\nUser: " + turn.observation.user->text;
    }
    return out;
}

Trajectory prefix(const Trajectory& trajectory, std::size_t turns) {
    Trajectory p = trajectory;
    p.turns.resize(std::min(turns, p.turns.size()));
    p.turn_count = static_cast<int>(p.turns.size());
    p.status = EpisodeStatus::InProgress;
    p.terminated_by = Termination::None;
    return p;
}

}  // namespace clarirl
