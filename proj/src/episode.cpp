#include "clarirl/episode.hpp"

namespace clarirl {

EpisodeState start_episode(const UserSimulator& sim, const Database& db, const UserGoal& goal,
                           std::uint64_t persona_seed, std::uint64_t episode_id) {
    EpisodeState s;
    s.goal = goal;
    s.sim = sim.init(goal, persona_seed);
    s.world_seed = db.seed();
    s.episode_id = episode_id;
    s.trajectory.goal_ref = goal.goal_id;
    s.trajectory.initial_reply = sim.first_utterance(goal, persona_seed);
    s.trajectory.initial_query = s.trajectory.initial_reply.text;
    return s;
}

StepOutcome step(EpisodeState& state, const AgentOutput& out, const UserSimulator& sim,
                 const Database& db) {
    if (state.done) throw EpisodeError("step called on a terminal episode");

    Observation obs;
    Termination term = Termination::None;
    switch (out.kind()) {
        case ActionKind::Clarify: {
            auto [reply, next] = sim.respond(std::move(state.sim), *out.clarify);
            state.sim = std::move(next);
            obs.user = std::move(reply);
            break;
        }
        case ActionKind::ApiCall: {
            const ApiCall& call = *out.api_call;
            BookingContext ctx{state.world_seed, state.episode_id,
                               static_cast<int>(state.bookings.size())};
            ApiResult res = execute_api(db, call, ctx);
            if (res.kind == ApiResultKind::BookingConfirmation) {
                Domain d{};
                find_api(call.name, &d);
                BookingRecord rec{d, *res.booking_ref, *res.entity_id, {}};
                for (const auto& [k, v] : call.args) rec.args[k] = v;
                state.bookings.push_back(std::move(rec));
                auto [reply, next] = sim.react_booking(std::move(state.sim), call, res);
                state.sim = std::move(next);
                if (reply.completion) term = Termination::UserComplete;
                obs.user = std::move(reply);
            }
            obs.api = std::move(res);
            break;
        }
        case ActionKind::Respond: {
            const std::string text = out.response.value_or("");
            if (text == kDoneToken) {
                term = Termination::AgentDone;
            } else {
                auto [reply, next] = sim.react_response(std::move(state.sim), text);
                state.sim = std::move(next);
                if (reply.completion) term = Termination::UserComplete;
                obs.user = std::move(reply);
            }
            break;
        }
    }

    Trajectory& tr = state.trajectory;
    Turn turn;
    turn.index = tr.turn_count;
    turn.reasoning = out.think;
    turn.action = out;
    turn.observation = obs;
    turn.speaker_visible_text = out.visible_text();
    tr.turns.push_back(std::move(turn));
    ++tr.turn_count;
    state.turn_budget_remaining = kMaxTurns - tr.turn_count;

    if (term == Termination::None && state.turn_budget_remaining <= 0) term = Termination::TurnLimit;
    if (term != Termination::None) {
        state.done = true;
        tr.terminated_by = term;
        if (check_success(state, db))
            tr.status = EpisodeStatus::Success;
        else
            tr.status = term == Termination::TurnLimit ? EpisodeStatus::TurnLimit : EpisodeStatus::Failure;
    }
    return {std::move(obs), state.done};
}

bool subgoal_booked(const SubGoal& sg, const std::vector<BookingRecord>& bookings, const Database& db) {
    if (!sg.booking) return true;
    for (const auto& rec : bookings) {
        if (rec.domain != sg.domain) continue;
        const Entity* e = db.find(rec.domain, rec.entity_id);
        if (!e || !entity_satisfies(*e, sg.constraints)) continue;
        bool args_ok = true;
        for (const auto& [k, v] : *sg.booking) {
            auto it = rec.args.find(k);
            if (it == rec.args.end() || lowercase(it->second) != lowercase(v)) {
                args_ok = false;
                break;
            }
        }
        if (args_ok) return true;
    }
    return false;
}

bool requestable_surfaced(const SubGoal& sg, const std::string& slot, const Trajectory& trajectory,
                          const Database& db) {
    for (const auto& turn : trajectory.turns) {
        if (turn.action.kind() != ActionKind::Respond) continue;
        const std::string text = lowercase(turn.speaker_visible_text);
        for (const auto& e : db.entities(sg.domain)) {
            if (!entity_satisfies(e, sg.constraints)) continue;
            const std::string* v = e.attr(slot);
            if (v && text.find(lowercase(*v)) != std::string::npos) return true;
        }
    }
    return false;
}

std::vector<BookingRecord> bookings_from(const Trajectory& trajectory) {
    std::vector<BookingRecord> out;
    for (const auto& turn : trajectory.turns) {
        const auto& api = turn.observation.api;
        if (!turn.action.api_call || !api || api->kind != ApiResultKind::BookingConfirmation) continue;
        Domain d{};
        find_api(turn.action.api_call->name, &d);
        BookingRecord rec{d, api->booking_ref.value_or(""), api->entity_id.value_or(""), {}};
        for (const auto& [k, v] : turn.action.api_call->args) rec.args[k] = v;
        out.push_back(std::move(rec));
    }
    return out;
}

bool check_success(const UserGoal& goal, const Trajectory& trajectory, const Database& db) {
    EpisodeState s;
    s.goal = goal;
    s.trajectory = trajectory;
    s.bookings = bookings_from(trajectory);
    return check_success(s, db);
}

bool check_success(const EpisodeState& state, const Database& db) {
    for (const auto& sg : state.goal.sub_goals) {
        if (!subgoal_booked(sg, state.bookings, db)) return false;
        for (const auto& slot : sg.requestables)
            if (!requestable_surfaced(sg, slot, state.trajectory, db)) return false;
    }
    return true;
}

}  // namespace clarirl
