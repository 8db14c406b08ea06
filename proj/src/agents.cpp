#include "clarirl/agents.hpp"

#include <stdexcept>

namespace clarirl {

namespace {

const ActionTemplate& by_id(const std::string& id) {
    auto idx = template_index(id);
    if (!idx) throw std::logic_error("missing template " + id);
    return action_templates()[*idx];
}

const std::vector<std::string> kClarifiableSlots{"area", "pricerange", "food", "internet", "parking",
                                                 "type", "day", "departure", "destination"};

}  // namespace

const ActionTemplate& stage_template(Stage s) {
    switch (s) {
        case Stage::Query: return by_id("query_think");
        case Stage::Book: return by_id("book_think");
        case Stage::Inform: return by_id("inform_think");
        case Stage::Clarify:
        case Stage::Idle: break;
    }
    return by_id("done_think");
}

AgentOutput NeverClarifyAgent::act(const Trajectory& visible, Rng&) {
    const DialogueView view = build_view(visible);
    return render_template(stage_template(view.stage(true)), view);
}

AgentOutput AlwaysClarifyAgent::act(const Trajectory& visible, Rng&) {
    const DialogueView view = build_view(visible);
    const std::string& slot = kClarifiableSlots[static_cast<std::size_t>(view.clarifies) % kClarifiableSlots.size()];
    return render_template(by_id("clarify_" + slot + "_brief"), view);
}

AgentOutput OracleAgent::act(const Trajectory& visible, Rng& rng) {
    const DialogueView view = build_view(visible);
    const auto missing = view.missing_slots();
    if (!missing.empty())
        return render_template(by_id("clarify_" + missing.front() + "_deliberate"), view,
                               static_cast<int>(rng.index(kQuestionVariants)));
    return render_template(stage_template(view.stage()), view);
}

AgentOutput PolicyAgent::act(const Trajectory& visible, Rng& rng) {
    return sample_output(params_, build_view(visible), rng).output;
}

std::unique_ptr<Agent> make_agent(const std::string& spec) {
    if (spec == "never-clarify") return std::make_unique<NeverClarifyAgent>();
    if (spec == "always-clarify") return std::make_unique<AlwaysClarifyAgent>();
    if (spec == "oracle") return std::make_unique<OracleAgent>();
    if (spec == "base") return std::make_unique<PolicyAgent>(base_params(), "base");
    if (spec.rfind("trained:", 0) == 0) {
        const std::string path = spec.substr(8);
        if (path.empty()) throw std::invalid_argument("trained: policy needs a checkpoint path");
        return std::make_unique<PolicyAgent>(load_checkpoint(path), spec);
    }
    throw std::invalid_argument("unknown policy " + spec +
                                " (expected never-clarify, always-clarify, oracle, base or trained:PATH)");
}

EpisodeState run_episode(Agent& agent, const UserSimulator& sim, const Database& db, const UserGoal& goal,
                         std::uint64_t persona_seed, std::uint64_t episode_id, Rng& rng) {
    EpisodeState state = start_episode(sim, db, goal, persona_seed, episode_id);
    while (!state.done) step(state, agent.act(state.trajectory, rng), sim, db);
    return state;
}

}  // namespace clarirl
