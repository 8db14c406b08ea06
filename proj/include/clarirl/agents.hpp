#pragma once

// Agents that act on the visible trajectory: scripted baselines and the
// trainable template policy.

#include <memory>
#include <string>

#include "clarirl/episode.hpp"
#include "clarirl/policy.hpp"

namespace clarirl {

class Agent {
public:
    virtual ~Agent() = default;
    virtual AgentOutput act(const Trajectory& visible, Rng& rng) = 0;
    virtual std::string id() const = 0;
};

// Acts on whatever it knows: searches with the stated constraints, books
// the first result and repeats a rejected booking.
class NeverClarifyAgent final : public Agent {
public:
    AgentOutput act(const Trajectory& visible, Rng& rng) override;
    std::string id() const override { return "never-clarify"; }
};

// Asks a clarification question every turn, cycling through slots.
class AlwaysClarifyAgent final : public Agent {
public:
    AgentOutput act(const Trajectory& visible, Rng& rng) override;
    std::string id() const override { return "always-clarify"; }
};

// Asks for each missing constraint once, then searches, books and informs.
class OracleAgent final : public Agent {
public:
    AgentOutput act(const Trajectory& visible, Rng& rng) override;
    std::string id() const override { return "oracle"; }
};

class PolicyAgent final : public Agent {
public:
    PolicyAgent(PolicyParams params, std::string id) : params_(std::move(params)), id_(std::move(id)) {}
    AgentOutput act(const Trajectory& visible, Rng& rng) override;
    std::string id() const override { return id_; }
    const PolicyParams& params() const { return params_; }

private:
    PolicyParams params_;
    std::string id_;
};

// never-clarify | always-clarify | oracle | base | trained:PATH
std::unique_ptr<Agent> make_agent(const std::string& spec);

// Template the scripted agents use for an acting stage.
const ActionTemplate& stage_template(Stage s);

// Drives one episode to termination. Agent exceptions propagate.
EpisodeState run_episode(Agent& agent, const UserSimulator& sim, const Database& db, const UserGoal& goal,
                         std::uint64_t persona_seed, std::uint64_t episode_id, Rng& rng);

}  // namespace clarirl
