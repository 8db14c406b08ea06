#pragma once

// Multi-run evaluation: success rate mean and sample std over independent
// runs, average agent turns, and side-by-side comparison of two reports.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "clarirl/agents.hpp"
#include "clarirl/json_io.hpp"

namespace clarirl {

struct EvalConfig {
    std::uint64_t world_seed = 0;
    int n_episodes = 200;
    int n_runs = 5;
    double ambiguity_rate = 1.0;
    double multi_ambiguity_rate = 0.3;
    int world_size = 30;
    int threads = 0;
};

struct RunResult {
    double success_rate = 0.0;
    double avg_turns = 0.0;
    int n_episodes = 0;
    int errors = 0;  // episodes that threw; counted as failures at the turn cap

    friend bool operator==(const RunResult&, const RunResult&) = default;
};

struct EvalReport {
    std::string policy_id;
    std::uint64_t world_seed = 0;
    int n_episodes = 0;
    double ambiguity_rate = 1.0;
    std::vector<RunResult> runs;
    double success_avg = 0.0;
    double success_std = 0.0;  // sample std over runs, 0 for a single run
    double turns_avg = 0.0;
    std::vector<std::string> error_log;

    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

void to_json(json& j, const RunResult& r);
void from_json(const json& j, RunResult& r);
void to_json(json& j, const EvalReport& r);
void from_json(const json& j, EvalReport& r);

EvalReport load_report(const std::filesystem::path& path);
void save_report(const std::filesystem::path& path, const EvalReport& r);

using AgentFactory = std::function<std::unique_ptr<Agent>()>;
// Resolves an agent spec once (a checkpoint is read a single time).
AgentFactory make_agent_factory(const std::string& spec);

// Throws std::invalid_argument for n_episodes < 1 or n_runs < 1. Each run
// draws goals, personas and policy randomness from seeds derived from
// (world_seed, run index); the world itself is shared.
EvalReport evaluate(const std::string& policy_id, const AgentFactory& factory, const EvalConfig& cfg);
EvalReport evaluate(const std::string& agent_spec, const EvalConfig& cfg);

// Fills the aggregate fields from runs.
void aggregate(EvalReport& r);

struct Comparison {
    EvalReport a;
    EvalReport b;
    double success_delta = 0.0;  // b - a
    double turns_delta = 0.0;    // b - a
    bool a_dominates = false;    // higher success and fewer turns
    bool b_dominates = false;
};

// Throws std::invalid_argument naming the first mismatched field among
// world_seed, n_episodes, runs and ambiguity_rate.
Comparison compare(const EvalReport& a, const EvalReport& b);

std::string render_table(const std::vector<EvalReport>& reports);
std::string render_comparison(const Comparison& c);

}  // namespace clarirl
