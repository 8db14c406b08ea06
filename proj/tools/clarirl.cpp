#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "clarirl/dataset.hpp"
#include "clarirl/eval.hpp"
#include "clarirl/grpo.hpp"
#include "clarirl/parallel.hpp"

using namespace clarirl;

namespace {

int cmd_rollout(std::uint64_t seed, int episodes, const std::string& policy, int world_size, double ambiguity_rate,
                const std::string& out_path) {
    if (episodes < 1) throw std::invalid_argument("--episodes must be >= 1");
    const Database db = generate_world(seed, WorldSizeConfig::uniform(world_size));
    const UserSimulator sim(db);
    const AgentFactory factory = make_agent_factory(policy);
    GoalSamplerConfig gc;
    gc.ambiguity_rate = ambiguity_rate;

    std::vector<Trajectory> trajectories(static_cast<std::size_t>(episodes));
    parallel_for(trajectories.size(), default_threads(), [&](std::size_t i) {
        const UserGoal goal = sample_goal(db, gc, derive_seed(seed, {1, i}));
        auto agent = factory();
        Rng rng(derive_seed(seed, {3, i}));
        trajectories[i] = run_episode(*agent, sim, db, goal, derive_seed(seed, {2, i}), i, rng).trajectory;
    });
    int success = 0;
    long turns = 0;
    for (const auto& t : trajectories) {
        success += t.status == EpisodeStatus::Success ? 1 : 0;
        turns += t.turn_count;
    }
    if (!out_path.empty()) write_jsonl_of(out_path, trajectories);
    std::printf("%s: %d/%d successful, %.2f turns on average\n", policy.c_str(), success, episodes,
                static_cast<double>(turns) / episodes);
    return 0;
}

int cmd_synth(SynthConfig cfg, const std::string& out_dir) {
    const SynthOutputs out = run_synthesis(cfg, out_dir);
    const SynthStats& s = out.stats;
    std::printf("goals %d, sampling failures %d, oracle failures %d\n", s.goals_requested,
                s.goal_sampling_failures, s.oracle_failures);
    std::printf("samples %d (MustClarify %d), dedup dropped %d, retained %d\n", s.samples_emitted,
                s.must_clarify_samples, s.dedup_dropped, s.retained);
    std::printf("dpo pairs %d, skipped %d\n", s.dpo_pairs, s.dpo_skipped);
    for (const auto& e : s.goal_errors) std::fprintf(stderr, "%s\n", e.c_str());
    return 0;
}

int cmd_train(const std::string& config_path, const std::optional<std::string>& judge,
              const std::optional<std::uint64_t>& seed) {
    TrainConfig cfg = load_train_config(config_path);
    if (judge) cfg.judge = *judge;
    if (seed) cfg.seed = *seed;
    const TrainResult r = train(cfg);
    if (!r.metrics.empty()) {
        const MetricsRow& last = r.metrics.back();
        std::printf("step %d: r_format %.4f r_clarify %.4f r_total %.4f\n", last.step, last.r_format,
                    last.r_clarify, last.r_total);
    }
    if (r.skipped_groups > 0) std::printf("skipped groups: %d\n", r.skipped_groups);
    for (const auto& c : r.checkpoints) std::printf("checkpoint %s\n", c.string().c_str());
    return 0;
}

int cmd_eval(const std::string& policy, EvalConfig cfg, const std::string& out_path) {
    const EvalReport r = evaluate(policy, cfg);
    std::cout << render_table({r});
    if (!out_path.empty()) save_report(out_path, r);
    return 0;
}

int cmd_compare(const std::string& a, const std::string& b) {
    std::cout << render_comparison(compare(load_report(a), load_report(b)));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Clarification-aware dialogue agent toolkit"};
    app.require_subcommand(1);

    auto* rollout = app.add_subcommand("rollout", "Run episodes with one agent");
    std::uint64_t r_seed = 0;
    int r_episodes = 10, r_world = 30;
    double r_amb = 1.0;
    std::string r_policy = "oracle", r_out;
    rollout->add_option("--seed", r_seed, "World and episode seed");
    rollout->add_option("--episodes", r_episodes, "Number of episodes");
    rollout->add_option("--policy", r_policy, "never-clarify|always-clarify|oracle|base|trained:PATH");
    rollout->add_option("--world-size", r_world, "Entities per domain");
    rollout->add_option("--ambiguity-rate", r_amb, "Probability a goal withholds a constraint");
    rollout->add_option("--out", r_out, "Write trajectories as JSON Lines");

    auto* synth = app.add_subcommand("synth", "Build the clarification corpus");
    SynthConfig s_cfg;
    std::string s_out = "data";
    synth->add_option("--seed", s_cfg.seed, "Seed");
    synth->add_option("--n-goals", s_cfg.n_goals, "Goals to sample");
    synth->add_option("--ambiguity-rate", s_cfg.ambiguity_rate, "Probability a goal withholds a constraint");
    synth->add_option("--multi-ambiguity-rate", s_cfg.multi_ambiguity_rate, "Probability of extra withheld slots");
    synth->add_option("--ngram", s_cfg.ngram_n, "n for question n-grams");
    synth->add_option("--jaccard", s_cfg.jaccard_threshold, "Dedup similarity threshold");
    synth->add_option("--world-size", s_cfg.world_size, "Entities per domain");
    synth->add_option("--out", s_out, "Output directory");

    auto* trainc = app.add_subcommand("train", "Train the template policy");
    std::string t_config;
    std::optional<std::string> t_judge;
    std::optional<std::uint64_t> t_seed;
    trainc->add_option("--config", t_config, "Train config JSON")->required();
    trainc->add_option("--judge", t_judge, "oracle|remote|self")->check(CLI::IsMember({"oracle", "remote", "self"}));
    trainc->add_option("--seed", t_seed, "Override the config seed");

    auto* evalc = app.add_subcommand("eval", "Evaluate an agent over several runs");
    EvalConfig e_cfg;
    std::string e_policy, e_out;
    evalc->add_option("--policy", e_policy, "Agent spec")->required();
    evalc->add_option("--episodes", e_cfg.n_episodes, "Episodes per run");
    evalc->add_option("--runs", e_cfg.n_runs, "Independent runs");
    evalc->add_option("--seed", e_cfg.world_seed, "World seed");
    evalc->add_option("--ambiguity-rate", e_cfg.ambiguity_rate, "Probability a goal withholds a constraint");
    evalc->add_option("--world-size", e_cfg.world_size, "Entities per domain");
    evalc->add_option("--out", e_out, "Report JSON path");

    auto* comparec = app.add_subcommand("compare", "Compare two evaluation reports");
    std::string c_a, c_b;
    comparec->add_option("a", c_a, "First report")->required();
    comparec->add_option("b", c_b, "Second report")->required();

    CLI11_PARSE(app, argc, argv);
    try {
        if (*rollout) return cmd_rollout(r_seed, r_episodes, r_policy, r_world, r_amb, r_out);
        if (*synth) return cmd_synth(s_cfg, s_out);
        if (*trainc) return cmd_train(t_config, t_judge, t_seed);
        if (*evalc) return cmd_eval(e_policy, e_cfg, e_out);
        if (*comparec) return cmd_compare(c_a, c_b);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
