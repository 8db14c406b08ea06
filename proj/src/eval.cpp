#include "clarirl/eval.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "clarirl/goal_sampler.hpp"
#include "clarirl/parallel.hpp"

namespace clarirl {

void to_json(json& j, const RunResult& r) {
    j = json{{"success_rate", r.success_rate}, {"avg_turns", r.avg_turns}, {"n_episodes", r.n_episodes},
             {"errors", r.errors}};
}

void from_json(const json& j, RunResult& r) {
    r.success_rate = j.at("success_rate").get<double>();
    r.avg_turns = j.at("avg_turns").get<double>();
    r.n_episodes = j.at("n_episodes").get<int>();
    r.errors = j.value("errors", 0);
}

void to_json(json& j, const EvalReport& r) {
    j = json{{"policy_id", r.policy_id},     {"world_seed", r.world_seed},   {"n_episodes", r.n_episodes},
             {"ambiguity_rate", r.ambiguity_rate}, {"runs", r.runs},     {"success_avg", r.success_avg},
             {"success_std", r.success_std}, {"turns_avg", r.turns_avg},     {"error_log", r.error_log}};
}

void from_json(const json& j, EvalReport& r) {
    r.policy_id = j.at("policy_id").get<std::string>();
    r.world_seed = j.at("world_seed").get<std::uint64_t>();
    r.n_episodes = j.at("n_episodes").get<int>();
    r.ambiguity_rate = j.at("ambiguity_rate").get<double>();
    r.runs = j.at("runs").get<std::vector<RunResult>>();
    r.success_avg = j.at("success_avg").get<double>();
    r.success_std = j.at("success_std").get<double>();
    r.turns_avg = j.at("turns_avg").get<double>();
    r.error_log = j.value("error_log", std::vector<std::string>{});
}

EvalReport load_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open report " + path.string());
    return json::parse(in).get<EvalReport>();
}

void save_report(const std::filesystem::path& path, const EvalReport& r) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report " + path.string());
    out << json(r).dump(2) << "\n";
}

AgentFactory make_agent_factory(const std::string& spec) {
    if (spec.rfind("trained:", 0) == 0) {
        std::shared_ptr<const Agent> proto = make_agent(spec);
        const auto* policy = dynamic_cast<const PolicyAgent*>(proto.get());
        PolicyParams params = policy->params();
        return [params, spec]() -> std::unique_ptr<Agent> { return std::make_unique<PolicyAgent>(params, spec); };
    }
    make_agent(spec);  // reject unknown specs up front
    return [spec] { return make_agent(spec); };
}

void aggregate(EvalReport& r) {
    const double n = static_cast<double>(r.runs.size());
    r.success_avg = r.turns_avg = r.success_std = 0.0;
    if (r.runs.empty()) return;
    for (const auto& run : r.runs) {
        r.success_avg += run.success_rate;
        r.turns_avg += run.avg_turns;
    }
    r.success_avg /= n;
    r.turns_avg /= n;
    if (r.runs.size() > 1) {
        double ss = 0.0;
        for (const auto& run : r.runs) ss += (run.success_rate - r.success_avg) * (run.success_rate - r.success_avg);
        r.success_std = std::sqrt(ss / (n - 1.0));
    }
}

namespace {

struct EpisodeOutcome {
    bool success = false;
    int turns = 0;
    std::string error;
};

}  // namespace

EvalReport evaluate(const std::string& policy_id, const AgentFactory& factory, const EvalConfig& cfg) {
    if (cfg.n_episodes < 1) throw std::invalid_argument("evaluate: n_episodes must be >= 1");
    if (cfg.n_runs < 1) throw std::invalid_argument("evaluate: n_runs must be >= 1");

    const Database db = generate_world(cfg.world_seed, WorldSizeConfig::uniform(cfg.world_size));
    const UserSimulator sim(db);
    GoalSamplerConfig gc;
    gc.ambiguity_rate = cfg.ambiguity_rate;
    gc.multi_ambiguity_rate = cfg.multi_ambiguity_rate;

    EvalReport report;
    report.policy_id = policy_id;
    report.world_seed = cfg.world_seed;
    report.n_episodes = cfg.n_episodes;
    report.ambiguity_rate = cfg.ambiguity_rate;
    const int threads = cfg.threads > 0 ? cfg.threads : default_threads();

    for (int run = 0; run < cfg.n_runs; ++run) {
        const std::uint64_t run_seed = derive_seed(cfg.world_seed, {0xe7a1, static_cast<std::uint64_t>(run)});
        std::vector<EpisodeOutcome> outcomes(static_cast<std::size_t>(cfg.n_episodes));
        parallel_for(outcomes.size(), threads, [&](std::size_t i) {
            EpisodeOutcome& o = outcomes[i];
            try {
                const UserGoal goal = sample_goal(db, gc, derive_seed(run_seed, {1, i}));
                auto agent = factory();
                Rng rng(derive_seed(run_seed, {3, i}));
                const EpisodeState st = run_episode(*agent, sim, db, goal, derive_seed(run_seed, {2, i}), i, rng);
                o.success = st.trajectory.status == EpisodeStatus::Success;
                o.turns = st.trajectory.turn_count;
            } catch (const std::exception& e) {
                o.success = false;
                o.turns = kMaxTurns;
                o.error = "run " + std::to_string(run) + " episode " + std::to_string(i) + ": " + e.what();
            }
        });
        RunResult rr;
        rr.n_episodes = cfg.n_episodes;
        int successes = 0;
        long turns = 0;
        for (const auto& o : outcomes) {
            successes += o.success ? 1 : 0;
            turns += o.turns;
            if (!o.error.empty()) {
                ++rr.errors;
                std::cerr << "evaluate: " << o.error << "\n";
                report.error_log.push_back(o.error);
            }
        }
        rr.success_rate = static_cast<double>(successes) / cfg.n_episodes;
        rr.avg_turns = static_cast<double>(turns) / cfg.n_episodes;
        report.runs.push_back(rr);
    }
    aggregate(report);
    return report;
}

EvalReport evaluate(const std::string& agent_spec, const EvalConfig& cfg) {
    return evaluate(agent_spec, make_agent_factory(agent_spec), cfg);
}

Comparison compare(const EvalReport& a, const EvalReport& b) {
    auto mismatch = [](const std::string& field, const std::string& va, const std::string& vb) {
        throw std::invalid_argument("compare: mismatched " + field + " (" + va + " vs " + vb + ")");
    };
    if (a.world_seed != b.world_seed)
        mismatch("world_seed", std::to_string(a.world_seed), std::to_string(b.world_seed));
    if (a.n_episodes != b.n_episodes)
        mismatch("n_episodes", std::to_string(a.n_episodes), std::to_string(b.n_episodes));
    if (a.runs.size() != b.runs.size())
        mismatch("runs", std::to_string(a.runs.size()), std::to_string(b.runs.size()));
    if (a.ambiguity_rate != b.ambiguity_rate)
        mismatch("ambiguity_rate", std::to_string(a.ambiguity_rate), std::to_string(b.ambiguity_rate));
    Comparison c{a, b, b.success_avg - a.success_avg, b.turns_avg - a.turns_avg, false, false};
    c.a_dominates = a.success_avg > b.success_avg && a.turns_avg < b.turns_avg;
    c.b_dominates = b.success_avg > a.success_avg && b.turns_avg < a.turns_avg;
    return c;
}

std::string render_table(const std::vector<EvalReport>& reports) {
    std::size_t width = 6;
    for (const auto& r : reports) width = std::max(width, r.policy_id.size());
    std::ostringstream out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-*s  %-18s  %s\n", static_cast<int>(width), "Policy", "Success Avg@runs",
                  "Turns");
    out << buf;
    for (const auto& r : reports) {
        std::snprintf(buf, sizeof buf, "%-*s  %6.2f +/- %-7.2f  %5.2f\n", static_cast<int>(width),
                      r.policy_id.c_str(), 100.0 * r.success_avg, 100.0 * r.success_std, r.turns_avg);
        out << buf;
    }
    return out.str();
}

std::string render_comparison(const Comparison& c) {
    std::ostringstream out;
    out << render_table({c.a, c.b});
    char buf[160];
    std::snprintf(buf, sizeof buf, "delta (b - a): success %+.2f, turns %+.2f\n", 100.0 * c.success_delta,
                  c.turns_delta);
    out << buf;
    if (c.a_dominates) out << "dominance: " << c.a.policy_id << "\n";
    else if (c.b_dominates) out << "dominance: " << c.b.policy_id << "\n";
    else out << "dominance: none\n";
    return out.str();
}

}  // namespace clarirl
