#include "clarirl/dataset.hpp"

#include <cctype>
#include <fstream>
#include <map>
#include <stdexcept>

#include "clarirl/agents.hpp"
#include "clarirl/parallel.hpp"
#include "clarirl/rng.hpp"

namespace clarirl {

std::string_view to_string(GoldAction g) {
    return g == GoldAction::MustClarify ? "MustClarify" : "NoClarifyNeeded";
}

void to_json(json& j, const SpeakerSample& s) {
    j = json{{"sample_id", s.sample_id},
             {"context", s.context},
             {"gold_action", to_string(s.gold_action)},
             {"full_trajectory", s.full_trajectory},
             {"annotations", s.annotations},
             {"goal", s.goal},
             {"persona_seed", s.persona_seed},
             {"episode_id", s.episode_id},
             {"truth", s.truth},
             {"question", s.question}};
    if (s.gold_slot) j["gold_slot"] = *s.gold_slot;
}

void from_json(const json& j, SpeakerSample& s) {
    s.sample_id = j.at("sample_id").get<std::string>();
    s.context = j.at("context").get<Trajectory>();
    const auto gold = j.at("gold_action").get<std::string>();
    if (gold == "MustClarify")
        s.gold_action = GoldAction::MustClarify;
    else if (gold == "NoClarifyNeeded")
        s.gold_action = GoldAction::NoClarifyNeeded;
    else
        throw std::invalid_argument("unknown gold_action " + gold);
    s.gold_slot = j.contains("gold_slot") ? std::optional(j.at("gold_slot").get<std::string>()) : std::nullopt;
    s.full_trajectory = j.at("full_trajectory").get<Trajectory>();
    s.annotations = j.at("annotations").get<std::vector<int>>();
    s.goal = j.at("goal").get<UserGoal>();
    s.persona_seed = j.at("persona_seed").get<std::uint64_t>();
    s.episode_id = j.at("episode_id").get<std::uint64_t>();
    s.truth = j.at("truth").get<AmbiguityState>();
    s.question = j.at("question").get<std::string>();
}

void to_json(json& j, const DpoPair& p) {
    j = json{{"sample_id", p.sample_id},
             {"context", p.context},
             {"goal", p.goal},
             {"chosen", p.chosen},
             {"rejected", p.rejected}};
}

void from_json(const json& j, DpoPair& p) {
    p.sample_id = j.at("sample_id").get<std::string>();
    p.context = j.at("context").get<Trajectory>();
    p.goal = j.at("goal").get<UserGoal>();
    p.chosen = j.at("chosen").get<Trajectory>();
    p.rejected = j.at("rejected").get<Trajectory>();
}

namespace {

struct GoalRun {
    bool sampled = false;
    bool succeeded = false;
    int ambiguities = 0;
    std::string error;
    std::vector<SpeakerSample> samples;
};

GoalRun run_goal(const Database& db, const UserSimulator& sim, const SynthConfig& cfg, std::size_t i) {
    GoalRun out;
    GoalSamplerConfig gc;
    gc.ambiguity_rate = cfg.ambiguity_rate;
    gc.multi_ambiguity_rate = cfg.multi_ambiguity_rate;
    gc.subgoal_count_weights = cfg.subgoal_count_weights;
    UserGoal goal;
    try {
        goal = sample_goal(db, gc, derive_seed(cfg.seed, {0x5a11, i}));
    } catch (const GoalSamplingError& e) {
        out.error = "goal " + std::to_string(i) + ": " + e.what();
        return out;
    }
    out.sampled = true;
    out.ambiguities = static_cast<int>(goal.ambiguity_spec.size());

    const std::uint64_t persona = derive_seed(cfg.seed, {0x9e45, i});
    const std::uint64_t episode_id = i;
    Rng rng(derive_seed(cfg.seed, {0x0a6e, i}));
    OracleAgent oracle;
    EpisodeState state = start_episode(sim, db, goal, persona, episode_id);
    std::vector<AmbiguityState> truths;
    while (!state.done) {
        truths.push_back(sim.truth(state.sim));
        step(state, oracle.act(state.trajectory, rng), sim, db);
    }
    if (state.trajectory.status != EpisodeStatus::Success) return out;
    out.succeeded = true;

    const Trajectory& full = state.trajectory;
    std::vector<int> clarify_turns;
    for (const auto& t : full.turns)
        if (t.action.kind() == ActionKind::Clarify) clarify_turns.push_back(t.index);

    auto base = [&](std::size_t decision) {
        SpeakerSample s;
        s.context = prefix(full, decision);
        s.full_trajectory = full;
        s.annotations = clarify_turns;
        s.goal = goal;
        s.persona_seed = persona;
        s.episode_id = episode_id;
        s.truth = truths.at(decision);
        return s;
    };
    if (clarify_turns.empty()) {
        SpeakerSample s = base(0);
        s.sample_id = goal.goal_id + "-0";
        s.gold_action = GoldAction::NoClarifyNeeded;
        out.samples.push_back(std::move(s));
        return out;
    }
    for (int k : clarify_turns) {
        SpeakerSample s = base(static_cast<std::size_t>(k));
        s.sample_id = goal.goal_id + "-" + std::to_string(k);
        s.gold_action = GoldAction::MustClarify;
        s.question = *full.turns[static_cast<std::size_t>(k)].action.clarify;
        s.gold_slot = detect_slot(s.question);
        out.samples.push_back(std::move(s));
    }
    return out;
}

void check_rate(double r, const char* name) {
    if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument(std::string(name) + " must be in [0,1]");
}

}  // namespace

SynthResult synthesize(const Database& db, const UserSimulator& sim, const SynthConfig& cfg) {
    check_rate(cfg.ambiguity_rate, "ambiguity_rate");
    check_rate(cfg.multi_ambiguity_rate, "multi_ambiguity_rate");
    if (cfg.n_goals < 0) throw std::invalid_argument("n_goals must be >= 0");

    std::vector<GoalRun> runs(static_cast<std::size_t>(cfg.n_goals));
    parallel_for(runs.size(), cfg.threads > 0 ? cfg.threads : default_threads(),
                 [&](std::size_t i) { runs[i] = run_goal(db, sim, cfg, i); });

    SynthResult r;
    r.stats.goals_requested = cfg.n_goals;
    for (auto& run : runs) {
        if (!run.sampled) {
            ++r.stats.goal_sampling_failures;
            r.stats.goal_errors.push_back(run.error);
            continue;
        }
        r.goal_ambiguity_counts.push_back(run.ambiguities);
        if (run.ambiguities >= 2) ++r.stats.multi_ambiguity_goals;
        if (!run.succeeded) {
            ++r.stats.oracle_failures;
            continue;
        }
        for (auto& s : run.samples) {
            if (s.gold_action == GoldAction::MustClarify) ++r.stats.must_clarify_samples;
            r.samples.push_back(std::move(s));
        }
    }
    r.stats.samples_emitted = static_cast<int>(r.samples.size());
    return r;
}

std::set<std::string> question_ngrams(std::string_view question, int n) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : question) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));

    std::set<std::string> grams;
    if (tokens.empty()) return grams;
    const std::size_t len = static_cast<std::size_t>(n);
    if (tokens.size() < len) {
        std::string g;
        for (const auto& t : tokens) g += (g.empty() ? "" : " ") + t;
        grams.insert(g);
        return grams;
    }
    for (std::size_t i = 0; i + len <= tokens.size(); ++i) {
        std::string g;
        for (std::size_t k = 0; k < len; ++k) g += (k ? " " : "") + tokens[i + k];
        grams.insert(std::move(g));
    }
    return grams;
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() || b.empty()) return 0.0;
    std::size_t inter = 0;
    for (const auto& g : a) inter += b.count(g);
    return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

std::vector<SpeakerSample> ngram_dedup(const std::vector<SpeakerSample>& samples, int n, double threshold,
                                       int* dropped) {
    if (n < 1) throw std::invalid_argument("ngram n must be >= 1");
    if (!(threshold > 0.0 && threshold <= 1.0)) throw std::invalid_argument("jaccard threshold must be in (0,1]");
    std::vector<SpeakerSample> kept;
    std::vector<std::set<std::string>> kept_grams;
    int drops = 0;
    for (const auto& s : samples) {
        auto grams = question_ngrams(s.question, n);
        bool dup = false;
        if (!grams.empty()) {
            for (const auto& g : kept_grams) {
                if (jaccard(grams, g) >= threshold) {
                    dup = true;
                    break;
                }
            }
        }
        if (dup) {
            ++drops;
            continue;
        }
        kept.push_back(s);
        kept_grams.push_back(std::move(grams));
    }
    if (dropped) *dropped = drops;
    return kept;
}

std::vector<DpoPair> build_dpo_pairs(const std::vector<SpeakerSample>& samples, const Database& db,
                                     const UserSimulator& sim, int* skipped) {
    std::map<std::string, Trajectory> replays;
    std::vector<DpoPair> pairs;
    int skips = 0;
    for (const auto& s : samples) {
        if (s.gold_action != GoldAction::MustClarify) continue;
        auto it = replays.find(s.goal.goal_id);
        if (it == replays.end()) {
            NeverClarifyAgent agent;
            Rng rng(s.episode_id);
            EpisodeState st = run_episode(agent, sim, db, s.goal, s.persona_seed, s.episode_id, rng);
            it = replays.emplace(s.goal.goal_id, st.trajectory).first;
        }
        if (it->second.status == EpisodeStatus::Success) {
            ++skips;
            continue;
        }
        pairs.push_back(DpoPair{s.sample_id, s.context, s.goal, s.full_trajectory, it->second});
    }
    if (skipped) *skipped = skips;
    return pairs;
}

SynthOutputs run_synthesis(const SynthConfig& cfg, const std::filesystem::path& out_dir) {
    const Database db = generate_world(cfg.seed, WorldSizeConfig::uniform(cfg.world_size));
    const UserSimulator sim(db);
    SynthResult r = synthesize(db, sim, cfg);

    SynthOutputs out;
    out.stats = r.stats;
    out.retained = ngram_dedup(r.samples, cfg.ngram_n, cfg.jaccard_threshold, &out.stats.dedup_dropped);
    out.stats.retained = static_cast<int>(out.retained.size());
    out.pairs = build_dpo_pairs(out.retained, db, sim, &out.stats.dpo_skipped);
    out.stats.dpo_pairs = static_cast<int>(out.pairs.size());

    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        write_jsonl_of(out_dir / "samples.jsonl", out.retained);
        write_jsonl_of(out_dir / "dpo_pairs.jsonl", out.pairs);
        save_database(out_dir / "world.jsonl", db);
        const SynthStats& st = out.stats;
        json manifest{
            {"seed", cfg.seed},
            {"n_goals", cfg.n_goals},
            {"ambiguity_rate", cfg.ambiguity_rate},
            {"multi_ambiguity_rate", cfg.multi_ambiguity_rate},
            {"subgoal_count_weights", cfg.subgoal_count_weights},
            {"ngram_n", cfg.ngram_n},
            {"jaccard_threshold", cfg.jaccard_threshold},
            {"world_size", cfg.world_size},
            {"counts",
             {{"goals_requested", st.goals_requested},
              {"goal_sampling_failures", st.goal_sampling_failures},
              {"oracle_failures", st.oracle_failures},
              {"multi_ambiguity_goals", st.multi_ambiguity_goals},
              {"samples_emitted", st.samples_emitted},
              {"must_clarify_samples", st.must_clarify_samples},
              {"dedup_dropped", st.dedup_dropped},
              {"retained", st.retained},
              {"dpo_pairs", st.dpo_pairs},
              {"dpo_skipped", st.dpo_skipped}}},
            {"goal_errors", st.goal_errors},
        };
        std::ofstream(out_dir / "manifest.json") << manifest.dump(2) << "\n";
    }
    return out;
}

std::vector<SpeakerSample> load_samples(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw std::runtime_error("dataset not found: " + path.string());
    return read_jsonl_as<SpeakerSample>(path);
}

}  // namespace clarirl
