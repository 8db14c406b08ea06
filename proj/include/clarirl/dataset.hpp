#pragma once

// Clarification corpus builder: oracle-driven dialogues over sampled goals,
// n-gram redundancy filtering, and preference pairs against a
// never-clarify replay of the same goal.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "clarirl/episode.hpp"
#include "clarirl/goal_sampler.hpp"
#include "clarirl/json_io.hpp"
#include "clarirl/user_sim.hpp"
#include "clarirl/world.hpp"

namespace clarirl {

enum class GoldAction { MustClarify, NoClarifyNeeded };
std::string_view to_string(GoldAction g);

struct SpeakerSample {
    std::string sample_id;
    Trajectory context;  // visible prefix ending at the decision point
    GoldAction gold_action = GoldAction::NoClarifyNeeded;
    std::optional<std::string> gold_slot;  // MustClarify only
    Trajectory full_trajectory;
    std::vector<int> annotations;  // indices of clarify turns
    UserGoal goal;
    std::uint64_t persona_seed = 0;
    std::uint64_t episode_id = 0;
    AmbiguityState truth;  // simulator ambiguity ledger at the decision point
    std::string question;  // the clarify question asked at the decision point

    friend bool operator==(const SpeakerSample&, const SpeakerSample&) = default;
};

struct DpoPair {
    std::string sample_id;
    Trajectory context;
    UserGoal goal;
    Trajectory chosen;
    Trajectory rejected;

    friend bool operator==(const DpoPair&, const DpoPair&) = default;
};

void to_json(json& j, const SpeakerSample& s);
void from_json(const json& j, SpeakerSample& s);
void to_json(json& j, const DpoPair& p);
void from_json(const json& j, DpoPair& p);

struct SynthConfig {
    std::uint64_t seed = 0;
    int n_goals = 1000;
    double ambiguity_rate = 1.0;
    double multi_ambiguity_rate = 0.3;
    std::vector<double> subgoal_count_weights{0.5, 0.5};
    int ngram_n = 3;
    double jaccard_threshold = 0.8;
    int world_size = 30;  // entities per domain
    int threads = 0;      // 0 picks a default
};

struct SynthStats {
    int goals_requested = 0;
    int goal_sampling_failures = 0;
    int oracle_failures = 0;
    int multi_ambiguity_goals = 0;
    int samples_emitted = 0;
    int must_clarify_samples = 0;
    int dedup_dropped = 0;
    int retained = 0;
    int dpo_pairs = 0;
    int dpo_skipped = 0;  // never-clarify replay happened to succeed
    std::vector<std::string> goal_errors;
};

struct SynthResult {
    std::vector<SpeakerSample> samples;  // before dedup
    std::vector<int> goal_ambiguity_counts;  // per successfully sampled goal
    SynthStats stats;
};

// Throws std::invalid_argument for rates outside [0,1] or n_goals < 0.
SynthResult synthesize(const Database& db, const UserSimulator& sim, const SynthConfig& cfg);

std::set<std::string> question_ngrams(std::string_view question, int n);
double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

// Greedy pass in order: a sample is dropped when its question n-gram set
// reaches `threshold` Jaccard similarity with any retained sample. Samples
// without a question are always kept. Throws for n < 1 or a threshold
// outside (0, 1].
std::vector<SpeakerSample> ngram_dedup(const std::vector<SpeakerSample>& samples, int n, double threshold,
                                       int* dropped = nullptr);

std::vector<DpoPair> build_dpo_pairs(const std::vector<SpeakerSample>& samples, const Database& db,
                                     const UserSimulator& sim, int* skipped = nullptr);

struct SynthOutputs {
    std::vector<SpeakerSample> retained;
    std::vector<DpoPair> pairs;
    SynthStats stats;
};

// Full pipeline; writes samples.jsonl, dpo_pairs.jsonl, world.jsonl and
// manifest.json into out_dir when it is non-empty.
SynthOutputs run_synthesis(const SynthConfig& cfg, const std::filesystem::path& out_dir);

std::vector<SpeakerSample> load_samples(const std::filesystem::path& path);

}  // namespace clarirl
