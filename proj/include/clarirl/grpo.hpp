#pragma once

// Group-relative policy optimization over the template policy. No KL term
// and no reference policy: each group drives exactly one on-policy update.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "clarirl/dataset.hpp"
#include "clarirl/judge.hpp"
#include "clarirl/policy.hpp"
#include "clarirl/reward.hpp"

namespace clarirl {

inline constexpr double kAdvantageEps = 1e-8;

// a_i = (r_i - mean) / (population std + eps). Throws std::invalid_argument
// for fewer than two rewards. Zero-variance groups return exact zeros.
std::vector<double> group_advantages(const std::vector<double>& rewards);

enum class TransportPolicy { RetryThenSkipGroup, RetryThenZero };
enum class OptimizerKind { Sgd, Adam };
enum class LrSchedule { Constant, Cosine };

struct TrainConfig {
    std::filesystem::path dataset;
    std::filesystem::path output_dir;
    int steps = 300;
    int group_size = 8;
    int batch_contexts = 64;
    double learning_rate = 1.5;
    std::uint64_t seed = 0;
    std::string judge = "oracle";
    std::filesystem::path judge_config;  // RemoteJudgeConfig file, optional
    OptimizerKind optimizer = OptimizerKind::Adam;
    double beta1 = 0.9;
    double beta2 = 0.99;
    double adam_eps = 1e-8;
    double weight_decay = 0.0;
    double warmup_fraction = 0.1;
    LrSchedule schedule = LrSchedule::Cosine;
    double grad_clip = 0.0;  // 0 disables
    TransportPolicy on_transport_failure = TransportPolicy::RetryThenSkipGroup;
    double base_prior = kBasePrior;
    int checkpoint_every = 100;  // 0 keeps only the final checkpoint
    bool write_plots = true;
    int threads = 0;
};

void to_json(json& j, const TrainConfig& c);
// Unknown keys are rejected so typos fail at startup.
void from_json(const json& j, TrainConfig& c);
TrainConfig load_train_config(const std::filesystem::path& path);
// Throws std::invalid_argument naming the offending field.
void validate_config(const TrainConfig& c);
std::string config_hash(const TrainConfig& c);

// Step-size multiplier at a zero-based step.
double lr_at(const TrainConfig& c, int step);

// A training decision point with everything the reward needs precomputed.
struct TrainContext {
    std::string sample_id;
    Trajectory context;
    DialogueView view;
    FeatureVector phi;
    std::string conversation;
    AmbiguityState truth;
};
TrainContext make_context(const SpeakerSample& s);
// MustClarify samples only.
std::vector<TrainContext> make_contexts(const std::vector<SpeakerSample>& samples);

struct GroupMember {
    std::size_t template_index = 0;
    double log_prob = 0.0;
    AgentOutput output;
    RewardBreakdown reward;
    double advantage = 0.0;
};

struct RolloutGroup {
    const TrainContext* context = nullptr;
    std::vector<GroupMember> members;
    bool skipped = false;
    std::string skip_reason;
};

// Samples K outputs, rewards them and fills advantages. Judge transport or
// malformed-verdict failures follow `policy`; other errors propagate.
RolloutGroup rollout_group(const PolicyParams& p, const TrainContext& ctx, int k, ClarifyJudge& judge,
                           TransportPolicy policy, Rng& rng);

struct MetricsRow {
    int step = 0;
    double r_format = 0.0;
    double r_clarify = 0.0;
    double r_total = 0.0;
    double think_len = 0.0;
    double clarify_len = 0.0;
    double clarify_rate = 0.0;
    double grad_norm = 0.0;
    int skipped_groups = 0;

    friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

class Optimizer {
public:
    explicit Optimizer(const TrainConfig& cfg);
    // Ascends along `grad` in place.
    void apply(PolicyParams& p, const std::vector<double>& grad);
    int steps_taken() const { return t_; }

private:
    TrainConfig cfg_;
    std::vector<double> m_, v_;
    int t_ = 0;
};

// Mean over non-skipped groups of sum_i A_i * grad log pi(o_i).
std::vector<double> policy_gradient(const PolicyParams& p, const std::vector<RolloutGroup>& groups);

struct StepResult {
    MetricsRow metrics;
    std::vector<RolloutGroup> groups;
};

// One optimizer step over `batch`. Group sampling and judging run in
// parallel with per-group seeds derived from (seed, step, index); the
// update itself is serialized.
StepResult train_step(PolicyParams& p, Optimizer& opt, const std::vector<const TrainContext*>& batch,
                      ClarifyJudge& judge, const TrainConfig& cfg, int step);

struct TrainResult {
    PolicyParams params;
    std::vector<MetricsRow> metrics;
    std::vector<std::filesystem::path> checkpoints;
    int skipped_groups = 0;
};

// Loads cfg.dataset (startup error naming the path when missing).
TrainResult train(const TrainConfig& cfg);
TrainResult train(const TrainConfig& cfg, const std::vector<TrainContext>& contexts, ClarifyJudge& judge);

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);

// rewards.svg (format, clarify, total) and lengths.svg (think, clarify).
void write_plots(const std::filesystem::path& dir, const std::vector<MetricsRow>& rows);

}  // namespace clarirl
