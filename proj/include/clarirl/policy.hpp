#pragma once

// Featurized softmax policy over a fixed catalog of structured-output
// templates, with exact log-probabilities and analytic score gradients.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "clarirl/dialogue_view.hpp"
#include "clarirl/rng.hpp"
#include "clarirl/types.hpp"

namespace clarirl {

enum class TemplateFamily { ClarifySlot, ClarifyKnown, ClarifyVague, Query, Book, Inform, Done };

struct ActionTemplate {
    std::string id;
    ActionKind kind = ActionKind::Respond;
    TemplateFamily family = TemplateFamily::Done;
    std::optional<std::string> slot;  // ClarifySlot only
    int depth = 0;                    // 0 no reasoning, 1 brief, 2 deliberate
    std::string think_skeleton;
    std::string surface_skeleton;
};

const std::vector<ActionTemplate>& action_templates();
std::optional<std::size_t> template_index(std::string_view id);
// Every feature name feature_vector can emit.
const std::vector<std::string>& policy_feature_names();

// Fills a template from the visible dialogue state. `variant` selects a
// lead-in phrase for clarification questions (0 = none). The result always
// renders and parses back well-formed.
AgentOutput render_template(const ActionTemplate& t, const DialogueView& view, int variant = 0);
inline constexpr int kQuestionVariants = 6;

// Dense weight matrix: rows are features, columns are templates.
struct PolicyParams {
    std::vector<std::string> features;
    std::vector<std::string> templates;
    std::vector<double> w;  // features.size() * templates.size(), row-major
    double temperature = 1.0;

    std::size_t n_features() const { return features.size(); }
    std::size_t n_templates() const { return templates.size(); }
    double& at(std::size_t f, std::size_t t) { return w[f * templates.size() + t]; }
    double at(std::size_t f, std::size_t t) const { return w[f * templates.size() + t]; }
    std::optional<std::size_t> feature_row(std::string_view name) const;
    double weight(std::string_view feature, std::string_view template_id) const;
    void set_weight(std::string_view feature, std::string_view template_id, double value);

    friend bool operator==(const PolicyParams&, const PolicyParams&) = default;
};

// All-zero weights over the full feature and template sets.
PolicyParams zero_params(double temperature = 1.0);
// Starting point for training: each acting stage prefers its matching
// reasoned template with weight `prior`; clarification rows start at zero.
inline constexpr double kBasePrior = 10.0;
PolicyParams base_params(double prior = kBasePrior);

// Throws std::invalid_argument on non-finite weights or temperature <= 0.
void validate_params(const PolicyParams& p);

std::vector<double> template_scores(const PolicyParams& p, const FeatureVector& phi);
std::vector<double> action_distribution(const PolicyParams& p, const FeatureVector& phi);

struct SampledAction {
    std::size_t template_index = 0;
    double log_prob = 0.0;
    AgentOutput output;
};

std::pair<std::size_t, double> sample_template(const PolicyParams& p, const FeatureVector& phi, Rng& rng);
SampledAction sample_output(const PolicyParams& p, const DialogueView& view, Rng& rng);
SampledAction sample_output(const PolicyParams& p, const DialogueView& view, std::uint64_t seed);

// d log pi(template | phi) / d w, same layout as PolicyParams::w:
// phi_f * (1[t = chosen] - p_t) / temperature.
std::vector<double> grad_log_prob(const PolicyParams& p, const FeatureVector& phi, std::size_t chosen);
double log_prob(const PolicyParams& p, const FeatureVector& phi, std::size_t chosen);

struct CheckpointMeta {
    int step = 0;
    std::uint64_t seed = 0;
    std::string config_hash;
};

void save_checkpoint(const std::filesystem::path& path, const PolicyParams& p, const CheckpointMeta& meta);
PolicyParams load_checkpoint(const std::filesystem::path& path, CheckpointMeta* meta = nullptr);

}  // namespace clarirl
