#include <cmath>
#include <filesystem>
#include <numeric>

#include "doctest.h"
#include "clarirl/agents.hpp"
#include "clarirl/goal_sampler.hpp"
#include "clarirl/policy.hpp"
#include "clarirl/tag_parser.hpp"
#include "clarirl/user_sim.hpp"

using namespace clarirl;

namespace {

// Views at every decision point of oracle dialogues over ambiguous goals.
std::vector<DialogueView> sample_views(int episodes) {
    const Database db = generate_world(21, WorldSizeConfig::uniform(30));
    const UserSimulator sim(db);
    GoalSamplerConfig gc;
    gc.ambiguity_rate = 1.0;
    std::vector<DialogueView> views;
    for (int i = 0; i < episodes; ++i) {
        const UserGoal goal = sample_goal(db, gc, 500 + i);
        OracleAgent agent;
        Rng rng(i);
        const EpisodeState st = run_episode(agent, sim, db, goal, i, i, rng);
        for (std::size_t k = 0; k <= st.trajectory.turns.size(); ++k)
            views.push_back(build_view(prefix(st.trajectory, k)));
    }
    return views;
}

FeatureVector phi_of(const DialogueView& v) { return feature_vector(extract_features(v)); }

PolicyParams random_params(std::uint64_t seed) {
    PolicyParams p = zero_params();
    Rng rng(seed);
    for (double& w : p.w) w = rng.uniform() * 4.0 - 2.0;
    return p;
}

}  // namespace

TEST_CASE("zero weights give a uniform distribution") {
    const PolicyParams p = zero_params();
    for (const auto& v : sample_views(3)) {
        const auto dist = action_distribution(p, phi_of(v));
        for (double x : dist) CHECK(x == doctest::Approx(1.0 / p.n_templates()));
    }
}

TEST_CASE("low temperature approaches argmax") {
    PolicyParams p = random_params(4);
    p.temperature = 1e-3;
    for (const auto& v : sample_views(3)) {
        const FeatureVector phi = phi_of(v);
        const auto scores = template_scores(p, phi);
        const auto dist = action_distribution(p, phi);
        const auto best = std::max_element(scores.begin(), scores.end()) - scores.begin();
        CHECK(dist[best] > 0.999);
    }
}

TEST_CASE("distribution and log-probabilities agree") {
    const PolicyParams p = random_params(5);
    for (const auto& v : sample_views(4)) {
        const FeatureVector phi = phi_of(v);
        const auto dist = action_distribution(p, phi);
        CHECK(std::accumulate(dist.begin(), dist.end(), 0.0) == doctest::Approx(1.0));
        for (std::size_t t = 0; t < dist.size(); ++t)
            CHECK(std::exp(log_prob(p, phi, t)) == doctest::Approx(dist[t]).epsilon(1e-12));
    }
}

TEST_CASE("seeded sampling is reproducible and renders well-formed output") {
    const PolicyParams p = random_params(6);
    for (const auto& v : sample_views(4)) {
        for (std::uint64_t s = 0; s < 8; ++s) {
            const SampledAction a = sample_output(p, v, s);
            const SampledAction b = sample_output(p, v, s);
            CHECK(a.template_index == b.template_index);
            CHECK(a.output == b.output);
            CHECK(a.log_prob == log_prob(p, phi_of(v), a.template_index));
        }
        for (const auto& t : action_templates())
            for (int variant = 0; variant < kQuestionVariants; ++variant) {
                const AgentOutput out = render_template(t, v, variant);
                const auto [parsed, verdict] = parse_agent_output(render_agent_output(out));
                CHECK_MESSAGE(verdict.well_formed, t.id);
                CHECK(parsed.kind() == t.kind);
            }
    }
}

TEST_CASE("score gradient matches the closed form and finite differences") {
    const PolicyParams p = random_params(7);
    const auto views = sample_views(2);
    for (std::size_t vi = 0; vi < views.size(); vi += 3) {
        const FeatureVector phi = phi_of(views[vi]);
        const auto dist = action_distribution(p, phi);
        for (std::size_t chosen = 0; chosen < p.n_templates(); chosen += 5) {
            const auto g = grad_log_prob(p, phi, chosen);
            REQUIRE(g.size() == p.w.size());
            for (const auto& [name, value] : phi) {
                const std::size_t f = *p.feature_row(name);
                double row = 0.0;
                for (std::size_t t = 0; t < p.n_templates(); ++t) {
                    const double expected = value * ((t == chosen ? 1.0 : 0.0) - dist[t]) / p.temperature;
                    CHECK(g[f * p.n_templates() + t] == doctest::Approx(expected).epsilon(1e-12));
                    row += g[f * p.n_templates() + t];
                }
                CHECK(std::abs(row) < 1e-12);
            }
            const double h = 1e-5;
            for (std::size_t k = 0; k < p.w.size(); k += 7) {
                PolicyParams up = p, down = p;
                up.w[k] += h;
                down.w[k] -= h;
                const double fd = (log_prob(up, phi, chosen) - log_prob(down, phi, chosen)) / (2 * h);
                CHECK(g[k] == doctest::Approx(fd).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("slot questions name exactly their slot") {
    for (const auto& v : sample_views(6))
        for (const auto& t : action_templates()) {
            if (t.family != TemplateFamily::ClarifySlot) continue;
            for (int variant = 0; variant < kQuestionVariants; ++variant) {
                const AgentOutput out = render_template(t, v, variant);
                REQUIRE(out.clarify);
                CHECK_MESSAGE(detect_slot(*out.clarify) == t.slot, *out.clarify);
            }
        }
}

TEST_CASE("base parameters and validation") {
    const PolicyParams base = base_params();
    CHECK_NOTHROW(validate_params(base));
    const std::vector<std::string> names = policy_feature_names();
    CHECK(base.features == names);
    CHECK(base.n_templates() == action_templates().size());
    for (const auto& t : action_templates())
        if (t.family == TemplateFamily::ClarifySlot) CHECK(base.weight("missing:" + *t.slot, t.id) == 0.0);

    PolicyParams bad = base;
    bad.temperature = 0.0;
    CHECK_THROWS_AS(validate_params(bad), std::invalid_argument);
    bad = base;
    bad.w[3] = std::nan("");
    CHECK_THROWS_AS(validate_params(bad), std::invalid_argument);
}

TEST_CASE("checkpoint round trip") {
    const auto path = std::filesystem::temp_directory_path() / "clarirl_policy_ckpt.json";
    const PolicyParams p = random_params(8);
    save_checkpoint(path, p, CheckpointMeta{42, 9, "abc"});
    CheckpointMeta meta;
    CHECK(load_checkpoint(path, &meta) == p);
    CHECK(meta.step == 42);
    CHECK(meta.seed == 9);
    CHECK(meta.config_hash == "abc");
    std::filesystem::remove(path);
}
