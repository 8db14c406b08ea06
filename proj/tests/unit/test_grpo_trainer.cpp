#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "doctest.h"
#include "oracles.hpp"
#include "clarirl/grpo.hpp"

using namespace clarirl;

namespace {

const std::vector<TrainContext>& contexts() {
    static const std::vector<TrainContext> ctx = [] {
        SynthConfig sc;
        sc.seed = 3;
        sc.n_goals = 40;
        return make_contexts(run_synthesis(sc, {}).retained);
    }();
    return ctx;
}

TrainConfig small_config(int steps) {
    TrainConfig c;
    c.steps = steps;
    c.batch_contexts = 8;
    c.group_size = 4;
    c.seed = 17;
    c.write_plots = false;
    return c;
}

class FailingJudge final : public ClarifyJudge {
public:
    JudgeVerdict score(const JudgeRequest&, const AmbiguityState*) override {
        throw JudgeError(JudgeErrorKind::Transport, "down");
    }
    JudgeProvenance provenance() const override { return JudgeProvenance::Remote; }
};

double slot_mass(const PolicyParams& p, const std::string& slot) {
    double sum = 0.0;
    for (const auto& t : action_templates())
        if (t.slot == slot) sum += p.weight("missing:" + slot, t.id);
    return sum;
}

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("group advantages on small examples") {
    for (double a : group_advantages({1, 1, 1, 1})) CHECK(a == 0.0);
    const auto two = group_advantages({2, 0});
    CHECK(two[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(two[1] == doctest::Approx(-1.0).epsilon(1e-6));
    const auto four = group_advantages({2, 1, 1, 0});
    CHECK(four[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-6));
    CHECK(four[1] == doctest::Approx(0.0));
    CHECK(four[3] == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-6));
    CHECK_THROWS_AS(group_advantages({1.0}), std::invalid_argument);
    CHECK_THROWS_AS(group_advantages({}), std::invalid_argument);
}

TEST_CASE("group advantage properties") {
    Rng rng(12);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t k = 2 + rng.index(15);
        std::vector<double> r(k);
        for (double& x : r) x = 0.5 * static_cast<double>(rng.index(5));
        const auto a = group_advantages(r);
        const auto expected = oracle::advantages(r);
        for (std::size_t i = 0; i < k; ++i) CHECK(a[i] == doctest::Approx(expected[i]).epsilon(1e-9));
        const double mean = std::accumulate(a.begin(), a.end(), 0.0) / k;
        CHECK(std::abs(mean) < 1e-9);
        const bool constant = std::all_of(r.begin(), r.end(), [&](double x) { return x == r[0]; });
        double var = 0.0;
        for (double x : a) var += x * x;
        var /= k;
        CHECK(var == doctest::Approx(constant ? 0.0 : 1.0).epsilon(1e-6));

        std::vector<double> scaled = r;
        for (double& x : scaled) x = 3.0 * x + 7.0;
        const auto b = group_advantages(scaled);
        for (std::size_t i = 0; i < k; ++i) CHECK(b[i] == doctest::Approx(a[i]).epsilon(1e-6));
    }
}

TEST_CASE("learning-rate schedule") {
    TrainConfig c = small_config(100);
    c.learning_rate = 2.0;
    CHECK(lr_at(c, 0) == doctest::Approx(0.2));
    CHECK(lr_at(c, 9) == doctest::Approx(2.0));
    CHECK(lr_at(c, 10) == doctest::Approx(2.0));
    CHECK(lr_at(c, 55) == doctest::Approx(1.0));
    for (int s = 11; s < 100; ++s) CHECK(lr_at(c, s) <= lr_at(c, s - 1));
    c.schedule = LrSchedule::Constant;
    c.warmup_fraction = 0.0;
    CHECK(lr_at(c, 77) == 2.0);
}

TEST_CASE("one update raises the weight of the correct slot") {
    REQUIRE_FALSE(contexts().empty());
    TrainConfig c = small_config(1);
    c.optimizer = OptimizerKind::Sgd;
    c.schedule = LrSchedule::Constant;
    c.warmup_fraction = 0.0;
    c.learning_rate = 0.5;
    c.group_size = 64;
    OracleJudge judge;
    int raised = 0, checked = 0;
    for (std::size_t i = 0; i < contexts().size(); i += 5) {
        const TrainContext& ctx = contexts()[i];
        if (ctx.truth.ambiguous_slots.size() != 1) continue;
        const std::string slot = ctx.truth.ambiguous_slots.front();
        PolicyParams p = base_params();
        const double before = slot_mass(p, slot);
        Optimizer opt(c);
        train_step(p, opt, {&ctx}, judge, c, 0);
        ++checked;
        if (slot_mass(p, slot) > before) ++raised;
    }
    REQUIRE(checked > 0);
    CHECK(raised == checked);
}

TEST_CASE("identical rewards leave the parameters unchanged") {
    PolicyParams p = zero_params();
    for (const auto& f : p.features) p.set_weight(f, "clarify_vague", 200.0);
    const PolicyParams before = p;
    TrainConfig c = small_config(1);
    Optimizer opt(c);
    OracleJudge judge;
    std::vector<const TrainContext*> batch;
    for (std::size_t i = 0; i < 8; ++i) batch.push_back(&contexts()[i]);
    const StepResult r = train_step(p, opt, batch, judge, c, 0);
    for (const auto& g : r.groups)
        for (const auto& m : g.members) CHECK(m.advantage == 0.0);
    CHECK(r.metrics.grad_norm == 0.0);
    CHECK(p == before);
}

TEST_CASE("training is deterministic and zero steps is the identity") {
    OracleJudge judge;
    const TrainResult a = train(small_config(6), contexts(), judge);
    const TrainResult b = train(small_config(6), contexts(), judge);
    CHECK(a.params == b.params);
    CHECK(a.metrics == b.metrics);
    CHECK(a.metrics.size() == 6);
    CHECK_FALSE(a.params == base_params());

    const TrainResult none = train(small_config(0), contexts(), judge);
    CHECK(none.params == base_params());
    CHECK(none.metrics.empty());
}

TEST_CASE("training writes its artifacts") {
    TrainConfig c = small_config(4);
    c.checkpoint_every = 2;
    c.write_plots = true;
    c.output_dir = scratch("clarirl_train_artifacts");
    OracleJudge judge;
    const TrainResult r = train(c, contexts(), judge);
    CHECK(r.checkpoints.size() >= 2);
    for (const char* f : {"policy.json", "metrics.csv", "config.json", "rewards.svg", "lengths.svg"})
        CHECK_MESSAGE(std::filesystem::exists(c.output_dir / f), f);
    CheckpointMeta meta;
    CHECK(load_checkpoint(c.output_dir / "policy.json", &meta) == r.params);
    CHECK(meta.step == 4);
    CHECK(meta.config_hash == config_hash(c));
    auto rows = r.metrics;
    for (auto& row : rows) row.skipped_groups = 0;
    CHECK(read_metrics_csv(c.output_dir / "metrics.csv") == rows);
    std::filesystem::remove_all(c.output_dir);
}

TEST_CASE("judge failures follow the transport policy") {
    FailingJudge judge;
    TrainConfig c = small_config(1);
    std::vector<const TrainContext*> batch{&contexts()[0], &contexts()[1]};

    SUBCASE("skip the group") {
        PolicyParams p = base_params();
        Optimizer opt(c);
        const StepResult r = train_step(p, opt, batch, judge, c, 0);
        CHECK(r.metrics.skipped_groups == 2);
        for (const auto& g : r.groups) CHECK(g.skipped);
        CHECK(p == base_params());
    }
    SUBCASE("score zero") {
        c.on_transport_failure = TransportPolicy::RetryThenZero;
        PolicyParams p = base_params();
        Optimizer opt(c);
        const StepResult r = train_step(p, opt, batch, judge, c, 0);
        CHECK(r.metrics.skipped_groups == 0);
        CHECK(r.metrics.r_clarify == 0.0);
    }
}

TEST_CASE("configuration errors") {
    const auto dir = scratch("clarirl_train_config");
    std::filesystem::create_directories(dir);
    TrainConfig c = small_config(2);
    c.dataset = dir / "missing.jsonl";
    try {
        train(c);
        FAIL("expected an error");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find("missing.jsonl") != std::string::npos);
    }

    json j = c;
    CHECK(j.get<TrainConfig>().steps == 2);
    j["learning_rat"] = 0.1;
    CHECK_THROWS(j.get<TrainConfig>());

    TrainConfig bad = small_config(2);
    bad.group_size = 1;
    CHECK_THROWS_WITH_AS(validate_config(bad), doctest::Contains("group_size"), std::invalid_argument);

    std::ofstream(dir / "cfg.json") << R"({"dataset": "data/samples.jsonl", "steps": 5})";
    const TrainConfig loaded = load_train_config(dir / "cfg.json");
    CHECK(loaded.dataset == dir / "data/samples.jsonl");
    CHECK(loaded.steps == 5);

    TrainConfig moved = small_config(2);
    moved.output_dir = "/elsewhere";
    moved.threads = 3;
    CHECK(config_hash(moved) == config_hash(small_config(2)));
    moved.learning_rate = 0.9;
    CHECK(config_hash(moved) != config_hash(small_config(2)));
    std::filesystem::remove_all(dir);
}
