#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "clarirl/eval.hpp"

using namespace clarirl;

namespace {

EvalConfig small(std::uint64_t seed = 31) {
    EvalConfig c;
    c.world_seed = seed;
    c.n_episodes = 25;
    c.n_runs = 3;
    return c;
}

}  // namespace

TEST_CASE("the oracle agent always succeeds") {
    const EvalReport r = evaluate("oracle", small());
    CHECK(r.success_avg == 1.0);
    CHECK(r.success_std == 0.0);
    CHECK(r.runs.size() == 3);
    for (const auto& run : r.runs) {
        CHECK(run.n_episodes == 25);
        CHECK(run.errors == 0);
        CHECK(run.avg_turns <= kMaxTurns);
    }
}

TEST_CASE("baselines stay within the turn cap") {
    for (const char* spec : {"never-clarify", "always-clarify", "base"}) {
        const EvalReport r = evaluate(spec, small());
        CHECK(r.policy_id == spec);
        CHECK(r.turns_avg > 0.0);
        CHECK(r.turns_avg <= kMaxTurns);
        CHECK(r.success_avg >= 0.0);
        CHECK(r.success_avg <= 1.0);
    }
    CHECK(evaluate("always-clarify", small()).success_avg == 0.0);
}

TEST_CASE("invalid configurations") {
    EvalConfig c = small();
    c.n_episodes = 0;
    CHECK_THROWS_AS(evaluate("oracle", c), std::invalid_argument);
    c = small();
    c.n_runs = 0;
    CHECK_THROWS_AS(evaluate("oracle", c), std::invalid_argument);
    CHECK_THROWS(make_agent_factory("trained:/does/not/exist.json"));
    CHECK_THROWS(make_agent_factory("chatty"));
}

TEST_CASE("reports reproduce exactly and survive a file round trip") {
    const EvalReport a = evaluate("base", small());
    const EvalReport b = evaluate("base", small());
    CHECK(a == b);
    CHECK_FALSE(evaluate("base", small(32)) == a);

    const auto path = std::filesystem::temp_directory_path() / "clarirl_eval_report.json";
    save_report(path, a);
    CHECK(load_report(path) == a);
    std::filesystem::remove(path);
}

TEST_CASE("aggregate uses the mean and sample std over runs") {
    EvalReport r;
    r.runs = {RunResult{0.5, 6.0, 10, 0}, RunResult{0.7, 8.0, 10, 0}, RunResult{0.9, 10.0, 10, 0}};
    aggregate(r);
    CHECK(r.success_avg == doctest::Approx(0.7));
    CHECK(r.success_std == doctest::Approx(0.2));
    CHECK(r.turns_avg == doctest::Approx(8.0));

    r.runs.resize(1);
    aggregate(r);
    CHECK(r.success_std == 0.0);
}

TEST_CASE("comparison") {
    const EvalReport never = evaluate("never-clarify", small());
    const EvalReport oracle = evaluate("oracle", small());

    const Comparison self = compare(never, never);
    CHECK(self.success_delta == 0.0);
    CHECK(self.turns_delta == 0.0);
    CHECK_FALSE(self.a_dominates);
    CHECK_FALSE(self.b_dominates);

    const Comparison c = compare(never, oracle);
    CHECK(c.success_delta == doctest::Approx(oracle.success_avg - never.success_avg));
    CHECK(c.b_dominates);
    CHECK_FALSE(c.a_dominates);
    CHECK(render_comparison(c).find("oracle") != std::string::npos);
    CHECK(render_table({never, oracle}).find("never-clarify") != std::string::npos);

    CHECK_THROWS_WITH_AS(compare(never, evaluate("oracle", small(99))), doctest::Contains("world_seed"),
                         std::invalid_argument);
    EvalConfig fewer = small();
    fewer.n_episodes = 10;
    CHECK_THROWS_WITH_AS(compare(never, evaluate("oracle", fewer)), doctest::Contains("n_episodes"),
                         std::invalid_argument);
}
