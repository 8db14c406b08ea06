#include <algorithm>
#include <filesystem>

#include "doctest.h"
#include "clarirl/dataset.hpp"
#include "clarirl/dialogue_view.hpp"

using namespace clarirl;

namespace {

struct World {
    Database db = generate_world(13, WorldSizeConfig::uniform(30));
    UserSimulator sim{db};
};

SpeakerSample with_question(const std::string& id, const std::string& q) {
    SpeakerSample s;
    s.sample_id = id;
    s.gold_action = GoldAction::MustClarify;
    s.question = q;
    return s;
}

// Quadratic reference for the greedy pass.
std::vector<std::string> dedup_reference(const std::vector<SpeakerSample>& in, int n, double threshold) {
    std::vector<std::string> kept;
    std::vector<std::set<std::string>> grams;
    for (const auto& s : in) {
        const auto g = question_ngrams(s.question, n);
        bool drop = false;
        if (!g.empty())
            for (const auto& h : grams) {
                if (h.empty()) continue;
                std::size_t inter = 0;
                for (const auto& x : g) inter += h.count(x);
                const double j = static_cast<double>(inter) / static_cast<double>(g.size() + h.size() - inter);
                if (j >= threshold) drop = true;
            }
        if (!drop) {
            kept.push_back(s.sample_id);
            grams.push_back(g);
        }
    }
    return kept;
}

std::vector<std::string> ids(const std::vector<SpeakerSample>& v) {
    std::vector<std::string> out;
    for (const auto& s : v) out.push_back(s.sample_id);
    return out;
}

}  // namespace

TEST_CASE("ambiguity rate controls gold actions") {
    World w;
    SynthConfig c;
    c.n_goals = 60;
    c.ambiguity_rate = 1.0;
    const SynthResult amb = synthesize(w.db, w.sim, c);
    std::set<std::string> goals_with_clarify;
    for (const auto& s : amb.samples) {
        if (s.gold_action == GoldAction::MustClarify) {
            goals_with_clarify.insert(s.goal.goal_id);
            CHECK(s.gold_slot.has_value());
            CHECK_FALSE(s.question.empty());
        }
    }
    CHECK(static_cast<int>(goals_with_clarify.size()) == c.n_goals - amb.stats.goal_sampling_failures);
    CHECK(amb.stats.oracle_failures == 0);

    c.ambiguity_rate = 0.0;
    const SynthResult plain = synthesize(w.db, w.sim, c);
    for (const auto& s : plain.samples) CHECK(s.gold_action == GoldAction::NoClarifyNeeded);

    c.ambiguity_rate = 1.5;
    CHECK_THROWS_AS(synthesize(w.db, w.sim, c), std::invalid_argument);
}

TEST_CASE("decision points line up with the full trajectory") {
    World w;
    SynthConfig c;
    c.n_goals = 40;
    for (const auto& s : synthesize(w.db, w.sim, c).samples) {
        if (s.gold_action != GoldAction::MustClarify) continue;
        const std::size_t k = s.context.turns.size();
        REQUIRE(k < s.full_trajectory.turns.size());
        CHECK(s.full_trajectory.turns[k].action.clarify == s.question);
        CHECK(std::find(s.annotations.begin(), s.annotations.end(), static_cast<int>(k)) != s.annotations.end());
        CHECK(s.gold_slot == detect_slot(s.question));
        CHECK(s.context == prefix(s.full_trajectory, k));
        CHECK(s.full_trajectory.status == EpisodeStatus::Success);
    }
}

TEST_CASE("multi-ambiguity goals track the configured rate") {
    World w;
    SynthConfig c;
    c.n_goals = 1000;
    c.multi_ambiguity_rate = 0.5;
    const SynthResult r = synthesize(w.db, w.sim, c);
    const double sampled = static_cast<double>(r.goal_ambiguity_counts.size());
    REQUIRE(sampled > 900);
    CHECK(static_cast<double>(r.stats.multi_ambiguity_goals) / sampled == doctest::Approx(0.5).epsilon(0.2));
}

TEST_CASE("question n-grams and jaccard") {
    CHECK(question_ngrams("Which area, please?", 2) == std::set<std::string>{"which area", "area please"});
    CHECK(question_ngrams("Area?", 3) == std::set<std::string>{"area"});
    CHECK(question_ngrams("", 3).empty());
    CHECK(jaccard({"a", "b"}, {"b", "c"}) == doctest::Approx(1.0 / 3.0));
    CHECK(jaccard({}, {"a"}) == 0.0);
}

TEST_CASE("n-gram dedup") {
    const std::vector<SpeakerSample> in{
        with_question("a", "Which area of town would you like?"),
        with_question("b", "which area of town would you like"),
        with_question("c", "What price range are you looking for?"),
        with_question("d", ""),
        with_question("e", ""),
    };
    int dropped = 0;
    const auto kept = ngram_dedup(in, 3, 0.8, &dropped);
    CHECK(ids(kept) == std::vector<std::string>{"a", "c", "d", "e"});
    CHECK(dropped == 1);
    CHECK(ids(ngram_dedup(kept, 3, 0.8)) == ids(kept));
    CHECK_THROWS_AS(ngram_dedup(in, 0, 0.8), std::invalid_argument);
    CHECK_THROWS_AS(ngram_dedup(in, 3, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(ngram_dedup(in, 3, 1.5), std::invalid_argument);
}

TEST_CASE("dedup agrees with the reference and is a fixpoint") {
    World w;
    SynthConfig c;
    c.n_goals = 150;
    const auto samples = synthesize(w.db, w.sim, c).samples;
    for (int n : {1, 2, 3}) {
        for (double t : {0.5, 0.8, 1.0}) {
            const auto once = ngram_dedup(samples, n, t);
            CHECK(ids(once) == dedup_reference(samples, n, t));
            CHECK(ids(ngram_dedup(once, n, t)) == ids(once));
        }
    }
}

TEST_CASE("dpo pairs contrast a successful and a failed dialogue") {
    World w;
    SynthConfig c;
    c.n_goals = 80;
    const auto samples = ngram_dedup(synthesize(w.db, w.sim, c).samples, 3, 0.8);
    int skipped = 0;
    const auto pairs = build_dpo_pairs(samples, w.db, w.sim, &skipped);
    CHECK_FALSE(pairs.empty());
    for (const auto& p : pairs) {
        CHECK(check_success(p.goal, p.chosen, w.db));
        CHECK_FALSE(check_success(p.goal, p.rejected, w.db));
        CHECK(p.context == prefix(p.chosen, p.context.turns.size()));
        for (const auto& t : p.rejected.turns) CHECK_FALSE(t.action.clarify.has_value());
    }
    int must = 0;
    for (const auto& s : samples) must += s.gold_action == GoldAction::MustClarify;
    CHECK(static_cast<int>(pairs.size()) + skipped == must);
}

TEST_CASE("pipeline outputs round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "clarirl_synth_test";
    std::filesystem::remove_all(dir);
    SynthConfig c;
    c.seed = 5;
    c.n_goals = 30;
    const SynthOutputs out = run_synthesis(c, dir);
    for (const char* f : {"samples.jsonl", "dpo_pairs.jsonl", "world.jsonl", "manifest.json"})
        CHECK_MESSAGE(std::filesystem::exists(dir / f), f);
    CHECK(load_samples(dir / "samples.jsonl") == out.retained);
    CHECK(out.stats.retained == static_cast<int>(out.retained.size()));
    CHECK(out.stats.samples_emitted == out.stats.retained + out.stats.dedup_dropped);
    CHECK(run_synthesis(c, {}).retained == out.retained);

    for (const auto& p : out.pairs) CHECK(json(p).get<DpoPair>() == p);
    CHECK_THROWS_WITH(load_samples(dir / "nope.jsonl"), doctest::Contains("nope.jsonl"));
    std::filesystem::remove_all(dir);
}
