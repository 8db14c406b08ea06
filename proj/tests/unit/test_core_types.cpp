#include <algorithm>

#include "doctest.h"
#include "clarirl/json_io.hpp"
#include "clarirl/types.hpp"

using namespace clarirl;

namespace {

UserGoal italian_goal() {
    UserGoal g;
    g.goal_id = "g1";
    SubGoal sg;
    sg.domain = Domain::Restaurant;
    sg.constraints = {{"food", "italian"}};
    g.sub_goals.push_back(sg);
    return g;
}

bool mentions(const std::vector<std::string>& errors, const std::string& needle) {
    return std::any_of(errors.begin(), errors.end(),
                       [&](const std::string& e) { return e.find(needle) != std::string::npos; });
}

}  // namespace

TEST_CASE("five domains with their api catalog") {
    const auto& schemas = standard_schemas();
    REQUIRE(schemas.size() == 5);
    for (Domain d : kAllDomains) CHECK(schema_for(d).domain == d);

    const ApiSpec* q = find_api("query_restaurant");
    REQUIRE(q);
    CHECK(q->args == std::vector<std::string>{"area", "pricerange", "food", "name"});
    Domain d{};
    REQUIRE(find_api("book_taxi", &d));
    CHECK(d == Domain::Taxi);
    CHECK_FALSE(find_api("query_spaceship"));

    for (const auto& s : schemas)
        for (const auto& api : s.api_specs)
            for (const auto& arg : api.args) CHECK_MESSAGE(s.declares(arg), api.name << " takes undeclared " << arg);
}

TEST_CASE("goal validation") {
    CHECK(validate_goal(italian_goal(), standard_schemas()).empty());

    UserGoal bad = italian_goal();
    bad.sub_goals[0].constraints["color"] = "red";
    CHECK(mentions(validate_goal(bad, standard_schemas()), "unknown slot color"));

    UserGoal one = italian_goal();
    one.ambiguity_spec.push_back(Ambiguity{Domain::Restaurant, "food", {"italian"}, "italian"});
    CHECK(mentions(validate_goal(one, standard_schemas()), "ambiguity requires ≥2 candidates"));

    UserGoal ok = italian_goal();
    ok.ambiguity_spec.push_back(Ambiguity{Domain::Restaurant, "food", {"italian", "thai"}, "italian"});
    CHECK(validate_goal(ok, standard_schemas()).empty());
}

TEST_CASE("domain names round trip") {
    for (Domain d : kAllDomains) CHECK(domain_from_string(to_string(d)) == d);
    CHECK_THROWS_AS(domain_from_string("spaceship"), std::invalid_argument);
}

TEST_CASE("json round trip of goals and trajectories") {
    UserGoal g = italian_goal();
    g.sub_goals[0].requestables = {"phone"};
    g.sub_goals[0].booking = SlotMap{{"people", "2"}, {"day", "monday"}, {"time", "19:00"}};
    g.ambiguity_spec.push_back(Ambiguity{Domain::Restaurant, "food", {"italian", "thai"}, "italian"});
    CHECK(json(g).get<UserGoal>() == g);

    Trajectory t;
    t.goal_ref = "g1";
    t.initial_query = "I need a restaurant.";
    t.initial_reply.text = t.initial_query;
    Turn turn;
    turn.action.think = "plan";
    turn.action.clarify = "Which area?";
    turn.action.raw = "<think>plan</think><clarify>Which area?</clarify>";
    turn.reasoning = turn.action.think;
    turn.speaker_visible_text = "Which area?";
    UserReply reply;
    reply.text = "The centre.";
    reply.flag = ReplyFlag::Reveal;
    reply.informs = {{"area", "centre"}};
    turn.observation.user = reply;
    t.turns.push_back(turn);
    t.turn_count = 1;
    t.status = EpisodeStatus::Failure;
    t.terminated_by = Termination::AgentDone;
    CHECK(json(t).get<Trajectory>() == t);
}

TEST_CASE("visible text never carries reasoning") {
    AgentOutput o;
    o.think = "private";
    o.response = "The phone is 0123.";
    CHECK(o.visible_text() == "The phone is 0123.");
    CHECK(o.kind() == ActionKind::Respond);
    o.clarify = "Which day?";
    CHECK(o.kind() == ActionKind::Clarify);
    CHECK(o.visible_text().find("private") == std::string::npos);
}
