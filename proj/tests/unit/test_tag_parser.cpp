#include <set>
#include <stdexcept>

#include "corpus.hpp"
#include "doctest.h"
#include "clarirl/tag_parser.hpp"

using namespace clarirl;

TEST_CASE("enumerated corpus") {
    const auto& cases = corpus::parse_cases();
    REQUIRE(cases.size() >= 40);
    std::set<Defect> covered;
    for (const auto& c : cases) {
        CAPTURE(c.raw);
        auto [out, verdict] = parse_agent_output(c.raw);
        const std::set<Defect> got(verdict.defects.begin(), verdict.defects.end());
        CHECK(got == c.defects);
        CHECK(verdict.well_formed == c.defects.empty());
        CHECK(out.think == c.think);
        CHECK(out.clarify == c.clarify);
        CHECK(out.response == c.response);
        CHECK(verdict.has_think == c.think.has_value());
        CHECK(verdict.has_clarify == c.clarify.has_value());
        if (c.api_name) {
            REQUIRE(out.api_call);
            CHECK(out.api_call->name == *c.api_name);
        } else {
            CHECK_FALSE(out.api_call);
        }
        CHECK(out.raw == c.raw);
        covered.insert(got.begin(), got.end());
    }
    CHECK(covered.size() == 5);
}

TEST_CASE("call argument values") {
    auto call = parse_api_call("call book_taxi(departure=\"a, b\", destination= hotel a )");
    REQUIRE(call);
    REQUIRE(call->args.size() == 2);
    CHECK(call->args[0].second == "a, b");
    CHECK(call->args[1].second == "hotel a");

    auto escaped = parse_api_call(R"(call query_hotel(name="q\"x\\y"))");
    REQUIRE(escaped);
    CHECK(escaped->args[0].second == "q\"x\\y");

    CHECK_FALSE(parse_api_call("call query_hotel(a=b c=d)"));
    CHECK_FALSE(parse_api_call("callquery_hotel()"));
}

TEST_CASE("render refuses outputs that cannot round-trip") {
    AgentOutput o;
    CHECK_THROWS_AS(render_agent_output(o), std::invalid_argument);
    o.think = " padded";
    CHECK_THROWS_AS(render_agent_output(o), std::invalid_argument);
    o.think = "has <clarify> inside";
    CHECK_THROWS_AS(render_agent_output(o), std::invalid_argument);
    o.think = "fine";
    o.response = "call query_hotel(area=north)";
    CHECK_THROWS_AS(render_agent_output(o), std::invalid_argument);
    o.response = "ok";
    o.api_call = ApiCall{"query_hotel", {}};
    CHECK_THROWS_AS(render_agent_output(o), std::invalid_argument);
}

TEST_CASE("round trip on generated outputs") {
    Rng rng(20240611);
    int checked = 0;
    while (checked < 2000) {
        AgentOutput o = corpus::random_output(rng);
        std::string raw;
        try {
            raw = render_agent_output(o);
        } catch (const std::invalid_argument&) {
            continue;
        }
        auto [back, verdict] = parse_agent_output(raw);
        CAPTURE(raw);
        CHECK(verdict.defects.empty());
        CHECK(back.same_content(o));
        ++checked;
    }
}

TEST_CASE("visible text hides reasoning") {
    auto [out, verdict] = parse_agent_output("<think>secret plan</think><clarify>Which area?</clarify>");
    CHECK(out.visible_text() == "Which area?");
    auto [call_out, v2] = parse_agent_output("<think>secret</think>call query_train(day=monday)");
    CHECK(call_out.visible_text() == "call query_train(day=monday)");
}
