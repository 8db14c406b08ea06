#pragma once

// Enumerated parser cases and a generator of valid structured outputs.

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "clarirl/rng.hpp"
#include "clarirl/types.hpp"

namespace corpus {

using clarirl::Defect;

struct ParseCase {
    std::string raw;
    std::set<Defect> defects;
    std::optional<std::string> think;
    std::optional<std::string> clarify;
    std::optional<std::string> response;
    std::optional<std::string> api_name;
};

inline const std::vector<ParseCase>& parse_cases() {
    using D = Defect;
    using std::nullopt;
    static const std::vector<ParseCase> cases{
        // well-formed
        {"<think>plan</think><clarify>Which area?</clarify>", {}, "plan", "Which area?", nullopt, nullopt},
        {"<think>plan</think>\n<clarify>Which area?</clarify>", {}, "plan", "Which area?", nullopt, nullopt},
        {"<clarify>Which area?</clarify>", {}, nullopt, "Which area?", nullopt, nullopt},
        {"<think>plan</think>call query_restaurant(area=centre)", {}, "plan", nullopt, nullopt, "query_restaurant"},
        {"call query_hotel(area=north, parking=yes)", {}, nullopt, nullopt, nullopt, "query_hotel"},
        {"Hello there.", {}, nullopt, nullopt, "Hello there.", nullopt},
        {"<think>x</think>The name is Foo.", {}, "x", nullopt, "The name is Foo.", nullopt},
        {"<clarify>Which area?<clarify>", {}, nullopt, "Which area?", nullopt, nullopt},
        {"<think>a</think><clarify>b<clarify>tail text", {}, "a", "b", "tail text", nullopt},
        {"call query_train()", {}, nullopt, nullopt, nullopt, "query_train"},
        {"call book_taxi(departure=\"a, b\", destination=c)", {}, nullopt, nullopt, nullopt, "book_taxi"},
        {"call query_hotel(name=\"q\\\"x\")", {}, nullopt, nullopt, nullopt, "query_hotel"},
        {"  <think>  spaced  </think>  ", {}, "spaced", nullopt, nullopt, nullopt},
        {"[DONE]", {}, nullopt, nullopt, "[DONE]", nullopt},
        {"calling you back", {}, nullopt, nullopt, "calling you back", nullopt},
        {"call me maybe", {}, nullopt, nullopt, "call me maybe", nullopt},
        {"<think>\tp\t</think><clarify>q</clarify>call query_hotel(area=north)", {}, "p", "q", nullopt, "query_hotel"},
        {"Is 3 < 4 and 5 > 2?", {}, nullopt, nullopt, "Is 3 < 4 and 5 > 2?", nullopt},
        // unclosed
        {"<think>plan", {D::UnclosedTag}, "plan", nullopt, nullopt, nullopt},
        {"<think>plan</think><clarify>Which area?", {D::UnclosedTag}, "plan", "Which area?", nullopt, nullopt},
        {"<clarify>", {D::UnclosedTag, D::EmptySegment}, nullopt, "", nullopt, nullopt},
        {"<think>", {D::UnclosedTag, D::EmptySegment}, "", nullopt, nullopt, nullopt},
        {"<think>a</th", {D::UnclosedTag}, "a</th", nullopt, nullopt, nullopt},
        // order
        {"<clarify>q</clarify><think>p</think>", {D::OrderViolation}, "p", "q", nullopt, nullopt},
        {"</think>hello", {D::OrderViolation}, nullopt, nullopt, "hello", nullopt},
        {"</clarify>", {D::OrderViolation}, nullopt, nullopt, nullopt, nullopt},
        {"<think>a<think>b</think>", {D::OrderViolation}, "ab", nullopt, nullopt, nullopt},
        {"<think>a<clarify>b</clarify></think>", {D::OrderViolation}, "ab", nullopt, nullopt, nullopt},
        {"<clarify>q</think></clarify>", {D::OrderViolation}, nullopt, "q", nullopt, nullopt},
        // duplicates
        {"<think>a</think><think>b</think><clarify>q</clarify>", {D::DuplicateTag}, "a", "q", nullopt, nullopt},
        {"<clarify>q1</clarify><clarify>q2</clarify>", {D::DuplicateTag}, nullopt, "q1", nullopt, nullopt},
        {"<think>a</think><clarify>q</clarify><think>b</think>", {D::DuplicateTag, D::OrderViolation}, "a", "q",
         nullopt, nullopt},
        {"<think>a</think><think>b", {D::DuplicateTag, D::UnclosedTag}, "a", nullopt, nullopt, nullopt},
        // empty
        {"", {D::EmptySegment}, nullopt, nullopt, nullopt, nullopt},
        {"   \n ", {D::EmptySegment}, nullopt, nullopt, nullopt, nullopt},
        {"<think></think><clarify>q</clarify>", {D::EmptySegment}, "", "q", nullopt, nullopt},
        {"<think>p</think><clarify>   </clarify>", {D::EmptySegment}, "p", "", nullopt, nullopt},
        {"<clarify><clarify>", {D::EmptySegment}, nullopt, "", nullopt, nullopt},
        {"<clarify></clarify><think></think>", {D::EmptySegment, D::OrderViolation}, "", "", nullopt, nullopt},
        // malformed calls
        {"call query_restaurant(area=centre", {D::MalformedApiCall}, nullopt, nullopt,
         "call query_restaurant(area=centre", nullopt},
        {"call query_restaurant(area=)", {D::MalformedApiCall}, nullopt, nullopt, "call query_restaurant(area=)",
         nullopt},
        {"call query_restaurant(area=centre, area=north)", {D::MalformedApiCall}, nullopt, nullopt,
         "call query_restaurant(area=centre, area=north)", nullopt},
        {"<think>p</think>call book_hotel(name=\"unterminated)", {D::MalformedApiCall}, "p", nullopt,
         "call book_hotel(name=\"unterminated)", nullopt},
        {"call query_hotel(area=north) trailing", {D::MalformedApiCall}, nullopt, nullopt,
         "call query_hotel(area=north) trailing", nullopt},
        {"call query_hotel(=north)", {D::MalformedApiCall}, nullopt, nullopt, "call query_hotel(=north)", nullopt},
        {"<think>p</think><clarify>q</clarify>call query_hotel(area=", {D::MalformedApiCall}, "p", "q",
         "call query_hotel(area=", nullopt},
    };
    return cases;
}

// Random text safe to embed in a segment: trimmed, non-empty, and free of
// tag delimiters (a stray '<' or '/' is fine).
inline std::string random_text(clarirl::Rng& rng, int max_len = 40) {
    static const std::string alphabet =
        "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 ,.?!'\"()=<>/:-_\t\n";
    for (;;) {
        const int len = rng.range(1, max_len);
        std::string s;
        for (int i = 0; i < len; ++i) s += alphabet[rng.index(alphabet.size())];
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\n')) s.erase(s.begin());
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\n')) s.pop_back();
        if (s.empty()) continue;
        if (s.find("<think>") != std::string::npos || s.find("</think>") != std::string::npos ||
            s.find("<clarify>") != std::string::npos || s.find("</clarify>") != std::string::npos)
            continue;
        return s;
    }
}

inline std::string random_ident(clarirl::Rng& rng) {
    static const std::string head = "abcdefghijklmnopqrstuvwxyz_";
    static const std::string tail = "abcdefghijklmnopqrstuvwxyz_0123456789";
    std::string s(1, head[rng.index(head.size())]);
    const int len = rng.range(0, 10);
    for (int i = 0; i < len; ++i) s += tail[rng.index(tail.size())];
    return s;
}

// A structurally valid output; rendering may still reject it (for example a
// response that reads as a call), in which case callers draw again.
inline clarirl::AgentOutput random_output(clarirl::Rng& rng) {
    clarirl::AgentOutput o;
    if (rng.bernoulli(0.6)) o.think = random_text(rng, 80);
    if (rng.bernoulli(0.6)) o.clarify = random_text(rng);
    const double tail = rng.uniform();
    if (tail < 0.35) {
        o.response = random_text(rng);
    } else if (tail < 0.7) {
        clarirl::ApiCall call;
        call.name = random_ident(rng);
        const int n = rng.range(0, 4);
        std::set<std::string> used;
        for (int i = 0; i < n; ++i) {
            std::string k = random_ident(rng);
            if (!used.insert(k).second) continue;
            std::string v = rng.bernoulli(0.2) ? std::string(" padded ") : random_text(rng, 15);
            call.args.emplace_back(k, v);
        }
        o.api_call = call;
    }
    if (!o.think && !o.clarify && !o.response && !o.api_call) o.response = random_text(rng);
    return o;
}

}  // namespace corpus
