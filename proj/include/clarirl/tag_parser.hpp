#pragma once

// Structured output grammar.
//
//   output   := segment* rest
//   segment  := "<think>" text "</think>"
//             | "<clarify>" text ("</clarify>" | "<clarify>")
//   rest     := plain response text | api call
//   api call := "call" NAME "(" [KEY "=" VALUE ("," KEY "=" VALUE)*] ")"
//
// VALUE is either unquoted (no , ( ) " characters, surrounding blanks
// trimmed) or double-quoted with backslash escapes. At most one think and
// one clarify segment are allowed and think must come first.

#include <string>
#include <string_view>
#include <utility>

#include "clarirl/types.hpp"

namespace clarirl {

// Total: never throws. Malformed input gives a best-effort AgentOutput and
// the defects found.
std::pair<AgentOutput, FormatVerdict> parse_agent_output(std::string_view raw);

// Throws std::invalid_argument when the output cannot be rendered so that it
// parses back to itself (embedded tag delimiters, empty or untrimmed
// segments, a response that would read as an API call, response together
// with an API call).
std::string render_agent_output(const AgentOutput& out);

std::string render_api_call(const ApiCall& call);

// Parses just the "call NAME(...)" form; nullopt if the text is not a
// well-formed call.
std::optional<ApiCall> parse_api_call(std::string_view text);

inline constexpr std::string_view kThinkOpen = "<think>";
inline constexpr std::string_view kThinkClose = "</think>";
inline constexpr std::string_view kClarifyOpen = "<clarify>";
inline constexpr std::string_view kClarifyClose = "</clarify>";

bool contains_tag_delimiter(std::string_view text);

}  // namespace clarirl
