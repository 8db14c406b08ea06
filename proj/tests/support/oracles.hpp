#pragma once

// Test-only reference implementations. Nothing here calls into the code
// under test except for plain data accessors.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "clarirl/rng.hpp"
#include "clarirl/types.hpp"
#include "clarirl/world.hpp"

namespace oracle {

using namespace clarirl;

inline std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

// Query semantics written out longhand: times compare as HH:MM strings,
// everything else case-insensitively.
inline bool value_ok(const std::string& slot, const std::string& have, const std::string& want) {
    if (slot == "leaveAt") return have >= want;
    if (slot == "arriveBy") return have <= want;
    return lower(have) == lower(want);
}

inline std::vector<std::string> brute_filter(const std::vector<Entity>& entities,
                                             const std::vector<std::pair<std::string, std::string>>& args) {
    std::vector<std::string> ids;
    for (const auto& e : entities) {
        bool ok = true;
        for (const auto& [k, v] : args) {
            auto it = e.attributes.find(k);
            if (it == e.attributes.end() || !value_ok(k, it->second, v)) {
                ok = false;
                break;
            }
        }
        if (ok) ids.push_back(e.id);
    }
    return ids;
}

// Group advantages by explicit two-pass arithmetic.
inline std::vector<double> advantages(const std::vector<double>& r) {
    double sum = 0.0;
    for (double x : r) sum += x;
    const double mean = sum / static_cast<double>(r.size());
    double ss = 0.0;
    for (double x : r) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / static_cast<double>(r.size()));
    std::vector<double> out;
    for (double x : r) out.push_back(sd == 0.0 ? 0.0 : (x - mean) / (sd + 1e-8));
    return out;
}

// Expected format reward from the verdict bits alone.
inline double format_expected(bool has_think, bool has_clarify, bool any_defect) {
    if (any_defect) return 0.0;
    if (has_think && has_clarify) return 1.0;
    if (has_think || has_clarify) return 0.5;
    return 0.0;
}

// Slot lexicon restated for the judge re-derivation, in priority order.
struct LexEntry {
    const char* slot;
    std::vector<const char*> phrases;
};
inline const std::vector<LexEntry>& lexicon() {
    static const std::vector<LexEntry> lex{
        {"food", {"food", "cuisine", "type of food", "dish", "eat"}},
        {"pricerange", {"price", "price range", "budget", "expensive", "afford"}},
        {"internet", {"internet", "wifi", "wi-fi", "online"}},
        {"parking", {"parking", "car park", "park the car"}},
        {"departure", {"departure", "leaving from", "depart from", "departing", "travel from"}},
        {"destination", {"destination", "going to", "heading", "travel to", "arrive in"}},
        {"day", {"day", "which date", "what date", "weekday"}},
        {"area", {"area", "part of town", "neighbourhood", "location", "where in town"}},
        {"type", {"type of attraction", "kind of attraction", "kind of place", "sort of place", "type of place"}},
    };
    return lex;
}

inline bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

inline std::optional<std::string> slot_of(const std::string& question) {
    const std::string q = lower(question);
    for (const auto& entry : lexicon()) {
        for (const char* p : entry.phrases) {
            const std::string phrase = p;
            for (std::size_t pos = q.find(phrase); pos != std::string::npos; pos = q.find(phrase, pos + 1)) {
                const bool left = pos == 0 || !word_char(q[pos - 1]);
                const std::size_t end = pos + phrase.size();
                const bool right = end >= q.size() || !word_char(q[end]);
                if (left && right) return std::string(entry.slot);
            }
        }
    }
    return std::nullopt;
}

inline int judge(const std::string& question, const AmbiguityState& truth) {
    const auto slot = slot_of(question);
    if (!slot) return 0;
    const bool ambiguous =
        std::find(truth.ambiguous_slots.begin(), truth.ambiguous_slots.end(), *slot) != truth.ambiguous_slots.end();
    return ambiguous && !truth.revealed.count(*slot) && !truth.asked.count(*slot) ? 1 : 0;
}

}  // namespace oracle
