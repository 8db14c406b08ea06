#include "clarirl/user_sim.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "clarirl/json_io.hpp"

namespace clarirl {

namespace {

std::string substitute(std::string tmpl, std::string_view key, const std::string& value) {
    const std::string marker = "{" + std::string(key) + "}";
    for (auto pos = tmpl.find(marker); pos != std::string::npos;
         pos = tmpl.find(marker, pos + value.size()))
        tmpl.replace(pos, marker.size(), value);
    return tmpl;
}

std::string capitalize(std::string s) {
    if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    return s;
}

std::string article_for(const std::string& next_word) {
    return !next_word.empty() && std::string("aeiou").find(next_word[0]) != std::string::npos ? "an"
                                                                                               : "a";
}

std::string join_and(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += i + 1 == items.size() ? " and " : ", ";
        out += items[i];
    }
    return out;
}

bool word_boundary(const std::string& text, std::size_t pos, std::size_t len) {
    auto alnum = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
    bool left = pos == 0 || !alnum(text[pos - 1]);
    bool right = pos + len >= text.size() || !alnum(text[pos + len]);
    return left && right;
}

// Builds the request phrase for a sub-goal from the slots that are stated.
std::string request_phrase(const SubGoal& sg, const SlotMap& stated) {
    auto has = [&](const char* s) { return stated.contains(s); };
    auto get = [&](const char* s) { return stated.at(s); };
    std::string p;
    switch (sg.domain) {
        case Domain::Restaurant: {
            std::string words;
            if (has("pricerange")) words += get("pricerange") + " ";
            if (has("food")) words += get("food") + " ";
            words += "restaurant";
            p = article_for(words) + " " + words;
            if (has("area")) p += " in the " + get("area");
            break;
        }
        case Domain::Hotel:
            p = "a place to stay";
            if (has("area")) p += " in the " + get("area");
            if (has("internet")) p += get("internet") == "yes" ? " with free wifi" : " without internet";
            if (has("parking")) p += get("parking") == "yes" ? " with free parking" : " with no parking";
            break;
        case Domain::Attraction:
            p = has("type") ? article_for(get("type")) + " " + get("type") : "an attraction";
            if (has("area")) p += " in the " + get("area");
            break;
        case Domain::Train:
            p = "a train";
            if (has("departure")) p += " from " + get("departure");
            if (has("destination")) p += " to " + get("destination");
            if (has("day")) p += " on " + get("day");
            if (has("leaveAt")) p += " leaving after " + get("leaveAt");
            break;
        case Domain::Taxi:
            p = "a taxi";
            break;
    }
    if (sg.booking) {
        const auto& b = *sg.booking;
        switch (sg.domain) {
            case Domain::Restaurant:
                p += " for " + b.at("people") + " people on " + b.at("day") + " at " + b.at("time");
                break;
            case Domain::Hotel:
                p += " for " + b.at("people") + " people from " + b.at("day") + " for " + b.at("stay") +
                     " nights";
                break;
            case Domain::Train:
                p += " for " + b.at("people") + " people";
                break;
            case Domain::Taxi:
                p += " from " + b.at("departure") + " to " + b.at("destination") + " leaving at " +
                     b.at("leaveAt");
                break;
            case Domain::Attraction:
                break;
        }
    }
    return p;
}

PersonaPack pack_from_json(const json& j) {
    PersonaPack p;
    p.name = j.at("name").get<std::string>();
    p.opening = j.at("opening").get<std::string>();
    p.next = j.at("next").get<std::string>();
    p.reveal = j.at("reveal").get<std::string>();
    p.repeat = j.at("repeat").get<std::string>();
    p.unhelpful = j.at("unhelpful").get<std::string>();
    p.acknowledge = j.at("acknowledge").get<std::string>();
    p.nudge = j.at("nudge").get<std::string>();
    p.rejection = j.at("rejection").get<std::string>();
    p.complete = j.at("complete").get<std::string>();
    return p;
}

}  // namespace

std::vector<PersonaPack> default_persona_packs() {
    return {
        {"direct", "I want to book {request}.", "Thanks. I also need {request}.", "{phrase}, please.",
         "As I said, {phrase}.", "Whatever you recommend.", "Thanks, that helps.",
         "I still need {needs}.", "Hmm, that is not what I was looking for.",
         "Perfect, that is everything. Thank you!"},
        {"polite", "Hello! Could you help me with {request}?",
         "Great, thank you. Next, could you help me with {request}?", "I would prefer {phrase}.",
         "Like I mentioned, {phrase}.", "I don't really mind, whatever you think is best.",
         "Thank you, that's useful.", "Could you also sort out {needs}?",
         "Sorry, that doesn't match what I need.", "Wonderful, that covers everything. Thanks a lot!"},
        {"brief", "Need {request}.", "Also need {request}.", "{phrase}.", "Already said: {phrase}.",
         "No preference.", "Ok.", "Still need {needs}.", "No, wrong one.", "Done, thanks."},
    };
}

std::vector<PersonaPack> load_persona_packs(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    json j = json::parse(in);
    std::vector<PersonaPack> packs;
    for (const auto& p : j.at("packs")) packs.push_back(pack_from_json(p));
    if (packs.empty()) throw std::runtime_error(path.string() + ": no persona packs");
    return packs;
}

const std::vector<std::pair<std::string, std::vector<std::string>>>& slot_lexicon() {
    // Priority order: earlier slots win when several match.
    static const std::vector<std::pair<std::string, std::vector<std::string>>> lexicon{
        {"food", {"food", "cuisine", "type of food", "dish", "eat"}},
        {"pricerange", {"price", "price range", "budget", "expensive", "afford"}},
        {"internet", {"internet", "wifi", "wi-fi", "online"}},
        {"parking", {"parking", "car park", "park the car"}},
        {"departure", {"departure", "leaving from", "depart from", "departing", "travel from"}},
        {"destination", {"destination", "going to", "heading", "travel to", "arrive in"}},
        {"day", {"day", "which date", "what date", "weekday"}},
        {"area", {"area", "part of town", "neighbourhood", "location", "where in town"}},
        {"type", {"type of attraction", "kind of attraction", "kind of place", "sort of place",
                  "type of place"}},
    };
    return lexicon;
}

std::optional<std::string> detect_slot(std::string_view question) {
    const std::string text = lowercase(question);
    for (const auto& [slot, triggers] : slot_lexicon()) {
        for (const auto& trigger : triggers) {
            for (auto pos = text.find(trigger); pos != std::string::npos;
                 pos = text.find(trigger, pos + 1))
                if (word_boundary(text, pos, trigger.size())) return slot;
        }
    }
    return std::nullopt;
}

std::string slot_phrase(Domain d, const std::string& slot, const std::string& value) {
    if (slot == "area") return "the " + value;
    if (slot == "pricerange") return "something " + value;
    if (slot == "food") return value + " food";
    if (slot == "internet") return value == "yes" ? "a place with wifi" : "a place without internet";
    if (slot == "parking") return value == "yes" ? "a place with parking" : "a place without parking";
    if (slot == "type") return article_for(value) + " " + value;
    if (slot == "departure") return "leaving from " + value;
    if (slot == "destination") return "going to " + value;
    if (slot == "day") return d == Domain::Train ? "travelling on " + value : "on " + value;
    if (slot == "people") return value + " people";
    if (slot == "stay") return value + " nights";
    if (slot == "leaveAt") return "leaving after " + value;
    return value;
}

const SubGoal* SimulatorState::pending() const {
    return all_done() ? nullptr : &goal.sub_goals[pending_subgoal_index];
}

UserSimulator::UserSimulator(const Database& db, std::vector<PersonaPack> packs, SimulatorConfig cfg)
    : db_(&db), packs_(std::move(packs)), cfg_(cfg) {
    if (packs_.empty()) packs_ = default_persona_packs();
}

const PersonaPack& UserSimulator::persona(std::uint64_t persona_seed) const {
    return packs_[persona_seed % packs_.size()];
}

SimulatorState UserSimulator::init(const UserGoal& goal, std::uint64_t persona_seed) const {
    SimulatorState s;
    s.goal = goal;
    s.persona_seed = persona_seed;
    s.booked.assign(goal.sub_goals.size(), false);
    s.surfaced.assign(goal.sub_goals.size(), {});
    if (cfg_.volunteer_ambiguous)
        for (const auto& a : goal.ambiguity_spec) s.revealed.insert({a.domain, a.slot});
    return s;
}

UserReply UserSimulator::describe_subgoal(const UserGoal& goal, std::size_t index,
                                          const std::string& tmpl) const {
    const SubGoal& sg = goal.sub_goals[index];
    UserReply r;
    r.domain = sg.domain;
    r.flag = ReplyFlag::Request;
    for (const auto& [slot, value] : sg.constraints)
        if (cfg_.volunteer_ambiguous || !goal.is_ambiguous(sg.domain, slot)) r.informs[slot] = value;
    if (sg.booking) r.booking_informs = *sg.booking;
    r.requests = sg.requestables;
    r.text = capitalize(substitute(tmpl, "request", request_phrase(sg, r.informs)));
    if (!sg.requestables.empty()) {
        std::vector<std::string> names(sg.requestables.begin(), sg.requestables.end());
        r.text += " Please tell me its " + join_and(names) + ".";
    }
    return r;
}

UserReply UserSimulator::first_utterance(const UserGoal& goal, std::uint64_t persona_seed) const {
    return describe_subgoal(goal, 0, persona(persona_seed).opening);
}

std::pair<UserReply, SimulatorState> UserSimulator::respond(SimulatorState state,
                                                            std::string_view clarify_question) const {
    const PersonaPack& pack = persona(state.persona_seed);
    UserReply r;
    r.flag = ReplyFlag::Unhelpful;
    r.text = pack.unhelpful;
    const SubGoal* sg = state.pending();
    if (!sg) return {std::move(r), std::move(state)};
    r.domain = sg->domain;

    auto slot = detect_slot(clarify_question);
    if (!slot) return {std::move(r), std::move(state)};

    const std::pair<Domain, std::string> key{sg->domain, *slot};
    if (auto it = sg->constraints.find(*slot); it != sg->constraints.end()) {
        const bool ambiguous = state.goal.is_ambiguous(sg->domain, *slot);
        const std::string phrase = slot_phrase(sg->domain, *slot, it->second);
        if (ambiguous && !state.revealed.contains(key)) {
            r.flag = ReplyFlag::Reveal;
            r.text = pack.reveal;
            state.revealed.insert(key);
        } else {
            r.flag = ReplyFlag::Repeat;
            r.text = pack.repeat;
        }
        r.text = capitalize(substitute(r.text, "phrase", phrase));
        r.informs[*slot] = it->second;
        state.asked.insert(key);
    } else if (sg->booking && sg->booking->contains(*slot)) {
        const auto& value = sg->booking->at(*slot);
        r.flag = ReplyFlag::Repeat;
        r.text = capitalize(substitute(pack.repeat, "phrase", slot_phrase(sg->domain, *slot, value)));
        r.booking_informs[*slot] = value;
        state.asked.insert(key);
    }
    return {std::move(r), std::move(state)};
}

bool UserSimulator::booking_satisfies(const SubGoal& sg, const ApiCall& call,
                                      const ApiResult& result) const {
    Domain d{};
    if (!find_api(call.name, &d) || d != sg.domain) return false;
    if (result.kind != ApiResultKind::BookingConfirmation || result.entities.empty()) return false;
    if (!entity_satisfies(result.entities.front(), sg.constraints)) return false;
    if (sg.booking) {
        for (const auto& [slot, value] : *sg.booking) {
            const auto* given = call.arg(slot);
            if (!given || lowercase(*given) != lowercase(value)) return false;
        }
    }
    return true;
}

std::pair<UserReply, SimulatorState> UserSimulator::advance(SimulatorState state) const {
    const PersonaPack& pack = persona(state.persona_seed);
    ++state.pending_subgoal_index;
    if (state.all_done()) {
        UserReply r;
        r.flag = ReplyFlag::Complete;
        r.text = pack.complete;
        r.completion = true;
        return {std::move(r), std::move(state)};
    }
    UserReply r = describe_subgoal(state.goal, state.pending_subgoal_index, pack.next);
    return {std::move(r), std::move(state)};
}

namespace {

std::string needs_phrase(const SubGoal& sg, bool booked, const std::set<std::string>& surfaced) {
    if (sg.booking && !booked) return "the booking";
    std::vector<std::string> missing;
    for (const auto& r : sg.requestables)
        if (!surfaced.contains(r)) missing.push_back(r);
    if (missing.empty()) return "nothing else";
    return "the " + join_and(missing);
}

}  // namespace

std::pair<UserReply, SimulatorState> UserSimulator::react_booking(SimulatorState state,
                                                                  const ApiCall& call,
                                                                  const ApiResult& result) const {
    const PersonaPack& pack = persona(state.persona_seed);
    UserReply r;
    const SubGoal* sg = state.pending();
    if (!sg) {
        r.flag = ReplyFlag::Acknowledge;
        r.text = pack.acknowledge;
        return {std::move(r), std::move(state)};
    }
    r.domain = sg->domain;
    if (!booking_satisfies(*sg, call, result)) {
        r.flag = ReplyFlag::Rejection;
        r.text = pack.rejection;
        return {std::move(r), std::move(state)};
    }
    const std::size_t idx = state.pending_subgoal_index;
    state.booked[idx] = true;
    if (state.surfaced[idx].size() == sg->requestables.size()) return advance(std::move(state));
    r.flag = ReplyFlag::Nudge;
    r.text = substitute(pack.nudge, "needs", needs_phrase(*sg, true, state.surfaced[idx]));
    r.requests = sg->requestables;
    return {std::move(r), std::move(state)};
}

std::pair<UserReply, SimulatorState> UserSimulator::react_response(SimulatorState state,
                                                                   std::string_view response) const {
    const PersonaPack& pack = persona(state.persona_seed);
    UserReply r;
    r.flag = ReplyFlag::Acknowledge;
    r.text = pack.acknowledge;
    const SubGoal* sg = state.pending();
    if (!sg) return {std::move(r), std::move(state)};
    r.domain = sg->domain;

    const std::size_t idx = state.pending_subgoal_index;
    const std::string text = lowercase(response);
    bool surfaced_new = false;
    for (const auto& slot : sg->requestables) {
        if (state.surfaced[idx].contains(slot)) continue;
        for (const auto& e : db_->entities(sg->domain)) {
            if (!entity_satisfies(e, sg->constraints)) continue;
            const auto* v = e.attr(slot);
            if (v && text.find(lowercase(*v)) != std::string::npos) {
                state.surfaced[idx].insert(slot);
                surfaced_new = true;
                break;
            }
        }
    }
    const bool booking_done = !sg->booking || state.booked[idx];
    if (surfaced_new && booking_done && state.surfaced[idx].size() == sg->requestables.size())
        return advance(std::move(state));
    if (surfaced_new) return {std::move(r), std::move(state)};

    r.flag = ReplyFlag::Nudge;
    r.text = substitute(pack.nudge, "needs", needs_phrase(*sg, state.booked[idx], state.surfaced[idx]));
    return {std::move(r), std::move(state)};
}

AmbiguityState UserSimulator::truth(const SimulatorState& state) const {
    AmbiguityState t;
    const SubGoal* sg = state.pending();
    if (!sg) return t;
    t.pending_domain = sg->domain;
    for (const auto& a : state.goal.ambiguity_spec)
        if (a.domain == sg->domain) t.ambiguous_slots.push_back(a.slot);
    for (const auto& [d, slot] : state.revealed)
        if (d == sg->domain) t.revealed.insert(slot);
    for (const auto& [d, slot] : state.asked)
        if (d == sg->domain) t.asked.insert(slot);
    return t;
}

}  // namespace clarirl
