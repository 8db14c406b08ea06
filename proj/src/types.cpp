#include "clarirl/types.hpp"

#include <algorithm>
#include <stdexcept>

namespace clarirl {

namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view name, const std::array<std::string_view, N>& names,
                const char* what) {
    for (std::size_t i = 0; i < N; ++i)
        if (names[i] == name) return static_cast<Enum>(i);
    throw std::invalid_argument(std::string("unknown ") + what + ": " + std::string(name));
}

constexpr std::array<std::string_view, 5> kDomainNames{"restaurant", "hotel", "attraction",
                                                       "train", "taxi"};
constexpr std::array<std::string_view, 5> kDefectNames{
    "UnclosedTag", "OrderViolation", "DuplicateTag", "EmptySegment", "MalformedApiCall"};

SlotSpec categorical(std::string name, std::vector<std::string> values) {
    return SlotSpec{std::move(name), SlotKind::Categorical, std::move(values)};
}
SlotSpec integer(std::string name, int lo, int hi) {
    return SlotSpec{std::move(name), SlotKind::Integer, {}, lo, hi};
}
SlotSpec time_slot(std::string name) { return SlotSpec{std::move(name), SlotKind::Time, {}}; }
SlotSpec identifier(std::string name) { return SlotSpec{std::move(name), SlotKind::Identifier, {}}; }

const std::vector<std::string> kAreas{"north", "south", "east", "west", "centre"};
const std::vector<std::string> kPrices{"cheap", "moderate", "expensive"};
const std::vector<std::string> kDays{"monday", "tuesday", "wednesday", "thursday",
                                     "friday", "saturday", "sunday"};
const std::vector<std::string> kYesNo{"yes", "no"};
const std::vector<std::string> kStations{"cambridge", "london", "ely",      "norwich",
                                         "stevenage", "peterborough", "leicester"};
const std::vector<std::string> kTaxiPlaces{"hotel a",          "railway station", "airport",
                                           "city museum",      "riverside college",
                                           "market square"};

std::vector<DomainSchema> build_schemas() {
    std::vector<DomainSchema> out;

    DomainSchema restaurant;
    restaurant.domain = Domain::Restaurant;
    restaurant.slots = {categorical("area", kAreas),
                        categorical("pricerange", kPrices),
                        categorical("food", {"italian", "chinese", "indian", "british", "french",
                                             "thai"}),
                        identifier("name"),
                        integer("stars", 1, 5),
                        categorical("type", {"restaurant", "cafe", "bistro"}),
                        integer("people", 1, 8),
                        categorical("day", kDays),
                        time_slot("time"),
                        identifier("phone"),
                        identifier("address"),
                        identifier("postcode")};
    restaurant.api_specs = {
        {"query_restaurant", ApiKind::Query, {"area", "pricerange", "food", "name"}, {}},
        {"book_restaurant",
         ApiKind::Book,
         {"name", "people", "day", "time", "pricerange", "stars", "type"},
         {"people", "day", "time"}}};
    restaurant.constraint_slots = {"food", "pricerange", "area"};
    restaurant.ambiguity_slots = {"food", "pricerange", "area"};
    restaurant.booking_slots = {"people", "day", "time"};
    out.push_back(std::move(restaurant));

    DomainSchema hotel;
    hotel.domain = Domain::Hotel;
    hotel.slots = {categorical("area", kAreas),
                   categorical("internet", kYesNo),
                   identifier("name"),
                   categorical("parking", kYesNo),
                   categorical("pricerange", kPrices),
                   integer("stars", 1, 5),
                   categorical("type", {"hotel", "guesthouse"}),
                   integer("people", 1, 8),
                   categorical("day", kDays),
                   integer("stay", 1, 7),
                   identifier("phone"),
                   identifier("address"),
                   identifier("postcode")};
    hotel.api_specs = {
        {"query_hotel", ApiKind::Query, {"area", "internet", "name", "parking"}, {}},
        {"book_hotel", ApiKind::Book, {"name", "people", "day", "stay"}, {"people", "day", "stay"}}};
    hotel.constraint_slots = {"area", "internet", "parking"};
    hotel.ambiguity_slots = {"area", "internet", "parking"};
    hotel.booking_slots = {"people", "day", "stay"};
    out.push_back(std::move(hotel));

    DomainSchema attraction;
    attraction.domain = Domain::Attraction;
    attraction.slots = {categorical("area", kAreas),
                        identifier("name"),
                        categorical("type", {"museum", "park", "theatre", "college", "cinema",
                                             "nightclub"}),
                        identifier("phone"),
                        categorical("entrancefee", {"free", "2 pounds", "5 pounds", "8 pounds"}),
                        identifier("address")};
    attraction.api_specs = {{"query_attraction", ApiKind::Query, {"area", "name", "type"}, {}}};
    attraction.constraint_slots = {"area", "type"};
    attraction.ambiguity_slots = {"area", "type"};
    attraction.requestable_slots = {"phone", "entrancefee", "address"};
    out.push_back(std::move(attraction));

    DomainSchema train;
    train.domain = Domain::Train;
    train.slots = {time_slot("arriveBy"),
                   categorical("day", kDays),
                   categorical("departure", kStations),
                   categorical("destination", kStations),
                   time_slot("leaveAt"),
                   identifier("trainID"),
                   integer("people", 1, 8),
                   identifier("price"),
                   identifier("duration")};
    train.api_specs = {
        {"query_train",
         ApiKind::Query,
         {"arriveBy", "day", "departure", "destination", "leaveAt", "trainID"},
         {}},
        {"buy_train_ticket",
         ApiKind::Book,
         {"arriveBy", "day", "departure", "destination", "leaveAt", "trainID", "people"},
         {"people"}}};
    train.constraint_slots = {"departure", "destination", "day", "leaveAt"};
    train.ambiguity_slots = {"departure", "destination", "day"};
    train.booking_slots = {"people"};
    out.push_back(std::move(train));

    DomainSchema taxi;
    taxi.domain = Domain::Taxi;
    taxi.slots = {time_slot("arriveBy"), categorical("departure", kTaxiPlaces),
                  categorical("destination", kTaxiPlaces), time_slot("leaveAt"),
                  identifier("car"), identifier("phone")};
    taxi.api_specs = {{"book_taxi",
                       ApiKind::Book,
                       {"arriveBy", "departure", "destination", "leaveAt"},
                       {"arriveBy", "departure", "destination", "leaveAt"}}};
    taxi.booking_slots = {"departure", "destination", "leaveAt"};
    out.push_back(std::move(taxi));

    return out;
}

bool contains(const std::vector<std::string>& v, std::string_view s) {
    return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

std::string_view to_string(Domain d) { return kDomainNames[static_cast<std::size_t>(d)]; }

Domain domain_from_string(std::string_view name) {
    return parse_enum<Domain>(name, kDomainNames, "domain");
}

std::string_view to_string(Defect d) { return kDefectNames[static_cast<std::size_t>(d)]; }

Defect defect_from_string(std::string_view name) {
    return parse_enum<Defect>(name, kDefectNames, "defect");
}

std::string_view to_string(JudgeProvenance p) {
    constexpr std::array<std::string_view, 3> names{"oracle", "remote", "none"};
    return names[static_cast<std::size_t>(p)];
}

std::string_view to_string(ApiErrorCode c) {
    constexpr std::array<std::string_view, 4> names{"unknown_api", "unknown_arg", "no_match",
                                                    "ambiguous_match"};
    return names[static_cast<std::size_t>(c)];
}

std::string_view to_string(ReplyFlag f) {
    constexpr std::array<std::string_view, 8> names{"request",     "reveal", "repeat",
                                                    "unhelpful",   "acknowledge", "nudge",
                                                    "rejection",   "complete"};
    return names[static_cast<std::size_t>(f)];
}

std::string_view to_string(EpisodeStatus s) {
    constexpr std::array<std::string_view, 4> names{"InProgress", "Success", "Failure",
                                                    "TurnLimit"};
    return names[static_cast<std::size_t>(s)];
}

std::string_view to_string(Termination t) {
    constexpr std::array<std::string_view, 4> names{"none", "user_complete", "agent_done",
                                                    "turn_limit"};
    return names[static_cast<std::size_t>(t)];
}

bool ApiSpec::takes(std::string_view arg) const { return contains(args, arg); }
bool ApiSpec::is_booking_param(std::string_view arg) const {
    return contains(booking_params, arg);
}

const SlotSpec* DomainSchema::find_slot(std::string_view name) const {
    for (const auto& s : slots)
        if (s.name == name) return &s;
    return nullptr;
}

const ApiSpec* DomainSchema::query_api() const {
    for (const auto& a : api_specs)
        if (a.kind == ApiKind::Query) return &a;
    return nullptr;
}

const ApiSpec* DomainSchema::book_api() const {
    for (const auto& a : api_specs)
        if (a.kind == ApiKind::Book) return &a;
    return nullptr;
}

const std::vector<DomainSchema>& standard_schemas() {
    static const std::vector<DomainSchema> schemas = build_schemas();
    return schemas;
}

const DomainSchema& schema_for(Domain d) {
    return standard_schemas()[static_cast<std::size_t>(d)];
}

const ApiSpec* find_api(std::string_view name, Domain* domain_out) {
    for (const auto& schema : standard_schemas()) {
        for (const auto& api : schema.api_specs) {
            if (api.name == name) {
                if (domain_out) *domain_out = schema.domain;
                return &api;
            }
        }
    }
    return nullptr;
}

bool is_time_slot(std::string_view slot) {
    return slot == "arriveBy" || slot == "leaveAt" || slot == "time";
}

const Ambiguity* UserGoal::find_ambiguity(Domain d, std::string_view slot) const {
    for (const auto& a : ambiguity_spec)
        if (a.domain == d && a.slot == slot) return &a;
    return nullptr;
}

namespace {

bool value_allowed(const SlotSpec& spec, const std::string& value) {
    switch (spec.kind) {
        case SlotKind::Categorical:
            return contains(spec.values, value);
        case SlotKind::Integer: {
            if (value.empty() || value.size() > 6) return false;
            if (!std::all_of(value.begin(), value.end(), [](char c) { return c >= '0' && c <= '9'; }))
                return false;
            int v = std::stoi(value);
            return v >= spec.min && v <= spec.max;
        }
        case SlotKind::Time:
            return value.size() == 5 && value[2] == ':' && value >= "00:00" && value <= "23:59";
        case SlotKind::Identifier:
            return !value.empty();
    }
    return false;
}

void check_slots(const SlotMap& slots, const DomainSchema& schema, const char* what,
                 std::vector<std::string>& out) {
    for (const auto& [slot, value] : slots) {
        const SlotSpec* spec = schema.find_slot(slot);
        if (!spec) {
            out.push_back("unknown slot " + slot);
            continue;
        }
        if (!value_allowed(*spec, value))
            out.push_back(std::string(what) + " value '" + value + "' not allowed for slot " + slot);
    }
}

}  // namespace

std::vector<std::string> validate_goal(const UserGoal& goal,
                                       std::span<const DomainSchema> schemas) {
    std::vector<std::string> out;
    auto lookup = [&](Domain d) -> const DomainSchema* {
        for (const auto& s : schemas)
            if (s.domain == d) return &s;
        return nullptr;
    };
    for (Domain d : kAllDomains)
        if (!lookup(d)) out.push_back("schema missing domain " + std::string(to_string(d)));

    if (goal.goal_id.empty()) out.push_back("goal_id is empty");
    if (goal.sub_goals.empty()) out.push_back("goal has no sub-goals");

    std::set<Domain> seen;
    for (const auto& sg : goal.sub_goals) {
        if (!seen.insert(sg.domain).second)
            out.push_back("duplicate sub-goal domain " + std::string(to_string(sg.domain)));
        const DomainSchema* schema = lookup(sg.domain);
        if (!schema) continue;
        check_slots(sg.constraints, *schema, "constraint", out);
        if (sg.booking) check_slots(*sg.booking, *schema, "booking", out);
        for (const auto& r : sg.requestables)
            if (!schema->declares(r)) out.push_back("unknown slot " + r);
    }

    for (const auto& amb : goal.ambiguity_spec) {
        const DomainSchema* schema = lookup(amb.domain);
        if (schema && !schema->declares(amb.slot)) out.push_back("unknown slot " + amb.slot);
        std::set<std::string> distinct(amb.candidates.begin(), amb.candidates.end());
        if (distinct.size() < 2)
            out.push_back("ambiguity requires ≥2 candidates (slot " + amb.slot + ")");
        if (amb.reveal.empty() || !distinct.contains(amb.reveal))
            out.push_back("ambiguity on " + amb.slot + " needs exactly one reveal among candidates");
        auto sg = std::find_if(goal.sub_goals.begin(), goal.sub_goals.end(),
                               [&](const SubGoal& s) { return s.domain == amb.domain; });
        if (sg == goal.sub_goals.end()) {
            out.push_back("ambiguity on " + amb.slot + " has no matching sub-goal");
        } else if (auto it = sg->constraints.find(amb.slot);
                   it != sg->constraints.end() && it->second != amb.reveal) {
            out.push_back("ambiguity reveal for " + amb.slot + " disagrees with constraint");
        }
    }
    return out;
}

const std::string* ApiCall::arg(std::string_view key) const {
    for (const auto& [k, v] : args)
        if (k == key) return &v;
    return nullptr;
}

ActionKind AgentOutput::kind() const {
    if (clarify) return ActionKind::Clarify;
    if (api_call) return ActionKind::ApiCall;
    return ActionKind::Respond;
}

bool AgentOutput::same_content(const AgentOutput& o) const {
    return think == o.think && clarify == o.clarify && response == o.response &&
           api_call == o.api_call;
}

bool operator==(const AgentOutput& a, const AgentOutput& b) {
    return a.same_content(b) && a.raw == b.raw;
}

bool FormatVerdict::has(Defect d) const {
    return std::find(defects.begin(), defects.end(), d) != defects.end();
}

const std::string* Entity::attr(std::string_view slot) const {
    auto it = attributes.find(std::string(slot));
    return it == attributes.end() ? nullptr : &it->second;
}

std::string Observation::text() const {
    std::string out;
    if (api) out += "[api] " + api->message;
    if (user) {
        if (!out.empty()) out += "\n";
        out += user->text;
    }
    return out;
}

bool operator==(const Turn& a, const Turn& b) {
    return a.index == b.index && a.reasoning == b.reasoning && a.action == b.action &&
           a.observation == b.observation && a.speaker_visible_text == b.speaker_visible_text &&
           a.reward == b.reward;
}

bool operator==(const Trajectory& a, const Trajectory& b) {
    return a.goal_ref == b.goal_ref && a.initial_query == b.initial_query &&
           a.initial_reply == b.initial_reply && a.turns == b.turns && a.status == b.status &&
           a.terminated_by == b.terminated_by && a.turn_count == b.turn_count;
}

}  // namespace clarirl
