#include "clarirl/json_io.hpp"

#include <fstream>
#include <stdexcept>

namespace clarirl {

namespace {

template <typename T>
void put_opt(json& j, const char* key, const std::optional<T>& v) {
    if (v) j[key] = *v;
}

template <typename T>
void get_opt(const json& j, const char* key, std::optional<T>& out) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null())
        out.reset();
    else
        out = it->template get<T>();
}

template <typename Enum, std::size_t N>
Enum enum_from(const json& j, const std::array<std::string_view, N>& names) {
    const auto s = j.get<std::string>();
    for (std::size_t i = 0; i < N; ++i)
        if (names[i] == s) return static_cast<Enum>(i);
    throw std::invalid_argument("bad enum value: " + s);
}

constexpr std::array<std::string_view, 3> kProvenance{"oracle", "remote", "none"};
constexpr std::array<std::string_view, 3> kResultKinds{"QueryResult", "BookingConfirmation",
                                                       "ApiError"};
constexpr std::array<std::string_view, 4> kErrorCodes{"unknown_api", "unknown_arg", "no_match",
                                                      "ambiguous_match"};
constexpr std::array<std::string_view, 8> kFlags{"request",   "reveal",      "repeat",
                                                 "unhelpful", "acknowledge", "nudge",
                                                 "rejection", "complete"};
constexpr std::array<std::string_view, 4> kStatus{"InProgress", "Success", "Failure",
                                                  "TurnLimit"};
constexpr std::array<std::string_view, 4> kTermination{"none", "user_complete", "agent_done",
                                                       "turn_limit"};

}  // namespace

void to_json(json& j, Domain d) { j = std::string(to_string(d)); }
void from_json(const json& j, Domain& d) { d = domain_from_string(j.get<std::string>()); }
void to_json(json& j, Defect d) { j = std::string(to_string(d)); }
void from_json(const json& j, Defect& d) { d = defect_from_string(j.get<std::string>()); }

void to_json(json& j, const SubGoal& v) {
    j = json{{"domain", v.domain}, {"constraints", v.constraints}, {"requestables", v.requestables}};
    put_opt(j, "booking", v.booking);
}
void from_json(const json& j, SubGoal& v) {
    v.domain = j.at("domain").get<Domain>();
    v.constraints = j.at("constraints").get<SlotMap>();
    v.requestables = j.value("requestables", std::set<std::string>{});
    get_opt(j, "booking", v.booking);
}

void to_json(json& j, const Ambiguity& v) {
    j = json{{"domain", v.domain},
             {"slot", v.slot},
             {"candidate_values", v.candidates},
             {"reveal_on_ask", v.reveal}};
}
void from_json(const json& j, Ambiguity& v) {
    v.domain = j.at("domain").get<Domain>();
    v.slot = j.at("slot").get<std::string>();
    v.candidates = j.at("candidate_values").get<std::vector<std::string>>();
    v.reveal = j.at("reveal_on_ask").get<std::string>();
}

void to_json(json& j, const UserGoal& v) {
    j = json{{"goal_id", v.goal_id}, {"sub_goals", v.sub_goals}, {"ambiguity_spec", v.ambiguity_spec}};
}
void from_json(const json& j, UserGoal& v) {
    v.goal_id = j.at("goal_id").get<std::string>();
    v.sub_goals = j.at("sub_goals").get<std::vector<SubGoal>>();
    v.ambiguity_spec = j.value("ambiguity_spec", std::vector<Ambiguity>{});
}

void to_json(json& j, const ApiCall& v) {
    json args = json::array();
    for (const auto& [k, val] : v.args) args.push_back(json::array({k, val}));
    j = json{{"name", v.name}, {"args", args}};
}
void from_json(const json& j, ApiCall& v) {
    v.name = j.at("name").get<std::string>();
    v.args.clear();
    for (const auto& pair : j.at("args"))
        v.args.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<std::string>());
}

void to_json(json& j, const AgentOutput& v) {
    j = json{{"raw", v.raw}};
    put_opt(j, "think", v.think);
    put_opt(j, "clarify", v.clarify);
    put_opt(j, "response", v.response);
    put_opt(j, "api_call", v.api_call);
}
void from_json(const json& j, AgentOutput& v) {
    v.raw = j.value("raw", std::string{});
    get_opt(j, "think", v.think);
    get_opt(j, "clarify", v.clarify);
    get_opt(j, "response", v.response);
    get_opt(j, "api_call", v.api_call);
}

void to_json(json& j, const FormatVerdict& v) {
    j = json{{"well_formed", v.well_formed},
             {"has_think", v.has_think},
             {"has_clarify", v.has_clarify},
             {"defects", v.defects}};
}
void from_json(const json& j, FormatVerdict& v) {
    v.well_formed = j.at("well_formed").get<bool>();
    v.has_think = j.at("has_think").get<bool>();
    v.has_clarify = j.at("has_clarify").get<bool>();
    v.defects = j.at("defects").get<std::vector<Defect>>();
}

void to_json(json& j, const RewardBreakdown& v) {
    j = json{{"r_format", v.r_format},
             {"r_clarify", v.r_clarify},
             {"r_total", v.r_total},
             {"defects", v.defects},
             {"judge_provenance", std::string(to_string(v.judge_provenance))}};
}
void from_json(const json& j, RewardBreakdown& v) {
    v.r_format = j.at("r_format").get<double>();
    v.r_clarify = j.at("r_clarify").get<double>();
    v.r_total = j.at("r_total").get<double>();
    v.defects = j.at("defects").get<std::vector<Defect>>();
    v.judge_provenance = enum_from<JudgeProvenance>(j.at("judge_provenance"), kProvenance);
}

void to_json(json& j, const Entity& v) {
    j = json{{"domain", v.domain}, {"id", v.id}, {"attributes", v.attributes}};
}
void from_json(const json& j, Entity& v) {
    v.domain = j.at("domain").get<Domain>();
    v.id = j.at("id").get<std::string>();
    v.attributes = j.at("attributes").get<SlotMap>();
}

void to_json(json& j, const ApiResult& v) {
    j = json{{"kind", std::string(kResultKinds[static_cast<std::size_t>(v.kind)])},
             {"entities", v.entities},
             {"message", v.message}};
    put_opt(j, "booking_ref", v.booking_ref);
    put_opt(j, "entity_id", v.entity_id);
    if (v.error) j["error"] = std::string(to_string(*v.error));
}
void from_json(const json& j, ApiResult& v) {
    v.kind = enum_from<ApiResultKind>(j.at("kind"), kResultKinds);
    v.entities = j.value("entities", std::vector<Entity>{});
    v.message = j.value("message", std::string{});
    get_opt(j, "booking_ref", v.booking_ref);
    get_opt(j, "entity_id", v.entity_id);
    if (j.contains("error"))
        v.error = enum_from<ApiErrorCode>(j.at("error"), kErrorCodes);
    else
        v.error.reset();
}

void to_json(json& j, const UserReply& v) {
    j = json{{"text", v.text},
             {"informs", v.informs},
             {"booking_informs", v.booking_informs},
             {"requests", v.requests},
             {"flag", std::string(to_string(v.flag))},
             {"completion", v.completion}};
    put_opt(j, "domain", v.domain);
}
void from_json(const json& j, UserReply& v) {
    v.text = j.at("text").get<std::string>();
    v.informs = j.value("informs", SlotMap{});
    v.booking_informs = j.value("booking_informs", SlotMap{});
    v.requests = j.value("requests", std::set<std::string>{});
    v.flag = enum_from<ReplyFlag>(j.at("flag"), kFlags);
    v.completion = j.value("completion", false);
    get_opt(j, "domain", v.domain);
}

void to_json(json& j, const Observation& v) {
    j = json::object();
    put_opt(j, "user", v.user);
    put_opt(j, "api", v.api);
}
void from_json(const json& j, Observation& v) {
    get_opt(j, "user", v.user);
    get_opt(j, "api", v.api);
}

void to_json(json& j, const Turn& v) {
    j = json{{"index", v.index},
             {"action", v.action},
             {"observation", v.observation},
             {"speaker_visible_text", v.speaker_visible_text}};
    put_opt(j, "reasoning", v.reasoning);
    put_opt(j, "reward", v.reward);
}
void from_json(const json& j, Turn& v) {
    v.index = j.at("index").get<int>();
    v.action = j.at("action").get<AgentOutput>();
    v.observation = j.at("observation").get<Observation>();
    v.speaker_visible_text = j.at("speaker_visible_text").get<std::string>();
    get_opt(j, "reasoning", v.reasoning);
    get_opt(j, "reward", v.reward);
}

void to_json(json& j, const Trajectory& v) {
    j = json{{"goal_ref", v.goal_ref},
             {"initial_query", v.initial_query},
             {"initial_reply", v.initial_reply},
             {"turns", v.turns},
             {"status", std::string(to_string(v.status))},
             {"terminated_by", std::string(to_string(v.terminated_by))},
             {"turn_count", v.turn_count}};
}
void from_json(const json& j, Trajectory& v) {
    v.goal_ref = j.at("goal_ref").get<std::string>();
    v.initial_query = j.at("initial_query").get<std::string>();
    v.initial_reply = j.at("initial_reply").get<UserReply>();
    v.turns = j.at("turns").get<std::vector<Turn>>();
    v.status = enum_from<EpisodeStatus>(j.at("status"), kStatus);
    v.terminated_by = enum_from<Termination>(j.at("terminated_by"), kTermination);
    v.turn_count = j.at("turn_count").get<int>();
}

void to_json(json& j, const AmbiguityState& v) {
    j = json{{"ambiguous_slots", v.ambiguous_slots}, {"revealed", v.revealed}, {"asked", v.asked}};
    put_opt(j, "pending_domain", v.pending_domain);
}
void from_json(const json& j, AmbiguityState& v) {
    v.ambiguous_slots = j.at("ambiguous_slots").get<std::vector<std::string>>();
    v.revealed = j.at("revealed").get<std::set<std::string>>();
    v.asked = j.at("asked").get<std::set<std::string>>();
    get_opt(j, "pending_domain", v.pending_domain);
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<json> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            rows.push_back(json::parse(line));
        } catch (const json::exception& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return rows;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto& row : rows) out << row.dump() << '\n';
}

}  // namespace clarirl
