#pragma once

// Canonical JSON encoding for the shared types. Field names are snake_case;
// absent optionals are omitted. Datasets and logs are JSON Lines.

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "clarirl/types.hpp"

namespace clarirl {

using json = nlohmann::json;

void to_json(json& j, Domain d);
void from_json(const json& j, Domain& d);
void to_json(json& j, Defect d);
void from_json(const json& j, Defect& d);

void to_json(json& j, const SubGoal& v);
void from_json(const json& j, SubGoal& v);
void to_json(json& j, const Ambiguity& v);
void from_json(const json& j, Ambiguity& v);
void to_json(json& j, const UserGoal& v);
void from_json(const json& j, UserGoal& v);
void to_json(json& j, const ApiCall& v);
void from_json(const json& j, ApiCall& v);
void to_json(json& j, const AgentOutput& v);
void from_json(const json& j, AgentOutput& v);
void to_json(json& j, const FormatVerdict& v);
void from_json(const json& j, FormatVerdict& v);
void to_json(json& j, const RewardBreakdown& v);
void from_json(const json& j, RewardBreakdown& v);
void to_json(json& j, const Entity& v);
void from_json(const json& j, Entity& v);
void to_json(json& j, const ApiResult& v);
void from_json(const json& j, ApiResult& v);
void to_json(json& j, const UserReply& v);
void from_json(const json& j, UserReply& v);
void to_json(json& j, const Observation& v);
void from_json(const json& j, Observation& v);
void to_json(json& j, const Turn& v);
void from_json(const json& j, Turn& v);
void to_json(json& j, const Trajectory& v);
void from_json(const json& j, Trajectory& v);
void to_json(json& j, const AmbiguityState& v);
void from_json(const json& j, AmbiguityState& v);

// JSON Lines helpers. read_jsonl throws std::runtime_error naming the path
// when the file cannot be opened or a line fails to parse.
std::vector<json> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows);

template <typename T>
std::vector<T> read_jsonl_as(const std::filesystem::path& path) {
    std::vector<T> out;
    for (const auto& row : read_jsonl(path)) out.push_back(row.get<T>());
    return out;
}

template <typename T>
void write_jsonl_of(const std::filesystem::path& path, const std::vector<T>& items) {
    std::vector<json> rows;
    rows.reserve(items.size());
    for (const auto& item : items) rows.emplace_back(item);
    write_jsonl(path, rows);
}

}  // namespace clarirl
