#pragma once

// Binary clarification judges behind one port: a deterministic oracle that
// reads the simulator's ambiguity ledger and a remote chat-completion client.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "clarirl/types.hpp"

namespace clarirl {

struct JudgeRequest {
    std::string conversation;  // visible dialogue only, no reasoning text
    std::string clarification_question;
};

struct JudgeVerdict {
    int score = 0;
    std::optional<std::string> raw_reply;
    std::optional<double> latency_ms;
};

enum class JudgeErrorKind { MalformedVerdict, Transport, Config };

class JudgeError : public std::runtime_error {
public:
    JudgeError(JudgeErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    JudgeErrorKind kind() const { return kind_; }
    bool retryable() const { return kind_ != JudgeErrorKind::Config; }

private:
    JudgeErrorKind kind_;
};

class ClarifyJudge {
public:
    virtual ~ClarifyJudge() = default;
    // `truth` is the in-simulator ambiguity state; only the oracle reads it.
    virtual JudgeVerdict score(const JudgeRequest& req, const AmbiguityState* truth) = 0;
    virtual JudgeProvenance provenance() const = 0;
};

class OracleJudge final : public ClarifyJudge {
public:
    // 1 iff the detected slot is ambiguous for the pending sub-goal, not yet
    // revealed and not asked before. Throws std::invalid_argument without truth.
    JudgeVerdict score(const JudgeRequest& req, const AmbiguityState* truth) override;
    JudgeProvenance provenance() const override { return JudgeProvenance::Oracle; }
};

int oracle_score(std::string_view question, const AmbiguityState& truth);

const std::string& judge_prompt_template();
// Single-pass substitution of <conversation> and <clarification_question>.
std::string assemble_prompt(const JudgeRequest& req);

// Accepts exactly ^\s*Score:\s*[01]\s*$ ; std::nullopt otherwise.
std::optional<int> parse_score_reply(std::string_view reply);

struct RemoteJudgeConfig {
    std::string url;  // e.g. http://host:port/v1/chat/completions
    std::string model;
    int timeout_ms = 30000;
    int concurrency = 4;
    int retries = 3;  // total attempts
    int backoff_ms = 250;
    std::string api_key;
    std::filesystem::path cache_path;  // empty disables persistence
    // Endpoint of the policy's own backend for self-judging.
    std::string self_url;
    std::string self_model;

    // Env: CLARIRL_JUDGE_URL, _MODEL, _TIMEOUT_MS, _CONCURRENCY, _RETRIES,
    // _BACKOFF_MS, _API_KEY, _CACHE, _SELF_URL, _SELF_MODEL.
    static RemoteJudgeConfig from_env();
    static RemoteJudgeConfig from_env(RemoteJudgeConfig base);
    static RemoteJudgeConfig from_file(const std::filesystem::path& path);
};

class RemoteJudge final : public ClarifyJudge {
public:
    explicit RemoteJudge(RemoteJudgeConfig cfg);
    ~RemoteJudge() override;

    JudgeVerdict score(const JudgeRequest& req, const AmbiguityState* truth) override;
    JudgeProvenance provenance() const override { return JudgeProvenance::Remote; }

    std::uint64_t malformed_count() const { return malformed_.load(); }
    std::uint64_t transport_failures() const { return transport_failures_.load(); }
    std::uint64_t cache_hits() const { return cache_hits_.load(); }
    const RemoteJudgeConfig& config() const { return cfg_; }

private:
    JudgeVerdict request_once(const std::string& prompt);
    static std::string cache_key(const JudgeRequest& req);
    void load_cache();

    RemoteJudgeConfig cfg_;
    std::string scheme_host_port_;
    std::string path_;
    std::counting_semaphore<1024> slots_;
    std::mutex cache_mu_;
    std::unordered_map<std::string, JudgeVerdict> cache_;
    std::atomic<std::uint64_t> malformed_{0};
    std::atomic<std::uint64_t> transport_failures_{0};
    std::atomic<std::uint64_t> cache_hits_{0};
};

// mode: "oracle", "remote" or "self". Self mode is the remote client pointed
// at cfg.self_url / cfg.self_model.
std::unique_ptr<ClarifyJudge> make_judge(std::string_view mode, const RemoteJudgeConfig& cfg);

}  // namespace clarirl
