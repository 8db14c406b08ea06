#include "clarirl/judge.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "clarirl/json_io.hpp"
#include "clarirl/rng.hpp"
#include "clarirl/user_sim.hpp"

#include "httplib.h"

namespace clarirl {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

}  // namespace

int oracle_score(std::string_view question, const AmbiguityState& truth) {
    auto slot = detect_slot(question);
    if (!slot) return 0;
    const bool relevant = std::find(truth.ambiguous_slots.begin(), truth.ambiguous_slots.end(), *slot) !=
                          truth.ambiguous_slots.end();
    return relevant && !truth.revealed.contains(*slot) && !truth.asked.contains(*slot) ? 1 : 0;
}

JudgeVerdict OracleJudge::score(const JudgeRequest& req, const AmbiguityState* truth) {
    if (!truth) throw std::invalid_argument("oracle judge needs the episode ambiguity state");
    return JudgeVerdict{oracle_score(req.clarification_question, *truth), std::nullopt, std::nullopt};
}

const std::string& judge_prompt_template() {
    static const std::string tmpl =
        R"(You are a judge evaluating the quality of user clarification questions. Given a conversation agent clarification question, analyze if there are any clarification questions and evaluate their quality.

Rules:
1. If clarification questions exist, evaluate them based on:
   - Relevance to the context
   - Precision and clarity
   - Specificity
   - Logical connection to previous context
   - Constructive nature of the question
2. If no clarification questions exist, output: 0
3. Output format:
   - For high-quality clarification questions: 1
   - For low-quality or no clarification questions: 0

IMPORTANT: You must only output the number 0 or 1. No other text, explanations, or characters are allowed. Do not provide any reasoning. Return only an integer score in the following exact format:

Score: [YOUR BINARY 0/1 SCORE HERE]

Conversation
<conversation>

Agent Clarification Question to Judge
<clarification_question>

Your Decision (0/1)
Score: [0 or 1]
)";
    return tmpl;
}

std::string assemble_prompt(const JudgeRequest& req) {
    static constexpr std::string_view kConv = "<conversation>";
    static constexpr std::string_view kQuestion = "<clarification_question>";
    const std::string& t = judge_prompt_template();
    std::string out;
    out.reserve(t.size() + req.conversation.size() + req.clarification_question.size());
    std::size_t i = 0;
    while (i < t.size()) {
        if (t.compare(i, kConv.size(), kConv) == 0) {
            out += req.conversation;
            i += kConv.size();
        } else if (t.compare(i, kQuestion.size(), kQuestion) == 0) {
            out += req.clarification_question;
            i += kQuestion.size();
        } else {
            out += t[i++];
        }
    }
    return out;
}

std::optional<int> parse_score_reply(std::string_view reply) {
    std::size_t i = 0;
    const std::size_t n = reply.size();
    while (i < n && is_space(reply[i])) ++i;
    static constexpr std::string_view kScore = "Score:";
    if (reply.substr(i, kScore.size()) != kScore) return std::nullopt;
    i += kScore.size();
    while (i < n && is_space(reply[i])) ++i;
    if (i >= n || (reply[i] != '0' && reply[i] != '1')) return std::nullopt;
    const int score = reply[i] - '0';
    ++i;
    while (i < n && is_space(reply[i])) ++i;
    if (i != n) return std::nullopt;
    return score;
}

RemoteJudgeConfig RemoteJudgeConfig::from_env() { return from_env(RemoteJudgeConfig{}); }

RemoteJudgeConfig RemoteJudgeConfig::from_env(RemoteJudgeConfig base) {
    auto str = [](const char* name, std::string& field) {
        if (const char* v = std::getenv(name)) field = v;
    };
    auto num = [](const char* name, int& field) {
        if (const char* v = std::getenv(name); v && *v) {
            try {
                field = std::stoi(v);
            } catch (const std::exception&) {
                throw JudgeError(JudgeErrorKind::Config, std::string(name) + " is not an integer: " + v);
            }
        }
    };
    str("CLARIRL_JUDGE_URL", base.url);
    str("CLARIRL_JUDGE_MODEL", base.model);
    num("CLARIRL_JUDGE_TIMEOUT_MS", base.timeout_ms);
    num("CLARIRL_JUDGE_CONCURRENCY", base.concurrency);
    num("CLARIRL_JUDGE_RETRIES", base.retries);
    num("CLARIRL_JUDGE_BACKOFF_MS", base.backoff_ms);
    str("CLARIRL_JUDGE_API_KEY", base.api_key);
    str("CLARIRL_JUDGE_SELF_URL", base.self_url);
    str("CLARIRL_JUDGE_SELF_MODEL", base.self_model);
    if (const char* v = std::getenv("CLARIRL_JUDGE_CACHE")) base.cache_path = v;
    return base;
}

RemoteJudgeConfig RemoteJudgeConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw JudgeError(JudgeErrorKind::Config, "cannot open judge config " + path.string());
    json j = json::parse(in);
    RemoteJudgeConfig c;
    c.url = j.value("url", c.url);
    c.model = j.value("model", c.model);
    c.timeout_ms = j.value("timeout_ms", c.timeout_ms);
    c.concurrency = j.value("concurrency", c.concurrency);
    c.retries = j.value("retries", c.retries);
    c.backoff_ms = j.value("backoff_ms", c.backoff_ms);
    c.api_key = j.value("api_key", c.api_key);
    c.cache_path = j.value("cache_path", std::string{});
    c.self_url = j.value("self_url", c.self_url);
    c.self_model = j.value("self_model", c.self_model);
    return c;
}

RemoteJudge::RemoteJudge(RemoteJudgeConfig cfg)
    : cfg_(std::move(cfg)), slots_(std::clamp(cfg_.concurrency, 1, 1024)) {
    if (cfg_.url.empty()) throw JudgeError(JudgeErrorKind::Config, "remote judge url is empty");
    if (cfg_.retries < 1) throw JudgeError(JudgeErrorKind::Config, "remote judge retries must be >= 1");
    auto scheme_end = cfg_.url.find("://");
    if (scheme_end == std::string::npos)
        throw JudgeError(JudgeErrorKind::Config, "remote judge url lacks a scheme: " + cfg_.url);
    auto path_start = cfg_.url.find('/', scheme_end + 3);
    scheme_host_port_ = cfg_.url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : cfg_.url.substr(path_start);
    load_cache();
}

RemoteJudge::~RemoteJudge() = default;

std::string RemoteJudge::cache_key(const JudgeRequest& req) {
    return std::to_string(hash_string(req.conversation)) + "\x1f" + req.clarification_question;
}

void RemoteJudge::load_cache() {
    if (cfg_.cache_path.empty() || !std::filesystem::exists(cfg_.cache_path)) return;
    for (const auto& row : read_jsonl(cfg_.cache_path)) {
        JudgeVerdict v;
        v.score = row.at("score").get<int>();
        if (row.contains("raw_reply")) v.raw_reply = row.at("raw_reply").get<std::string>();
        cache_[row.at("conversation_hash").get<std::string>() + "\x1f" +
               row.at("question").get<std::string>()] = v;
    }
}

JudgeVerdict RemoteJudge::request_once(const std::string& prompt) {
    httplib::Client client(scheme_host_port_);
    const auto timeout = std::chrono::milliseconds(cfg_.timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers headers;
    if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

    json body{{"model", cfg_.model},
              {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
              {"temperature", 0}};
    const auto t0 = std::chrono::steady_clock::now();
    auto res = client.Post(path_, headers, body.dump(), "application/json");
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (!res)
        throw JudgeError(JudgeErrorKind::Transport,
                         "judge request to " + cfg_.url + " failed: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw JudgeError(JudgeErrorKind::Transport,
                         "judge endpoint returned HTTP " + std::to_string(res->status));

    std::string content;
    try {
        content = json::parse(res->body).at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const std::exception& e) {
        throw JudgeError(JudgeErrorKind::MalformedVerdict, std::string("unreadable judge reply: ") + e.what());
    }
    auto score = parse_score_reply(content);
    if (!score) {
        ++malformed_;
        throw JudgeError(JudgeErrorKind::MalformedVerdict, "judge reply violates grammar: " + content);
    }
    return JudgeVerdict{*score, content, ms};
}

JudgeVerdict RemoteJudge::score(const JudgeRequest& req, const AmbiguityState*) {
    const std::string key = cache_key(req);
    {
        std::lock_guard lock(cache_mu_);
        if (auto it = cache_.find(key); it != cache_.end()) {
            ++cache_hits_;
            return it->second;
        }
    }

    const std::string prompt = assemble_prompt(req);
    std::optional<JudgeError> last;
    for (int attempt = 0; attempt < cfg_.retries; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(cfg_.backoff_ms) * (1 << (attempt - 1)));
        try {
            slots_.acquire();
            JudgeVerdict v;
            try {
                v = request_once(prompt);
            } catch (...) {
                slots_.release();
                throw;
            }
            slots_.release();

            std::lock_guard lock(cache_mu_);
            cache_[key] = v;
            if (!cfg_.cache_path.empty()) {
                json row{{"conversation_hash", std::to_string(hash_string(req.conversation))},
                         {"question", req.clarification_question},
                         {"score", v.score},
                         {"raw_reply", *v.raw_reply}};
                if (cfg_.cache_path.has_parent_path())
                    std::filesystem::create_directories(cfg_.cache_path.parent_path());
                std::ofstream(cfg_.cache_path, std::ios::app) << row.dump() << "\n";
            }
            return v;
        } catch (const JudgeError& e) {
            if (e.kind() == JudgeErrorKind::Transport) ++transport_failures_;
            last = e;
        }
    }
    throw *last;
}

std::unique_ptr<ClarifyJudge> make_judge(std::string_view mode, const RemoteJudgeConfig& cfg) {
    if (mode == "oracle") return std::make_unique<OracleJudge>();
    if (mode == "remote") return std::make_unique<RemoteJudge>(cfg);
    if (mode == "self") {
        if (cfg.self_url.empty())
            throw JudgeError(JudgeErrorKind::Config, "self judge mode needs self_url");
        RemoteJudgeConfig self = cfg;
        self.url = cfg.self_url;
        if (!cfg.self_model.empty()) self.model = cfg.self_model;
        return std::make_unique<RemoteJudge>(self);
    }
    throw JudgeError(JudgeErrorKind::Config, "unknown judge mode " + std::string(mode));
}

}  // namespace clarirl
