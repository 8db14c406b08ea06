#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "oracles.hpp"
#include "clarirl/json_io.hpp"
#include "clarirl/judge.hpp"

using namespace clarirl;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Chat-completion stand-in whose replies are scripted per request.
class FakeBackend {
public:
    using Script = std::function<std::pair<int, std::string>(int call, const json& body)>;

    explicit FakeBackend(Script script) : script_(std::move(script)) {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            const int n = calls++;
            last_body = json::parse(req.body);
            auto [status, content] = script_(n, last_body);
            res.status = status;
            json reply{{"choices", json::array({json{{"message", {{"role", "assistant"}, {"content", content}}}}})}};
            res.set_content(reply.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeBackend() {
        server_.stop();
        thread_.join();
    }

    RemoteJudgeConfig config() const {
        RemoteJudgeConfig c;
        c.url = "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
        c.model = "judge-model";
        c.timeout_ms = 2000;
        c.backoff_ms = 1;
        return c;
    }

    std::atomic<int> calls{0};
    json last_body;

private:
    Script script_;
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

const JudgeRequest kRequest{"User: I need a hotel.", "Which area would you like?"};

}  // namespace

TEST_CASE("prompt template matches the golden file") {
    CHECK(judge_prompt_template() == slurp(std::filesystem::path(CLARIRL_GOLDEN_DIR) / "judge_prompt_template.txt"));
    const json c = json::parse(slurp(std::filesystem::path(CLARIRL_GOLDEN_DIR) / "judge_prompt_case.json"));
    const JudgeRequest req{c.at("conversation"), c.at("clarification_question")};
    CHECK(assemble_prompt(req) == slurp(std::filesystem::path(CLARIRL_GOLDEN_DIR) / "judge_prompt_assembled.txt"));
}

TEST_CASE("reply grammar") {
    CHECK(parse_score_reply("Score: 1") == 1);
    CHECK(parse_score_reply("Score: 0") == 0);
    CHECK(parse_score_reply("  Score:1\n") == 1);
    CHECK(parse_score_reply("Score:\t0  ") == 0);
    CHECK_FALSE(parse_score_reply("I think 1"));
    CHECK_FALSE(parse_score_reply("Score: 2"));
    CHECK_FALSE(parse_score_reply("Score: 1."));
    CHECK_FALSE(parse_score_reply("score: 1"));
    CHECK_FALSE(parse_score_reply("Score: 10"));
    CHECK_FALSE(parse_score_reply("Score: 1 Score: 0"));
    CHECK_FALSE(parse_score_reply("1"));
    CHECK_FALSE(parse_score_reply(""));
}

TEST_CASE("oracle judge") {
    OracleJudge j;
    AmbiguityState t;
    t.pending_domain = Domain::Hotel;
    t.ambiguous_slots = {"area", "parking"};
    CHECK(j.score({"", "Which area would you like?"}, &t).score == 1);
    CHECK(j.score({"", "Anything else?"}, &t).score == 0);
    CHECK(j.score({"", "Do you need wifi?"}, &t).score == 0);
    t.asked.insert("parking");
    CHECK(j.score({"", "Do you need parking?"}, &t).score == 0);
    CHECK_THROWS_AS(j.score(kRequest, nullptr), std::invalid_argument);
}

TEST_CASE("remote judge happy path and request shape") {
    FakeBackend backend([](int, const json&) { return std::pair{200, std::string("Score: 1")}; });
    RemoteJudge judge(backend.config());
    const JudgeVerdict v = judge.score(kRequest, nullptr);
    CHECK(v.score == 1);
    CHECK(v.raw_reply == "Score: 1");
    CHECK(v.latency_ms.has_value());
    CHECK(backend.last_body.at("model") == "judge-model");
    CHECK(backend.last_body.at("temperature") == 0);
    CHECK(backend.last_body.at("messages").at(0).at("content") == assemble_prompt(kRequest));
}

TEST_CASE("remote judge retries transient failures") {
    FakeBackend backend([](int n, const json&) {
        return n < 2 ? std::pair{503, std::string("busy")} : std::pair{200, std::string("Score: 0")};
    });
    RemoteJudge judge(backend.config());
    CHECK(judge.score(kRequest, nullptr).score == 0);
    CHECK(backend.calls == 3);
    CHECK(judge.transport_failures() == 2);
}

TEST_CASE("remote judge surfaces malformed verdicts") {
    FakeBackend backend([](int, const json&) { return std::pair{200, std::string("I think 1")}; });
    RemoteJudge judge(backend.config());
    try {
        judge.score(kRequest, nullptr);
        FAIL("expected a JudgeError");
    } catch (const JudgeError& e) {
        CHECK(e.kind() == JudgeErrorKind::MalformedVerdict);
        CHECK(e.retryable());
    }
    CHECK(judge.malformed_count() == 3);
}

TEST_CASE("unreachable endpoint is a transport error") {
    RemoteJudgeConfig c;
    {
        httplib::Server probe;
        const int port = probe.bind_to_any_port("127.0.0.1");
        c.url = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
    }
    c.timeout_ms = 500;
    c.backoff_ms = 1;
    RemoteJudge judge(c);
    try {
        judge.score(kRequest, nullptr);
        FAIL("expected a JudgeError");
    } catch (const JudgeError& e) {
        CHECK(e.kind() == JudgeErrorKind::Transport);
    }
    CHECK(judge.transport_failures() == 3);
}

TEST_CASE("verdict cache in memory and on disk") {
    const auto cache = std::filesystem::temp_directory_path() / "clarirl_judge_cache_test.jsonl";
    std::filesystem::remove(cache);
    FakeBackend backend([](int, const json&) { return std::pair{200, std::string("Score: 1")}; });
    RemoteJudgeConfig c = backend.config();
    c.cache_path = cache;
    {
        RemoteJudge judge(c);
        judge.score(kRequest, nullptr);
        judge.score(kRequest, nullptr);
        CHECK(backend.calls == 1);
        CHECK(judge.cache_hits() == 1);
    }
    RemoteJudge reloaded(c);
    CHECK(reloaded.score(kRequest, nullptr).score == 1);
    CHECK(backend.calls == 1);
    CHECK(read_jsonl(cache).size() == 1);
    std::filesystem::remove(cache);
}

TEST_CASE("judge configuration") {
    CHECK_THROWS_AS(RemoteJudge(RemoteJudgeConfig{}), JudgeError);
    RemoteJudgeConfig c;
    CHECK_THROWS_AS(make_judge("self", c), JudgeError);
    CHECK_THROWS_AS(make_judge("crowd", c), JudgeError);
    CHECK(make_judge("oracle", c)->provenance() == JudgeProvenance::Oracle);

    FakeBackend backend([](int, const json& body) {
        return std::pair{200, std::string(body.at("model") == "self-model" ? "Score: 1" : "Score: 0")};
    });
    RemoteJudgeConfig self = backend.config();
    self.self_url = self.url;
    self.self_model = "self-model";
    self.url = "http://unused.invalid/";
    CHECK(make_judge("self", self)->score(kRequest, nullptr).score == 1);
}
