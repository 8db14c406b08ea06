#include "clarirl/tag_parser.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace clarirl {

namespace {

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

bool is_ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}
bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }

bool is_identifier(std::string_view s) {
    return !s.empty() && is_ident_start(s.front()) &&
           std::all_of(s.begin() + 1, s.end(), is_ident_char);
}

enum class Tag { ThinkOpen, ThinkClose, ClarifyOpen, ClarifyClose };

struct TagHit {
    std::size_t pos;
    Tag tag;
    std::size_t len;
};

std::optional<TagHit> next_tag(std::string_view raw, std::size_t from) {
    static constexpr std::array<std::pair<std::string_view, Tag>, 4> tags{{
        {kThinkOpen, Tag::ThinkOpen},
        {kThinkClose, Tag::ThinkClose},
        {kClarifyOpen, Tag::ClarifyOpen},
        {kClarifyClose, Tag::ClarifyClose},
    }};
    for (std::size_t i = raw.find('<', from); i != std::string_view::npos; i = raw.find('<', i + 1)) {
        for (const auto& [text, tag] : tags)
            if (raw.substr(i, text.size()) == text) return TagHit{i, tag, text.size()};
    }
    return std::nullopt;
}

// Matches the start of something that is trying to be an API call:
// "call" blank+ IDENT blank* "(".
bool looks_like_call(std::string_view s) {
    if (s.substr(0, 4) != "call") return false;
    std::size_t i = 4;
    if (i >= s.size() || !is_space(s[i])) return false;
    while (i < s.size() && is_space(s[i])) ++i;
    if (i >= s.size() || !is_ident_start(s[i])) return false;
    while (i < s.size() && is_ident_char(s[i])) ++i;
    while (i < s.size() && is_space(s[i])) ++i;
    return i < s.size() && s[i] == '(';
}

class CallParser {
public:
    explicit CallParser(std::string_view s) : s_(s) {}

    std::optional<ApiCall> parse() {
        ApiCall call;
        if (s_.substr(0, 4) != "call") return std::nullopt;
        i_ = 4;
        if (!skip_space_required()) return std::nullopt;
        call.name = ident();
        if (call.name.empty()) return std::nullopt;
        skip_space();
        if (!eat('(')) return std::nullopt;
        skip_space();
        std::set<std::string> keys;
        if (!eat(')')) {
            for (;;) {
                skip_space();
                std::string key = ident();
                if (key.empty() || !keys.insert(key).second) return std::nullopt;
                skip_space();
                if (!eat('=')) return std::nullopt;
                skip_space();
                auto value = read_value();
                if (!value) return std::nullopt;
                call.args.emplace_back(std::move(key), std::move(*value));
                skip_space();
                if (eat(',')) continue;
                if (eat(')')) break;
                return std::nullopt;
            }
        }
        skip_space();
        if (i_ != s_.size()) return std::nullopt;
        return call;
    }

private:
    bool skip_space_required() {
        if (i_ >= s_.size() || !is_space(s_[i_])) return false;
        skip_space();
        return true;
    }
    void skip_space() {
        while (i_ < s_.size() && is_space(s_[i_])) ++i_;
    }
    bool eat(char c) {
        if (i_ < s_.size() && s_[i_] == c) {
            ++i_;
            return true;
        }
        return false;
    }
    std::string ident() {
        std::size_t start = i_;
        if (i_ >= s_.size() || !is_ident_start(s_[i_])) return {};
        while (i_ < s_.size() && is_ident_char(s_[i_])) ++i_;
        return std::string(s_.substr(start, i_ - start));
    }
    std::optional<std::string> read_value() {
        if (eat('"')) {
            std::string out;
            while (i_ < s_.size()) {
                char c = s_[i_++];
                if (c == '"') return out;
                if (c == '\\') {
                    if (i_ >= s_.size()) return std::nullopt;
                    out.push_back(s_[i_++]);
                } else {
                    out.push_back(c);
                }
            }
            return std::nullopt;
        }
        std::size_t start = i_;
        while (i_ < s_.size() && s_[i_] != ',' && s_[i_] != ')') {
            if (s_[i_] == '(' || s_[i_] == '"' || s_[i_] == '=') return std::nullopt;
            ++i_;
        }
        auto v = trim(s_.substr(start, i_ - start));
        if (v.empty()) return std::nullopt;
        return std::string(v);
    }

    std::string_view s_;
    std::size_t i_ = 0;
};

bool needs_quotes(std::string_view v) {
    if (v.empty() || is_space(v.front()) || is_space(v.back())) return true;
    return v.find_first_of(",()\"=\\") != std::string_view::npos;
}

void add_defect(FormatVerdict& v, Defect d) {
    if (!v.has(d)) v.defects.push_back(d);
}

}  // namespace

bool contains_tag_delimiter(std::string_view text) {
    return text.find(kThinkOpen) != std::string_view::npos ||
           text.find(kThinkClose) != std::string_view::npos ||
           text.find(kClarifyOpen) != std::string_view::npos ||
           text.find(kClarifyClose) != std::string_view::npos;
}

std::optional<ApiCall> parse_api_call(std::string_view text) {
    return CallParser(trim(text)).parse();
}

std::pair<AgentOutput, FormatVerdict> parse_agent_output(std::string_view raw) {
    AgentOutput out;
    FormatVerdict verdict;
    out.raw = std::string(raw);

    if (trim(raw).empty()) {
        add_defect(verdict, Defect::EmptySegment);
        return {std::move(out), std::move(verdict)};
    }

    enum class Open { None, Think, Clarify };
    Open open = Open::None;
    std::size_t content_start = 0;
    int think_count = 0;
    int clarify_count = 0;
    bool capture = false;  // false while inside a duplicate segment
    std::string outside;

    // Stray tags inside a segment are dropped from its content.
    auto strip_tags = [&](std::size_t from, std::size_t end) {
        std::string content;
        while (auto hit = next_tag(raw.substr(0, end), from)) {
            content.append(raw.substr(from, hit->pos - from));
            from = hit->pos + hit->len;
        }
        content.append(raw.substr(from, end - from));
        return content;
    };
    auto close_segment = [&](std::size_t end) {
        const std::string stripped = strip_tags(content_start, end);
        auto content = trim(stripped);
        if (content.empty()) add_defect(verdict, Defect::EmptySegment);
        if (capture) {
            if (open == Open::Think)
                out.think = std::string(content);
            else
                out.clarify = std::string(content);
        }
        open = Open::None;
    };
    auto open_segment = [&](Open kind, std::size_t after) {
        int& count = kind == Open::Think ? think_count : clarify_count;
        if (count > 0) add_defect(verdict, Defect::DuplicateTag);
        if (kind == Open::Think && clarify_count > 0) add_defect(verdict, Defect::OrderViolation);
        capture = count == 0;
        ++count;
        open = kind;
        content_start = after;
    };

    std::size_t cursor = 0;
    while (auto hit = next_tag(raw, cursor)) {
        if (open == Open::None) outside.append(raw.substr(cursor, hit->pos - cursor));
        std::size_t after = hit->pos + hit->len;
        switch (hit->tag) {
            case Tag::ThinkOpen:
                if (open != Open::None)
                    add_defect(verdict, Defect::OrderViolation);  // nested
                else
                    open_segment(Open::Think, after);
                break;
            case Tag::ThinkClose:
                if (open == Open::Think)
                    close_segment(hit->pos);
                else
                    add_defect(verdict, Defect::OrderViolation);
                break;
            case Tag::ClarifyOpen:
                if (open == Open::Clarify)
                    close_segment(hit->pos);  // paired <clarify>...<clarify>
                else if (open == Open::Think)
                    add_defect(verdict, Defect::OrderViolation);
                else
                    open_segment(Open::Clarify, after);
                break;
            case Tag::ClarifyClose:
                if (open == Open::Clarify)
                    close_segment(hit->pos);
                else
                    add_defect(verdict, Defect::OrderViolation);
                break;
        }
        cursor = after;
    }

    if (open != Open::None) {
        add_defect(verdict, Defect::UnclosedTag);
        // Best effort: content runs to the end.
        const std::string content = strip_tags(content_start, raw.size());
        auto t = trim(content);
        if (t.empty()) add_defect(verdict, Defect::EmptySegment);
        if (capture) {
            if (open == Open::Think)
                out.think = std::string(t);
            else
                out.clarify = std::string(t);
        }
    } else {
        outside.append(raw.substr(cursor));
    }

    auto rest = trim(outside);
    if (!rest.empty()) {
        if (looks_like_call(rest)) {
            if (auto call = CallParser(rest).parse()) {
                out.api_call = std::move(*call);
            } else {
                add_defect(verdict, Defect::MalformedApiCall);
                out.response = std::string(rest);
            }
        } else {
            out.response = std::string(rest);
        }
    }

    verdict.has_think = out.think.has_value();
    verdict.has_clarify = out.clarify.has_value();
    verdict.well_formed = verdict.defects.empty();
    return {std::move(out), std::move(verdict)};
}

std::string render_api_call(const ApiCall& call) {
    if (!is_identifier(call.name)) throw std::invalid_argument("bad api name: " + call.name);
    std::string s = "call " + call.name + "(";
    std::set<std::string> keys;
    for (std::size_t i = 0; i < call.args.size(); ++i) {
        const auto& [k, v] = call.args[i];
        if (!is_identifier(k) || !keys.insert(k).second)
            throw std::invalid_argument("bad or duplicate api arg: " + k);
        if (contains_tag_delimiter(v)) throw std::invalid_argument("tag delimiter inside api value");
        if (i) s += ", ";
        s += k + "=";
        if (needs_quotes(v)) {
            s += '"';
            for (char c : v) {
                if (c == '"' || c == '\\') s += '\\';
                s += c;
            }
            s += '"';
        } else {
            s += v;
        }
    }
    s += ")";
    return s;
}

std::string render_agent_output(const AgentOutput& out) {
    auto check_text = [](const std::optional<std::string>& t, const char* what) {
        if (!t) return;
        if (t->empty() || trim(*t).size() != t->size())
            throw std::invalid_argument(std::string(what) + " text must be non-empty and trimmed");
        if (contains_tag_delimiter(*t))
            throw std::invalid_argument(std::string(what) + " text contains a tag delimiter");
    };
    check_text(out.think, "think");
    check_text(out.clarify, "clarify");
    check_text(out.response, "response");
    if (out.response && out.api_call)
        throw std::invalid_argument("response and api call are mutually exclusive");
    if (out.response && looks_like_call(*out.response))
        throw std::invalid_argument("response text would parse as an api call");
    if (!out.think && !out.clarify && !out.response && !out.api_call)
        throw std::invalid_argument("empty agent output");

    std::string s;
    auto append = [&](std::string part) {
        if (!s.empty()) s += '\n';
        s += part;
    };
    if (out.think) append(std::string(kThinkOpen) + *out.think + std::string(kThinkClose));
    if (out.clarify) append(std::string(kClarifyOpen) + *out.clarify + std::string(kClarifyClose));
    if (out.response) append(*out.response);
    if (out.api_call) append(render_api_call(*out.api_call));
    return s;
}

std::string AgentOutput::visible_text() const {
    if (clarify) return *clarify;
    if (api_call) return render_api_call(*api_call);
    if (response) return *response;
    return {};
}

}  // namespace clarirl
