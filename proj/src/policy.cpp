#include "clarirl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "clarirl/json_io.hpp"
#include "clarirl/tag_parser.hpp"
#include "clarirl/world.hpp"

namespace clarirl {

namespace {

struct SlotWording {
    std::string slot;
    std::string label;  // used in reasoning text
    std::string term;   // used in confirmation questions
    std::string terse;
    std::string brief;       // {noun}
    std::string deliberate;  // {desc}
};

const std::vector<SlotWording>& slot_wordings() {
    static const std::vector<SlotWording> w{
        {"area", "area", "area", "Which area?", "Which area of town would you like the {noun} to be in?",
         "To find the right {desc}, which area of town would suit you best?"},
        {"pricerange", "price range", "price range", "What price range?",
         "What price range are you looking for with the {noun}?",
         "To narrow down options for the {desc}, what price range would you prefer?"},
        {"food", "food type", "food", "What food?", "What type of food would you like the {noun} to serve?",
         "So I can find a good {desc}, what type of food are you in the mood for?"},
        {"internet", "internet need", "internet", "Need internet?",
         "Do you need the {noun} to have free internet access?",
         "To pick the right {desc}, is free internet access something you need?"},
        {"parking", "parking need", "parking", "Need parking?",
         "Do you need the {noun} to offer free parking for a car?",
         "Will you be driving, so that free parking at the {desc} matters to you?"},
        {"type", "kind of attraction", "type of place", "What type of place?",
         "What type of place would you like to visit while you are here?",
         "There are many options for the {desc}, so what kind of place would you most like to visit?"},
        {"day", "travel day", "day", "Which day?", "Which day of the week do you need the {noun} for?",
         "Schedules change through the week, so which day do you need the {desc} for?"},
        {"departure", "departure station", "departure", "Departure station?",
         "Which station will the {noun} be departing from?",
         "To find the right {desc}, could you tell me your departure station first?"},
        {"destination", "destination", "destination", "Destination?",
         "What is your destination for this {noun} journey?",
         "So I can search the timetable, what is the destination of your {desc} trip?"},
    };
    return w;
}

const SlotWording* wording_for(std::string_view slot) {
    for (const auto& w : slot_wordings())
        if (w.slot == slot) return &w;
    return nullptr;
}

const std::vector<std::string> kLeadIns{"",
                                        "Thanks for the details. ",
                                        "Happy to help with that. ",
                                        "Sure, I can arrange that. ",
                                        "Great, let me help. ",
                                        "Of course. "};

std::string fill(std::string s, std::string_view key, const std::string& value) {
    const std::string marker = "{" + std::string(key) + "}";
    for (auto pos = s.find(marker); pos != std::string::npos; pos = s.find(marker, pos + value.size()))
        s.replace(pos, marker.size(), value);
    return s;
}

std::vector<ActionTemplate> build_catalog() {
    std::vector<ActionTemplate> out;
    const std::string brief_think = "The user has not told me the {label} for the {noun} yet. I should ask.";
    const std::string deliberate_think =
        "The user wants {desc}, but the {label} is still unknown. Several options could match, so "
        "guessing risks the wrong choice. I should ask about the {label} before I search.";
    for (const auto& w : slot_wordings()) {
        out.push_back({"clarify_" + w.slot + "_terse", ActionKind::Clarify, TemplateFamily::ClarifySlot,
                       w.slot, 0, "", w.terse});
        out.push_back({"clarify_" + w.slot + "_brief", ActionKind::Clarify, TemplateFamily::ClarifySlot,
                       w.slot, 1, brief_think, w.brief});
        out.push_back({"clarify_" + w.slot + "_deliberate", ActionKind::Clarify,
                       TemplateFamily::ClarifySlot, w.slot, 2, deliberate_think, w.deliberate});
    }
    out.push_back({"clarify_known", ActionKind::Clarify, TemplateFamily::ClarifyKnown, std::nullopt, 1,
                   "I want to double check what the user already told me.",
                   "Just to confirm, the {term} should be {value}?"});
    out.push_back({"clarify_known_terse", ActionKind::Clarify, TemplateFamily::ClarifyKnown, std::nullopt,
                   0, "", "So the {term} is {value}, right?"});
    out.push_back({"clarify_vague", ActionKind::Clarify, TemplateFamily::ClarifyVague, std::nullopt, 1,
                   "I am not sure what else the user needs from me.",
                   "Is there anything else I should know before I continue?"});
    out.push_back({"clarify_vague_terse", ActionKind::Clarify, TemplateFamily::ClarifyVague, std::nullopt,
                   0, "", "Anything else?"});
    out.push_back({"query", ActionKind::ApiCall, TemplateFamily::Query, std::nullopt, 0, "", ""});
    out.push_back({"query_think", ActionKind::ApiCall, TemplateFamily::Query, std::nullopt, 1,
                   "I know every constraint for the {noun}, so I can search the database now.", ""});
    out.push_back({"book", ActionKind::ApiCall, TemplateFamily::Book, std::nullopt, 0, "", ""});
    out.push_back({"book_think", ActionKind::ApiCall, TemplateFamily::Book, std::nullopt, 1,
                   "I have a matching {noun} and the booking details, so I will make the booking.", ""});
    out.push_back({"inform", ActionKind::Respond, TemplateFamily::Inform, std::nullopt, 0, "", ""});
    out.push_back({"inform_think", ActionKind::Respond, TemplateFamily::Inform, std::nullopt, 1,
                   "The user asked for some details, so I will share them from the search results.", ""});
    out.push_back({"done", ActionKind::Respond, TemplateFamily::Done, std::nullopt, 0, "", "[DONE]"});
    out.push_back({"done_think", ActionKind::Respond, TemplateFamily::Done, std::nullopt, 1,
                   "Everything the user asked for has been handled, so I can finish.", "[DONE]"});
    return out;
}

const SlotMap& map_or_empty(const std::map<Domain, SlotMap>& m, Domain d) {
    static const SlotMap empty;
    auto it = m.find(d);
    return it == m.end() ? empty : it->second;
}

std::string describe(const DialogueView& view, Domain d) {
    const SlotMap& k = map_or_empty(view.known, d);
    const SlotMap& b = map_or_empty(view.booking_info, d);
    auto get = [](const SlotMap& m, const char* s) -> const std::string* {
        auto it = m.find(s);
        return it == m.end() ? nullptr : &it->second;
    };
    std::string out;
    switch (d) {
        case Domain::Restaurant:
            out = (get(k, "food") ? *get(k, "food") + " " : "") + "restaurant";
            if (auto v = get(k, "area")) out += " in the " + *v;
            if (get(b, "people") && get(b, "day") && get(b, "time"))
                out += " for " + *get(b, "people") + " people on " + *get(b, "day") + " at " + *get(b, "time");
            break;
        case Domain::Hotel:
            out = "hotel";
            if (auto v = get(k, "area")) out += " in the " + *v;
            if (get(b, "people") && get(b, "day") && get(b, "stay"))
                out += " for " + *get(b, "people") + " people from " + *get(b, "day") + " for " +
                       *get(b, "stay") + " nights";
            break;
        case Domain::Attraction:
            out = get(k, "type") ? *get(k, "type") : "attraction";
            if (auto v = get(k, "area")) out += " in the " + *v;
            break;
        case Domain::Train:
            out = "train";
            if (auto v = get(k, "departure")) out += " from " + *v;
            if (auto v = get(k, "destination")) out += " to " + *v;
            if (auto v = get(k, "leaveAt")) out += " leaving after " + *v;
            if (auto v = get(b, "people")) out += " for " + *v + " people";
            break;
        case Domain::Taxi:
            out = "taxi";
            break;
    }
    return out;
}

std::string fill_common(std::string s, const DialogueView& view, Domain d) {
    s = fill(std::move(s), "noun", std::string(to_string(d)));
    if (s.find("{desc}") != std::string::npos) s = fill(std::move(s), "desc", describe(view, d));
    return s;
}

ApiCall query_call(const DialogueView& view, Domain d) {
    const ApiSpec* api = schema_for(d).query_api();
    ApiCall call{api->name, {}};
    for (const auto& [k, v] : map_or_empty(view.known, d))
        if (api->takes(k)) call.args.emplace_back(k, v);
    return call;
}

ApiCall book_call(const DialogueView& view, Domain d) {
    const ApiSpec* api = schema_for(d).book_api();
    ApiCall call{api->name, {}};
    const SlotMap& info = map_or_empty(view.booking_info, d);
    auto res = view.last_results.find(d);
    const Entity* first = res != view.last_results.end() && !res->second.empty() ? &res->second.front() : nullptr;
    if (d != Domain::Taxi) {
        const char* key = d == Domain::Train ? "trainID" : "name";
        if (first && first->attr(key)) {
            call.args.emplace_back(key, *first->attr(key));
        } else {
            for (const auto& [k, v] : map_or_empty(view.known, d))
                if (api->takes(k) && !api->is_booking_param(k)) call.args.emplace_back(k, v);
        }
    }
    for (const auto& p : api->booking_params)
        if (auto it = info.find(p); it != info.end()) call.args.emplace_back(p, it->second);
    return call;
}

std::string inform_text(const DialogueView& view, Domain d) {
    auto res = view.last_results.find(d);
    if (res == view.last_results.end() || res->second.empty()) return "I could not find a match yet.";
    const Entity& e = res->second.front();
    std::string out;
    auto req = view.requests.find(d);
    if (req != view.requests.end()) {
        for (const auto& slot : req->second) {
            if (const std::string* v = e.attr(slot)) {
                if (!out.empty()) out += " ";
                out += "The " + slot + " is " + *v + ".";
            }
        }
    }
    if (out.empty()) {
        const std::string* name = e.attr("name");
        out = "I found " + (name ? *name : e.id) + ".";
    }
    return out;
}

// First stated constraint of the pending domain that the lexicon can detect.
std::optional<std::pair<const SlotWording*, std::string>> known_slot(const DialogueView& view, Domain d) {
    const SlotMap& k = map_or_empty(view.known, d);
    for (const auto& slot : schema_for(d).constraint_slots) {
        auto it = k.find(slot);
        const SlotWording* w = wording_for(slot);
        if (it != k.end() && w) return std::make_pair(w, it->second);
    }
    const SlotMap& b = map_or_empty(view.booking_info, d);
    if (auto it = b.find("day"); it != b.end()) return std::make_pair(wording_for("day"), it->second);
    return std::nullopt;
}

}  // namespace

const std::vector<ActionTemplate>& action_templates() {
    static const std::vector<ActionTemplate> catalog = build_catalog();
    return catalog;
}

std::optional<std::size_t> template_index(std::string_view id) {
    const auto& c = action_templates();
    for (std::size_t i = 0; i < c.size(); ++i)
        if (c[i].id == id) return i;
    return std::nullopt;
}

const std::vector<std::string>& policy_feature_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n;
        for (const auto& w : slot_wordings()) n.push_back("missing:" + w.slot);
        for (Stage s : {Stage::Clarify, Stage::Query, Stage::Book, Stage::Inform, Stage::Idle})
            n.push_back("stage:" + std::string(to_string(s)));
        return n;
    }();
    return names;
}

AgentOutput render_template(const ActionTemplate& t, const DialogueView& view, int variant) {
    const Domain d = view.pending_domain.value_or(Domain::Restaurant);
    AgentOutput out;
    if (t.depth > 0) {
        std::string think = fill_common(t.think_skeleton, view, d);
        if (t.slot) think = fill(std::move(think), "label", wording_for(*t.slot)->label);
        out.think = std::move(think);
    }
    const std::string lead = t.depth > 0 ? kLeadIns[static_cast<std::size_t>(variant) % kLeadIns.size()] : "";
    switch (t.family) {
        case TemplateFamily::ClarifySlot:
            out.clarify = lead + fill_common(t.surface_skeleton, view, d);
            break;
        case TemplateFamily::ClarifyKnown:
            if (auto k = known_slot(view, d)) {
                std::string q = fill(t.surface_skeleton, "term", k->first->term);
                out.clarify = lead + fill(std::move(q), "value", k->second);
            } else {
                out.clarify = lead + "Could you repeat what you need?";
            }
            break;
        case TemplateFamily::ClarifyVague:
            out.clarify = lead + t.surface_skeleton;
            break;
        case TemplateFamily::Query:
            if (d == Domain::Taxi)
                out.response = "Let me check the taxi options.";
            else
                out.api_call = query_call(view, d);
            break;
        case TemplateFamily::Book:
            if (schema_for(d).book_api())
                out.api_call = book_call(view, d);
            else
                out.response = "There is nothing to book for the " + std::string(to_string(d)) + ".";
            break;
        case TemplateFamily::Inform:
            out.response = inform_text(view, d);
            break;
        case TemplateFamily::Done:
            out.response = t.surface_skeleton;
            break;
    }
    out.raw = render_agent_output(out);
    return out;
}

std::optional<std::size_t> PolicyParams::feature_row(std::string_view name) const {
    for (std::size_t i = 0; i < features.size(); ++i)
        if (features[i] == name) return i;
    return std::nullopt;
}

double PolicyParams::weight(std::string_view feature, std::string_view template_id) const {
    auto f = feature_row(feature);
    auto it = std::find(templates.begin(), templates.end(), template_id);
    if (!f || it == templates.end()) return 0.0;
    return at(*f, static_cast<std::size_t>(it - templates.begin()));
}

void PolicyParams::set_weight(std::string_view feature, std::string_view template_id, double value) {
    auto f = feature_row(feature);
    auto it = std::find(templates.begin(), templates.end(), template_id);
    if (!f) throw std::invalid_argument("unknown feature " + std::string(feature));
    if (it == templates.end()) throw std::invalid_argument("unknown template " + std::string(template_id));
    at(*f, static_cast<std::size_t>(it - templates.begin())) = value;
}

PolicyParams zero_params(double temperature) {
    PolicyParams p;
    p.features = policy_feature_names();
    for (const auto& t : action_templates()) p.templates.push_back(t.id);
    p.w.assign(p.features.size() * p.templates.size(), 0.0);
    p.temperature = temperature;
    return p;
}

PolicyParams base_params(double prior) {
    PolicyParams p = zero_params();
    p.set_weight("stage:query", "query_think", prior);
    p.set_weight("stage:book", "book_think", prior);
    p.set_weight("stage:inform", "inform_think", prior);
    p.set_weight("stage:idle", "done_think", prior);
    return p;
}

void validate_params(const PolicyParams& p) {
    if (!(p.temperature > 0.0) || !std::isfinite(p.temperature))
        throw std::invalid_argument("temperature must be positive");
    if (p.w.size() != p.features.size() * p.templates.size())
        throw std::invalid_argument("weight matrix shape mismatch");
    for (double v : p.w)
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite policy weight");
}

std::vector<double> template_scores(const PolicyParams& p, const FeatureVector& phi) {
    std::vector<double> s(p.n_templates(), 0.0);
    for (const auto& [name, value] : phi) {
        auto f = p.feature_row(name);
        if (!f) continue;
        for (std::size_t t = 0; t < s.size(); ++t) s[t] += value * p.at(*f, t);
    }
    for (double& v : s) v /= p.temperature;
    return s;
}

namespace {

// Returns scores shifted by their max and the log of the partition sum.
std::pair<std::vector<double>, double> shifted_scores(const PolicyParams& p, const FeatureVector& phi) {
    std::vector<double> s = template_scores(p, phi);
    const double m = *std::max_element(s.begin(), s.end());
    double z = 0.0;
    for (double& v : s) {
        v -= m;
        z += std::exp(v);
    }
    return {std::move(s), std::log(z)};
}

}  // namespace

std::vector<double> action_distribution(const PolicyParams& p, const FeatureVector& phi) {
    auto [s, log_z] = shifted_scores(p, phi);
    for (double& v : s) v = std::exp(v - log_z);
    return s;
}

double log_prob(const PolicyParams& p, const FeatureVector& phi, std::size_t chosen) {
    auto [s, log_z] = shifted_scores(p, phi);
    return s.at(chosen) - log_z;
}

std::pair<std::size_t, double> sample_template(const PolicyParams& p, const FeatureVector& phi, Rng& rng) {
    auto [s, log_z] = shifted_scores(p, phi);
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t pick = s.size() - 1;
    for (std::size_t t = 0; t < s.size(); ++t) {
        acc += std::exp(s[t] - log_z);
        if (u < acc) {
            pick = t;
            break;
        }
    }
    return {pick, s[pick] - log_z};
}

SampledAction sample_output(const PolicyParams& p, const DialogueView& view, Rng& rng) {
    const FeatureVector phi = feature_vector(extract_features(view));
    auto [idx, lp] = sample_template(p, phi, rng);
    return {idx, lp, render_template(action_templates()[idx], view)};
}

SampledAction sample_output(const PolicyParams& p, const DialogueView& view, std::uint64_t seed) {
    Rng rng(seed);
    return sample_output(p, view, rng);
}

std::vector<double> grad_log_prob(const PolicyParams& p, const FeatureVector& phi, std::size_t chosen) {
    if (chosen >= p.n_templates()) throw std::out_of_range("template index outside the support");
    const std::vector<double> probs = action_distribution(p, phi);
    std::vector<double> g(p.w.size(), 0.0);
    for (const auto& [name, value] : phi) {
        auto f = p.feature_row(name);
        if (!f) continue;
        for (std::size_t t = 0; t < probs.size(); ++t)
            g[*f * p.n_templates() + t] += value * ((t == chosen ? 1.0 : 0.0) - probs[t]) / p.temperature;
    }
    return g;
}

void save_checkpoint(const std::filesystem::path& path, const PolicyParams& p, const CheckpointMeta& meta) {
    json weights = json::object();
    for (std::size_t f = 0; f < p.n_features(); ++f) {
        json row = json::object();
        for (std::size_t t = 0; t < p.n_templates(); ++t) row[p.templates[t]] = p.at(f, t);
        weights[p.features[f]] = std::move(row);
    }
    json j{{"kind", "clarirl-policy"},
           {"step", meta.step},
           {"seed", meta.seed},
           {"config_hash", meta.config_hash},
           {"temperature", p.temperature},
           {"weights", std::move(weights)}};
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
    out << j.dump(2) << "\n";
}

PolicyParams load_checkpoint(const std::filesystem::path& path, CheckpointMeta* meta) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
    json j = json::parse(in);
    if (j.value("kind", "") != "clarirl-policy")
        throw std::runtime_error(path.string() + " is not a policy checkpoint");
    PolicyParams p = zero_params(j.at("temperature").get<double>());
    for (const auto& [feature, row] : j.at("weights").items())
        for (const auto& [tmpl, value] : row.items()) p.set_weight(feature, tmpl, value.get<double>());
    validate_params(p);
    if (meta) {
        meta->step = j.at("step").get<int>();
        meta->seed = j.at("seed").get<std::uint64_t>();
        meta->config_hash = j.at("config_hash").get<std::string>();
    }
    return p;
}

}  // namespace clarirl
