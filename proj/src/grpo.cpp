#include "clarirl/grpo.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "clarirl/parallel.hpp"
#include "clarirl/tag_parser.hpp"

namespace clarirl {

std::vector<double> group_advantages(const std::vector<double>& rewards) {
    if (rewards.size() < 2) throw std::invalid_argument("group_advantages needs at least 2 rewards");
    const double n = static_cast<double>(rewards.size());
    const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
    std::vector<double> out(rewards.size(), 0.0);
    bool constant = true;
    for (double r : rewards) constant = constant && r == rewards.front();
    if (constant) return out;
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    const double sd = std::sqrt(var / n);
    for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / (sd + kAdvantageEps);
    return out;
}

namespace {

std::string_view to_string(TransportPolicy p) {
    return p == TransportPolicy::RetryThenSkipGroup ? "retry-then-skip-group" : "retry-then-zero";
}
std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::Adam ? "adam" : "sgd"; }
std::string_view to_string(LrSchedule s) { return s == LrSchedule::Cosine ? "cosine" : "constant"; }

template <typename E>
E parse_enum(const json& j, const char* field, std::initializer_list<std::pair<const char*, E>> options) {
    const auto s = j.get<std::string>();
    for (const auto& [name, value] : options)
        if (s == name) return value;
    throw std::invalid_argument(std::string("unknown value '") + s + "' for " + field);
}

}  // namespace

void to_json(json& j, const TrainConfig& c) {
    j = json{{"dataset", c.dataset.string()},
             {"output_dir", c.output_dir.string()},
             {"steps", c.steps},
             {"group_size", c.group_size},
             {"batch_contexts", c.batch_contexts},
             {"learning_rate", c.learning_rate},
             {"seed", c.seed},
             {"judge", c.judge},
             {"judge_config", c.judge_config.string()},
             {"optimizer", to_string(c.optimizer)},
             {"beta1", c.beta1},
             {"beta2", c.beta2},
             {"adam_eps", c.adam_eps},
             {"weight_decay", c.weight_decay},
             {"warmup_fraction", c.warmup_fraction},
             {"schedule", to_string(c.schedule)},
             {"grad_clip", c.grad_clip},
             {"on_transport_failure", to_string(c.on_transport_failure)},
             {"base_prior", c.base_prior},
             {"checkpoint_every", c.checkpoint_every},
             {"write_plots", c.write_plots},
             {"threads", c.threads}};
}

void from_json(const json& j, TrainConfig& c) {
    if (!j.is_object()) throw std::invalid_argument("train config must be a JSON object");
    for (const auto& [key, v] : j.items()) {
        if (key == "dataset") c.dataset = v.get<std::string>();
        else if (key == "output_dir") c.output_dir = v.get<std::string>();
        else if (key == "steps") c.steps = v.get<int>();
        else if (key == "group_size") c.group_size = v.get<int>();
        else if (key == "batch_contexts") c.batch_contexts = v.get<int>();
        else if (key == "learning_rate") c.learning_rate = v.get<double>();
        else if (key == "seed") c.seed = v.get<std::uint64_t>();
        else if (key == "judge") c.judge = v.get<std::string>();
        else if (key == "judge_config") c.judge_config = v.get<std::string>();
        else if (key == "optimizer")
            c.optimizer = parse_enum<OptimizerKind>(v, "optimizer", {{"adam", OptimizerKind::Adam}, {"sgd", OptimizerKind::Sgd}});
        else if (key == "beta1") c.beta1 = v.get<double>();
        else if (key == "beta2") c.beta2 = v.get<double>();
        else if (key == "adam_eps") c.adam_eps = v.get<double>();
        else if (key == "weight_decay") c.weight_decay = v.get<double>();
        else if (key == "warmup_fraction") c.warmup_fraction = v.get<double>();
        else if (key == "schedule")
            c.schedule = parse_enum<LrSchedule>(v, "schedule", {{"cosine", LrSchedule::Cosine}, {"constant", LrSchedule::Constant}});
        else if (key == "grad_clip") c.grad_clip = v.get<double>();
        else if (key == "on_transport_failure")
            c.on_transport_failure = parse_enum<TransportPolicy>(
                v, "on_transport_failure",
                {{"retry-then-skip-group", TransportPolicy::RetryThenSkipGroup},
                 {"retry-then-zero", TransportPolicy::RetryThenZero}});
        else if (key == "base_prior") c.base_prior = v.get<double>();
        else if (key == "checkpoint_every") c.checkpoint_every = v.get<int>();
        else if (key == "write_plots") c.write_plots = v.get<bool>();
        else if (key == "threads") c.threads = v.get<int>();
        else throw std::invalid_argument("unknown train config key: " + key);
    }
}

TrainConfig load_train_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open train config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error("invalid JSON in " + path.string() + ": " + e.what());
    }
    TrainConfig c = j.get<TrainConfig>();
    // Relative dataset and output paths resolve against the config's folder.
    const auto base = path.parent_path();
    if (!c.dataset.empty() && c.dataset.is_relative()) c.dataset = base / c.dataset;
    if (!c.output_dir.empty() && c.output_dir.is_relative()) c.output_dir = base / c.output_dir;
    if (!c.judge_config.empty() && c.judge_config.is_relative()) c.judge_config = base / c.judge_config;
    return c;
}

void validate_config(const TrainConfig& c) {
    auto bad = [](const std::string& field, const std::string& why) {
        throw std::invalid_argument("train config: " + field + " " + why);
    };
    if (c.steps < 0) bad("steps", "must be >= 0");
    if (c.group_size < 2) bad("group_size", "must be >= 2");
    if (c.batch_contexts < 1) bad("batch_contexts", "must be >= 1");
    if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate)) bad("learning_rate", "must be positive");
    if (!(c.beta1 >= 0.0 && c.beta1 < 1.0)) bad("beta1", "must be in [0,1)");
    if (!(c.beta2 >= 0.0 && c.beta2 < 1.0)) bad("beta2", "must be in [0,1)");
    if (!(c.adam_eps > 0.0)) bad("adam_eps", "must be positive");
    if (c.weight_decay < 0.0) bad("weight_decay", "must be >= 0");
    if (!(c.warmup_fraction >= 0.0 && c.warmup_fraction < 1.0)) bad("warmup_fraction", "must be in [0,1)");
    if (c.grad_clip < 0.0) bad("grad_clip", "must be >= 0");
    if (c.checkpoint_every < 0) bad("checkpoint_every", "must be >= 0");
    if (c.judge != "oracle" && c.judge != "remote" && c.judge != "self")
        bad("judge", "must be oracle, remote or self");
}

std::string config_hash(const TrainConfig& c) {
    json j = c;
    // Paths and plumbing do not change the optimization.
    j.erase("dataset");
    j.erase("output_dir");
    j.erase("judge_config");
    j.erase("threads");
    j.erase("write_plots");
    j.erase("checkpoint_every");
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash_string(j.dump())));
    return buf;
}

double lr_at(const TrainConfig& c, int step) {
    if (c.schedule == LrSchedule::Constant) return c.learning_rate;
    const int warmup = static_cast<int>(std::lround(c.warmup_fraction * c.steps));
    if (step < warmup) return c.learning_rate * static_cast<double>(step + 1) / warmup;
    const int span = std::max(1, c.steps - warmup);
    const double progress = std::min(1.0, static_cast<double>(step - warmup) / span);
    return c.learning_rate * 0.5 * (1.0 + std::cos(M_PI * progress));
}

TrainContext make_context(const SpeakerSample& s) {
    TrainContext c;
    c.sample_id = s.sample_id;
    c.context = s.context;
    c.view = build_view(s.context);
    c.phi = feature_vector(extract_features(c.view));
    c.conversation = render_conversation(s.context);
    c.truth = s.truth;
    return c;
}

std::vector<TrainContext> make_contexts(const std::vector<SpeakerSample>& samples) {
    std::vector<TrainContext> out;
    for (const auto& s : samples)
        if (s.gold_action == GoldAction::MustClarify) out.push_back(make_context(s));
    return out;
}

RolloutGroup rollout_group(const PolicyParams& p, const TrainContext& ctx, int k, ClarifyJudge& judge,
                           TransportPolicy policy, Rng& rng) {
    RolloutGroup g;
    g.context = &ctx;
    g.members.resize(static_cast<std::size_t>(k));
    for (auto& m : g.members) {
        SampledAction a = sample_output(p, ctx.view, rng);
        m.template_index = a.template_index;
        m.log_prob = a.log_prob;
        m.output = std::move(a.output);
    }
    for (auto& m : g.members) {
        const FormatVerdict verdict = parse_agent_output(m.output.raw).second;
        try {
            m.reward = total_reward(m.output, verdict, ctx.conversation, judge, &ctx.truth);
        } catch (const JudgeError& e) {
            if (!e.retryable()) throw;
            if (policy == TransportPolicy::RetryThenSkipGroup) {
                g.skipped = true;
                g.skip_reason = e.what();
                for (auto& mm : g.members) mm.advantage = 0.0;
                return g;
            }
            m.reward = RewardBreakdown{};
            m.reward.r_format = format_reward(verdict);
            m.reward.defects = verdict.defects;
            m.reward.r_total = m.reward.r_format;
        }
    }
    std::vector<double> rewards;
    for (const auto& m : g.members) rewards.push_back(m.reward.r_total);
    const auto adv = group_advantages(rewards);
    for (std::size_t i = 0; i < adv.size(); ++i) g.members[i].advantage = adv[i];
    return g;
}

Optimizer::Optimizer(const TrainConfig& cfg) : cfg_(cfg) {}

void Optimizer::apply(PolicyParams& p, const std::vector<double>& grad) {
    if (grad.size() != p.w.size()) throw std::invalid_argument("gradient size does not match parameters");
    const double lr = lr_at(cfg_, t_);
    ++t_;
    if (cfg_.optimizer == OptimizerKind::Sgd) {
        for (std::size_t i = 0; i < grad.size(); ++i) p.w[i] += lr * grad[i];
        return;
    }
    if (m_.empty()) {
        m_.assign(grad.size(), 0.0);
        v_.assign(grad.size(), 0.0);
    }
    const double b1 = cfg_.beta1, b2 = cfg_.beta2;
    const double c1 = 1.0 - std::pow(b1, t_);
    const double c2 = 1.0 - std::pow(b2, t_);
    for (std::size_t i = 0; i < grad.size(); ++i) {
        m_[i] = b1 * m_[i] + (1.0 - b1) * grad[i];
        v_[i] = b2 * v_[i] + (1.0 - b2) * grad[i] * grad[i];
        const double mh = m_[i] / c1;
        const double vh = v_[i] / c2;
        p.w[i] += lr * mh / (std::sqrt(vh) + cfg_.adam_eps) - lr * cfg_.weight_decay * p.w[i];
    }
}

std::vector<double> policy_gradient(const PolicyParams& p, const std::vector<RolloutGroup>& groups) {
    std::vector<double> g(p.w.size(), 0.0);
    int used = 0;
    for (const auto& grp : groups) {
        if (grp.skipped) continue;
        ++used;
        for (const auto& m : grp.members) {
            if (m.advantage == 0.0) continue;
            const auto d = grad_log_prob(p, grp.context->phi, m.template_index);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += m.advantage * d[i];
        }
    }
    if (used > 0)
        for (double& x : g) x /= used;
    return g;
}

StepResult train_step(PolicyParams& p, Optimizer& opt, const std::vector<const TrainContext*>& batch,
                      ClarifyJudge& judge, const TrainConfig& cfg, int step) {
    StepResult res;
    res.groups.resize(batch.size());
    const int threads = cfg.threads > 0 ? cfg.threads : default_threads();
    parallel_for(batch.size(), threads, [&](std::size_t b) {
        Rng rng(derive_seed(cfg.seed, {0x6e0, static_cast<std::uint64_t>(step), b}));
        res.groups[b] = rollout_group(p, *batch[b], cfg.group_size, judge, cfg.on_transport_failure, rng);
    });

    MetricsRow& row = res.metrics;
    row.step = step;
    int members = 0, clarifies = 0;
    for (const auto& g : res.groups) {
        if (g.skipped) {
            ++row.skipped_groups;
            continue;
        }
        for (const auto& m : g.members) {
            ++members;
            row.r_format += m.reward.r_format;
            row.r_clarify += m.reward.r_clarify;
            row.r_total += m.reward.r_total;
            row.think_len += static_cast<double>(m.output.think.value_or("").size());
            if (m.output.clarify) {
                ++clarifies;
                row.clarify_len += static_cast<double>(m.output.clarify->size());
            }
        }
    }
    if (members > 0) {
        row.r_format /= members;
        row.r_clarify /= members;
        row.r_total /= members;
        row.think_len /= members;
        row.clarify_rate = static_cast<double>(clarifies) / members;
    }
    if (clarifies > 0) row.clarify_len /= clarifies;

    std::vector<double> grad = policy_gradient(p, res.groups);
    double sq = 0.0;
    for (double x : grad) sq += x * x;
    row.grad_norm = std::sqrt(sq);
    if (cfg.grad_clip > 0.0 && row.grad_norm > cfg.grad_clip)
        for (double& x : grad) x *= cfg.grad_clip / row.grad_norm;
    if (members > 0) opt.apply(p, grad);
    return res;
}

namespace {

std::unique_ptr<ClarifyJudge> judge_for(const TrainConfig& cfg) {
    if (cfg.judge == "oracle") return make_judge("oracle", RemoteJudgeConfig{});
    RemoteJudgeConfig base = cfg.judge_config.empty() ? RemoteJudgeConfig{} : RemoteJudgeConfig::from_file(cfg.judge_config);
    return make_judge(cfg.judge, RemoteJudgeConfig::from_env(base));
}

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, int step) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "step_%06d.json", step);
    return dir / "checkpoints" / buf;
}

}  // namespace

TrainResult train(const TrainConfig& cfg) {
    validate_config(cfg);
    if (cfg.dataset.empty()) throw std::invalid_argument("train config: dataset is required");
    const auto samples = load_samples(cfg.dataset);
    const auto contexts = make_contexts(samples);
    if (contexts.empty() && cfg.steps > 0)
        throw std::runtime_error("dataset has no MustClarify samples: " + cfg.dataset.string());
    auto judge = judge_for(cfg);
    return train(cfg, contexts, *judge);
}

TrainResult train(const TrainConfig& cfg, const std::vector<TrainContext>& contexts, ClarifyJudge& judge) {
    validate_config(cfg);
    if (contexts.empty() && cfg.steps > 0) throw std::invalid_argument("train: no training contexts");
    TrainResult out;
    out.params = base_params(cfg.base_prior);
    Optimizer opt(cfg);
    const std::string hash = config_hash(cfg);
    std::ofstream skip_log;
    if (!cfg.output_dir.empty()) {
        std::filesystem::create_directories(cfg.output_dir / "checkpoints");
        skip_log.open(cfg.output_dir / "skipped_groups.jsonl");
    }

    for (int step = 0; step < cfg.steps; ++step) {
        Rng pick(derive_seed(cfg.seed, {0xba7c, static_cast<std::uint64_t>(step)}));
        std::vector<const TrainContext*> batch;
        batch.reserve(static_cast<std::size_t>(cfg.batch_contexts));
        for (int b = 0; b < cfg.batch_contexts; ++b) batch.push_back(&contexts[pick.index(contexts.size())]);

        StepResult r = train_step(out.params, opt, batch, judge, cfg, step);
        out.skipped_groups += r.metrics.skipped_groups;
        for (const auto& g : r.groups) {
            if (!g.skipped) continue;
            std::cerr << "step " << step << ": skipped group " << g.context->sample_id << ": " << g.skip_reason << "\n";
            if (skip_log) skip_log << json{{"step", step}, {"sample_id", g.context->sample_id}, {"reason", g.skip_reason}}.dump() << "\n";
        }
        out.metrics.push_back(r.metrics);

        const bool periodic = cfg.checkpoint_every > 0 && (step + 1) % cfg.checkpoint_every == 0;
        if (!cfg.output_dir.empty() && periodic) {
            const auto path = checkpoint_path(cfg.output_dir, step + 1);
            save_checkpoint(path, out.params, CheckpointMeta{step + 1, cfg.seed, hash});
            out.checkpoints.push_back(path);
        }
    }

    if (!cfg.output_dir.empty()) {
        const auto final_path = cfg.output_dir / "policy.json";
        save_checkpoint(final_path, out.params, CheckpointMeta{cfg.steps, cfg.seed, hash});
        out.checkpoints.push_back(final_path);
        write_metrics_csv(cfg.output_dir / "metrics.csv", out.metrics);
        std::ofstream(cfg.output_dir / "config.json") << json(cfg).dump(2) << "\n";
        if (cfg.write_plots) write_plots(cfg.output_dir, out.metrics);
    }
    return out;
}

namespace {
constexpr const char* kCsvHeader = "step,r_format,r_clarify,r_total,think_len,clarify_len,clarify_rate,grad_norm";
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << kCsvHeader << "\n";
    char buf[512];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.step, r.r_format,
                      r.r_clarify, r.r_total, r.think_len, r.clarify_len, r.clarify_rate, r.grad_norm);
        out << buf;
    }
}

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) throw std::runtime_error("unexpected metrics header in " + path.string());
    std::vector<MetricsRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        MetricsRow r;
        if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf,%lf,%lf,%lf", &r.step, &r.r_format, &r.r_clarify,
                        &r.r_total, &r.think_len, &r.clarify_len, &r.clarify_rate, &r.grad_norm) != 8)
            throw std::runtime_error("bad metrics row in " + path.string() + ": " + line);
        rows.push_back(r);
    }
    return rows;
}

namespace {

struct Series {
    std::string label;
    std::string color;
    std::vector<double> values;
};

void write_svg(const std::filesystem::path& path, const std::string& title, const std::vector<Series>& series) {
    const double W = 640, H = 360, L = 60, R = 20, T = 40, B = 40;
    double lo = 0.0, hi = 0.0;
    std::size_t n = 0;
    for (const auto& s : series) {
        n = std::max(n, s.values.size());
        for (double v : s.values) hi = std::max(hi, v);
    }
    if (hi <= lo) hi = lo + 1.0;
    auto x = [&](std::size_t i) { return L + (n > 1 ? (W - L - R) * static_cast<double>(i) / (n - 1) : 0.0); };
    auto y = [&](double v) { return H - B - (H - T - B) * (v - lo) / (hi - lo); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
        << title << "</text>\n";
    svg << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double v = lo + (hi - lo) * k / 4.0;
        char label[32];
        std::snprintf(label, sizeof label, "%.2f", v);
        svg << "<text x=\"" << L - 6 << "\" y=\"" << y(v) + 4 << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
            << label << "</text>\n";
    }
    svg << "<text x=\"" << (W + L - R) / 2 << "\" y=\"" << H - 8
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">step</text>\n";
    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        svg << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.values.size(); ++i) svg << x(i) << "," << y(s.values[i]) << " ";
        svg << "\"/>\n";
        const double ly = T + 14.0 * static_cast<double>(si);
        svg << "<line x1=\"" << W - R - 120 << "\" y1=\"" << ly << "\" x2=\"" << W - R - 100 << "\" y2=\"" << ly
            << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << W - R - 95 << "\" y=\"" << ly + 4 << "\" font-family=\"sans-serif\" font-size=\"11\">"
            << s.label << "</text>\n";
    }
    svg << "</svg>\n";
    std::ofstream(path) << svg.str();
}

}  // namespace

void write_plots(const std::filesystem::path& dir, const std::vector<MetricsRow>& rows) {
    Series fmt{"format", "#1f77b4", {}}, clar{"clarify", "#ff7f0e", {}}, tot{"total", "#2ca02c", {}};
    Series think{"think chars", "#9467bd", {}}, clen{"clarify chars", "#d62728", {}};
    for (const auto& r : rows) {
        fmt.values.push_back(r.r_format);
        clar.values.push_back(r.r_clarify);
        tot.values.push_back(r.r_total);
        think.values.push_back(r.think_len);
        clen.values.push_back(r.clarify_len);
    }
    write_svg(dir / "rewards.svg", "Reward per step", {fmt, clar, tot});
    write_svg(dir / "lengths.svg", "Output length per step", {think, clen});
}

}  // namespace clarirl
