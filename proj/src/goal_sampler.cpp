#include "clarirl/goal_sampler.hpp"

#include <algorithm>
#include <numeric>

#include "clarirl/rng.hpp"

namespace clarirl {

namespace {

std::string clock_at(int minutes) {
    auto two = [](int v) { return (v < 10 ? "0" : "") + std::to_string(v); };
    return two(minutes / 60) + ":" + two(minutes % 60);
}

std::size_t weighted_pick(Rng& rng, const std::vector<double>& weights) {
    double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    double u = rng.uniform() * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (u < weights[i]) return i;
        u -= weights[i];
    }
    return weights.size() - 1;
}

SubGoal make_subgoal(const Database& db, Domain d, Rng& rng) {
    const DomainSchema& schema = schema_for(d);
    SubGoal sg;
    sg.domain = d;
    if (d == Domain::Taxi) {
        const auto& places = schema.find_slot("departure")->values;
        std::string from = places[rng.index(places.size())];
        std::string to;
        do {
            to = places[rng.index(places.size())];
        } while (to == from);
        sg.booking = SlotMap{{"departure", from},
                             {"destination", to},
                             {"leaveAt", clock_at(rng.range(7 * 4, 22 * 4) * 15)}};
        return sg;
    }
    const auto& entities = db.entities(d);
    const Entity& target = entities[rng.index(entities.size())];
    for (const auto& slot : schema.constraint_slots) sg.constraints[slot] = *target.attr(slot);

    const auto& days = schema_for(Domain::Restaurant).find_slot("day")->values;
    switch (d) {
        case Domain::Restaurant:
            sg.booking = SlotMap{{"people", std::to_string(rng.range(1, 8))},
                                 {"day", days[rng.index(days.size())]},
                                 {"time", clock_at(rng.range(11 * 4, 21 * 4) * 15)}};
            break;
        case Domain::Hotel:
            sg.booking = SlotMap{{"people", std::to_string(rng.range(1, 6))},
                                 {"day", days[rng.index(days.size())]},
                                 {"stay", std::to_string(rng.range(1, 5))}};
            break;
        case Domain::Train:
            sg.booking = SlotMap{{"people", std::to_string(rng.range(1, 6))}};
            break;
        case Domain::Attraction: {
            auto req = schema.requestable_slots;
            rng.shuffle(req.begin(), req.end());
            std::size_t n = 1 + rng.index(2);
            sg.requestables.insert(req.begin(), req.begin() + static_cast<long>(n));
            break;
        }
        case Domain::Taxi:
            break;
    }
    return sg;
}

}  // namespace

std::string make_identifier(std::uint64_t seed, char prefix, int length) {
    static constexpr std::string_view alphabet = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ";
    std::string id(1, prefix);
    std::uint64_t h = splitmix64(seed);
    for (int i = 1; i < length; ++i) {
        id += alphabet[h % alphabet.size()];
        h /= alphabet.size();
        if (h == 0) h = splitmix64(seed + static_cast<std::uint64_t>(i));
    }
    return id;
}

UserGoal sample_goal(const Database& db, const GoalSamplerConfig& cfg, std::uint64_t seed) {
    if (cfg.subgoal_count_weights.empty())
        throw GoalSamplingError("subgoal_count_weights must not be empty");
    for (int attempt = 0; attempt < cfg.resample_budget; ++attempt) {
        Rng rng(derive_seed(seed, {0x60a1, static_cast<std::uint64_t>(attempt)}));
        UserGoal goal;
        goal.goal_id = make_identifier(seed, 'G');

        std::size_t n_sub = std::min<std::size_t>(weighted_pick(rng, cfg.subgoal_count_weights) + 1,
                                                  kAllDomains.size());
        std::vector<Domain> domains(kAllDomains.begin(), kAllDomains.end());
        rng.shuffle(domains.begin(), domains.end());
        domains.resize(n_sub);
        for (Domain d : domains) goal.sub_goals.push_back(make_subgoal(db, d, rng));

        int n_amb = 0;
        if (rng.bernoulli(cfg.ambiguity_rate)) n_amb = rng.bernoulli(cfg.multi_ambiguity_rate) ? 2 : 1;

        std::vector<std::pair<std::size_t, std::string>> eligible;
        for (std::size_t i = 0; i < goal.sub_goals.size(); ++i) {
            const auto& sg = goal.sub_goals[i];
            for (const auto& slot : schema_for(sg.domain).ambiguity_slots)
                if (plausible_values(db, sg.domain, sg.constraints, slot).size() >= 2)
                    eligible.emplace_back(i, slot);
        }
        if (static_cast<int>(eligible.size()) < n_amb) continue;
        rng.shuffle(eligible.begin(), eligible.end());
        eligible.resize(static_cast<std::size_t>(n_amb));
        std::sort(eligible.begin(), eligible.end());

        bool ok = true;
        for (const auto& [i, slot] : eligible) {
            const auto& sg = goal.sub_goals[i];
            SlotMap known = sg.constraints;
            for (const auto& [j, other] : eligible)
                if (j == i) known.erase(other);
            Ambiguity amb;
            amb.domain = sg.domain;
            amb.slot = slot;
            amb.reveal = sg.constraints.at(slot);
            amb.candidates = plausible_values(db, sg.domain, known, slot);
            if (amb.candidates.size() < 2) ok = false;
            goal.ambiguity_spec.push_back(std::move(amb));
        }
        if (!ok) continue;
        return goal;
    }
    throw GoalSamplingError("resample budget exhausted for goal seed " + std::to_string(seed));
}

}  // namespace clarirl
