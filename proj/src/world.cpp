#include "clarirl/world.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "clarirl/json_io.hpp"
#include "clarirl/rng.hpp"

namespace clarirl {

namespace {

constexpr int kResampleBudget = 200;

const std::vector<std::string> kAdjectives{"golden", "royal",  "little", "blue",   "green",
                                           "old",    "silver", "happy",  "lucky",  "red",
                                           "grand",  "quiet",  "bright", "hidden", "cozy"};
const std::vector<std::string> kNouns{"dragon", "lion",   "garden", "river", "bell",   "oak",
                                      "crown",  "bridge", "lantern", "swan", "orchid", "mill",
                                      "anchor", "fox",    "star"};
const std::vector<std::string> kStreets{"regent", "mill", "trinity", "king", "bridge", "castle",
                                        "station", "market"};
const std::vector<std::string> kColours{"black", "white", "red", "blue", "grey", "yellow"};
const std::vector<std::string> kCars{"toyota", "skoda", "ford", "audi", "volvo", "tesla"};

const std::string& pick(Rng& rng, const std::vector<std::string>& v) { return v[rng.index(v.size())]; }

std::string pad(int value, int width) {
    std::string s = std::to_string(value);
    while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
    return s;
}

std::string clock(int minutes) {
    minutes = std::clamp(minutes, 0, 23 * 60 + 59);
    return pad(minutes / 60, 2) + ":" + pad(minutes % 60, 2);
}

class EntityFactory {
public:
    explicit EntityFactory(Rng& rng) : rng_(rng) {}

    std::string unique_name(const std::string& suffix) {
        for (;;) {
            std::string base = pick(rng_, kAdjectives) + " " + pick(rng_, kNouns);
            if (!suffix.empty()) base += " " + suffix;
            if (names_.insert(base).second) return base;
            std::string numbered = base + " " + std::to_string(names_.size());
            if (names_.insert(numbered).second) return numbered;
        }
    }
    std::string unique_phone() {
        for (;;) {
            std::string p = "01223" + pad(static_cast<int>(rng_.index(1000000)), 6);
            if (phones_.insert(p).second) return p;
        }
    }
    std::string address() {
        return std::to_string(rng_.range(1, 99)) + " " + pick(rng_, kStreets) + " street";
    }
    std::string postcode() {
        static const std::string letters = "abdefghjlnpqrstuwxyz";
        std::string pc = "cb" + std::to_string(rng_.range(1, 9)) + " " + std::to_string(rng_.range(1, 9));
        pc += letters[rng_.index(letters.size())];
        pc += letters[rng_.index(letters.size())];
        return pc;
    }
    std::string unique_train_id() {
        for (;;) {
            std::string id = "TR" + pad(static_cast<int>(rng_.index(10000)), 4);
            if (train_ids_.insert(id).second) return id;
        }
    }

private:
    Rng& rng_;
    std::set<std::string> names_;
    std::set<std::string> phones_;
    std::set<std::string> train_ids_;
};

std::string categorical_value(Rng& rng, const DomainSchema& schema, const std::string& slot) {
    return pick(rng, schema.find_slot(slot)->values);
}

std::vector<Entity> generate_domain(Domain d, int count, Rng& rng) {
    const DomainSchema& schema = schema_for(d);
    EntityFactory factory(rng);
    std::vector<Entity> out;
    out.reserve(static_cast<std::size_t>(count));
    static constexpr std::array<const char*, 5> prefixes{"RS", "HT", "AT", "TR", "TX"};
    for (int i = 0; i < count; ++i) {
        Entity e;
        e.domain = d;
        e.id = std::string(prefixes[static_cast<std::size_t>(d)]) + pad(i, 4);
        auto& a = e.attributes;
        auto cat = [&](const char* slot) { a[slot] = categorical_value(rng, schema, slot); };
        switch (d) {
            case Domain::Restaurant:
                cat("area");
                cat("pricerange");
                cat("food");
                cat("type");
                a["stars"] = std::to_string(rng.range(1, 5));
                a["name"] = factory.unique_name(a["type"] == "restaurant" ? "" : a["type"]);
                a["phone"] = factory.unique_phone();
                a["address"] = factory.address();
                a["postcode"] = factory.postcode();
                break;
            case Domain::Hotel:
                cat("area");
                cat("internet");
                cat("parking");
                cat("pricerange");
                cat("type");
                a["stars"] = std::to_string(rng.range(1, 5));
                a["name"] = factory.unique_name(a["type"]);
                a["phone"] = factory.unique_phone();
                a["address"] = factory.address();
                a["postcode"] = factory.postcode();
                break;
            case Domain::Attraction:
                cat("area");
                cat("type");
                cat("entrancefee");
                a["name"] = factory.unique_name(a["type"]);
                a["phone"] = factory.unique_phone();
                a["address"] = factory.address();
                break;
            case Domain::Train: {
                cat("departure");
                do {
                    cat("destination");
                } while (a["destination"] == a["departure"]);
                cat("day");
                int leave = rng.range(5 * 4, 22 * 4) * 15;
                int duration = rng.range(2, 12) * 15;
                a["leaveAt"] = clock(leave);
                a["arriveBy"] = clock(leave + duration);
                a["duration"] = std::to_string(duration) + " minutes";
                a["price"] = std::to_string(rng.range(4, 40)) + ".50 pounds";
                e.id = factory.unique_train_id();
                a["trainID"] = e.id;
                break;
            }
            case Domain::Taxi:
                a["car"] = pick(rng, kColours) + " " + pick(rng, kCars);
                a["phone"] = factory.unique_phone();
                break;
        }
        out.push_back(std::move(e));
    }
    if (d == Domain::Train)
        std::sort(out.begin(), out.end(), [](const Entity& x, const Entity& y) { return x.id < y.id; });
    return out;
}

SlotMap constraints_of(const Entity& e) {
    SlotMap c;
    for (const auto& slot : schema_for(e.domain).constraint_slots)
        if (const auto* v = e.attr(slot)) c[slot] = *v;
    return c;
}

std::vector<std::string> plausible_in(const std::vector<Entity>& entities, const SlotMap& constraints,
                                      const std::string& slot) {
    SlotMap others = constraints;
    others.erase(slot);
    std::set<std::string> values;
    for (const auto& e : entities)
        if (entity_satisfies(e, others))
            if (const auto* v = e.attr(slot)) values.insert(*v);
    return {values.begin(), values.end()};
}

// Every ambiguity-eligible slot must be ambiguous for at least one goal the
// sampler could draw.
bool supports_ambiguity(const std::vector<Entity>& entities, Domain d) {
    for (const auto& slot : schema_for(d).ambiguity_slots) {
        bool ok = false;
        for (const auto& e : entities) {
            if (plausible_in(entities, constraints_of(e), slot).size() >= 2) {
                ok = true;
                break;
            }
        }
        if (!ok) return false;
    }
    return true;
}

}  // namespace

WorldSizeConfig WorldSizeConfig::uniform(int per_domain) {
    WorldSizeConfig c;
    for (Domain d : kAllDomains) c.counts[d] = per_domain;
    return c;
}

Database::Database(std::uint64_t seed, std::vector<Entity> entities) : seed_(seed) {
    for (auto& e : entities) by_domain_[static_cast<std::size_t>(e.domain)].push_back(std::move(e));
}

const std::vector<Entity>& Database::entities(Domain d) const {
    return by_domain_[static_cast<std::size_t>(d)];
}

std::vector<Entity> Database::all() const {
    std::vector<Entity> out;
    for (const auto& v : by_domain_) out.insert(out.end(), v.begin(), v.end());
    return out;
}

const Entity* Database::find(Domain d, std::string_view id) const {
    for (const auto& e : entities(d))
        if (e.id == id) return &e;
    return nullptr;
}

std::size_t Database::size() const {
    std::size_t n = 0;
    for (const auto& v : by_domain_) n += v.size();
    return n;
}

Database generate_world(std::uint64_t seed, const WorldSizeConfig& sizes) {
    std::vector<Entity> all;
    for (Domain d : kAllDomains) {
        auto it = sizes.counts.find(d);
        int count = it == sizes.counts.end() ? 0 : it->second;
        if (count < 1)
            throw WorldError("size-config needs at least 1 " + std::string(to_string(d)) + " entity");
        bool done = false;
        for (int attempt = 0; attempt < kResampleBudget && !done; ++attempt) {
            Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(attempt)}));
            auto entities = generate_domain(d, count, rng);
            if (supports_ambiguity(entities, d)) {
                all.insert(all.end(), entities.begin(), entities.end());
                done = true;
            }
        }
        if (!done)
            throw WorldError("resample budget exhausted for " + std::string(to_string(d)) + " with " +
                             std::to_string(count) + " entities");
    }
    return Database(seed, std::move(all));
}

Database load_database(const std::filesystem::path& path) {
    auto rows = read_jsonl(path);
    std::uint64_t seed = 0;
    std::vector<Entity> entities;
    for (const auto& row : rows) {
        if (row.contains("world_seed")) {
            seed = row.at("world_seed").get<std::uint64_t>();
            continue;
        }
        entities.push_back(row.get<Entity>());
    }
    return Database(seed, std::move(entities));
}

void save_database(const std::filesystem::path& path, const Database& db) {
    std::vector<json> rows;
    rows.push_back(json{{"world_seed", db.seed()}});
    for (const auto& e : db.all()) rows.emplace_back(e);
    write_jsonl(path, rows);
}

std::string lowercase(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool slot_matches(std::string_view slot, const std::string& entity_value, const std::string& wanted) {
    if (slot == "arriveBy") return entity_value <= wanted;
    if (slot == "leaveAt") return entity_value >= wanted;
    return lowercase(entity_value) == lowercase(wanted);
}

bool entity_satisfies(const Entity& e, const SlotMap& constraints) {
    for (const auto& [slot, wanted] : constraints) {
        const auto* v = e.attr(slot);
        if (!v || !slot_matches(slot, *v, wanted)) return false;
    }
    return true;
}

std::string mint_booking_ref(const BookingContext& ctx) {
    static constexpr std::string_view alphabet = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ";
    std::uint64_t h = derive_seed(ctx.world_seed,
                                  {ctx.episode_id, static_cast<std::uint64_t>(ctx.booking_index)});
    std::string ref(8, '0');
    for (auto& c : ref) {
        c = alphabet[h % alphabet.size()];
        h /= alphabet.size();
    }
    return ref;
}

ApiResult execute_api(const Database& db, const ApiCall& call, const BookingContext& ctx) {
    ApiResult result;
    Domain domain{};
    const ApiSpec* api = find_api(call.name, &domain);
    if (!api) {
        result.error = ApiErrorCode::UnknownApi;
        result.message = "unknown api " + call.name;
        return result;
    }
    for (const auto& [k, v] : call.args) {
        if (!api->takes(k)) {
            result.error = ApiErrorCode::UnknownArg;
            result.message = call.name + " does not take argument " + k;
            return result;
        }
    }

    SlotMap filters;
    for (const auto& [k, v] : call.args)
        if (!api->is_booking_param(k)) filters[k] = v;

    std::vector<const Entity*> matches;
    for (const auto& e : db.entities(domain))
        if (entity_satisfies(e, filters)) matches.push_back(&e);

    if (api->kind == ApiKind::Query) {
        result.kind = ApiResultKind::QueryResult;
        for (const auto* e : matches) result.entities.push_back(*e);
        result.message = std::to_string(matches.size()) + " " + std::string(to_string(domain)) + " match";
        result.message += matches.size() == 1 ? "" : "es";
        for (std::size_t i = 0; i < matches.size() && i < 3; ++i) {
            const auto* label = matches[i]->attr(domain == Domain::Train ? "trainID" : "name");
            result.message += (i ? ", " : ": ") + (label ? *label : matches[i]->id);
        }
        return result;
    }

    // Taxis are interchangeable: any booking with a route is dispatched to
    // the first car in the fleet.
    if (domain == Domain::Taxi) {
        if (!call.arg("departure") || !call.arg("destination") || matches.empty()) {
            result.error = ApiErrorCode::NoMatch;
            result.message = "book_taxi needs departure and destination";
            return result;
        }
        matches.resize(1);
    }
    if (matches.empty()) {
        result.error = ApiErrorCode::NoMatch;
        result.message = "no " + std::string(to_string(domain)) + " matches the booking request";
        return result;
    }
    if (matches.size() > 1) {
        result.error = ApiErrorCode::AmbiguousMatch;
        result.message = std::to_string(matches.size()) + " " + std::string(to_string(domain)) +
                         " entities match; booking needs a unique one";
        return result;
    }
    result.kind = ApiResultKind::BookingConfirmation;
    result.entity_id = matches.front()->id;
    result.booking_ref = mint_booking_ref(ctx);
    result.entities.push_back(*matches.front());
    result.message = "booked " + *result.entity_id + ", reference " + *result.booking_ref;
    return result;
}

std::vector<std::string> plausible_values(const Database& db, Domain d, const SlotMap& constraints,
                                          const std::string& slot) {
    return plausible_in(db.entities(d), constraints, slot);
}

}  // namespace clarirl
