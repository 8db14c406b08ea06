#pragma once

// Seeded entity databases and API execution for the five domains.

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "clarirl/types.hpp"

namespace clarirl {

class WorldError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct WorldSizeConfig {
    std::map<Domain, int> counts;

    static WorldSizeConfig uniform(int per_domain);
};

// Immutable after construction; safe to share read-only across episodes.
class Database {
public:
    Database() = default;
    Database(std::uint64_t seed, std::vector<Entity> entities);

    std::uint64_t seed() const { return seed_; }
    const std::vector<Entity>& entities(Domain d) const;
    std::vector<Entity> all() const;
    const Entity* find(Domain d, std::string_view id) const;
    std::size_t size() const;

    friend bool operator==(const Database&, const Database&) = default;

private:
    std::uint64_t seed_ = 0;
    std::array<std::vector<Entity>, 5> by_domain_;
};

// Deterministic for a fixed seed. Throws WorldError when a domain count is
// below 1 or when no sample within the resample budget supports ambiguous
// goals for every ambiguity-eligible slot.
Database generate_world(std::uint64_t seed, const WorldSizeConfig& sizes);

Database load_database(const std::filesystem::path& path);
void save_database(const std::filesystem::path& path, const Database& db);

// Exact match after lowercasing; arriveBy matches entity time <= value,
// leaveAt matches entity time >= value.
bool slot_matches(std::string_view slot, const std::string& entity_value, const std::string& wanted);
bool entity_satisfies(const Entity& e, const SlotMap& constraints);

std::string lowercase(std::string_view s);

// Booking references are a pure function of (world seed, episode, index).
struct BookingContext {
    std::uint64_t world_seed = 0;
    std::uint64_t episode_id = 0;
    int booking_index = 0;
};

std::string mint_booking_ref(const BookingContext& ctx);

ApiResult execute_api(const Database& db, const ApiCall& call, const BookingContext& ctx = {});

// Values of `slot` among entities that match every constraint except `slot`.
std::vector<std::string> plausible_values(const Database& db, Domain d, const SlotMap& constraints,
                                          const std::string& slot);

}  // namespace clarirl
