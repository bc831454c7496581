#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <utility>
#include <vector>

#include "edgesmdp/config.hpp"
#include "edgesmdp/model.hpp"

namespace edgesmdp {

// 64-bit Mersenne Twister (std::mt19937_64, fully specified by the standard)
// with hand-rolled transforms so draws are bit-identical across standard
// library implementations.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

private:
    std::mt19937_64 engine_;
};

struct RatedEvent {
    Event event;
    double rate;
};

struct EventRates {
    std::vector<RatedEvent> entries;  // arrivals, then edge classes, then cloud classes
    double total = 0;
};

// Competing exponential clocks of a post-decision occupancy: arrivals at
// lambda[p], each running service completing at its class rate.
EventRates event_rates(const Occupancy& post, const SystemConfig& cfg);

struct SampledEvent {
    double tau;
    Event event;
};

SampledEvent sample_next_event(const EventRates& rates, RngStream& rng);
SampledEvent sample_next_event(const Occupancy& post, RngStream& rng, const SystemConfig& cfg);

struct Transition {
    OccupancyState s;
    Action a;
    Occupancy post;
    double tau = 0;
    double r = 0;
    std::vector<double> g;
    OccupancyState s_next;
};

class Environment {
public:
    Environment(SystemConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)), rng_(seed) {}

    // Empty system; the first epoch is necessarily an arrival.
    OccupancyState reset();

    Transition step(const OccupancyState& s, const Action& a);

    RngStream& rng() { return rng_; }
    const SystemConfig& config() const { return cfg_; }

private:
    SystemConfig cfg_;
    RngStream rng_;
};

// One JSON object per line:
// {"n":..,"event":..,"action_index":..,"tau":..,"r":..,"g":[..],"occupancy_hash":".."}
void write_trace_record(std::ostream& out, long long n, const Transition& t, const SystemConfig& cfg);

}  // namespace edgesmdp
