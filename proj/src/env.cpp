#include "edgesmdp/env.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

namespace edgesmdp {

EventRates event_rates(const Occupancy& post, const SystemConfig& cfg) {
    EventRates out;
    for (int p = 0; p < cfg.priorities; ++p) out.entries.push_back({Event::arrival(p), cfg.arrival_rate[p]});
    for (int p = 0; p < cfg.priorities; ++p)
        for (int i = 1; i <= cfg.max_subchannels; ++i)
            for (int j = 1; j <= cfg.max_vms; ++j) {
                int n = post.x(cfg, i, j, p);
                if (n > 0) out.entries.push_back({Event::edge_departure(i, j, p), n * cfg.edge_service_rate(i, j, p)});
            }
    for (int p = 0; p < cfg.priorities; ++p)
        for (int i = 1; i <= cfg.max_subchannels; ++i) {
            int n = post.y(cfg, i, p);
            if (n > 0) out.entries.push_back({Event::cloud_departure(i, p), n * cfg.cloud_service_rate(i, p)});
        }
    for (const auto& e : out.entries) out.total += e.rate;
    return out;
}

SampledEvent sample_next_event(const EventRates& rates, RngStream& rng) {
    const double tau = rng.exponential(rates.total);
    const double u = rng.uniform() * rates.total;
    double acc = 0;
    for (const auto& e : rates.entries) {
        acc += e.rate;
        if (u < acc) return {tau, e.event};
    }
    // u landed in the rounding gap at the top end
    return {tau, rates.entries.back().event};
}

SampledEvent sample_next_event(const Occupancy& post, RngStream& rng, const SystemConfig& cfg) {
    return sample_next_event(event_rates(post, cfg), rng);
}

OccupancyState Environment::reset() {
    OccupancyState s{Occupancy::empty(cfg_), Event::arrival(0)};
    // From an empty system only arrival clocks run; the sojourn before the
    // first epoch carries no reward and is discarded.
    s.event = sample_next_event(s.occupancy, rng_, cfg_).event;
    return s;
}

Transition Environment::step(const OccupancyState& s, const Action& a) {
    Transition t;
    t.s = s;
    t.a = a;
    t.post = apply_action(s, a, cfg_);
    auto next = sample_next_event(t.post, rng_, cfg_);
    t.tau = next.tau;
    t.r = stage_reward(t.post, a, t.tau, cfg_);
    t.g = constraint_cost(t.post, t.tau, cfg_);
    t.s_next = OccupancyState{t.post, next.event};
    return t;
}

void write_trace_record(std::ostream& out, long long n, const Transition& t, const SystemConfig& cfg) {
    nlohmann::json j;
    j["n"] = n;
    j["event"] = t.s.event.to_string();
    j["action_index"] = t.a.kind == ActionKind::Release ? -1 : action_index(t.a, cfg);
    j["tau"] = t.tau;
    j["r"] = t.r;
    j["g"] = t.g;
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(t.s_next.occupancy.hash()));
    j["occupancy_hash"] = buf;
    out << j.dump() << '\n';
}

}  // namespace edgesmdp
