#pragma once

// State, action and cost model of the edge/cloud offloading SMDP.
//
// Services are counted per class: x(i, j, p) edge services holding i
// subchannels and j VMs at priority p, y(i, p) cloud services holding i
// subchannels (and m VMs in the cloud). Subchannel and VM totals are bounded
// by B and M respectively. A decision epoch is an arrival or a departure; only
// arrivals leave a choice.
//
// Indexing: i and j are resource quantities (1-based), p is 0-based in code
// and printed 1-based in every external file.

#include <cstdint>
#include <string>
#include <vector>

#include "edgesmdp/config.hpp"

namespace edgesmdp {

struct Occupancy {
    std::vector<int> counts;  // canonical layout, see SystemConfig::edge_slot/cloud_slot

    static Occupancy empty(const SystemConfig& cfg) {
        return Occupancy{std::vector<int>(cfg.occupancy_slots(), 0)};
    }

    int x(const SystemConfig& cfg, int i, int j, int p) const { return counts[cfg.edge_slot(i, j, p)]; }
    int y(const SystemConfig& cfg, int i, int p) const { return counts[cfg.cloud_slot(i, p)]; }
    int& x(const SystemConfig& cfg, int i, int j, int p) { return counts[cfg.edge_slot(i, j, p)]; }
    int& y(const SystemConfig& cfg, int i, int p) { return counts[cfg.cloud_slot(i, p)]; }

    int subchannels_used(const SystemConfig& cfg) const;
    int vms_used(const SystemConfig& cfg) const;
    bool within_capacity(const SystemConfig& cfg) const;
    bool is_empty() const;
    std::uint64_t hash() const;

    bool operator==(const Occupancy&) const = default;
    auto operator<=>(const Occupancy&) const = default;
};

enum class EventKind : std::uint8_t { Arrival, EdgeDeparture, CloudDeparture };

struct Event {
    EventKind kind = EventKind::Arrival;
    int subchannels = 0;  // i, departures only
    int vms = 0;          // j, edge departures only
    int priority = 0;

    static Event arrival(int p) { return {EventKind::Arrival, 0, 0, p}; }
    static Event edge_departure(int i, int j, int p) { return {EventKind::EdgeDeparture, i, j, p}; }
    static Event cloud_departure(int i, int p) { return {EventKind::CloudDeparture, i, 0, p}; }

    bool is_arrival() const { return kind == EventKind::Arrival; }
    std::string to_string() const;  // "A(p=1)", "D(i=1,j=2,p=1)", "F(i=1,p=2)"

    bool operator==(const Event&) const = default;
    auto operator<=>(const Event&) const = default;
};

struct OccupancyState {
    Occupancy occupancy;
    Event event;

    bool operator==(const OccupancyState&) const = default;
    auto operator<=>(const OccupancyState&) const = default;
};

enum class ActionKind : std::uint8_t { Release, Reject, EdgeAccept, CloudAccept };

struct Action {
    ActionKind kind = ActionKind::Reject;
    int subchannels = 0;
    int vms = 0;

    static Action release() { return {ActionKind::Release, 0, 0}; }
    static Action reject() { return {ActionKind::Reject, 0, 0}; }
    static Action edge(int i, int j) { return {ActionKind::EdgeAccept, i, j}; }
    static Action cloud(int i) { return {ActionKind::CloudAccept, i, 0}; }

    std::string to_string() const;

    bool operator==(const Action&) const = default;
};

// Throws ModelViolation for negative counts, capacity breaches, events outside
// the caps, or departures from an empty class.
void check_state(const OccupancyState& s, const SystemConfig& cfg);

// [Release] on departures; on arrivals Reject followed by every admissible
// accept, in action-index order.
std::vector<Action> feasible_actions(const OccupancyState& s, const SystemConfig& cfg);
bool is_feasible(const OccupancyState& s, const Action& a, const SystemConfig& cfg);

// Post-decision occupancy. Throws InfeasibleAction.
Occupancy apply_action(const OccupancyState& s, const Action& a, const SystemConfig& cfg);

double lump_reward(const Action& a, const SystemConfig& cfg);

// VM operating cost per unit time of a post-decision occupancy. Cloud
// services are billed m VMs each.
double holding_cost_rate(const Occupancy& post, const SystemConfig& cfg);

double stage_reward(const Occupancy& post, const Action& a, double tau, const SystemConfig& cfg);

// Weighted queue length of priority p, per unit time.
double queue_weight(const Occupancy& post, int p, const SystemConfig& cfg);
std::vector<double> constraint_cost(const Occupancy& post, double tau, const SystemConfig& cfg);

// [x / M..., y / B..., one-hot(event)] with event slots ordered
// arrivals (p), edge departures (canonical x order), cloud departures (y order).
std::vector<double> encode_features(const OccupancyState& s, const SystemConfig& cfg);
int feature_count(const SystemConfig& cfg);

// 0 = Reject, 1..b*m = EdgeAccept(i, j) with i outer, b*m+1..b*m+b = CloudAccept(i).
int action_index(const Action& a, const SystemConfig& cfg);
Action index_action(int k, const SystemConfig& cfg);

// Mask over the global action index set; all-false on departures.
std::vector<bool> action_mask(const OccupancyState& s, const SystemConfig& cfg);

}  // namespace edgesmdp
