#include "edgesmdp/model.hpp"

#include <cmath>

#include "edgesmdp/errors.hpp"

namespace edgesmdp {

int Occupancy::subchannels_used(const SystemConfig& cfg) const {
    int used = 0;
    for (int p = 0; p < cfg.priorities; ++p)
        for (int i = 1; i <= cfg.max_subchannels; ++i) {
            for (int j = 1; j <= cfg.max_vms; ++j) used += i * x(cfg, i, j, p);
            used += i * y(cfg, i, p);
        }
    return used;
}

int Occupancy::vms_used(const SystemConfig& cfg) const {
    int used = 0;
    for (int p = 0; p < cfg.priorities; ++p)
        for (int i = 1; i <= cfg.max_subchannels; ++i)
            for (int j = 1; j <= cfg.max_vms; ++j) used += j * x(cfg, i, j, p);
    return used;
}

bool Occupancy::within_capacity(const SystemConfig& cfg) const {
    for (int c : counts)
        if (c < 0) return false;
    return subchannels_used(cfg) <= cfg.subchannels && vms_used(cfg) <= cfg.vms;
}

bool Occupancy::is_empty() const {
    for (int c : counts)
        if (c != 0) return false;
    return true;
}

std::uint64_t Occupancy::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (int c : counts) {
        auto u = static_cast<std::uint32_t>(c);
        for (int k = 0; k < 4; ++k) {
            h ^= (u >> (8 * k)) & 0xffu;
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

std::string Event::to_string() const {
    switch (kind) {
        case EventKind::Arrival:
            return "A(p=" + std::to_string(priority + 1) + ")";
        case EventKind::EdgeDeparture:
            return "D(i=" + std::to_string(subchannels) + ",j=" + std::to_string(vms) +
                   ",p=" + std::to_string(priority + 1) + ")";
        case EventKind::CloudDeparture:
            return "F(i=" + std::to_string(subchannels) + ",p=" + std::to_string(priority + 1) + ")";
    }
    return "?";
}

std::string Action::to_string() const {
    switch (kind) {
        case ActionKind::Release:
            return "release";
        case ActionKind::Reject:
            return "reject";
        case ActionKind::EdgeAccept:
            return "edge(i=" + std::to_string(subchannels) + ",j=" + std::to_string(vms) + ")";
        case ActionKind::CloudAccept:
            return "cloud(i=" + std::to_string(subchannels) + ")";
    }
    return "?";
}

void check_state(const OccupancyState& s, const SystemConfig& cfg) {
    const auto& occ = s.occupancy;
    if (static_cast<int>(occ.counts.size()) != cfg.occupancy_slots())
        throw ModelViolation("occupancy vector has wrong length");
    for (int c : occ.counts)
        if (c < 0) throw ModelViolation("negative service count");
    if (!occ.within_capacity(cfg)) throw ModelViolation("occupancy exceeds subchannel or VM capacity");

    const Event& e = s.event;
    if (e.priority < 0 || e.priority >= cfg.priorities)
        throw ModelViolation("event priority out of range: " + e.to_string());
    switch (e.kind) {
        case EventKind::Arrival:
            break;
        case EventKind::EdgeDeparture:
            if (e.subchannels < 1 || e.subchannels > cfg.max_subchannels || e.vms < 1 ||
                e.vms > cfg.max_vms)
                throw ModelViolation("event class out of range: " + e.to_string());
            if (occ.x(cfg, e.subchannels, e.vms, e.priority) <= 0)
                throw ModelViolation("departure from empty class: " + e.to_string());
            break;
        case EventKind::CloudDeparture:
            if (e.subchannels < 1 || e.subchannels > cfg.max_subchannels)
                throw ModelViolation("event class out of range: " + e.to_string());
            if (occ.y(cfg, e.subchannels, e.priority) <= 0)
                throw ModelViolation("departure from empty class: " + e.to_string());
            break;
    }
}

std::vector<Action> feasible_actions(const OccupancyState& s, const SystemConfig& cfg) {
    check_state(s, cfg);
    if (!s.event.is_arrival()) return {Action::release()};

    const int free_sub = cfg.subchannels - s.occupancy.subchannels_used(cfg);
    const int free_vm = cfg.vms - s.occupancy.vms_used(cfg);
    std::vector<Action> out{Action::reject()};
    for (int i = 1; i <= cfg.max_subchannels; ++i)
        for (int j = 1; j <= cfg.max_vms; ++j)
            if (i <= free_sub && j <= free_vm) out.push_back(Action::edge(i, j));
    for (int i = 1; i <= cfg.max_subchannels; ++i)
        if (i <= free_sub) out.push_back(Action::cloud(i));
    return out;
}

bool is_feasible(const OccupancyState& s, const Action& a, const SystemConfig& cfg) {
    for (const auto& f : feasible_actions(s, cfg))
        if (f == a) return true;
    return false;
}

Occupancy apply_action(const OccupancyState& s, const Action& a, const SystemConfig& cfg) {
    if (!is_feasible(s, a, cfg))
        throw InfeasibleAction("action " + a.to_string() + " is not feasible on event " +
                               s.event.to_string());
    Occupancy post = s.occupancy;
    const Event& e = s.event;
    switch (a.kind) {
        case ActionKind::Release:
            if (e.kind == EventKind::EdgeDeparture)
                --post.x(cfg, e.subchannels, e.vms, e.priority);
            else
                --post.y(cfg, e.subchannels, e.priority);
            break;
        case ActionKind::Reject:
            break;
        case ActionKind::EdgeAccept:
            ++post.x(cfg, a.subchannels, a.vms, e.priority);
            break;
        case ActionKind::CloudAccept:
            ++post.y(cfg, a.subchannels, e.priority);
            break;
    }
    return post;
}

double lump_reward(const Action& a, const SystemConfig& cfg) {
    switch (a.kind) {
        case ActionKind::CloudAccept:
            return cfg.k_cloud;
        case ActionKind::EdgeAccept:
            return cfg.k_edge;
        case ActionKind::Reject:
            return -cfg.k_reject;
        case ActionKind::Release:
            return 0.0;
    }
    return 0.0;
}

double holding_cost_rate(const Occupancy& post, const SystemConfig& cfg) {
    double edge_vms = post.vms_used(cfg);
    double cloud_vms = 0;
    for (int p = 0; p < cfg.priorities; ++p)
        for (int i = 1; i <= cfg.max_subchannels; ++i) cloud_vms += cfg.max_vms * post.y(cfg, i, p);
    if (cfg.cost_pairing == CostPairing::AsPrinted)
        return cfg.cost_cloud * edge_vms + cfg.cost_edge * cloud_vms;
    return cfg.cost_edge * edge_vms + cfg.cost_cloud * cloud_vms;
}

double stage_reward(const Occupancy& post, const Action& a, double tau, const SystemConfig& cfg) {
    if (!(tau >= 0)) throw DomainError("sojourn time must be non-negative");
    return lump_reward(a, cfg) - holding_cost_rate(post, cfg) * tau;
}

double queue_weight(const Occupancy& post, int p, const SystemConfig& cfg) {
    double q = 0;
    for (int i = 1; i <= cfg.max_subchannels; ++i) {
        for (int j = 1; j <= cfg.max_vms; ++j) q += cfg.w_edge[i - 1][j - 1] * post.x(cfg, i, j, p);
        q += cfg.w_cloud[i - 1] * post.y(cfg, i, p);
    }
    return q;
}

std::vector<double> constraint_cost(const Occupancy& post, double tau, const SystemConfig& cfg) {
    if (!(tau >= 0)) throw DomainError("sojourn time must be non-negative");
    std::vector<double> g(cfg.priorities);
    for (int p = 0; p < cfg.priorities; ++p) g[p] = queue_weight(post, p, cfg) * tau;
    return g;
}

int feature_count(const SystemConfig& cfg) {
    return cfg.occupancy_slots() + cfg.priorities + cfg.occupancy_slots();
}

std::vector<double> encode_features(const OccupancyState& s, const SystemConfig& cfg) {
    std::vector<double> f(feature_count(cfg), 0.0);
    const int ne = cfg.edge_slots();
    const int n = cfg.occupancy_slots();
    for (int k = 0; k < ne; ++k) f[k] = s.occupancy.counts[k] / static_cast<double>(cfg.vms);
    for (int k = ne; k < n; ++k) f[k] = s.occupancy.counts[k] / static_cast<double>(cfg.subchannels);

    const int base = n;
    const Event& e = s.event;
    switch (e.kind) {
        case EventKind::Arrival:
            f[base + e.priority] = 1.0;
            break;
        case EventKind::EdgeDeparture:
            f[base + cfg.priorities + cfg.edge_slot(e.subchannels, e.vms, e.priority)] = 1.0;
            break;
        case EventKind::CloudDeparture:
            f[base + cfg.priorities + cfg.cloud_slot(e.subchannels, e.priority)] = 1.0;
            break;
    }
    return f;
}

int action_index(const Action& a, const SystemConfig& cfg) {
    const int b = cfg.max_subchannels;
    const int m = cfg.max_vms;
    switch (a.kind) {
        case ActionKind::Reject:
            return 0;
        case ActionKind::EdgeAccept:
            if (a.subchannels < 1 || a.subchannels > b || a.vms < 1 || a.vms > m)
                throw NotIndexable("edge action outside caps: " + a.to_string());
            return 1 + (a.subchannels - 1) * m + (a.vms - 1);
        case ActionKind::CloudAccept:
            if (a.subchannels < 1 || a.subchannels > b)
                throw NotIndexable("cloud action outside caps: " + a.to_string());
            return 1 + b * m + (a.subchannels - 1);
        case ActionKind::Release:
            break;
    }
    throw NotIndexable("release is not a decision action");
}

Action index_action(int k, const SystemConfig& cfg) {
    const int b = cfg.max_subchannels;
    const int m = cfg.max_vms;
    if (k == 0) return Action::reject();
    if (k >= 1 && k <= b * m) return Action::edge(1 + (k - 1) / m, 1 + (k - 1) % m);
    if (k > b * m && k <= b * m + b) return Action::cloud(k - b * m);
    throw NotIndexable("action index out of range: " + std::to_string(k));
}

std::vector<bool> action_mask(const OccupancyState& s, const SystemConfig& cfg) {
    std::vector<bool> mask(cfg.action_count(), false);
    if (!s.event.is_arrival()) return mask;
    for (const auto& a : feasible_actions(s, cfg)) mask[action_index(a, cfg)] = true;
    return mask;
}

}  // namespace edgesmdp
