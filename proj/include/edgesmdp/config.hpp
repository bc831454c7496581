#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace edgesmdp {

enum class CostPairing {
    ByLocation,  // c_e bills edge VMs, c_c bills cloud VMs
    AsPrinted,   // c_c bills edge VMs, c_e bills cloud VMs
};

// Power-law step sizes a(n) = a0/(1+n)^ea, b(n), c(n) likewise, d(n) = C*a(n).
struct StepSchedule {
    double a0 = 0.05;
    double b0 = 0.01;
    double c0 = 0.01;
    double ea = 0.55;
    double eb = 0.70;
    double ec = 0.85;
    double C = 1.0;
};

struct LearnerConfig {
    StepSchedule schedule;
    double lam_w = 0.5;
    double lam_theta = 0.5;
    double theta_max = 50.0;
    double gamma_max = 100.0;
    std::vector<int> policy_hidden{64, 64};
    std::vector<int> value_hidden{64, 64};
    std::uint64_t seed = 1;
    bool smdp_correction = false;
    long long metric_cadence = 100;
    long long window = 10000;
    long long checkpoint_every = 0;  // 0 disables periodic checkpoints
};

// Per-service completion rate override for one (location, priority, i, j) class.
struct RateOverride {
    bool edge = true;
    int priority = 0;  // 0-based
    int subchannels = 1;
    int vms = 1;       // ignored for cloud
    double rate = 1.0;
};

struct SystemConfig {
    int subchannels = 1;      // B
    int vms = 1;              // M
    int max_subchannels = 1;  // b
    int max_vms = 1;          // m
    int priorities = 1;       // P

    std::vector<double> arrival_rate;  // lambda[p]
    std::vector<double> mu_edge;       // per allocated VM
    std::vector<double> mu_cloud;      // per allocated VM (cloud services hold m VMs)

    double k_cloud = 0;   // k_c
    double k_edge = 0;    // k_e
    double k_reject = 0;  // k_r
    double cost_cloud = 0;  // c_c, per VM per unit time
    double cost_edge = 0;   // c_e
    CostPairing cost_pairing = CostPairing::ByLocation;

    std::vector<std::vector<double>> w_edge;  // [i-1][j-1]
    std::vector<double> w_cloud;              // [i-1]
    std::vector<double> alpha;                // [p]

    std::vector<RateOverride> rate_overrides;

    LearnerConfig learner;

    int edge_slots() const { return max_subchannels * max_vms * priorities; }
    int cloud_slots() const { return max_subchannels * priorities; }
    int occupancy_slots() const { return edge_slots() + cloud_slots(); }
    int action_count() const { return 1 + max_subchannels * max_vms + max_subchannels; }

    // Canonical flat positions: x is (p, i, j) row-major, y follows as (p, i).
    int edge_slot(int i, int j, int p) const {
        return (p * max_subchannels + (i - 1)) * max_vms + (j - 1);
    }
    int cloud_slot(int i, int p) const { return edge_slots() + p * max_subchannels + (i - 1); }

    // Completion rate of a single service in class (i, j, p) at the edge.
    double edge_service_rate(int i, int j, int p) const;
    double cloud_service_rate(int i, int p) const;

    // Throws ConfigError listing every violated invariant.
    void validate() const;  // throws ConfigError listing every issue
    std::vector<std::string> validation_issues() const;
};

struct ParsedConfig {
    SystemConfig config;
    std::string raw;   // file bytes, verbatim
    std::string hash;  // FNV-1a 64 of raw, hex
};

// Strict JSON: unknown keys are rejected, model constants have no defaults.
SystemConfig config_from_json_text(const std::string& text);
ParsedConfig parse_config(const std::string& path);

std::string fnv1a_hex(const std::string& bytes);

}  // namespace edgesmdp
