#pragma once

// Lagrangian actor-critic with eligibility traces for the constrained
// average-reward SMDP. Four coupled recursions run on separated timescales:
// critic w and constraint estimates Y on a(n), average reward on d(n) = C a(n),
// actor theta on b(n), multipliers gamma on c(n), with b/a -> 0 and c/b -> 0.

#include <cstdint>
#include <functional>
#include <ostream>
#include <vector>

#include "edgesmdp/config.hpp"
#include "edgesmdp/env.hpp"
#include "edgesmdp/mlp.hpp"
#include "edgesmdp/policy_net.hpp"

namespace edgesmdp {

struct StepSizes {
    double a, b, c, d;
};

// Throws ConfigError unless 0.5 < ea < eb < ec <= 1 and all scales are positive.
StepSizes step_sizes(long long n, const StepSchedule& sched);

struct LearnerState {
    Mlp theta;
    Mlp w;
    Traces traces;
    double R_bar = 0;
    std::vector<double> gamma;
    std::vector<double> Y;
    // Running mean sojourn per epoch; only read with smdp_correction. Starts at
    // 1 so both TD variants coincide on unit-sojourn models.
    double tau_bar = 1.0;
    long long n = 0;
};

LearnerState initial_learner_state(const SystemConfig& cfg, std::uint64_t seed);

// Paper-literal form
//   r - sum_p gamma_p (g_p - alpha_p) - R_bar + v(s') - v(s)
// or, with cfg.learner.smdp_correction, the sojourn-weighted form
//   r - sum_p gamma_p (g_p - alpha_p tau) - R_bar tau + v(s') - v(s).
double td_error(const Transition& t, const LearnerState& ls, const SystemConfig& cfg);
double td_error(const Transition& t, const LearnerState& ls, const SystemConfig& cfg, double v_s, double v_next);

// One stochastic-approximation step, in place. Throws DivergenceError if any
// quantity becomes non-finite.
void sa_update(LearnerState& ls, const Transition& t, double delta, const SystemConfig& cfg);

struct MetricRow {
    long long n = 0;
    double R_bar = 0;
    double J_window = 0;
    std::vector<double> gamma;
    std::vector<double> Y;
    std::vector<double> G_window;
    double delta_rms = 0;
};

struct TrainHooks {
    std::function<void(const LearnerState&, const Transition&, double delta)> on_step;
    std::function<void(const LearnerState&)> on_checkpoint;
};

struct TrainResult {
    LearnerState state;
    std::vector<MetricRow> metrics;
};

// Deterministic given (cfg, seed). Metric rows every learner.metric_cadence
// epochs plus one at the final step.
TrainResult train(const SystemConfig& cfg, std::uint64_t seed, long long n_steps, const TrainHooks& hooks = {});

void write_metrics_header(std::ostream& out, const SystemConfig& cfg);
void write_metrics_row(std::ostream& out, const MetricRow& row);

// Stationary randomized policy: action-index probabilities for an arrival state.
using PolicyFn = std::function<std::vector<double>(const OccupancyState&)>;

PolicyFn network_policy(const Mlp& theta, const SystemConfig& cfg);

struct EvalReport {
    double J_hat = 0;
    std::vector<double> G_hat;
    long long horizon = 0;
    double total_time = 0;
    double J_half_width = 0;
    std::vector<double> G_half_width;
    int batches = 0;
};

// Ratio estimators sum(r)/sum(tau), sum(g_p)/sum(tau) over `horizon` epochs
// with 95% batch-means half-widths.
EvalReport evaluate_policy(const PolicyFn& policy, const SystemConfig& cfg, std::uint64_t seed, long long horizon,
                           int batches = 20);
EvalReport evaluate_policy(const Mlp& theta, const SystemConfig& cfg, std::uint64_t seed, long long horizon);

}  // namespace edgesmdp
