#include "edgesmdp/learner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>

#include <boost/math/distributions/students_t.hpp>

#include "edgesmdp/errors.hpp"
#include "edgesmdp/model.hpp"

namespace edgesmdp {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

bool all_finite(std::span<const double> v) {
    double s = 0;
    for (double x : v) s += x;
    return std::isfinite(s);
}

// Sliding sums over the last `size` epochs.
class Window {
public:
    Window(long long size, int priorities) : size_(size), g_sum_(priorities, 0.0) {}

    void push(const Transition& t) {
        items_.push_back({t.r, t.tau, t.g});
        r_sum_ += t.r;
        tau_sum_ += t.tau;
        for (std::size_t p = 0; p < g_sum_.size(); ++p) g_sum_[p] += t.g[p];
        if (static_cast<long long>(items_.size()) > size_) {
            const auto& old = items_.front();
            r_sum_ -= old.r;
            tau_sum_ -= old.tau;
            for (std::size_t p = 0; p < g_sum_.size(); ++p) g_sum_[p] -= old.g[p];
            items_.pop_front();
        }
    }

    double J() const { return tau_sum_ > 0 ? r_sum_ / tau_sum_ : 0.0; }
    std::vector<double> G() const {
        std::vector<double> out(g_sum_.size(), 0.0);
        if (tau_sum_ > 0)
            for (std::size_t p = 0; p < out.size(); ++p) out[p] = g_sum_[p] / tau_sum_;
        return out;
    }

private:
    struct Item {
        double r, tau;
        std::vector<double> g;
    };
    long long size_;
    std::deque<Item> items_;
    double r_sum_ = 0, tau_sum_ = 0;
    std::vector<double> g_sum_;
};

void put_number(std::ostream& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
}

}  // namespace

StepSizes step_sizes(long long n, const StepSchedule& s) {
    if (!(0.5 < s.ea && s.ea < s.eb && s.eb < s.ec && s.ec <= 1.0))
        throw ConfigError({"learner.ea/eb/ec: requires 0.5 < ea < eb < ec <= 1"});
    if (!(s.a0 > 0 && s.b0 > 0 && s.c0 > 0 && s.C > 0))
        throw ConfigError({"learner: step-size scales and C must be positive"});
    if (n < 0) throw DomainError("step counter must be non-negative");
    const double base = 1.0 + static_cast<double>(n);
    const double a = s.a0 / std::pow(base, s.ea);
    return {a, s.b0 / std::pow(base, s.eb), s.c0 / std::pow(base, s.ec), s.C * a};
}

LearnerState initial_learner_state(const SystemConfig& cfg, std::uint64_t seed) {
    RngStream init(splitmix64(seed));
    LearnerState ls;
    ls.theta = make_policy_net(cfg, init);
    ls.w = make_value_net(cfg, init);
    ls.traces = Traces::zeros(ls.w, ls.theta);
    ls.gamma.assign(cfg.priorities, 0.0);
    ls.Y.assign(cfg.priorities, 0.0);
    return ls;
}

double td_error(const Transition& t, const LearnerState& ls, const SystemConfig& cfg, double v_s, double v_next) {
    double delta = t.r + v_next - v_s;
    if (cfg.learner.smdp_correction) {
        for (int p = 0; p < cfg.priorities; ++p) delta -= ls.gamma[p] * (t.g[p] - cfg.alpha[p] * t.tau);
        delta -= ls.R_bar * t.tau;
    } else {
        for (int p = 0; p < cfg.priorities; ++p) delta -= ls.gamma[p] * (t.g[p] - cfg.alpha[p]);
        delta -= ls.R_bar;
    }
    return delta;
}

double td_error(const Transition& t, const LearnerState& ls, const SystemConfig& cfg) {
    return td_error(t, ls, cfg, value_estimate(ls.w, encode_features(t.s, cfg)),
                    value_estimate(ls.w, encode_features(t.s_next, cfg)));
}

void sa_update(LearnerState& ls, const Transition& t, double delta, const SystemConfig& cfg) {
    const auto& L = cfg.learner;
    if (!std::isfinite(delta)) throw DivergenceError("non-finite TD error", ls.n);
    const StepSizes st = step_sizes(ls.n, L.schedule);
    const auto features = encode_features(t.s, cfg);

    ls.R_bar += st.d * delta;

    const auto gv = grad_value(ls.w, features);
    auto& zw = ls.traces.z_w;
    for (std::size_t k = 0; k < zw.size(); ++k) zw[k] = L.lam_w * zw[k] + gv[k];

    // Forced releases and single-option arrivals contribute no score term.
    auto& zt = ls.traces.z_theta;
    const bool decision = t.a.kind != ActionKind::Release;
    std::vector<bool> mask;
    if (decision) mask = action_mask(t.s, cfg);
    if (decision && std::count(mask.begin(), mask.end(), true) > 1) {
        const auto gl = grad_log_policy(ls.theta, features, action_index(t.a, cfg), mask);
        for (std::size_t k = 0; k < zt.size(); ++k) zt[k] = L.lam_theta * zt[k] + gl[k];
    } else {
        for (double& z : zt) z *= L.lam_theta;
    }

    auto w = ls.w.params();
    for (std::size_t k = 0; k < w.size(); ++k) w[k] += st.a * delta * zw[k];

    auto th = ls.theta.params();
    for (std::size_t k = 0; k < th.size(); ++k)
        th[k] = std::clamp(th[k] + st.b * delta * zt[k], -L.theta_max, L.theta_max);

    for (int p = 0; p < cfg.priorities; ++p) {
        const double bound = L.smdp_correction ? cfg.alpha[p] * ls.tau_bar : cfg.alpha[p];
        ls.gamma[p] = std::clamp(ls.gamma[p] + st.c * (ls.Y[p] - bound), 0.0, L.gamma_max);
        ls.Y[p] += st.a * (t.g[p] - ls.Y[p]);
    }
    ls.tau_bar += st.a * (t.tau - ls.tau_bar);
    ++ls.n;

    bool finite = std::isfinite(ls.R_bar) && std::isfinite(ls.tau_bar) && all_finite(w) && all_finite(th);
    for (int p = 0; p < cfg.priorities; ++p) finite = finite && std::isfinite(ls.gamma[p]) && std::isfinite(ls.Y[p]);
    if (!finite) throw DivergenceError("learner diverged at step " + std::to_string(ls.n), ls.n);
}

TrainResult train(const SystemConfig& cfg, std::uint64_t seed, long long n_steps, const TrainHooks& hooks) {
    TrainResult out{initial_learner_state(cfg, seed), {}};
    if (n_steps <= 0) return out;

    const auto& L = cfg.learner;
    Environment env(cfg, seed);
    LearnerState& ls = out.state;
    Window window(L.window, cfg.priorities);
    double delta_sq = 0;
    long long delta_count = 0;

    OccupancyState s = env.reset();
    for (long long step = 0; step < n_steps; ++step) {
        Action a = Action::release();
        if (s.event.is_arrival()) {
            const auto features = encode_features(s, cfg);
            const auto pi = masked_softmax(preferences(ls.theta, features), action_mask(s, cfg));
            a = index_action(sample_action(pi, env.rng()), cfg);
        }
        Transition t = env.step(s, a);
        const double delta = td_error(t, ls, cfg);
        sa_update(ls, t, delta, cfg);

        window.push(t);
        delta_sq += delta * delta;
        ++delta_count;
        if (hooks.on_step) hooks.on_step(ls, t, delta);

        if (ls.n % L.metric_cadence == 0 || step + 1 == n_steps) {
            out.metrics.push_back(MetricRow{ls.n, ls.R_bar, window.J(), ls.gamma, ls.Y, window.G(),
                                            std::sqrt(delta_sq / static_cast<double>(delta_count))});
            delta_sq = 0;
            delta_count = 0;
        }
        if (hooks.on_checkpoint && L.checkpoint_every > 0 && ls.n % L.checkpoint_every == 0)
            hooks.on_checkpoint(ls);
        s = std::move(t.s_next);
    }
    return out;
}

void write_metrics_header(std::ostream& out, const SystemConfig& cfg) {
    out << "n,R_bar,J_window";
    for (int p = 1; p <= cfg.priorities; ++p) out << ",gamma_" << p;
    for (int p = 1; p <= cfg.priorities; ++p) out << ",Y_" << p;
    for (int p = 1; p <= cfg.priorities; ++p) out << ",G_window_" << p;
    out << ",delta_rms\n";
}

void write_metrics_row(std::ostream& out, const MetricRow& row) {
    out << row.n << ',';
    put_number(out, row.R_bar);
    out << ',';
    put_number(out, row.J_window);
    for (double v : row.gamma) out << ',', put_number(out, v);
    for (double v : row.Y) out << ',', put_number(out, v);
    for (double v : row.G_window) out << ',', put_number(out, v);
    out << ',';
    put_number(out, row.delta_rms);
    out << '\n';
}

PolicyFn network_policy(const Mlp& theta, const SystemConfig& cfg) {
    return [theta, cfg](const OccupancyState& s) {
        return masked_softmax(preferences(theta, encode_features(s, cfg)), action_mask(s, cfg)).probs;
    };
}

EvalReport evaluate_policy(const PolicyFn& policy, const SystemConfig& cfg, std::uint64_t seed, long long horizon,
                           int batches) {
    if (horizon < 1) throw DomainError("evaluation horizon must be at least one epoch");
    batches = static_cast<int>(std::clamp<long long>(batches, 1, horizon));
    Environment env(cfg, seed);
    const int P = cfg.priorities;

    std::vector<double> br(batches, 0.0), bt(batches, 0.0);
    std::vector<std::vector<double>> bg(batches, std::vector<double>(P, 0.0));

    OccupancyState s = env.reset();
    for (long long step = 0; step < horizon; ++step) {
        Action a = Action::release();
        if (s.event.is_arrival()) {
            PolicyOutput out{policy(s), action_mask(s, cfg)};
            for (std::size_t k = 0; k < out.probs.size(); ++k)
                if (out.probs[k] > 0 && !out.mask[k])
                    throw InfeasibleAction("policy puts mass on infeasible action index " + std::to_string(k));
            a = index_action(sample_action(out, env.rng()), cfg);
        }
        Transition t = env.step(s, a);
        const auto b = static_cast<int>(step * batches / horizon);
        br[b] += t.r;
        bt[b] += t.tau;
        for (int p = 0; p < P; ++p) bg[b][p] += t.g[p];
        s = std::move(t.s_next);
    }

    EvalReport rep;
    rep.horizon = horizon;
    rep.batches = batches;
    double r_sum = 0;
    std::vector<double> g_sum(P, 0.0);
    for (int b = 0; b < batches; ++b) {
        r_sum += br[b];
        rep.total_time += bt[b];
        for (int p = 0; p < P; ++p) g_sum[p] += bg[b][p];
    }
    rep.J_hat = r_sum / rep.total_time;
    rep.G_hat.resize(P);
    for (int p = 0; p < P; ++p) rep.G_hat[p] = g_sum[p] / rep.total_time;

    rep.G_half_width.assign(P, 0.0);
    if (batches >= 2) {
        boost::math::students_t dist(batches - 1);
        const double tq = boost::math::quantile(boost::math::complement(dist, 0.025));
        auto half_width = [&](auto batch_value) {
            double mean = 0, sq = 0;
            for (int b = 0; b < batches; ++b) mean += batch_value(b);
            mean /= batches;
            for (int b = 0; b < batches; ++b) sq += (batch_value(b) - mean) * (batch_value(b) - mean);
            return tq * std::sqrt(sq / (batches - 1) / batches);
        };
        rep.J_half_width = half_width([&](int b) { return br[b] / bt[b]; });
        for (int p = 0; p < P; ++p) rep.G_half_width[p] = half_width([&](int b) { return bg[b][p] / bt[b]; });
    }
    return rep;
}

EvalReport evaluate_policy(const Mlp& theta, const SystemConfig& cfg, std::uint64_t seed, long long horizon) {
    return evaluate_policy(network_policy(theta, cfg), cfg, seed, horizon);
}

}  // namespace edgesmdp
