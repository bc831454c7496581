// Acceptance checks, one PASS/FAIL line per criterion. Exit status is the number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "edgesmdp/config.hpp"
#include "edgesmdp/env.hpp"
#include "edgesmdp/learner.hpp"
#include "edgesmdp/model.hpp"
#include "edgesmdp/oracle.hpp"
#include "edgesmdp/policy_net.hpp"
#include "test_support.hpp"

using namespace edgesmdp;

namespace {

const std::string kE1 = std::string(EDGESMDP_SOURCE_DIR) + "/configs/e1.json";

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

std::vector<int> arrival_states(const ExplicitModel& m) {
    std::vector<int> out;
    for (int s = 0; s < m.size(); ++s)
        if (m.states[s].event.is_arrival()) out.push_back(s);
    return out;
}

Outcome gradients() {
    const auto cfg = testing::sized(3, 3, 2, 2, 2);
    const int A = cfg.action_count();
    double worst = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        RngStream rng(1000 + seed);
        const Mlp theta = make_policy_net(cfg, rng);
        Mlp w = make_value_net(cfg, rng);
        // Freshly built value nets start with a zero output layer; perturb it so every layer has signal.
        for (double& p : w.params()) p += 0.1 * (2 * rng.uniform() - 1);
        std::vector<double> f(feature_count(cfg));
        for (double& v : f) v = 2 * rng.uniform() - 1;
        std::vector<bool> mask(A);
        for (int k = 0; k < A; ++k) mask[k] = k == 0 || rng.uniform() < 0.6;
        for (int k = 0; k < A; ++k) {
            if (!mask[k]) continue;
            auto logp = [&](const Mlp& net) { return std::log(masked_softmax(preferences(net, f), mask).probs[k]); };
            worst = std::max(worst, testing::max_relative_fd_error(theta, logp, grad_log_policy(theta, f, k, mask)));
        }
        auto v = [&](const Mlp& net) { return value_estimate(net, f); };
        worst = std::max(worst, testing::max_relative_fd_error(w, v, grad_value(w, f)));
    }
    return {worst < 1e-4, fmt("max relative error %.2e over 20 seeds", worst)};
}

Outcome kernel() {
    const auto cfg = parse_config(kE1).config;
    const auto m = build_model(cfg);
    Environment env(cfg, 2024);
    constexpr int n = 100000;
    double worst = 0;  // in standard deviations
    int checks = 0;
    for (int s = 0; s < m.size(); ++s)
        for (const auto& row : m.rows[s]) {
            std::map<int, int> hits;
            double tau_sum = 0, tau_sq = 0;
            for (int k = 0; k < n; ++k) {
                const auto t = env.step(m.states[s], row.action);
                ++hits[m.state_index(t.s_next)];
                tau_sum += t.tau;
                tau_sq += t.tau * t.tau;
            }
            int mass = 0;
            for (const auto& [to, pr] : row.next) {
                mass += hits[to];
                const double sigma = std::sqrt(pr * (1 - pr) / n);
                const double dev = std::abs(hits[to] / double(n) - pr);
                worst = std::max(worst, sigma > 0 ? dev / sigma : (dev > 0 ? INFINITY : 0.0));
                ++checks;
            }
            if (mass != n) worst = INFINITY;  // landed outside the analytic support
            const double mean = tau_sum / n;
            const double sd = std::sqrt((tau_sq / n - mean * mean) / n);
            worst = std::max(worst, std::abs(mean - row.tau_bar) / sd);
            ++checks;
        }
    return {worst <= 3.0, fmt("%.0f checks, worst deviation %.2f sigma", checks, worst)};
}

Outcome always_reject() {
    const auto cfg = parse_config(kE1).config;
    PolicyFn reject = [&](const OccupancyState& s) {
        auto p = std::vector<double>(cfg.action_count(), 0.0);
        p[0] = s.event.is_arrival() ? 1.0 : 0.0;
        return p;
    };
    const auto rep = evaluate_policy(reject, cfg, 7, 1000000);
    const bool ok = std::abs(rep.J_hat + 0.5) <= rep.J_half_width && rep.G_hat[0] == 0.0;
    return {ok, fmt("J_hat %.5f +/- %.5f, G_hat %.3g", rep.J_hat, rep.J_half_width, rep.G_hat[0])};
}

Outcome lp_optimality() {
    const auto m = build_model(parse_config(kE1).config);
    const auto slack = solve_constrained_lp(m, {1e6});
    double best = -INFINITY;
    bool dominated = true;
    int count = 0;
    for_each_deterministic_policy(m, [&](const StatePolicy& p) {
        const double J = policy_evaluation(m, p).J;
        best = std::max(best, J);
        dominated = dominated && slack.J_star >= J - 1e-9;
        ++count;
    });
    const auto zero = solve_constrained_lp(m, {0.0});
    bool rejects = true;
    for (int s : arrival_states(m)) rejects = rejects && std::abs(zero.policy[s][0] - 1.0) <= 1e-9;
    const bool ok = dominated && rejects && std::abs(zero.J_star + 0.5) <= 1e-9;
    return {ok, fmt("slack J* %.10f vs best of %.0f deterministic %.10f; alpha=0 gives J* %.10f", slack.J_star, count,
                    best, zero.J_star)};
}

// Learner runs on E1 with the bound at 80% of the unconstrained optimum's constraint cost.
struct LearnerRun {
    double J = 0, G = 0, gamma = 0;
    double gamma_min = INFINITY, gamma_max = -INFINITY;
    double drift = 0, range = 0;
};

struct LearnerBatch {
    double alpha = 0, J_star = 0, gamma_cap = 0;
    std::vector<LearnerRun> runs;
};

LearnerBatch learner_batch() {
    auto cfg = parse_config(kE1).config;
    const auto m = build_model(cfg);
    const double g_free = solve_constrained_lp(m, {1e6}).G_star[0];
    cfg.alpha = {0.8 * g_free};
    LearnerBatch batch;
    batch.alpha = cfg.alpha[0];
    batch.J_star = solve_constrained_lp(m, cfg.alpha).J_star;
    batch.gamma_cap = cfg.learner.gamma_max;

    constexpr long long steps = 200000, span = 10000;
    batch.runs.resize(10);
    std::vector<std::thread> pool;
    const unsigned width = std::max(1u, std::thread::hardware_concurrency());
    auto work = [&](unsigned lane) {
        for (std::size_t i = lane; i < batch.runs.size(); i += width) {
            LearnerRun& run = batch.runs[i];
            std::vector<double> gam;
            gam.reserve(steps);
            TrainHooks hooks;
            hooks.on_step = [&](const LearnerState& ls, const Transition&, double) {
                run.gamma_min = std::min(run.gamma_min, ls.gamma[0]);
                run.gamma_max = std::max(run.gamma_max, ls.gamma[0]);
                gam.push_back(ls.gamma[0]);
            };
            const auto res = train(cfg, i + 1, steps, hooks);
            run.J = res.metrics.back().J_window;
            run.G = res.metrics.back().G_window[0];
            run.gamma = res.state.gamma[0];

            std::vector<double> avg;  // avg[k] = mean of gamma over steps k .. k+span-1
            double sum = 0;
            for (long long n = 0; n < steps; ++n) {
                sum += gam[n];
                if (n >= span) sum -= gam[n - span];
                if (n + 1 >= span) avg.push_back(sum / span);
            }
            const auto [lo, hi] = std::minmax_element(avg.begin(), avg.end());
            run.range = *hi - *lo;
            const std::size_t quarter = static_cast<std::size_t>(3 * steps / 4 - span + 1);
            run.drift = std::abs(avg.back() - avg[quarter]);
        }
    };
    for (unsigned lane = 0; lane < width; ++lane) pool.emplace_back(work, lane);
    for (auto& t : pool) t.join();
    return batch;
}

Outcome convergence(const LearnerBatch& b) {
    int good = 0;
    std::ostringstream runs;
    for (const auto& r : b.runs) {
        const bool ok = std::abs(r.J - b.J_star) <= 0.1 * b.J_star && r.G <= b.alpha + 0.05;
        good += ok;
        runs << fmt(" %.3f/%.3f", r.J, r.G) << (ok ? "" : "x");
    }
    return {good >= 8, fmt("%.0f of 10 seeds within tolerance (J* %.4f, alpha %.4f); J/G:", good, b.J_star, b.alpha) +
                           runs.str()};
}

Outcome multiplier(const LearnerBatch& b) {
    bool bounded = true, stable = true;
    double worst = 0;
    for (const auto& r : b.runs) {
        bounded = bounded && r.gamma_min >= 0 && r.gamma_max <= b.gamma_cap;
        const double rel = r.range > 0 ? r.drift / r.range : 0.0;
        worst = std::max(worst, rel);
        stable = stable && rel < 0.1;
    }
    std::ostringstream g;
    for (const auto& r : b.runs) g << fmt(" %.2f", r.gamma);
    return {bounded && stable,
            std::string(bounded ? "bounded" : "OUT OF BOUNDS") +
                fmt(", worst last-quarter drift %.1f%% of range; final gamma:", 100 * worst) + g.str()};
}

Outcome residuals() {
    const auto m = build_model(parse_config(kE1).config);
    const auto lp = solve_constrained_lp(m, {0.32});
    double bell = 0, pois = 0;
    for (Variant var : {Variant::Literal, Variant::SmdpCorrected}) {
        const auto rvi = relative_value_iteration(m, lp.multipliers, var);
        bell = std::max(bell, bellman_residual(m, lp.multipliers, rvi.v, rvi.beta, var));
        const auto ps = solve_poisson(m, lp.policy, lp.multipliers, var);
        pois = std::max(pois, poisson_residual(m, lp.policy, lp.multipliers, ps.v, ps.beta, var));
    }
    return {bell < 1e-8 && pois < 1e-6, fmt("Bellman residual %.2e, Poisson residual %.2e", bell, pois)};
}

Outcome fuzz() {
    // A moderate instance with tight projection boxes so both clips are exercised.
    auto cfg = testing::sized(4, 4, 2, 2, 2);
    cfg.alpha = {0.05, 0.05};
    cfg.learner.theta_max = 0.05;
    cfg.learner.gamma_max = 0.5;
    cfg.learner.schedule.b0 = 1.0;
    cfg.learner.schedule.c0 = 5.0;
    long long violations = 0, theta_clipped = 0, gamma_capped = 0, n = 0;
    TrainHooks hooks;
    hooks.on_step = [&](const LearnerState& ls, const Transition& t, double) {
        ++n;
        if (!t.post.within_capacity(cfg) || !t.s_next.occupancy.within_capacity(cfg)) ++violations;
        if (t.s.event.is_arrival() && !action_mask(t.s, cfg)[action_index(t.a, cfg)]) ++violations;
        if (!t.s.event.is_arrival() && t.a.kind != ActionKind::Release) ++violations;
        if (t.s_next.event.is_arrival()) {
            const auto mask = action_mask(t.s_next, cfg);
            const auto pi = masked_softmax(preferences(ls.theta, encode_features(t.s_next, cfg)), mask);
            double total = 0;
            for (std::size_t k = 0; k < pi.probs.size(); ++k) {
                total += pi.probs[k];
                if (!mask[k] && pi.probs[k] != 0.0) ++violations;
                if (pi.probs[k] < 0) ++violations;
            }
            if (std::abs(total - 1.0) > 1e-12) ++violations;
        }
        for (double p : ls.theta.flatten()) {
            if (std::abs(p) > cfg.learner.theta_max) ++violations;
            theta_clipped += std::abs(p) == cfg.learner.theta_max;
        }
        for (double g : ls.gamma) {
            if (g < 0 || g > cfg.learner.gamma_max) ++violations;
            gamma_capped += g == cfg.learner.gamma_max;
        }
    };
    train(cfg, 5, 1000000, hooks);
    return {violations == 0 && n == 1000000,
            fmt("%.0f transitions, %.0f violations (clip active on %.0f parameter and %.0f multiplier samples)",
                static_cast<double>(n), static_cast<double>(violations), static_cast<double>(theta_clipped),
                static_cast<double>(gamma_capped))};
}

Outcome reproducibility() {
    const auto cfg = parse_config(kE1).config;
    auto csv = [&] {
        std::ostringstream out;
        write_metrics_header(out, cfg);
        for (const auto& row : train(cfg, 42, 50000).metrics) write_metrics_row(out, row);
        return out.str();
    };
    const std::string first = csv(), second = csv();
    return {first == second && !first.empty(), fmt("%.0f bytes, identical", static_cast<double>(first.size()))};
}

}  // namespace

int main() {
    int failures = 0;
    auto report = [&](int id, const char* name, const std::function<Outcome()>& check) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = check();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failures += !out.pass;
        std::printf("criterion %d %s: %s (%s; %.1fs)\n", id, name, out.pass ? "PASS" : "FAIL", out.detail.c_str(), secs);
        std::fflush(stdout);
    };

    report(1, "gradient correctness", gradients);
    report(2, "kernel agreement", kernel);
    report(3, "always-reject closed form", always_reject);
    report(4, "LP optimality", lp_optimality);

    LearnerBatch batch;
    report(5, "learner convergence", [&] {
        batch = learner_batch();
        return convergence(batch);
    });
    report(6, "multiplier behavior", [&] {
        if (batch.runs.empty()) return Outcome{false, "no learner runs"};
        return multiplier(batch);
    });

    report(7, "Bellman and Poisson residuals", residuals);
    report(8, "invariant fuzzing", fuzz);
    report(9, "reproducibility", reproducibility);
    std::printf("%d of 9 criteria failed\n", failures);
    return failures;
}
