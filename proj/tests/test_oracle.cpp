#include <doctest.h>

#include <cmath>
#include <set>

#include "edgesmdp/env.hpp"
#include "edgesmdp/errors.hpp"
#include "edgesmdp/oracle.hpp"
#include "test_support.hpp"

using namespace edgesmdp;
using edgesmdp::testing::e1;
using edgesmdp::testing::sized;

namespace {

// Single-slot instance under "accept to the edge with probability q when
// idle": a two-state birth-death process in continuous time.
struct HandSolution {
    double J, G;
};

HandSolution edge_mixture(double q, double lambda = 1.0, double mu = 1.5, double ke = 2.0, double kr = 0.5,
                          double ce = 0.1) {
    const double busy = lambda * q / (lambda * q + mu);
    const double accepted = (1 - busy) * lambda * q;
    const double rejected = (1 - busy) * lambda * (1 - q) + busy * lambda;
    return {ke * accepted - kr * rejected - ce * busy, busy};
}

HandSolution always_cloud(double lambda = 1.0, double mu = 1.0, double kc = 1.0, double kr = 0.5, double cc = 0.05) {
    const double busy = lambda / (lambda + mu);
    return {kc * (1 - busy) * lambda - kr * busy * lambda - cc * busy, busy};
}

int find_state(const ExplicitModel& m, std::vector<int> counts, Event e) {
    return m.state_index(OccupancyState{Occupancy{std::move(counts)}, e});
}

StatePolicy fixed_choice(const ExplicitModel& m, const Action& at_idle) {
    std::vector<int> choice(m.size(), 0);
    const int idle = find_state(m, {0, 0}, Event::arrival(0));
    choice[idle] = m.action_position(idle, at_idle);
    return deterministic_policy(m, choice);
}

}  // namespace

TEST_CASE("state enumeration") {
    const auto states = enumerate_states(e1());
    CHECK(states.size() == 5);
    CHECK(count_states(e1()) == 5);

    const auto cfg = sized(2, 1, 1, 1, 1);
    std::set<Occupancy> occ;
    for (const auto& s : enumerate_states(cfg)) occ.insert(s.occupancy);
    CHECK(occ.size() == 5);

    for (const auto& c : {sized(4, 3, 2, 2, 2), sized(5, 5, 2, 3, 1)}) {
        const auto all = enumerate_states(c);
        std::set<OccupancyState> uniq(all.begin(), all.end());
        CHECK(uniq.size() == all.size());
        CHECK(count_states(c) == all.size());
        for (const auto& s : all) CHECK_NOTHROW(check_state(s, c));
    }

    CHECK_THROWS_AS(enumerate_states(sized(20, 20, 4, 4, 2)), TooLarge);
    CHECK(count_states(sized(20, 20, 4, 4, 2)) > 1e5);
}

TEST_CASE("analytic kernel rows") {
    const auto m = build_model(e1());
    const int busy_arrival = find_state(m, {1, 0}, Event::arrival(0));
    const auto& row = m.rows[busy_arrival][m.action_position(busy_arrival, Action::reject())];
    CHECK(row.tau_bar == doctest::Approx(0.4));
    for (const auto& [to, pr] : row.next) {
        if (m.states[to].event.is_arrival())
            CHECK(pr == doctest::Approx(0.4));
        else
            CHECK(pr == doctest::Approx(0.6));
    }
    CHECK(row.r_bar == doctest::Approx(-0.5 - 0.1 * 0.4));
    CHECK(row.g_bar[0] == doctest::Approx(0.4));

    const int idle = find_state(m, {0, 0}, Event::arrival(0));
    const auto& rej = m.rows[idle][m.action_position(idle, Action::reject())];
    CHECK(rej.tau_bar == 1.0);
    REQUIRE(rej.next.size() == 1);
    CHECK(rej.next[0].first == idle);
    CHECK(rej.next[0].second == 1.0);

    for (const auto& c : {e1(), sized(3, 3, 2, 2, 2)}) {
        const auto mm = build_model(c);
        for (const auto& rows : mm.rows)
            for (const auto& r : rows) {
                double sum = 0;
                for (const auto& [to, pr] : r.next) sum += pr;
                CHECK(std::abs(sum - 1) < 1e-12);
                CHECK(r.tau_bar > 0);
            }
    }
}

TEST_CASE("stationary evaluation against birth-death solutions") {
    const auto m = build_model(e1());
    const auto reject = policy_evaluation(m, fixed_choice(m, Action::reject()));
    CHECK(reject.J == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(reject.G[0] == 0.0);
    const int idle = find_state(m, {0, 0}, Event::arrival(0));
    CHECK(reject.d[idle] == doctest::Approx(1.0));

    const auto edge = policy_evaluation(m, fixed_choice(m, Action::edge(1, 1)));
    const auto hand = edge_mixture(1.0);
    CHECK(edge.J == doctest::Approx(hand.J).epsilon(1e-12));
    CHECK(edge.G[0] == doctest::Approx(hand.G).epsilon(1e-12));
    CHECK(hand.J == doctest::Approx(0.96));
    double total = 0;
    for (double d : edge.d) total += d;
    CHECK(std::abs(total - 1) < 1e-12);

    const auto cloud = policy_evaluation(m, fixed_choice(m, Action::cloud(1)));
    CHECK(cloud.J == doctest::Approx(always_cloud().J).epsilon(1e-12));
    CHECK(cloud.G[0] == doctest::Approx(always_cloud().G).epsilon(1e-12));
}

TEST_CASE("multi-chain policies are rejected") {
    // Two absorbing states: two closed classes.
    ExplicitModel m;
    m.cfg = e1();
    m.states = {OccupancyState{Occupancy{{0, 0}}, Event::arrival(0)}, OccupancyState{Occupancy{{1, 0}}, Event::arrival(0)}};
    ActionRow stay0{Action::reject(), {{0, 1.0}}, 1.0, 0.0, {0.0}};
    ActionRow stay1{Action::reject(), {{1, 1.0}}, 1.0, 0.0, {0.0}};
    m.rows = {{stay0}, {stay1}};
    CHECK_THROWS_AS(policy_evaluation(m, {{1.0}, {1.0}}), MultiChain);
}

TEST_CASE("constrained LP on the single-slot instance") {
    const auto m = build_model(e1());
    const auto sol = solve_constrained_lp(m, {0.32});
    // Along edge/reject mixtures J is affine in the busy fraction u: J = 3.65 u - 0.5.
    const double q = 1.5 * 0.32 / (1 - 0.32);
    const auto hand = edge_mixture(q);
    CHECK(hand.G == doctest::Approx(0.32));
    CHECK(sol.J_star == doctest::Approx(hand.J).epsilon(1e-10));
    CHECK(sol.J_star == doctest::Approx(0.668).epsilon(1e-10));
    CHECK(sol.G_star[0] <= 0.32 + 1e-9);
    CHECK(sol.multipliers[0] == doctest::Approx((edge_mixture(1).J - edge_mixture(0).J) / edge_mixture(1).G));
    CHECK(sol.flow_residual < 1e-9);
    const int idle = find_state(m, {0, 0}, Event::arrival(0));
    CHECK(sol.policy[idle][m.action_position(idle, Action::edge(1, 1))] == doctest::Approx(q).epsilon(1e-9));

    const auto check = policy_evaluation(m, sol.policy);
    CHECK(std::abs(check.J - sol.J_star) < 1e-8);
    CHECK(std::abs(check.G[0] - sol.G_star[0]) < 1e-8);

    // No randomized idle decision that respects the bound does better.
    for (int a = 0; a <= 20; ++a)
        for (int b = 0; a + b <= 20; ++b) {
            StatePolicy pol = fixed_choice(m, Action::reject());
            pol[idle] = {1 - (a + b) / 20.0, a / 20.0, b / 20.0};
            const auto ev = policy_evaluation(m, pol);
            if (ev.G[0] <= 0.32) CHECK(ev.J <= sol.J_star + 1e-9);
        }
}

TEST_CASE("slack and zero bounds") {
    const auto m = build_model(e1());
    const auto slack = solve_constrained_lp(m, {1e6});
    double best = -INFINITY;
    for_each_deterministic_policy(m, [&](const StatePolicy& p) { best = std::max(best, policy_evaluation(m, p).J); });
    CHECK(std::abs(slack.J_star - best) < 1e-9);
    CHECK(slack.multipliers[0] == doctest::Approx(0).epsilon(1e-12));

    const auto zero = solve_constrained_lp(m, {0.0});
    CHECK(std::abs(zero.J_star + 0.5) < 1e-9);
    const int idle = find_state(m, {0, 0}, Event::arrival(0));
    CHECK(zero.policy[idle][0] == doctest::Approx(1.0));
}

TEST_CASE("LP on a two-priority instance is consistent with evaluation") {
    auto cfg = sized(3, 3, 2, 2, 2);
    cfg.alpha = {0.3, 0.5};
    const auto m = build_model(cfg);
    const auto sol = solve_constrained_lp(m, cfg.alpha);
    const auto ev = policy_evaluation(m, sol.policy);
    CHECK(std::abs(ev.J - sol.J_star) < 1e-8);
    for (int p = 0; p < 2; ++p) {
        CHECK(sol.G_star[p] <= cfg.alpha[p] + 1e-9);
        CHECK(std::abs(ev.G[p] - sol.G_star[p]) < 1e-8);
        CHECK(sol.multipliers[p] >= -1e-12);
    }
    CHECK(sol.flow_residual < 1e-9);
}

TEST_CASE("Bellman and Poisson residuals") {
    ExplicitModel loop;
    loop.cfg = e1();
    loop.states = {OccupancyState{Occupancy{{0, 0}}, Event::arrival(0)}};
    loop.rows = {{ActionRow{Action::reject(), {{0, 1.0}}, 1.0, 2.0, {0.5}}}};
    const std::vector<double> gam{1.5};
    const double L = lagrangian_reward(loop, 0, 0, gam, Variant::Literal);
    CHECK(L == doctest::Approx(2.0 - 1.5 * (0.5 - 0.32)));
    CHECK(bellman_residual(loop, gam, {0.0}, L, Variant::Literal) == doctest::Approx(0).epsilon(1e-15));

    const auto m = build_model(e1());
    const auto lp = solve_constrained_lp(m, {0.32});
    for (Variant var : {Variant::Literal, Variant::SmdpCorrected}) {
        const auto rvi = relative_value_iteration(m, lp.multipliers, var);
        CHECK(bellman_residual(m, lp.multipliers, rvi.v, rvi.beta, var) < 1e-8);
        auto bumped = rvi.v;
        bumped[1] += 1.0;
        CHECK(bellman_residual(m, lp.multipliers, bumped, rvi.beta, var) > 0.1);

        const auto poisson = solve_poisson(m, lp.policy, lp.multipliers, var);
        CHECK(poisson_residual(m, lp.policy, lp.multipliers, poisson.v, poisson.beta, var) < 1e-6);
    }
    // Per unit time, the Lagrangian gain at the multiplier equals J* (the bound is tight).
    const auto cor = relative_value_iteration(m, lp.multipliers, Variant::SmdpCorrected);
    CHECK(cor.beta == doctest::Approx(lp.J_star).epsilon(1e-8));

    const auto slack = solve_constrained_lp(m, {1e6});
    const auto rvi0 = relative_value_iteration(m, {0.0}, Variant::SmdpCorrected);
    CHECK(std::abs(rvi0.beta - slack.J_star) < 1e-6);
}

TEST_CASE("simulated transitions agree with the analytic kernel") {
    const auto cfg = e1();
    const auto m = build_model(cfg);
    Environment env(cfg, 99);
    constexpr int n = 20000;
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
            for (const auto& [to, pr] : row.next) {
                const double sigma = std::sqrt(pr * (1 - pr) / n);
                CHECK(std::abs(hits[to] / double(n) - pr) <= 3 * sigma + 1e-12);
            }
            const double mean = tau_sum / n;
            const double sd = std::sqrt((tau_sq / n - mean * mean) / n);
            CHECK(std::abs(mean - row.tau_bar) <= 3 * sd);
        }
}

TEST_CASE("JSON dumps") {
    const auto m = build_model(e1());
    const auto j = model_to_json(m);
    CHECK(j.at("schema") == "edgesmdp.model/1");
    CHECK(j.at("states").size() == 5);
    const auto lp = solve_constrained_lp(m, {0.32});
    const auto rep = lp_report_json(m, lp, {0.32});
    CHECK(rep.at("schema") == "edgesmdp.lp/1");
    const auto back = policy_from_report(m, nlohmann::json::parse(rep.dump()));
    for (int s = 0; s < m.size(); ++s)
        for (std::size_t k = 0; k < back[s].size(); ++k) CHECK(back[s][k] == lp.policy[s][k]);
}
