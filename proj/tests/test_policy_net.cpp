#include <doctest.h>

#include <cmath>
#include <numeric>

#include "edgesmdp/errors.hpp"
#include "edgesmdp/model.hpp"
#include "edgesmdp/policy_net.hpp"
#include "test_support.hpp"

using namespace edgesmdp;
using edgesmdp::testing::max_relative_fd_error;
using edgesmdp::testing::reference_forward;

namespace {

std::vector<double> random_input(RngStream& rng, int n) {
    std::vector<double> u(n);
    for (double& v : u) v = 2 * rng.uniform() - 1;
    return u;
}

}  // namespace

TEST_CASE("forward pass") {
    Mlp zero(3, {4, 4}, 2);
    CHECK(mlp_forward(zero, std::vector<double>{1, 2, 3}) == std::vector<double>{0, 0});

    Mlp linear = Mlp::unflatten(2, {}, 2, {1, 2, 3, 4, 0.5, -0.5});
    const auto y = mlp_forward(linear, std::vector<double>{1, -1});
    CHECK(y[0] == doctest::Approx(-0.5));
    CHECK(y[1] == doctest::Approx(-1.5));

    RngStream rng(3);
    const Mlp net = Mlp::initialized(6, {7, 5}, 4, rng, false);
    const auto u = random_input(rng, 6);
    const auto got = mlp_forward(net, u);
    const auto ref = reference_forward(net, u);
    for (int k = 0; k < 4; ++k) CHECK(std::abs(got[k] - ref[k]) < 1e-12);

    CHECK_THROWS_AS(mlp_forward(net, std::vector<double>{1, 2}), ShapeError);
}

TEST_CASE("flatten and unflatten are exact inverses") {
    RngStream rng(8);
    const Mlp net = Mlp::initialized(5, {3, 4}, 2, rng, false);
    const Mlp copy = Mlp::unflatten(5, {3, 4}, 2, net.flatten());
    CHECK(copy.flatten() == net.flatten());
    CHECK(net.param_count() == 5 * 3 + 3 + 3 * 4 + 4 + 4 * 2 + 2);
    CHECK_THROWS_AS(Mlp::unflatten(5, {3, 4}, 2, std::vector<double>(3)), ShapeError);
}

TEST_CASE("initialization bounds and zero value output") {
    const auto cfg = edgesmdp::testing::sized(2, 2, 2, 2, 1);
    RngStream rng(4);
    const Mlp theta = make_policy_net(cfg, rng);
    const Mlp w = make_value_net(cfg, rng);
    CHECK(theta.outputs() == 7);
    CHECK(theta.hidden() == std::vector<int>{64, 64});
    const double bound = 1 / std::sqrt(double(feature_count(cfg)));
    for (int r = 0; r < theta.weight(0).rows(); ++r)
        for (int c = 0; c < theta.weight(0).cols(); ++c) CHECK(std::abs(theta.weight(0)(r, c)) <= bound);
    RngStream in(5);
    CHECK(value_estimate(w, random_input(in, feature_count(cfg))) == 0.0);
    const auto f = random_input(in, feature_count(cfg));
    CHECK(preferences(theta, f) == preferences(theta, f));
}

TEST_CASE("value estimate of a linear net") {
    const Mlp w = Mlp::unflatten(2, {}, 1, {1, 2, 0});
    CHECK(value_estimate(w, std::vector<double>{3, 4}) == 11.0);
    const auto g = grad_value(w, std::vector<double>{3, 4});
    CHECK(g == std::vector<double>{3, 4, 1});
}

TEST_CASE("masked softmax") {
    auto out = masked_softmax(std::vector<double>{0, 0, 0}, {true, true, true});
    for (double p : out.probs) CHECK(p == doctest::Approx(1.0 / 3));
    out = masked_softmax(std::vector<double>{5, 1}, {true, false});
    CHECK(out.probs == std::vector<double>{1, 0});
    out = masked_softmax(std::vector<double>{std::log(2.0), 0}, {true, true});
    CHECK(out.probs[0] == doctest::Approx(2.0 / 3).epsilon(1e-14));
    CHECK_THROWS_AS(masked_softmax(std::vector<double>{1, 2}, {false, false}), NoFeasibleAction);

    // Overflow safety and shift invariance.
    const std::vector<double> h{800, 799, -3, 5};
    const std::vector<bool> m{true, true, false, true};
    const auto a = masked_softmax(h, m);
    std::vector<double> shifted = h;
    for (double& v : shifted) v -= 1234.5;
    const auto b = masked_softmax(shifted, m);
    for (int k = 0; k < 4; ++k) CHECK(std::abs(a.probs[k] - b.probs[k]) < 1e-12);
    CHECK(std::abs(std::accumulate(a.probs.begin(), a.probs.end(), 0.0) - 1) < 1e-12);
    CHECK(a.probs[2] == 0.0);

    const std::vector<double> mild{0.3, -1.2, 0.0, 2.0};
    const auto base = masked_softmax(mild, m);
    for (int k : {0, 1, 3}) {
        auto raised = mild;
        raised[k] += 0.1;
        CHECK(masked_softmax(raised, m).probs[k] > base.probs[k]);
    }
}

TEST_CASE("sampling") {
    RngStream rng(12);
    PolicyOutput det{{1, 0, 0}, {true, true, true}};
    for (int k = 0; k < 1000; ++k) CHECK(sample_action(det, rng) == 0);
    PolicyOutput half{{0.5, 0, 0.5}, {true, false, true}};
    int zeros = 0;
    for (int k = 0; k < 100000; ++k) {
        const int a = sample_action(half, rng);
        REQUIRE(a != 1);
        zeros += a == 0;
    }
    CHECK(std::abs(zeros / 1e5 - 0.5) < 0.01);
}

TEST_CASE("policy and value gradients against central differences") {
    const auto cfg = edgesmdp::testing::sized(3, 3, 2, 2, 2);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        RngStream rng(seed);
        const Mlp theta = Mlp::initialized(feature_count(cfg), {8, 6}, cfg.action_count(), rng, false);
        const Mlp w = Mlp::initialized(feature_count(cfg), {8, 6}, 1, rng, false);
        const auto f = random_input(rng, feature_count(cfg));
        const std::vector<bool> mask{true, true, false, true, true, false, true};
        for (int k : {0, 3, 6}) {
            auto logp = [&](const Mlp& net) { return std::log(masked_softmax(preferences(net, f), mask).probs[k]); };
            CHECK(max_relative_fd_error(theta, logp, grad_log_policy(theta, f, k, mask)) < 1e-4);
        }
        auto v = [&](const Mlp& net) { return value_estimate(net, f); };
        CHECK(max_relative_fd_error(w, v, grad_value(w, f)) < 1e-4);
    }
}

TEST_CASE("score identity and degenerate masks") {
    RngStream rng(21);
    const Mlp theta = Mlp::initialized(6, {5}, 4, rng, false);
    const auto f = random_input(rng, 6);
    const std::vector<bool> mask{true, true, false, true};
    const auto pi = masked_softmax(preferences(theta, f), mask);
    std::vector<double> sum(theta.param_count(), 0.0);
    for (int k = 0; k < 4; ++k) {
        if (!mask[k]) continue;
        const auto g = grad_log_policy(theta, f, k, mask);
        for (std::size_t q = 0; q < g.size(); ++q) sum[q] += pi.probs[k] * g[q];
    }
    for (double s : sum) CHECK(std::abs(s) < 1e-8);

    const auto single = grad_log_policy(theta, f, 1, {false, true, false, false});
    for (double g : single) CHECK(g == 0.0);
    CHECK_THROWS_AS(grad_log_policy(theta, f, 2, mask), DomainError);
}

TEST_CASE("value gradient with zero input and zero first-layer bias") {
    RngStream rng(2);
    Mlp w = Mlp::initialized(4, {3}, 1, rng, false);
    w.bias(0).setZero();
    const auto g = grad_value(w, std::vector<double>(4, 0.0));
    for (int k = 0; k < 12; ++k) CHECK(g[k] == 0.0);
}
