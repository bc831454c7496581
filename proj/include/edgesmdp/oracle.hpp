#pragma once

// Exact solution machinery for small instances: the full state space, the
// analytic epoch kernel under exponential clocks, stationary evaluation of a
// randomized policy, the constrained optimum via the occupation-measure LP, and
// average-reward Bellman/Poisson fixed points.

#include <cstddef>
#include <functional>
#include <map>
#include <vector>

#include <json.hpp>

#include "edgesmdp/config.hpp"
#include "edgesmdp/model.hpp"

namespace edgesmdp {

constexpr std::size_t kDefaultStateLimit = 100000;

// Exact state count without enumerating; saturates instead of overflowing.
double count_states(const SystemConfig& cfg);

// Occupancies in lexicographic order of the canonical count vector; per
// occupancy, arrivals by priority then departures in canonical slot order.
// Throws TooLarge when the count exceeds `limit`.
std::vector<OccupancyState> enumerate_states(const SystemConfig& cfg, std::size_t limit = kDefaultStateLimit);

struct ActionRow {
    Action action;
    std::vector<std::pair<int, double>> next;  // (state index, probability)
    double tau_bar = 0;
    double r_bar = 0;
    std::vector<double> g_bar;
};

struct ExplicitModel {
    SystemConfig cfg;
    std::vector<OccupancyState> states;
    std::map<OccupancyState, int> index;
    std::vector<std::vector<ActionRow>> rows;  // [state][feasible action position]

    int size() const { return static_cast<int>(states.size()); }
    int state_index(const OccupancyState& s) const;
    int action_position(int s, const Action& a) const;
};

ExplicitModel build_model(const SystemConfig& cfg, std::size_t limit = kDefaultStateLimit);

// probs[s][k] over rows[s][k].
using StatePolicy = std::vector<std::vector<double>>;

StatePolicy deterministic_policy(const ExplicitModel& model, const std::vector<int>& choice);
// Lifts a global action-index policy (e.g. a network or an override).
StatePolicy tabulate_policy(const ExplicitModel& model,
                            const std::function<std::vector<double>(const OccupancyState&)>& policy);
// Calls fn for every deterministic policy; throws TooLarge past `limit` policies.
void for_each_deterministic_policy(const ExplicitModel& model, const std::function<void(const StatePolicy&)>& fn,
                                   std::size_t limit = 1000000);

struct StationarySolution {
    std::vector<double> d;  // stationary epoch distribution
    double J = 0;           // per unit time
    std::vector<double> G;  // per unit time
    double mean_sojourn = 0;
};

// Throws MultiChain if the induced chain has more than one closed class.
StationarySolution policy_evaluation(const ExplicitModel& model, const StatePolicy& policy);

struct LpSolution {
    std::vector<std::vector<double>> z;  // occupation measure per unit time, [s][k]
    double J_star = 0;
    std::vector<double> G_star;
    StatePolicy policy;
    std::vector<double> multipliers;  // duals of G_p <= alpha_p
    double flow_residual = 0;
};

// Occupation-measure LP. Retries once with a perturbed right-hand side before
// giving up with SolverFailure.
LpSolution solve_constrained_lp(const ExplicitModel& model, const std::vector<double>& alpha);

// How alpha and the gain enter per-epoch equations: once per epoch as written
// in the Lagrangian, or scaled by the expected sojourn.
enum class Variant { Literal, SmdpCorrected };

double lagrangian_reward(const ExplicitModel& model, int s, int k, const std::vector<double>& gamma, Variant v);

// max_s | max_a (L(s,a) - beta T(s,a) + sum Pr v) - v(s) |, T = 1 or tau_bar.
double bellman_residual(const ExplicitModel& model, const std::vector<double>& gamma, const std::vector<double>& v,
                        double beta, Variant variant);
// Same with the policy average in place of the max.
double poisson_residual(const ExplicitModel& model, const StatePolicy& policy, const std::vector<double>& gamma,
                        const std::vector<double>& v, double beta, Variant variant);

struct ValueSolution {
    std::vector<double> v;  // v[ref] = 0 with ref = state 0
    double beta = 0;
    long long iterations = 0;
    std::vector<int> greedy;
};

// Relative value iteration on an aperiodicity-transformed copy of the model.
ValueSolution relative_value_iteration(const ExplicitModel& model, const std::vector<double>& gamma, Variant variant,
                                       double tol = 1e-13, long long max_iter = 10000000);

// Direct linear solve of the Poisson equation for a fixed policy.
ValueSolution solve_poisson(const ExplicitModel& model, const StatePolicy& policy, const std::vector<double>& gamma,
                            Variant variant);

nlohmann::json model_to_json(const ExplicitModel& model);
nlohmann::json lp_report_json(const ExplicitModel& model, const LpSolution& sol, const std::vector<double>& alpha);
// Reads the "policy" block of an LP report back against the same model.
StatePolicy policy_from_report(const ExplicitModel& model, const nlohmann::json& report);

}  // namespace edgesmdp
