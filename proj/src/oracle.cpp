#include "edgesmdp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <limits>
#include <random>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "edgesmdp/env.hpp"
#include "edgesmdp/errors.hpp"
#include "edgesmdp/simplex.hpp"

namespace edgesmdp {

namespace {

struct SlotCost {
    int subchannels;
    int vms;
};

std::vector<SlotCost> slot_costs(const SystemConfig& cfg) {
    std::vector<SlotCost> out(cfg.occupancy_slots());
    for (int p = 0; p < cfg.priorities; ++p)
        for (int i = 1; i <= cfg.max_subchannels; ++i) {
            for (int j = 1; j <= cfg.max_vms; ++j) out[cfg.edge_slot(i, j, p)] = {i, j};
            out[cfg.cloud_slot(i, p)] = {i, 0};
        }
    return out;
}

void enumerate_occupancies(const SystemConfig& cfg, const std::vector<SlotCost>& costs, std::size_t slot,
                           int free_sub, int free_vm, std::vector<int>& counts, std::vector<Occupancy>& out) {
    if (slot == costs.size()) {
        out.push_back(Occupancy{counts});
        return;
    }
    const auto& c = costs[slot];
    for (int k = 0;; ++k) {
        const int sub = free_sub - k * c.subchannels;
        const int vm = free_vm - k * c.vms;
        if (sub < 0 || vm < 0) break;
        counts[slot] = k;
        enumerate_occupancies(cfg, costs, slot + 1, sub, vm, counts, out);
    }
    counts[slot] = 0;
}

double time_factor(const ActionRow& row, Variant v) { return v == Variant::SmdpCorrected ? row.tau_bar : 1.0; }

// Closed communicating classes of a sparse chain (iterative Tarjan).
int count_closed_classes(const std::vector<std::vector<int>>& succ) {
    const int n = static_cast<int>(succ.size());
    std::vector<int> idx(n, -1), low(n, 0), comp(n, -1);
    std::vector<bool> on_stack(n, false);
    std::vector<int> stack;
    int counter = 0, ncomp = 0;
    struct Frame {
        int v;
        std::size_t next;
    };
    for (int root = 0; root < n; ++root) {
        if (idx[root] >= 0) continue;
        std::vector<Frame> call{{root, 0}};
        idx[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = true;
        while (!call.empty()) {
            Frame& f = call.back();
            if (f.next < succ[f.v].size()) {
                const int w = succ[f.v][f.next++];
                if (idx[w] < 0) {
                    idx[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    call.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[f.v] = std::min(low[f.v], idx[w]);
                }
                continue;
            }
            const int v = f.v;
            if (low[v] == idx[v]) {
                while (true) {
                    const int w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    comp[w] = ncomp;
                    if (w == v) break;
                }
                ++ncomp;
            }
            call.pop_back();
            if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
        }
    }
    std::vector<bool> open(ncomp, false);
    for (int v = 0; v < n; ++v)
        for (int w : succ[v])
            if (comp[w] != comp[v]) open[comp[v]] = true;
    return static_cast<int>(std::count(open.begin(), open.end(), false));
}

void check_policy_shape(const ExplicitModel& model, const StatePolicy& policy) {
    if (static_cast<int>(policy.size()) != model.size()) throw ShapeError("policy does not cover every state");
    for (int s = 0; s < model.size(); ++s) {
        if (policy[s].size() != model.rows[s].size()) throw ShapeError("policy row has wrong width");
        double sum = 0;
        for (double p : policy[s]) {
            if (p < 0) throw DomainError("negative policy probability");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw DomainError("policy row does not sum to one");
    }
}

nlohmann::json action_json(const Action& a, const SystemConfig& cfg) {
    return a.kind == ActionKind::Release ? -1 : action_index(a, cfg);
}

}  // namespace

double count_states(const SystemConfig& cfg) {
    // DP over slots: ways[u][v] occupancies using u subchannels and v VMs,
    // busy[u][v] total number of positive slots across those occupancies.
    const int B = cfg.subchannels, M = cfg.vms;
    const double cap = 1e300;
    std::vector<std::vector<double>> ways(B + 1, std::vector<double>(M + 1, 0.0)), busy = ways;
    ways[0][0] = 1.0;
    for (const auto& c : slot_costs(cfg)) {
        auto nw = ways, nb = busy;  // k = 0 term
        for (int u = 0; u <= B; ++u)
            for (int v = 0; v <= M; ++v) {
                if (ways[u][v] == 0) continue;
                for (int k = 1;; ++k) {
                    const int uu = u + k * c.subchannels, vv = v + k * c.vms;
                    if (uu > B || vv > M) break;
                    nw[uu][vv] = std::min(cap, nw[uu][vv] + ways[u][v]);
                    nb[uu][vv] = std::min(cap, nb[uu][vv] + busy[u][v] + ways[u][v]);
                }
            }
        ways = std::move(nw);
        busy = std::move(nb);
    }
    double total = 0;
    for (int u = 0; u <= B; ++u)
        for (int v = 0; v <= M; ++v) total = std::min(cap, total + cfg.priorities * ways[u][v] + busy[u][v]);
    return total;
}

std::vector<OccupancyState> enumerate_states(const SystemConfig& cfg, std::size_t limit) {
    const double n = count_states(cfg);
    if (n > static_cast<double>(limit)) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.0f", n);
        throw TooLarge(std::string("state space has ") + buf + " states, limit is " + std::to_string(limit));
    }
    std::vector<Occupancy> occs;
    std::vector<int> counts(cfg.occupancy_slots(), 0);
    enumerate_occupancies(cfg, slot_costs(cfg), 0, cfg.subchannels, cfg.vms, counts, occs);

    std::vector<OccupancyState> out;
    out.reserve(static_cast<std::size_t>(n));
    for (const auto& occ : occs) {
        for (int p = 0; p < cfg.priorities; ++p) out.push_back({occ, Event::arrival(p)});
        for (int p = 0; p < cfg.priorities; ++p)
            for (int i = 1; i <= cfg.max_subchannels; ++i)
                for (int j = 1; j <= cfg.max_vms; ++j)
                    if (occ.x(cfg, i, j, p) > 0) out.push_back({occ, Event::edge_departure(i, j, p)});
        for (int p = 0; p < cfg.priorities; ++p)
            for (int i = 1; i <= cfg.max_subchannels; ++i)
                if (occ.y(cfg, i, p) > 0) out.push_back({occ, Event::cloud_departure(i, p)});
    }
    return out;
}

int ExplicitModel::state_index(const OccupancyState& s) const {
    auto it = index.find(s);
    if (it == index.end()) throw ModelViolation("state not in model");
    return it->second;
}

int ExplicitModel::action_position(int s, const Action& a) const {
    for (std::size_t k = 0; k < rows[s].size(); ++k)
        if (rows[s][k].action == a) return static_cast<int>(k);
    throw InfeasibleAction("action " + a.to_string() + " not available in state " + std::to_string(s));
}

ExplicitModel build_model(const SystemConfig& cfg, std::size_t limit) {
    ExplicitModel model;
    model.cfg = cfg;
    model.states = enumerate_states(cfg, limit);
    for (int s = 0; s < model.size(); ++s) model.index.emplace(model.states[s], s);
    model.rows.resize(model.size());
    for (int s = 0; s < model.size(); ++s) {
        const auto& st = model.states[s];
        for (const auto& a : feasible_actions(st, cfg)) {
            ActionRow row;
            row.action = a;
            const Occupancy post = apply_action(st, a, cfg);
            const EventRates rates = event_rates(post, cfg);
            row.tau_bar = 1.0 / rates.total;
            for (const auto& e : rates.entries)
                row.next.emplace_back(model.state_index(OccupancyState{post, e.event}), e.rate / rates.total);
            row.r_bar = lump_reward(a, cfg) - holding_cost_rate(post, cfg) * row.tau_bar;
            row.g_bar.resize(cfg.priorities);
            for (int p = 0; p < cfg.priorities; ++p) row.g_bar[p] = queue_weight(post, p, cfg) * row.tau_bar;
            model.rows[s].push_back(std::move(row));
        }
    }
    return model;
}

StatePolicy deterministic_policy(const ExplicitModel& model, const std::vector<int>& choice) {
    StatePolicy pi(model.size());
    for (int s = 0; s < model.size(); ++s) {
        pi[s].assign(model.rows[s].size(), 0.0);
        pi[s][choice[s]] = 1.0;
    }
    return pi;
}

StatePolicy tabulate_policy(const ExplicitModel& model,
                            const std::function<std::vector<double>(const OccupancyState&)>& policy) {
    StatePolicy pi(model.size());
    for (int s = 0; s < model.size(); ++s) {
        const auto& rows = model.rows[s];
        pi[s].assign(rows.size(), 0.0);
        if (!model.states[s].event.is_arrival()) {
            pi[s][0] = 1.0;
            continue;
        }
        const auto probs = policy(model.states[s]);
        for (std::size_t k = 0; k < rows.size(); ++k) pi[s][k] = probs[action_index(rows[k].action, model.cfg)];
    }
    return pi;
}

void for_each_deterministic_policy(const ExplicitModel& model, const std::function<void(const StatePolicy&)>& fn,
                                   std::size_t limit) {
    double total = 1;
    for (const auto& r : model.rows) total *= static_cast<double>(r.size());
    if (total > static_cast<double>(limit)) throw TooLarge("too many deterministic policies to enumerate");
    std::vector<int> choice(model.size(), 0);
    while (true) {
        fn(deterministic_policy(model, choice));
        int s = 0;
        for (; s < model.size(); ++s) {
            if (++choice[s] < static_cast<int>(model.rows[s].size())) break;
            choice[s] = 0;
        }
        if (s == model.size()) return;
    }
}

StationarySolution policy_evaluation(const ExplicitModel& model, const StatePolicy& policy) {
    check_policy_shape(model, policy);
    const int n = model.size();
    const int P = model.cfg.priorities;

    std::vector<std::vector<int>> succ(n);
    std::vector<Eigen::Triplet<double>> trip;
    for (int s = 0; s < n; ++s) {
        std::map<int, double> row;
        for (std::size_t k = 0; k < model.rows[s].size(); ++k) {
            if (policy[s][k] == 0) continue;
            for (const auto& [t, pr] : model.rows[s][k].next) row[t] += policy[s][k] * pr;
        }
        for (const auto& [t, pr] : row) {
            if (pr > 0) succ[s].push_back(t);
            // A = (I - P)^T with the last row replaced by the normalization.
            if (t != n - 1) trip.emplace_back(t, s, -pr);
        }
        if (s != n - 1) trip.emplace_back(s, s, 1.0);
        trip.emplace_back(n - 1, s, 1.0);
    }
    if (count_closed_classes(succ) != 1)
        throw MultiChain("policy induces more than one recurrent class");

    Eigen::SparseMatrix<double> A(n, n);
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) throw SolverFailure("stationary system is singular");
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs(n - 1) = 1.0;
    const Eigen::VectorXd d = lu.solve(rhs);

    StationarySolution sol;
    sol.d.assign(d.data(), d.data() + n);
    double num = 0, den = 0;
    std::vector<double> gnum(P, 0.0);
    for (int s = 0; s < n; ++s)
        for (std::size_t k = 0; k < model.rows[s].size(); ++k) {
            const double w = sol.d[s] * policy[s][k];
            const auto& row = model.rows[s][k];
            num += w * row.r_bar;
            den += w * row.tau_bar;
            for (int p = 0; p < P; ++p) gnum[p] += w * row.g_bar[p];
        }
    sol.J = num / den;
    sol.mean_sojourn = den;
    sol.G.resize(P);
    for (int p = 0; p < P; ++p) sol.G[p] = gnum[p] / den;
    return sol;
}

namespace {

LinearProgram occupation_lp(const ExplicitModel& model, const std::vector<double>& alpha) {
    const int n = model.size();
    const int P = model.cfg.priorities;
    std::vector<int> offset(n + 1, 0);
    for (int s = 0; s < n; ++s) offset[s + 1] = offset[s] + static_cast<int>(model.rows[s].size());
    const int nv = offset[n];

    LinearProgram lp;
    lp.c.assign(nv, 0.0);
    lp.A_eq.assign(n + 1, std::vector<double>(nv, 0.0));
    lp.b_eq.assign(n + 1, 0.0);
    lp.A_le.assign(P, std::vector<double>(nv, 0.0));
    lp.b_le = alpha;
    for (int s = 0; s < n; ++s)
        for (std::size_t k = 0; k < model.rows[s].size(); ++k) {
            const int v = offset[s] + static_cast<int>(k);
            const auto& row = model.rows[s][k];
            lp.c[v] = row.r_bar;
            lp.A_eq[s][v] += 1.0;  // outflow
            for (const auto& [t, pr] : row.next) lp.A_eq[t][v] -= pr;
            lp.A_eq[n][v] = row.tau_bar;
            for (int p = 0; p < P; ++p) lp.A_le[p][v] = row.g_bar[p];
        }
    lp.b_eq[n] = 1.0;
    return lp;
}

}  // namespace

LpSolution solve_constrained_lp(const ExplicitModel& model, const std::vector<double>& alpha) {
    const int n = model.size();
    const int P = model.cfg.priorities;
    if (static_cast<int>(alpha.size()) != P) throw ShapeError("alpha must have one entry per priority");

    LinearProgram lp = occupation_lp(model, alpha);
    LpResult res;
    try {
        res = solve_lp(lp);
    } catch (const SolverFailure&) {
        std::mt19937_64 rng(12345);
        std::uniform_real_distribution<double> u(0.0, 1e-12);
        for (double& b : lp.b_le) b += u(rng);
        try {
            res = solve_lp(lp);
        } catch (const SolverFailure& e) {
            throw SolverFailure(std::string("occupation-measure LP failed after perturbation: ") + e.what());
        }
    }

    LpSolution sol;
    sol.J_star = res.objective;
    sol.multipliers = res.duals_le;
    sol.G_star.assign(P, 0.0);
    sol.z.resize(n);
    sol.policy.resize(n);
    int v = 0;
    for (int s = 0; s < n; ++s) {
        const auto& rows = model.rows[s];
        sol.z[s].assign(res.x.begin() + v, res.x.begin() + v + static_cast<long>(rows.size()));
        v += static_cast<int>(rows.size());
        double total = 0;
        for (std::size_t k = 0; k < rows.size(); ++k) {
            total += sol.z[s][k];
            for (int p = 0; p < P; ++p) sol.G_star[p] += sol.z[s][k] * rows[k].g_bar[p];
        }
        sol.policy[s].assign(rows.size(), 0.0);
        if (total > 1e-12) {
            for (std::size_t k = 0; k < rows.size(); ++k) sol.policy[s][k] = sol.z[s][k] / total;
        } else {
            sol.policy[s][0] = 1.0;  // unvisited: Reject (or the forced Release)
        }
    }

    for (int s = 0; s < n; ++s) {
        double r = 0;
        for (std::size_t k = 0; k < lp.A_eq[s].size(); ++k) r += lp.A_eq[s][k] * res.x[k];
        sol.flow_residual = std::max(sol.flow_residual, std::abs(r));
    }
    return sol;
}

double lagrangian_reward(const ExplicitModel& model, int s, int k, const std::vector<double>& gamma, Variant v) {
    const auto& row = model.rows[s][k];
    double L = row.r_bar;
    const double t = time_factor(row, v);
    for (int p = 0; p < model.cfg.priorities; ++p) L -= gamma[p] * (row.g_bar[p] - model.cfg.alpha[p] * t);
    return L;
}

namespace {

double q_value(const ExplicitModel& model, int s, int k, const std::vector<double>& gamma,
               const std::vector<double>& v, double beta, Variant variant) {
    const auto& row = model.rows[s][k];
    double q = lagrangian_reward(model, s, k, gamma, variant) - beta * time_factor(row, variant);
    for (const auto& [t, pr] : row.next) q += pr * v[t];
    return q;
}

}  // namespace

double bellman_residual(const ExplicitModel& model, const std::vector<double>& gamma, const std::vector<double>& v,
                        double beta, Variant variant) {
    if (static_cast<int>(v.size()) != model.size()) throw ShapeError("value vector does not match the model");
    if (static_cast<int>(gamma.size()) != model.cfg.priorities) throw ShapeError("gamma has wrong length");
    double worst = 0;
    for (int s = 0; s < model.size(); ++s) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < model.rows[s].size(); ++k)
            best = std::max(best, q_value(model, s, static_cast<int>(k), gamma, v, beta, variant));
        worst = std::max(worst, std::abs(best - v[s]));
    }
    return worst;
}

double poisson_residual(const ExplicitModel& model, const StatePolicy& policy, const std::vector<double>& gamma,
                        const std::vector<double>& v, double beta, Variant variant) {
    check_policy_shape(model, policy);
    if (static_cast<int>(v.size()) != model.size()) throw ShapeError("value vector does not match the model");
    double worst = 0;
    for (int s = 0; s < model.size(); ++s) {
        double avg = 0;
        for (std::size_t k = 0; k < model.rows[s].size(); ++k)
            if (policy[s][k] > 0) avg += policy[s][k] * q_value(model, s, static_cast<int>(k), gamma, v, beta, variant);
        worst = std::max(worst, std::abs(avg - v[s]));
    }
    return worst;
}

ValueSolution relative_value_iteration(const ExplicitModel& model, const std::vector<double>& gamma, Variant variant,
                                       double tol, long long max_iter) {
    const int n = model.size();
    if (static_cast<int>(gamma.size()) != model.cfg.priorities) throw ShapeError("gamma has wrong length");
    // Transformed kernel: with probability eta/T(s,a) take the original step,
    // otherwise stay put. eta <= T/2 keeps every state aperiodic.
    double min_t = std::numeric_limits<double>::infinity();
    for (const auto& rows : model.rows)
        for (const auto& row : rows) min_t = std::min(min_t, time_factor(row, variant));
    const double eta = 0.5 * min_t;

    std::vector<std::vector<double>> L(n);
    for (int s = 0; s < n; ++s)
        for (std::size_t k = 0; k < model.rows[s].size(); ++k)
            L[s].push_back(lagrangian_reward(model, s, static_cast<int>(k), gamma, variant));

    ValueSolution out;
    out.v.assign(n, 0.0);
    out.greedy.assign(n, 0);
    std::vector<double> w(n);
    double gain = 0;
    for (long long it = 1; it <= max_iter; ++it) {
        for (int s = 0; s < n; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < model.rows[s].size(); ++k) {
                const auto& row = model.rows[s][k];
                double q = L[s][k] - out.v[s];
                for (const auto& [t, pr] : row.next) q += pr * out.v[t];
                q *= eta / time_factor(row, variant);
                if (q > best) {
                    best = q;
                    out.greedy[s] = static_cast<int>(k);
                }
            }
            w[s] = out.v[s] + best;
        }
        gain = w[0] - out.v[0];
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (int s = 0; s < n; ++s) {
            const double diff = w[s] - out.v[s];
            lo = std::min(lo, diff);
            hi = std::max(hi, diff);
        }
        for (int s = 0; s < n; ++s) out.v[s] = w[s] - w[0];
        out.iterations = it;
        if (hi - lo < tol) break;
    }
    out.beta = gain / eta;
    return out;
}

ValueSolution solve_poisson(const ExplicitModel& model, const StatePolicy& policy, const std::vector<double>& gamma,
                            Variant variant) {
    check_policy_shape(model, policy);
    const int n = model.size();
    // Unknowns v[0..n-1], beta at n; equation n pins v[0] = 0.
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
    for (int s = 0; s < n; ++s) {
        std::map<int, double> row;
        row[s] += 1.0;
        double t = 0, L = 0;
        for (std::size_t k = 0; k < model.rows[s].size(); ++k) {
            const double pk = policy[s][k];
            if (pk == 0) continue;
            const auto& ar = model.rows[s][k];
            t += pk * time_factor(ar, variant);
            L += pk * lagrangian_reward(model, s, static_cast<int>(k), gamma, variant);
            for (const auto& [nx, pr] : ar.next) row[nx] -= pk * pr;
        }
        for (const auto& [c, val] : row)
            if (val != 0) trip.emplace_back(s, c, val);
        trip.emplace_back(s, n, t);
        rhs(s) = L;
    }
    trip.emplace_back(n, 0, 1.0);
    Eigen::SparseMatrix<double> A(n + 1, n + 1);
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) throw MultiChain("Poisson system is singular (policy not unichain?)");
    const Eigen::VectorXd x = lu.solve(rhs);
    ValueSolution out;
    out.v.assign(x.data(), x.data() + n);
    out.beta = x(n);
    return out;
}

nlohmann::json model_to_json(const ExplicitModel& model) {
    using nlohmann::json;
    const auto& cfg = model.cfg;
    json states = json::array(), actions = json::array(), pr = json::array(), tau = json::array(),
         r = json::array(), g = json::array();
    for (int s = 0; s < model.size(); ++s) {
        states.push_back({{"occupancy", model.states[s].occupancy.counts}, {"event", model.states[s].event.to_string()}});
        json acts = json::array(), ts = json::array(), rs = json::array(), gs = json::array();
        for (std::size_t k = 0; k < model.rows[s].size(); ++k) {
            const auto& row = model.rows[s][k];
            acts.push_back(action_json(row.action, cfg));
            ts.push_back(row.tau_bar);
            rs.push_back(row.r_bar);
            gs.push_back(row.g_bar);
            for (const auto& [t, p] : row.next) pr.push_back({s, k, t, p});
        }
        actions.push_back(acts);
        tau.push_back(ts);
        r.push_back(rs);
        g.push_back(gs);
    }
    return {{"schema", "edgesmdp.model/1"}, {"states", states}, {"actions", actions}, {"Pr", pr},
            {"tau_bar", tau},               {"r_bar", r},       {"g_bar", g}};
}

nlohmann::json lp_report_json(const ExplicitModel& model, const LpSolution& sol, const std::vector<double>& alpha) {
    using nlohmann::json;
    json policy = json::array();
    for (int s = 0; s < model.size(); ++s) {
        json acts = json::array();
        for (const auto& row : model.rows[s]) acts.push_back(action_json(row.action, model.cfg));
        policy.push_back({{"state", s}, {"event", model.states[s].event.to_string()},
                          {"occupancy", model.states[s].occupancy.counts}, {"actions", acts},
                          {"probs", sol.policy[s]}});
    }
    return {{"schema", "edgesmdp.lp/1"},       {"J_star", sol.J_star}, {"G_star", sol.G_star},
            {"alpha", alpha},                  {"multipliers", sol.multipliers},
            {"flow_residual", sol.flow_residual}, {"policy", policy}};
}

StatePolicy policy_from_report(const ExplicitModel& model, const nlohmann::json& report) {
    const auto& entries = report.at("policy");
    if (static_cast<int>(entries.size()) != model.size()) throw ShapeError("LP report does not match the model");
    StatePolicy pi(model.size());
    for (int s = 0; s < model.size(); ++s) pi[s] = entries[s].at("probs").get<std::vector<double>>();
    check_policy_shape(model, pi);
    return pi;
}

}  // namespace edgesmdp
