#include "edgesmdp/config.hpp"

#include <algorithm>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "edgesmdp/errors.hpp"

namespace edgesmdp {

namespace {

using nlohmann::json;

std::string join_issues(const std::vector<std::string>& issues) {
    std::string out = "invalid config:";
    for (const auto& s : issues) {
        out += "\n  ";
        out += s;
    }
    return out;
}

std::string fmt_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

// Pulls typed fields out of a JSON object, recording problems instead of
// throwing so that every issue is reported in one pass.
class Reader {
public:
    Reader(const json& obj, std::string path, std::vector<std::string>& issues)
        : obj_(obj), path_(std::move(path)), issues_(issues) {}

    bool has(const char* key) const { return obj_.contains(key); }

    std::string at(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

    void reject_unknown(const std::set<std::string>& allowed) {
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            if (!allowed.count(it.key())) issues_.push_back(at(it.key().c_str()) + ": unknown key");
        }
    }

    template <typename T>
    void required(const char* key, T& out) {
        if (!obj_.contains(key)) {
            issues_.push_back(at(key) + ": missing required field");
            return;
        }
        get(key, out);
    }

    template <typename T>
    void optional(const char* key, T& out) {
        if (obj_.contains(key)) get(key, out);
    }

private:
    template <typename T>
    void get(const char* key, T& out) {
        try {
            out = obj_.at(key).get<T>();
        } catch (const json::exception&) {
            issues_.push_back(at(key) + ": wrong type");
        }
    }

    const json& obj_;
    std::string path_;
    std::vector<std::string>& issues_;
};

// A weight table may be given as a single number (broadcast) or a full array.
void read_weights(const json& root, const char* key, int rows, int cols, bool matrix,
                  std::vector<std::vector<double>>& out2, std::vector<double>& out1,
                  std::vector<std::string>& issues) {
    if (!root.contains(key)) {
        issues.push_back(std::string(key) + ": missing required field");
        return;
    }
    const json& v = root.at(key);
    try {
        if (v.is_number()) {
            double w = v.get<double>();
            if (matrix)
                out2.assign(rows, std::vector<double>(cols, w));
            else
                out1.assign(rows, w);
        } else if (matrix) {
            out2 = v.get<std::vector<std::vector<double>>>();
        } else {
            out1 = v.get<std::vector<double>>();
        }
    } catch (const json::exception&) {
        issues.push_back(std::string(key) + ": wrong type");
    }
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> issues_in)
    : Error(join_issues(issues_in)), issues(std::move(issues_in)) {}

double SystemConfig::edge_service_rate(int i, int j, int p) const {
    for (const auto& o : rate_overrides)
        if (o.edge && o.priority == p && o.subchannels == i && o.vms == j) return o.rate;
    return mu_edge[p] * j;
}

double SystemConfig::cloud_service_rate(int i, int p) const {
    for (const auto& o : rate_overrides)
        if (!o.edge && o.priority == p && o.subchannels == i) return o.rate;
    return mu_cloud[p] * max_vms;
}

void SystemConfig::validate() const {
    auto issues = validation_issues();
    if (!issues.empty()) throw ConfigError(std::move(issues));
}

std::vector<std::string> SystemConfig::validation_issues() const {
    std::vector<std::string> issues;
    auto need = [&](bool ok, std::string msg) {
        if (!ok) issues.push_back(std::move(msg));
    };

    need(subchannels >= 1, "B: requires B >= 1");
    need(vms >= 1, "M: requires M >= 1");
    need(max_subchannels >= 1 && max_subchannels <= subchannels,
         "b: requires 1 <= b ≤ B (got b=" + std::to_string(max_subchannels) +
             ", B=" + std::to_string(subchannels) + ")");
    need(max_vms >= 1 && max_vms <= vms,
         "m: requires 1 <= m ≤ M (got m=" + std::to_string(max_vms) + ", M=" + std::to_string(vms) +
             ")");
    need(priorities >= 1, "P: requires P >= 1");

    auto per_priority = [&](const std::vector<double>& v, const char* name, bool strictly_positive) {
        if (static_cast<int>(v.size()) != priorities) {
            issues.push_back(std::string(name) + ": expected " + std::to_string(priorities) +
                             " entries, got " + std::to_string(v.size()));
            return;
        }
        for (std::size_t p = 0; p < v.size(); ++p) {
            bool ok = std::isfinite(v[p]) && (strictly_positive ? v[p] > 0 : v[p] >= 0);
            if (!ok)
                issues.push_back(std::string(name) + "[" + std::to_string(p) + "]: must be " +
                                 (strictly_positive ? "> 0" : ">= 0") + " (got " + fmt_num(v[p]) + ")");
        }
    };
    per_priority(arrival_rate, "lambda", true);
    per_priority(mu_edge, "mu_edge", true);
    per_priority(mu_cloud, "mu_cloud", true);
    per_priority(alpha, "alpha", false);

    need(std::isfinite(k_cloud), "k_c: must be finite");
    need(std::isfinite(k_edge), "k_e: must be finite");
    need(std::isfinite(k_reject), "k_r: must be finite");
    need(std::isfinite(cost_cloud) && cost_cloud >= 0, "c_c: must be >= 0");
    need(std::isfinite(cost_edge) && cost_edge >= 0, "c_e: must be >= 0");

    if (static_cast<int>(w_edge.size()) != max_subchannels) {
        issues.push_back("w_edge: expected " + std::to_string(max_subchannels) + " rows");
    } else {
        for (std::size_t i = 0; i < w_edge.size(); ++i) {
            if (static_cast<int>(w_edge[i].size()) != max_vms) {
                issues.push_back("w_edge[" + std::to_string(i) + "]: expected " +
                                 std::to_string(max_vms) + " entries");
                continue;
            }
            for (std::size_t j = 0; j < w_edge[i].size(); ++j)
                if (!(std::isfinite(w_edge[i][j]) && w_edge[i][j] >= 0))
                    issues.push_back("w_edge[" + std::to_string(i) + "][" + std::to_string(j) +
                                     "]: must be >= 0");
        }
    }
    if (static_cast<int>(w_cloud.size()) != max_subchannels) {
        issues.push_back("w_cloud: expected " + std::to_string(max_subchannels) + " entries");
    } else {
        for (std::size_t i = 0; i < w_cloud.size(); ++i)
            if (!(std::isfinite(w_cloud[i]) && w_cloud[i] >= 0))
                issues.push_back("w_cloud[" + std::to_string(i) + "]: must be >= 0");
    }

    for (std::size_t k = 0; k < rate_overrides.size(); ++k) {
        const auto& o = rate_overrides[k];
        std::string at = "rate_overrides[" + std::to_string(k) + "]";
        need(o.priority >= 0 && o.priority < priorities, at + ".p: out of range");
        need(o.subchannels >= 1 && o.subchannels <= max_subchannels, at + ".i: out of range");
        if (o.edge) need(o.vms >= 1 && o.vms <= max_vms, at + ".j: out of range");
        need(std::isfinite(o.rate) && o.rate > 0, at + ".rate: must be > 0");
    }

    const auto& L = learner;
    const auto& s = L.schedule;
    need(L.lam_w >= 0 && L.lam_w <= 1, "learner.lam_w: trace decay must lie in [0,1]");
    need(L.lam_theta >= 0 && L.lam_theta <= 1, "learner.lam_theta: trace decay must lie in [0,1]");
    need(s.a0 > 0 && s.a0 <= 1, "learner.a0: requires 0 < a0 <= 1");
    need(s.b0 > 0, "learner.b0: requires b0 > 0");
    need(s.c0 > 0, "learner.c0: requires c0 > 0");
    need(s.C > 0, "learner.C: requires C > 0");
    need(0.5 < s.ea && s.ea < s.eb && s.eb < s.ec && s.ec <= 1,
         "learner.ea/eb/ec: requires 0.5 < ea < eb < ec <= 1");
    need(L.theta_max > 0, "learner.theta_max: requires theta_max > 0");
    need(L.gamma_max > 0, "learner.gamma_max: requires gamma_max > 0");
    for (int h : L.policy_hidden) need(h >= 1, "learner.policy_hidden: widths must be >= 1");
    for (int h : L.value_hidden) need(h >= 1, "learner.value_hidden: widths must be >= 1");
    need(L.metric_cadence >= 1, "learner.metric_cadence: requires >= 1");
    need(L.window >= 1, "learner.window: requires >= 1");
    need(L.checkpoint_every >= 0, "learner.checkpoint_every: requires >= 0");
    return issues;
}

SystemConfig config_from_json_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError({std::string("<root>: malformed JSON: ") + e.what()});
    }
    if (!root.is_object()) throw ConfigError({"<root>: expected a JSON object"});

    std::vector<std::string> issues;
    SystemConfig cfg;
    Reader r(root, "", issues);
    r.reject_unknown({"B", "M", "b", "m", "P", "lambda", "mu_edge", "mu_cloud", "k_c", "k_e", "k_r",
                      "c_c", "c_e", "w_edge", "w_cloud", "alpha", "cost_pairing", "rate_overrides",
                      "learner"});
    r.required("B", cfg.subchannels);
    r.required("M", cfg.vms);
    r.required("b", cfg.max_subchannels);
    r.required("m", cfg.max_vms);
    r.required("P", cfg.priorities);
    r.required("lambda", cfg.arrival_rate);
    r.required("mu_edge", cfg.mu_edge);
    r.required("mu_cloud", cfg.mu_cloud);
    r.required("k_c", cfg.k_cloud);
    r.required("k_e", cfg.k_edge);
    r.required("k_r", cfg.k_reject);
    r.required("c_c", cfg.cost_cloud);
    r.required("c_e", cfg.cost_edge);
    r.required("alpha", cfg.alpha);
    std::vector<double> unused1;
    std::vector<std::vector<double>> unused2;
    read_weights(root, "w_edge", cfg.max_subchannels, cfg.max_vms, true, cfg.w_edge, unused1, issues);
    read_weights(root, "w_cloud", cfg.max_subchannels, 0, false, unused2, cfg.w_cloud, issues);

    std::string pairing = "by-location";
    r.optional("cost_pairing", pairing);
    if (pairing == "by-location")
        cfg.cost_pairing = CostPairing::ByLocation;
    else if (pairing == "as-printed")
        cfg.cost_pairing = CostPairing::AsPrinted;
    else
        issues.push_back("cost_pairing: expected \"by-location\" or \"as-printed\"");

    if (root.contains("rate_overrides")) {
        const json& arr = root.at("rate_overrides");
        if (!arr.is_array()) {
            issues.push_back("rate_overrides: expected an array");
        } else {
            for (std::size_t k = 0; k < arr.size(); ++k) {
                std::string at = "rate_overrides[" + std::to_string(k) + "]";
                if (!arr[k].is_object()) {
                    issues.push_back(at + ": expected an object");
                    continue;
                }
                Reader o(arr[k], at, issues);
                o.reject_unknown({"location", "p", "i", "j", "rate"});
                RateOverride ov;
                std::string loc;
                int p1 = 0;
                o.required("location", loc);
                o.required("p", p1);
                o.required("i", ov.subchannels);
                o.required("rate", ov.rate);
                if (loc == "edge") {
                    ov.edge = true;
                    o.required("j", ov.vms);
                } else if (loc == "cloud") {
                    ov.edge = false;
                } else {
                    issues.push_back(at + ".location: expected \"edge\" or \"cloud\"");
                }
                ov.priority = p1 - 1;
                cfg.rate_overrides.push_back(ov);
            }
        }
    }

    if (root.contains("learner")) {
        const json& lj = root.at("learner");
        if (!lj.is_object()) {
            issues.push_back("learner: expected an object");
        } else {
            auto& L = cfg.learner;
            Reader l(lj, "learner", issues);
            l.reject_unknown({"a0", "b0", "c0", "ea", "eb", "ec", "C", "lam_w", "lam_theta",
                              "theta_max", "gamma_max", "policy_hidden", "value_hidden", "seed",
                              "smdp_correction", "metric_cadence", "window", "checkpoint_every"});
            l.optional("a0", L.schedule.a0);
            l.optional("b0", L.schedule.b0);
            l.optional("c0", L.schedule.c0);
            l.optional("ea", L.schedule.ea);
            l.optional("eb", L.schedule.eb);
            l.optional("ec", L.schedule.ec);
            l.optional("C", L.schedule.C);
            l.optional("lam_w", L.lam_w);
            l.optional("lam_theta", L.lam_theta);
            l.optional("theta_max", L.theta_max);
            l.optional("gamma_max", L.gamma_max);
            l.optional("policy_hidden", L.policy_hidden);
            l.optional("value_hidden", L.value_hidden);
            l.optional("seed", L.seed);
            l.optional("smdp_correction", L.smdp_correction);
            l.optional("metric_cadence", L.metric_cadence);
            l.optional("window", L.window);
            l.optional("checkpoint_every", L.checkpoint_every);
        }
    }

    // Range checks also run on a partially read config so every problem is
    // reported in one pass; a field that failed to parse may add a follow-up line.
    for (auto& msg : cfg.validation_issues())
        if (std::find(issues.begin(), issues.end(), msg) == issues.end()) issues.push_back(std::move(msg));
    if (!issues.empty()) throw ConfigError(std::move(issues));
    return cfg;
}

ParsedConfig parse_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError({path + ": cannot open config file"});
    std::ostringstream ss;
    ss << in.rdbuf();
    ParsedConfig out;
    out.raw = ss.str();
    out.config = config_from_json_text(out.raw);
    out.hash = fnv1a_hex(out.raw);
    return out;
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace edgesmdp
