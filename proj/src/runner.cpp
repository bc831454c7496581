#include "edgesmdp/runner.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "edgesmdp/checkpoint.hpp"
#include "edgesmdp/config.hpp"
#include "edgesmdp/errors.hpp"
#include "edgesmdp/learner.hpp"
#include "edgesmdp/oracle.hpp"
#include "edgesmdp/plots.hpp"

#ifndef EDGESMDP_GIT_DESCRIBE
#define EDGESMDP_GIT_DESCRIBE "unknown"
#endif

namespace edgesmdp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream ss;
    ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return ss.str();
}

void write_text(const fs::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    out << body;
    if (!out) throw IoError("failed writing " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void make_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
}

// Written when a run starts and rewritten when it ends.
class Manifest {
public:
    Manifest(fs::path dir, std::string subcommand, std::string config_hash, std::uint64_t seed)
        : dir_(std::move(dir)) {
        j_ = {{"schema", "edgesmdp.run/1"},
              {"subcommand", std::move(subcommand)},
              {"config_hash", std::move(config_hash)},
              {"seed", seed},
              {"git_describe", git_describe()},
              {"started", utc_now()},
              {"finished", nullptr},
              {"status", "running"},
              {"outputs", json::object()}};
        flush();
    }

    void output(const std::string& key, const std::string& file) { j_["outputs"][key] = file; }
    void set(const std::string& key, json v) { j_[key] = std::move(v); }

    void finish(const std::string& status) {
        j_["status"] = status;
        j_["finished"] = utc_now();
        flush();
    }

private:
    void flush() { write_json(dir_ / "manifest.json", j_); }
    fs::path dir_;
    json j_;
};

json eval_json(const EvalReport& rep) {
    return {{"schema", "edgesmdp.eval/1"}, {"J_hat", rep.J_hat},
            {"G_hat", rep.G_hat},          {"J_half_width", rep.J_half_width},
            {"G_half_width", rep.G_half_width}, {"horizon", rep.horizon},
            {"total_time", rep.total_time},     {"batches", rep.batches}};
}

std::mutex log_mutex;

void say(std::ostream& log, const std::string& msg) {
    std::lock_guard<std::mutex> lock(log_mutex);
    log << msg << '\n';
}

}  // namespace

std::string git_describe() { return EDGESMDP_GIT_DESCRIBE; }

int run_train(const TrainOptions& opt, std::ostream& log) {
    ParsedConfig pc;
    try {
        pc = parse_config(opt.config_path);
    } catch (const ConfigError& e) {
        say(log, e.what());
        return kExitConfig;
    }
    SystemConfig cfg = pc.config;
    if (opt.smdp_correction) cfg.learner.smdp_correction = true;
    const std::uint64_t seed = opt.seed.value_or(cfg.learner.seed);

    try {
        make_dir(opt.out_dir);
        const fs::path dir(opt.out_dir);
        write_text(dir / "config.json", pc.raw);
        Manifest manifest(dir, "train", pc.hash, seed);
        manifest.set("steps", opt.steps);
        manifest.set("smdp_correction", cfg.learner.smdp_correction);
        manifest.output("config", "config.json");

        std::ofstream trace;
        if (opt.trace) {
            trace.open(dir / "trace.jsonl");
            if (!trace) throw IoError("cannot open trace file");
            manifest.output("trace", "trace.jsonl");
        }
        TrainHooks hooks;
        if (opt.trace) hooks.on_step = [&](const LearnerState& ls, const Transition& t, double) {
            write_trace_record(trace, ls.n, t, cfg);
        };
        hooks.on_checkpoint = [&](const LearnerState& ls) {
            save_checkpoint((dir / "checkpoint.json").string(), ls, pc.hash);
        };

        TrainResult result;
        try {
            result = train(cfg, seed, opt.steps, hooks);
        } catch (const DivergenceError& e) {
            say(log, std::string("divergence: ") + e.what());
            manifest.set("diverged_at", e.step);
            manifest.finish("diverged");
            return kExitDivergence;
        }

        {
            std::ostringstream csv;
            write_metrics_header(csv, cfg);
            for (const auto& row : result.metrics) write_metrics_row(csv, row);
            write_text(dir / "metrics.csv", csv.str());
            manifest.output("metrics", "metrics.csv");
        }
        save_checkpoint((dir / "checkpoint.json").string(), result.state, pc.hash);
        manifest.output("checkpoint", "checkpoint.json");

        const EvalReport rep = evaluate_policy(result.state.theta, cfg, seed + 1, opt.eval_horizon);
        write_json(dir / "eval.json", eval_json(rep));
        manifest.output("eval", "eval.json");
        manifest.finish("ok");

        std::ostringstream msg;
        msg << "trained " << opt.steps << " epochs (seed " << seed << "): J_hat=" << rep.J_hat << " +/- "
            << rep.J_half_width;
        for (std::size_t p = 0; p < rep.G_hat.size(); ++p)
            msg << "  G_" << p + 1 << "=" << rep.G_hat[p] << " (alpha " << cfg.alpha[p] << ")";
        say(log, msg.str());
        return kExitOk;
    } catch (const IoError& e) {
        say(log, e.what());
        return kExitIo;
    }
}

int run_train_seeds(const TrainOptions& opt, std::uint64_t first, std::uint64_t last, std::ostream& log) {
    if (last < first) {
        say(log, "empty seed range");
        return kExitUsage;
    }
    std::vector<int> codes(last - first + 1, kExitOk);
    std::vector<std::thread> workers;
    for (std::uint64_t s = first; s <= last; ++s) {
        workers.emplace_back([&, s] {
            TrainOptions o = opt;
            o.seed = s;
            o.out_dir = (fs::path(opt.out_dir) / ("seed_" + std::to_string(s))).string();
            codes[s - first] = run_train(o, log);
        });
    }
    for (auto& w : workers) w.join();
    int worst = kExitOk;
    for (int c : codes) worst = std::max(worst, c);
    return worst;
}

int run_evaluate(const EvaluateOptions& opt, std::ostream& log) {
    ParsedConfig pc;
    try {
        pc = parse_config(opt.config_path);
    } catch (const ConfigError& e) {
        say(log, e.what());
        return kExitConfig;
    }
    const std::uint64_t seed = opt.seed.value_or(pc.config.learner.seed);
    try {
        LearnerState ls = opt.checkpoint ? load_checkpoint(*opt.checkpoint, pc.config)
                                         : initial_learner_state(pc.config, seed);
        make_dir(opt.out_dir);
        const fs::path dir(opt.out_dir);
        write_text(dir / "config.json", pc.raw);
        Manifest manifest(dir, "evaluate", pc.hash, seed);
        manifest.output("config", "config.json");
        const EvalReport rep = evaluate_policy(ls.theta, pc.config, seed, opt.steps);
        write_json(dir / "eval.json", eval_json(rep));
        manifest.output("eval", "eval.json");
        manifest.finish("ok");
        std::ostringstream msg;
        msg << "J_hat=" << rep.J_hat << " +/- " << rep.J_half_width;
        for (std::size_t p = 0; p < rep.G_hat.size(); ++p)
            msg << "  G_" << p + 1 << "=" << rep.G_hat[p] << " +/- " << rep.G_half_width[p];
        say(log, msg.str());
        return kExitOk;
    } catch (const IoError& e) {
        say(log, e.what());
        return kExitIo;
    } catch (const ShapeError& e) {
        say(log, e.what());
        return kExitConfig;
    } catch (const json::exception& e) {
        say(log, std::string("malformed checkpoint: ") + e.what());
        return kExitIo;
    }
}

int run_oracle(const std::string& config_path, const std::string& out_dir, std::ostream& log) {
    ParsedConfig pc;
    try {
        pc = parse_config(config_path);
    } catch (const ConfigError& e) {
        say(log, e.what());
        return kExitConfig;
    }
    const SystemConfig& cfg = pc.config;
    ExplicitModel model;
    try {
        model = build_model(cfg);
    } catch (const TooLarge& e) {
        say(log, std::string("state space too large for the exact oracle: ") + e.what());
        return kExitTooLarge;
    }
    try {
        make_dir(out_dir);
        const fs::path dir(out_dir);
        write_text(dir / "config.json", pc.raw);
        Manifest manifest(dir, "oracle", pc.hash, 0);
        manifest.output("config", "config.json");
        write_json(dir / "model.json", model_to_json(model));
        manifest.output("model", "model.json");
        const LpSolution sol = solve_constrained_lp(model, cfg.alpha);
        write_json(dir / "lp.json", lp_report_json(model, sol, cfg.alpha));
        manifest.output("lp", "lp.json");
        manifest.finish("ok");

        std::ostringstream msg;
        msg << std::setprecision(10) << "states: " << model.size() << "\nJ*      = " << sol.J_star << '\n';
        msg << "p   G*[p]            alpha[p]         multiplier\n";
        for (int p = 0; p < cfg.priorities; ++p)
            msg << std::left << std::setw(4) << p + 1 << std::setw(17) << sol.G_star[p] << std::setw(17) << cfg.alpha[p]
                << sol.multipliers[p] << '\n';
        say(log, msg.str());
        return kExitOk;
    } catch (const IoError& e) {
        say(log, e.what());
        return kExitIo;
    } catch (const SolverFailure& e) {
        say(log, e.what());
        return kExitIo;
    }
}

int run_plot(const PlotOptions& opt, std::ostream& log) {
    try {
        PlotInputs in{opt.metrics_csv, opt.lp_report, {}};
        if (opt.config_path) in.alpha = parse_config(*opt.config_path).config.alpha;
        for (const auto& f : emit_plots(in, opt.out_dir)) say(log, "wrote " + f);
        return kExitOk;
    } catch (const ConfigError& e) {
        say(log, e.what());
        return kExitConfig;
    } catch (const IoError& e) {
        say(log, e.what());
        return kExitIo;
    }
}

}  // namespace edgesmdp
