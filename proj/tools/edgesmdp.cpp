// edgesmdp: train | evaluate | oracle | plot

#include <iostream>
#include <optional>
#include <regex>
#include <string>

#include <CLI11.hpp>

#include "edgesmdp/runner.hpp"

namespace {

bool parse_seed_range(const std::string& text, std::uint64_t& first, std::uint64_t& last) {
    static const std::regex re(R"(^\s*(\d+)\s*\.\.\s*(\d+)\s*$)");
    std::smatch m;
    if (!std::regex_match(text, m, re)) return false;
    first = std::stoull(m[1]);
    last = std::stoull(m[2]);
    return first <= last;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace edgesmdp;

    CLI::App app{"Constrained edge/cloud admission control: learner, simulator and exact oracle"};
    app.set_version_flag("--version", git_describe());
    app.require_subcommand(1);

    TrainOptions train;
    std::uint64_t train_seed_value = 1;
    std::string seeds;
    auto* train_cmd = app.add_subcommand("train", "run the Lagrangian actor-critic learner");
    train_cmd->add_option("--config", train.config_path, "JSON system config")->required();
    auto* train_seed = train_cmd->add_option("--seed", train_seed_value, "RNG seed (default learner.seed)");
    train_cmd->add_option("--steps", train.steps, "decision epochs")->check(CLI::PositiveNumber);
    train_cmd->add_option("--out", train.out_dir, "output directory")->required();
    train_cmd->add_flag("--smdp-correction", train.smdp_correction, "sojourn-weighted TD error");
    train_cmd->add_option("--seeds", seeds, "run seeds a..b concurrently into out/seed_<k>");
    train_cmd->add_flag("--trace", train.trace, "write trace.jsonl");
    train_cmd->add_option("--eval-horizon", train.eval_horizon, "epochs for the final evaluation")
        ->check(CLI::PositiveNumber);

    EvaluateOptions eval;
    std::uint64_t eval_seed_value = 1;
    std::string checkpoint;
    auto* eval_cmd = app.add_subcommand("evaluate", "estimate J and G of a checkpointed policy");
    eval_cmd->add_option("--config", eval.config_path, "JSON system config")->required();
    eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint.json (fresh network if omitted)");
    auto* eval_seed = eval_cmd->add_option("--seed", eval_seed_value, "RNG seed (default learner.seed)");
    eval_cmd->add_option("--steps", eval.steps, "decision epochs")->check(CLI::PositiveNumber);
    eval_cmd->add_option("--out", eval.out_dir, "output directory")->required();

    std::string oracle_config, oracle_out;
    auto* oracle_cmd = app.add_subcommand("oracle", "exact model, LP optimum and multipliers");
    oracle_cmd->add_option("--config", oracle_config, "JSON system config")->required();
    oracle_cmd->add_option("--out", oracle_out, "output directory")->required();

    PlotOptions plot;
    std::string lp, plot_config;
    auto* plot_cmd = app.add_subcommand("plot", "SVG convergence charts from metrics.csv");
    plot_cmd->add_option("--metrics", plot.metrics_csv, "metrics.csv")->required();
    plot_cmd->add_option("--lp", lp, "lp.json from the oracle");
    plot_cmd->add_option("--config", plot_config, "config for alpha reference lines");
    plot_cmd->add_option("--out", plot.out_dir, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*train_cmd) {
            if (train_seed->count() > 0) train.seed = train_seed_value;
            if (!seeds.empty()) {
                std::uint64_t first = 0, last = 0;
                if (!parse_seed_range(seeds, first, last)) {
                    std::cerr << "--seeds expects a..b with a <= b\n";
                    return kExitUsage;
                }
                return run_train_seeds(train, first, last, std::cout);
            }
            return run_train(train, std::cout);
        }
        if (*eval_cmd) {
            if (!checkpoint.empty()) eval.checkpoint = checkpoint;
            if (eval_seed->count() > 0) eval.seed = eval_seed_value;
            return run_evaluate(eval, std::cout);
        }
        if (*oracle_cmd) return run_oracle(oracle_config, oracle_out, std::cout);
        if (*plot_cmd) {
            if (!lp.empty()) plot.lp_report = lp;
            if (!plot_config.empty()) plot.config_path = plot_config;
            return run_plot(plot, std::cout);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    }
    return kExitUsage;
}
