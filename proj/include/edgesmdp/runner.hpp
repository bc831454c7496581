#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace edgesmdp {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitConfig = 2,
    kExitDivergence = 3,
    kExitIo = 4,
    kExitTooLarge = 5,
};

struct TrainOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;  // learner.seed from the config when absent
    long long steps = 100000;
    std::string out_dir;
    bool smdp_correction = false;  // forces the corrected TD form on top of the config
    bool trace = false;            // writes trace.jsonl
    long long eval_horizon = 100000;
};

// Output directory: config.json (verbatim copy), manifest.json, metrics.csv,
// checkpoint.json, eval.json and optionally trace.jsonl.
int run_train(const TrainOptions& opt, std::ostream& log);

// Runs seeds [first, last] concurrently, each into out_dir/seed_<k>. Returns
// the largest exit code.
int run_train_seeds(const TrainOptions& opt, std::uint64_t first, std::uint64_t last, std::ostream& log);

struct EvaluateOptions {
    std::string config_path;
    std::optional<std::string> checkpoint;  // fresh initialization when absent
    std::optional<std::uint64_t> seed;      // learner.seed from the config when absent
    long long steps = 100000;
    std::string out_dir;
};

int run_evaluate(const EvaluateOptions& opt, std::ostream& log);

// Writes model.json and lp.json, prints the J*/G* table.
int run_oracle(const std::string& config_path, const std::string& out_dir, std::ostream& log);

struct PlotOptions {
    std::string metrics_csv;
    std::optional<std::string> lp_report;
    std::optional<std::string> config_path;  // alpha reference lines without an LP report
    std::string out_dir;
};

int run_plot(const PlotOptions& opt, std::ostream& log);

std::string git_describe();

}  // namespace edgesmdp
