// Command-line front end: run a full experiment, rebuild its reports, or
// check a configuration.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "symreg/error.hpp"
#include "symreg/orchestrator.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 1;
constexpr int exit_failed_runs = 2;

std::vector<std::string> split_list(const std::string& text)
{
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

struct Overrides {
    std::optional<std::size_t> jobs;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> targets;
    std::optional<std::size_t> runs;
    std::optional<std::size_t> k;

    void apply(symreg::ExperimentConfig& c) const
    {
        if (jobs) c.jobs = *jobs;
        if (seed) c.base_seed = *seed;
        if (out) c.output_dir = *out;
        if (targets) c.targets = split_list(*targets);
        if (runs) c.runs_per_target = *runs;
        if (k) c.network_k = *k;
    }
};

void print_summary(const symreg::ExperimentReport& report)
{
    std::cout << "target,runs,min,q1,median,q3,max\n";
    for (const auto& s : report.summaries) {
        std::cout << s.target << ',' << s.runs << ',' << s.min << ',' << s.lower_quartile << ',' << s.median << ','
                  << s.upper_quartile << ',' << s.max << '\n';
    }
    std::cout << "network edges: " << report.network.edges.size() << ", failed runs: " << report.failed_runs << '\n';
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app { "Comprehensive symbolic regression and variable interaction networks" };
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    Overrides overrides;
    bool quiet = false;

    auto* run_cmd = app.add_subcommand("run", "Run every target's GP batch and write all reports");
    run_cmd->add_option("--config", config_path, "Experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--jobs", overrides.jobs, "Worker threads");
    run_cmd->add_option("--seed", overrides.seed, "Base seed");
    run_cmd->add_option("--out", overrides.out, "Output directory");
    run_cmd->add_option("--targets", overrides.targets, "Comma-separated target variables");
    run_cmd->add_option("--runs", overrides.runs, "Runs per target");
    run_cmd->add_option("--k", overrides.k, "Inputs per target in the interaction network");
    run_cmd->add_flag("--quiet", quiet, "No per-run progress");

    std::optional<std::size_t> k;
    auto* aggregate_cmd = app.add_subcommand("aggregate", "Rebuild reports from persisted run results");
    aggregate_cmd->add_option("--out", out_dir, "Output directory of an experiment");
    aggregate_cmd->add_option("--config", config_path, "Experiment configuration; its output_dir is used");
    aggregate_cmd->add_option("--k", k, "Inputs per target in the interaction network");

    std::size_t network_k = 3;
    auto* network_cmd = app.add_subcommand("network", "Rebuild network.dot with a different k");
    network_cmd->add_option("--out", out_dir, "Output directory of an experiment");
    network_cmd->add_option("--config", config_path, "Experiment configuration; its output_dir is used");
    network_cmd->add_option("--k", network_k, "Inputs per target")->required();

    auto* validate_cmd = app.add_subcommand("validate-config", "Load the dataset and check the configuration");
    validate_cmd->add_option("--config", config_path, "Experiment configuration (JSON)")->required();
    validate_cmd->add_option("--targets", overrides.targets, "Comma-separated target variables");
    validate_cmd->add_option("--runs", overrides.runs, "Runs per target");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }

    auto resolve_out = [&]() -> std::filesystem::path {
        if (!out_dir.empty()) return out_dir;
        if (!config_path.empty()) return symreg::load_experiment_config(config_path).output_dir;
        throw symreg::ConfigError("either --out or --config is required");
    };

    try {
        if (*run_cmd) {
            auto config = symreg::load_experiment_config(config_path);
            overrides.apply(config);
            symreg::ProgressCallback progress;
            if (!quiet) {
                progress = [](const symreg::RunProgress& p) {
                    std::cerr << '[' << p.completed << '/' << p.total << "] " << p.record->target << " run "
                              << p.record->run_index;
                    if (p.result) {
                        std::cerr << ": test R2 " << p.result->scores.test << ", "
                                  << symreg::stop_reason_name(p.result->stop_reason) << " after "
                                  << p.result->generations_executed << " generations\n";
                    } else {
                        std::cerr << ": FAILED " << p.record->error << '\n';
                    }
                };
            }
            const auto report = symreg::run_experiment(config, progress);
            std::cerr << "executed " << report.executed_runs << " runs, reused " << report.skipped_runs << '\n';
            print_summary(report);
            return report.failed_runs > 0 ? exit_failed_runs : exit_ok;
        }
        if (*aggregate_cmd) {
            const auto report = symreg::aggregate_outputs(resolve_out(), k);
            print_summary(report);
            return report.failed_runs > 0 ? exit_failed_runs : exit_ok;
        }
        if (*network_cmd) {
            const auto net = symreg::rebuild_network(resolve_out(), network_k);
            std::cout << "network with k = " << net.k << ": " << net.nodes.size() << " nodes, " << net.edges.size()
                      << " edges\n";
            return exit_ok;
        }
        if (*validate_cmd) {
            auto config = symreg::load_experiment_config(config_path);
            overrides.apply(config);
            const auto data = symreg::prepare_experiment(config);
            std::cout << "configuration ok: " << data.matrix.length() << " observations, "
                      << data.matrix.variable_count() << " variables, " << data.targets.size() << " targets x "
                      << config.runs_per_target << " runs\n";
            return exit_ok;
        }
    } catch (const symreg::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_config;
    }
    return exit_ok;
}
