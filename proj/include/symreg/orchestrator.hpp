#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "symreg/dataset.hpp"
#include "symreg/evolution.hpp"
#include "symreg/network.hpp"
#include "symreg/relevance.hpp"

namespace symreg {

struct DatasetSource {
    std::filesystem::path path;
    CsvOptions csv;
};

struct PreprocessingManifest {
    std::map<std::string, bool> apply_derivative;
    std::size_t max_lag = 12;
};

// Inclusive 1-based observation numbers as they appear in configuration files.
struct ObservationRange {
    std::size_t first = 1;
    std::size_t last = 1;
};

struct PartitionSpec {
    ObservationRange fitness { 13, 200 };
    ObservationRange validation { 201, 299 };
    ObservationRange test { 300, 331 };

    Partition to_partition() const;
};

struct ExperimentConfig {
    DatasetSource dataset;
    PreprocessingManifest preprocessing;
    PartitionSpec partition;
    GPConfig gp;
    std::vector<std::string> targets; // empty: every variable
    std::size_t runs_per_target = 30;
    std::uint64_t base_seed = 0;
    std::size_t jobs = 1;
    std::filesystem::path output_dir = "out";
    std::size_t network_k = 3;
};

// Relative dataset and output paths are resolved against base_dir.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
// Echo of the settings that influence results (jobs is omitted).
nlohmann::json experiment_config_to_json(const ExperimentConfig& config);

struct PreparedData {
    LaggedDesignMatrix matrix;
    Partition partition;
    std::vector<std::string> targets;
};

// Loads and preprocesses the dataset and checks the whole configuration.
// Throws ConfigError (or a more specific Error) before any run starts.
PreparedData prepare_experiment(const ExperimentConfig& config);

// 64-bit mix of (base_seed, target index, run index); injective in the two
// indices for a fixed base seed.
std::uint64_t derive_run_seed(std::uint64_t base_seed, std::size_t target_index, std::size_t run_index) noexcept;

struct ScoreSummary {
    std::string target;
    std::size_t runs = 0;
    double min = 0.0;
    double lower_quartile = 0.0;
    double median = 0.0;
    double upper_quartile = 0.0;
    double max = 0.0;
};

struct TargetResults {
    std::string target;
    std::vector<RunResult> runs;
    std::vector<std::size_t> run_indices; // parallel to runs; empty means 0, 1, ...
};

ScoreSummary five_number_summary(std::string target, std::span<const double> scores);
// Five-number summaries of test R^2 per target. Throws UsageError for an
// empty group.
std::vector<ScoreSummary> summarize_scores(std::span<const TargetResults> groups);
std::string scores_to_csv(std::span<const ScoreSummary> summaries);

struct RunRecord {
    std::string target;
    std::size_t run_index = 0;
    std::uint64_t seed = 0;
    std::string file; // relative to the output directory
    bool ok = true;
    std::string error;
};

struct ExperimentReport {
    std::vector<ScoreSummary> summaries;
    std::vector<AggregatedRelevance> relevance;
    InteractionNetwork network;
    std::vector<RunRecord> runs;
    std::size_t failed_runs = 0;
    // Bookkeeping of this invocation only; not persisted.
    std::size_t executed_runs = 0;
    std::size_t skipped_runs = 0;
};

struct RunProgress {
    std::size_t completed = 0;
    std::size_t total = 0;
    const RunRecord* record = nullptr;
    const RunResult* result = nullptr; // null when the run failed
};
using ProgressCallback = std::function<void(const RunProgress&)>;

// Executes runs_per_target runs for every target on a pool of `jobs`
// workers, persisting each result as runs/<target dir>/run_NNN.json. Runs
// whose file already exists with the expected seed are skipped. A failing
// run is recorded and does not stop the batch. Batch outputs are rebuilt
// from the persisted files afterwards (see aggregate_outputs).
ExperimentReport run_experiment(const ExperimentConfig& config, const ProgressCallback& progress = {});

// Rebuilds relevance matrices, scores, network and report.json from the
// manifest and run files in out_dir. k overrides the manifest's network k.
ExperimentReport aggregate_outputs(const std::filesystem::path& out_dir, std::optional<std::size_t> k = std::nullopt);

// Rebuilds only network.dot and network_edges.csv with a different k.
InteractionNetwork rebuild_network(const std::filesystem::path& out_dir, std::size_t k);

// Rows = targets, columns = all variables, cells = mean relevance (empty for
// the target itself).
std::string relevance_matrix_csv(std::span<const AggregatedRelevance> aggregates, std::span<const std::string> variables);
// Long format: target,run,variable,relevance
std::string relevance_runs_csv(std::span<const TargetResults> groups);

} // namespace symreg
