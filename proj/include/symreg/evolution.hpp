#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "symreg/dataset.hpp"
#include "symreg/expression.hpp"
#include "symreg/metrics.hpp"
#include "symreg/relevance.hpp"

namespace symreg {

using Rng = std::mt19937_64;

struct GPConfig {
    std::size_t population_size = 2000;
    std::size_t max_generations = 150;
    std::size_t tournament_size = 7;
    double one_point_mutation_rate = 0.07;
    double subtree_mutation_rate = 0.07;
    std::size_t initial_depth_limit = 7;
    double spearman_stop_threshold = 0.2;
    double constant_min = -20.0;
    double constant_max = 20.0;
    std::size_t max_lag = 12;
    std::uint64_t rng_seed = 0;

    // Throws ConfigError when an invariant does not hold.
    void validate() const;
    bool operator==(const GPConfig&) const = default;
};

// Terminals of one run: random constants and every allowed variable at lags
// 0..max_lag. A draw first picks a kind uniformly from {constant, variable,
// lagged variable} (no lagged kind when max_lag is 0), then a uniform member.
class TerminalSet {
public:
    TerminalSet(std::vector<std::uint32_t> variables, std::size_t max_lag, double constant_min, double constant_max);

    Node sample(Rng& rng) const;
    double sample_constant(Rng& rng) const;

    std::span<const std::uint32_t> variables() const noexcept { return variables_; }
    std::size_t max_lag() const noexcept { return max_lag_; }

private:
    std::vector<std::uint32_t> variables_;
    std::size_t max_lag_;
    double constant_min_;
    double constant_max_;
};

struct Individual {
    ExpressionTree tree;
    double fitness_train = 0.0;
    double fitness_validation = 0.0;
    std::size_t depth = 1;
    std::size_t size = 1;
};

// Probabilistic tree creation (PTC2): grows a random tree close to
// target_size nodes without exceeding max_depth. target_size <= 1 or
// max_depth <= 1 yields a single terminal.
ExpressionTree ptc2(Rng& rng, const TerminalSet& terminals, std::size_t target_size, std::size_t max_depth);

// population_size PTC2 trees with size targets uniform on [3, 2^limit - 1].
std::vector<ExpressionTree> initialize_population(const GPConfig& config, const TerminalSet& terminals, Rng& rng);

// Index of the winner of a tournament of `size` uniform draws with
// replacement: highest fitness_train, then smaller size, then lower index.
std::size_t tournament_select(std::span<const Individual> population, std::size_t size, Rng& rng);

// A uniformly chosen node of a copy of `a` replaced by a uniformly chosen
// subtree of `b`. The child may exceed any depth limit.
ExpressionTree subtree_crossover(const ExpressionTree& a, const ExpressionTree& b, Rng& rng);

// Replaces node `index` in place: functions by a different function of the
// same arity, variables by a fresh terminal, constants by value + N(0, 1).
ExpressionTree one_point_mutation(const ExpressionTree& tree, std::size_t index, Rng& rng, const TerminalSet& terminals);

// Replaces the subtree at `index` by a fresh PTC2 subtree that keeps the tree
// within depth_limit and max_length.
ExpressionTree subtree_mutation(const ExpressionTree& tree, std::size_t index, Rng& rng, const TerminalSet& terminals,
                                std::size_t depth_limit, std::size_t max_length);

struct MutationResult {
    ExpressionTree tree;
    bool one_point = false;
    bool subtree = false;
};

// Independent Bernoulli rolls for one-point and subtree-replacement mutation.
MutationResult mutate(const ExpressionTree& tree, Rng& rng, const GPConfig& config, const TerminalSet& terminals,
                      std::size_t depth_limit);

struct Acceptance {
    bool accepted = false;
    std::size_t depth_limit = 0;

    bool operator==(const Acceptance&) const = default;
};

// Dynamic depth limit: within the limit always accepted; deeper offspring are
// accepted only on a strict improvement of the best fitness so far, which
// raises the limit to their depth.
Acceptance accept_offspring(std::size_t child_depth, double child_fitness, std::size_t current_limit,
                            double best_fitness_so_far) noexcept;

// Fitness of trees for one target over the fitness, validation and test
// ranges. Rows whose target or referenced inputs are missing are excluded.
class FitnessEvaluator {
public:
    FitnessEvaluator(const LaggedDesignMatrix& matrix, std::uint32_t target, const Partition& partition);

    // (fitness_train, fitness_validation) of the unscaled tree.
    std::pair<double, double> train_and_validation(const ExpressionTree& tree) const;
    Individual make_individual(ExpressionTree tree) const;

    // Unscaled outputs over `rows`; rows with missing inputs are NaN.
    std::vector<double> outputs(const ExpressionTree& tree, IndexRange rows) const;
    std::vector<char> usable_rows(const ExpressionTree& tree, IndexRange rows) const;
    std::span<const double> target(IndexRange rows) const;

    double score(const ExpressionTree& tree, const LinearScaling& scaling, IndexRange rows) const;

    const Partition& partition() const noexcept { return partition_; }

private:
    const LaggedDesignMatrix& matrix_;
    std::uint32_t target_;
    Partition partition_;
    IndexRange span_;
};

enum class StopReason { max_generations, spearman_stop };
std::string_view stop_reason_name(StopReason r) noexcept;
StopReason stop_reason_from_name(std::string_view name);

struct ScaledModel {
    ExpressionTree tree;
    LinearScaling scaling;
};

struct Scores {
    double fitness = 0.0;
    double validation = 0.0;
    double test = 0.0;
};

struct GenerationRecord {
    std::size_t generation = 0;
    double best_train = 0.0;
    double best_validation = 0.0;
    double spearman = 0.0;
    std::size_t depth_limit = 0;
    double mean_size = 0.0;
};

struct RunResult {
    std::string target;
    std::vector<std::string> variables; // column names; tree variable indices point here
    GPConfig config;
    Partition partition;
    ScaledModel best_model;
    Scores scores;
    RelevanceVector relevance;
    std::vector<RelevanceVector> frequency_trace;
    std::vector<GenerationRecord> history;
    std::size_t generations_executed = 0;
    std::size_t best_generation = 0;
    StopReason stop_reason = StopReason::max_generations;
};

struct OffspringEvent {
    std::size_t generation = 0; // generation being bred from
    std::size_t slot = 0;
    std::size_t depth = 0;
    double fitness_train = 0.0;
    double best_before = 0.0;
    std::size_t limit_before = 0;
    std::size_t limit_after = 0;
    bool accepted = false;
};

// Instrumentation points. after_evaluation may overwrite fitness fields of
// the freshly evaluated population before they are used.
struct RunHooks {
    std::function<void(std::size_t generation, std::span<Individual> population)> after_evaluation;
    std::function<void(const OffspringEvent&)> on_offspring;
    std::function<void(const GenerationRecord&)> on_generation;
};

// One complete GP run for `target`, using every other column as input.
// Throws ConfigError when the target is constant on the fitness range and
// RangeError when the partition does not fit the matrix.
RunResult run(const GPConfig& config, const LaggedDesignMatrix& matrix, std::uint32_t target,
              const Partition& partition, const RunHooks& hooks = {});
RunResult run(const GPConfig& config, const LaggedDesignMatrix& matrix, std::string_view target,
              const Partition& partition, const RunHooks& hooks = {});

} // namespace symreg
