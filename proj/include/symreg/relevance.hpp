#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "symreg/expression.hpp"

namespace symreg {

struct RunResult;

// Base-variable name -> relative weight. Weights are non-negative and sum to
// one, except for the all-zero vector of a population without references.
using RelevanceVector = std::map<std::string, double>;

double total_weight(const RelevanceVector& v) noexcept;

// Share of all variable references that point at each variable of the
// universe `variables` (indices into `names`), summed over the population and
// over all lags. All-zero when the population holds no variable reference.
// Throws UsageError if a tree references a variable outside the universe.
RelevanceVector population_frequency(std::span<const ExpressionTree> population,
                                     std::span<const std::string> names,
                                     std::span<const std::uint32_t> variables);

// Same as population_frequency, from per-variable reference totals indexed
// like `names`.
RelevanceVector frequency_from_counts(std::span<const std::size_t> counts,
                                      std::span<const std::string> names,
                                      std::span<const std::uint32_t> variables);

// Elementwise mean over the generations of one run. Throws UsageError for an
// empty list or vectors over different variables.
RelevanceVector run_relevance(std::span<const RelevanceVector> per_generation);

struct AggregatedRelevance {
    std::string target;
    std::vector<RelevanceVector> per_run;
    RelevanceVector mean;
};

// Mean over runs; per-run vectors are kept for dispersion reporting.
AggregatedRelevance aggregate_relevance(std::string target, std::vector<RelevanceVector> per_run);
// Throws UsageError when results are empty or target different variables.
AggregatedRelevance aggregate_runs(std::span<const RunResult> results);

} // namespace symreg
