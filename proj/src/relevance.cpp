#include "symreg/relevance.hpp"

#include <algorithm>

#include "symreg/error.hpp"
#include "symreg/evolution.hpp"

namespace symreg {

double total_weight(const RelevanceVector& v) noexcept
{
    double sum = 0.0;
    for (const auto& [name, w] : v) {
        sum += w;
    }
    return sum;
}

RelevanceVector frequency_from_counts(std::span<const std::size_t> counts,
                                      std::span<const std::string> names,
                                      std::span<const std::uint32_t> variables)
{
    std::size_t denominator = 0;
    for (auto v : variables) {
        if (v >= names.size() || v >= counts.size()) {
            throw UsageError("variable index " + std::to_string(v) + " outside the name list");
        }
        denominator += counts[v];
    }
    std::size_t all = 0;
    for (auto c : counts) {
        all += c;
    }
    if (all != denominator) {
        throw UsageError("population references variables outside the relevance universe");
    }
    RelevanceVector out;
    for (auto v : variables) {
        out[names[v]] = denominator == 0 ? 0.0 : static_cast<double>(counts[v]) / static_cast<double>(denominator);
    }
    return out;
}

RelevanceVector population_frequency(std::span<const ExpressionTree> population,
                                     std::span<const std::string> names,
                                     std::span<const std::uint32_t> variables)
{
    std::vector<std::size_t> counts(names.size(), 0);
    for (const auto& tree : population) {
        for (const auto& n : tree.nodes()) {
            if (!n.is_variable()) {
                continue;
            }
            if (n.variable >= names.size()) {
                throw UsageError("tree references variable index " + std::to_string(n.variable) + " without a name");
            }
            ++counts[n.variable];
        }
    }
    return frequency_from_counts(counts, names, variables);
}

RelevanceVector run_relevance(std::span<const RelevanceVector> per_generation)
{
    if (per_generation.empty()) {
        throw UsageError("run_relevance needs at least one generation");
    }
    RelevanceVector mean;
    for (const auto& [name, w] : per_generation.front()) {
        mean[name] = 0.0;
    }
    for (const auto& g : per_generation) {
        if (g.size() != mean.size()) {
            throw UsageError("relevance vectors cover different variables");
        }
        for (const auto& [name, w] : g) {
            auto it = mean.find(name);
            if (it == mean.end()) {
                throw UsageError("relevance vectors cover different variables");
            }
            it->second += w;
        }
    }
    const auto count = static_cast<double>(per_generation.size());
    for (auto& [name, w] : mean) {
        w /= count;
    }
    return mean;
}

AggregatedRelevance aggregate_relevance(std::string target, std::vector<RelevanceVector> per_run)
{
    AggregatedRelevance out;
    out.target = std::move(target);
    out.mean = run_relevance(per_run);
    out.per_run = std::move(per_run);
    return out;
}

AggregatedRelevance aggregate_runs(std::span<const RunResult> results)
{
    if (results.empty()) {
        throw UsageError("aggregate_runs needs at least one run");
    }
    std::vector<RelevanceVector> per_run;
    per_run.reserve(results.size());
    for (const auto& r : results) {
        if (r.target != results.front().target) {
            throw UsageError("aggregate_runs: mixed targets '" + results.front().target + "' and '" + r.target + "'");
        }
        per_run.push_back(r.relevance);
    }
    return aggregate_relevance(results.front().target, std::move(per_run));
}

} // namespace symreg
