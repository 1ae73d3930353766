#include "symreg/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "symreg/error.hpp"

namespace symreg {

void GPConfig::validate() const
{
    auto fail = [](const std::string& what) { throw ConfigError("invalid GP configuration: " + what); };
    if (population_size < 2) fail("population_size must be at least 2");
    if (max_generations < 1) fail("max_generations must be at least 1");
    if (tournament_size < 1) fail("tournament_size must be at least 1");
    for (double rate : { one_point_mutation_rate, subtree_mutation_rate }) {
        if (!(rate >= 0.0 && rate <= 1.0)) fail("mutation rates must lie in [0, 1]");
    }
    if (one_point_mutation_rate + subtree_mutation_rate > 1.0) fail("mutation rates must sum to at most 1");
    if (initial_depth_limit < 2) fail("initial_depth_limit must be at least 2");
    if (initial_depth_limit > 30) fail("initial_depth_limit above 30 is not supported");
    if (!std::isfinite(spearman_stop_threshold)) fail("spearman_stop_threshold must be finite");
    if (!(std::isfinite(constant_min) && std::isfinite(constant_max) && constant_min <= constant_max)) {
        fail("constant range must be finite with min <= max");
    }
}

TerminalSet::TerminalSet(std::vector<std::uint32_t> variables, std::size_t max_lag, double constant_min,
                         double constant_max)
    : variables_(std::move(variables))
    , max_lag_(max_lag)
    , constant_min_(constant_min)
    , constant_max_(constant_max)
{
}

double TerminalSet::sample_constant(Rng& rng) const
{
    return std::uniform_real_distribution<double>(constant_min_, constant_max_)(rng);
}

Node TerminalSet::sample(Rng& rng) const
{
    if (variables_.empty()) {
        return Node::constant(sample_constant(rng));
    }
    const std::size_t kinds = max_lag_ > 0 ? 3 : 2;
    const auto kind = std::uniform_int_distribution<std::size_t>(0, kinds - 1)(rng);
    if (kind == 0) {
        return Node::constant(sample_constant(rng));
    }
    const auto var = variables_[std::uniform_int_distribution<std::size_t>(0, variables_.size() - 1)(rng)];
    if (kind == 1) {
        return Node::var(var, 0);
    }
    const auto lag = std::uniform_int_distribution<std::size_t>(1, max_lag_)(rng);
    return Node::var(var, static_cast<std::uint32_t>(lag));
}

namespace {

std::size_t uniform_index(Rng& rng, std::size_t n)
{
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

bool bernoulli(Rng& rng, double p)
{
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

Symbol random_function(Rng& rng)
{
    return function_symbols[uniform_index(rng, function_symbols.size())];
}

std::size_t max_size_for_depth(std::size_t depth)
{
    return (std::size_t { 1 } << std::min<std::size_t>(depth, 40)) - 1;
}

} // namespace

ExpressionTree ptc2(Rng& rng, const TerminalSet& terminals, std::size_t target_size, std::size_t max_depth)
{
    if (target_size <= 1 || max_depth <= 1) {
        return ExpressionTree::terminal(terminals.sample(rng));
    }
    struct Slot {
        std::size_t parent;
        std::size_t position;
        std::size_t level;
    };
    std::vector<Node> nodes;
    std::vector<std::vector<std::size_t>> children;
    std::vector<Slot> open;

    // Nodes the tree could still reach if every open slot grew into a full
    // binary subtree. Unary functions shrink it; they are only drawn while the
    // size target stays reachable, so large targets are not cut short by depth.
    auto capacity = [max_depth](std::size_t level) { return max_size_for_depth(max_depth - level + 1); };
    std::size_t reachable = capacity(1);
    auto choose_function = [&](std::size_t level) {
        const auto if_unary = reachable - capacity(level) + 1 + capacity(level + 1);
        if (if_unary >= target_size) {
            return random_function(rng);
        }
        return binary_functions[uniform_index(rng, binary_functions.size())];
    };

    auto place = [&](Node n, std::size_t level) {
        const auto id = nodes.size();
        nodes.push_back(n);
        children.emplace_back(arity(n.symbol), 0);
        for (std::size_t k = 0; k < arity(n.symbol); ++k) {
            open.push_back({ id, k, level + 1 });
        }
        if (arity(n.symbol) == 1) {
            reachable = reachable - capacity(level) + 1 + capacity(level + 1);
        }
        return id;
    };

    place(Node::function(choose_function(1)), 1);
    // Each function placement grows (placed + open) by its arity; terminals keep it constant.
    while (!open.empty() && open.size() + nodes.size() < target_size) {
        const auto pick = uniform_index(rng, open.size());
        const Slot slot = open[pick];
        open[pick] = open.back();
        open.pop_back();
        const Node n = slot.level >= max_depth ? terminals.sample(rng) : Node::function(choose_function(slot.level));
        children[slot.parent][slot.position] = place(n, slot.level);
    }
    for (const auto& slot : open) {
        const auto id = nodes.size();
        nodes.push_back(terminals.sample(rng));
        children.emplace_back();
        children[slot.parent][slot.position] = id;
    }

    std::vector<Node> prefix;
    prefix.reserve(nodes.size());
    std::vector<std::size_t> stack { 0 };
    while (!stack.empty()) {
        const auto id = stack.back();
        stack.pop_back();
        prefix.push_back(nodes[id]);
        for (auto it = children[id].rbegin(); it != children[id].rend(); ++it) {
            stack.push_back(*it);
        }
    }
    return ExpressionTree(std::move(prefix));
}

std::vector<ExpressionTree> initialize_population(const GPConfig& config, const TerminalSet& terminals, Rng& rng)
{
    const auto max_size = max_size_for_depth(config.initial_depth_limit);
    std::uniform_int_distribution<std::size_t> size_target(std::min<std::size_t>(3, max_size), max_size);
    std::vector<ExpressionTree> population;
    population.reserve(config.population_size);
    for (std::size_t i = 0; i < config.population_size; ++i) {
        population.push_back(ptc2(rng, terminals, size_target(rng), config.initial_depth_limit));
    }
    return population;
}

namespace {

// True when a is strictly preferred over b on training fitness.
bool better_on_train(const Individual& a, std::size_t ia, const Individual& b, std::size_t ib)
{
    if (a.fitness_train != b.fitness_train) return a.fitness_train > b.fitness_train;
    if (a.size != b.size) return a.size < b.size;
    return ia < ib;
}

std::size_t best_on_train(std::span<const Individual> population)
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < population.size(); ++i) {
        if (better_on_train(population[i], i, population[best], best)) {
            best = i;
        }
    }
    return best;
}

std::size_t best_on_validation(std::span<const Individual> population)
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < population.size(); ++i) {
        const auto& a = population[i];
        const auto& b = population[best];
        if (a.fitness_validation > b.fitness_validation
            || (a.fitness_validation == b.fitness_validation && a.size < b.size)) {
            best = i;
        }
    }
    return best;
}

} // namespace

std::size_t tournament_select(std::span<const Individual> population, std::size_t size, Rng& rng)
{
    if (population.empty()) {
        throw UsageError("tournament_select on an empty population");
    }
    std::size_t winner = uniform_index(rng, population.size());
    for (std::size_t k = 1; k < size; ++k) {
        const auto challenger = uniform_index(rng, population.size());
        if (better_on_train(population[challenger], challenger, population[winner], winner)) {
            winner = challenger;
        }
    }
    return winner;
}

ExpressionTree subtree_crossover(const ExpressionTree& a, const ExpressionTree& b, Rng& rng)
{
    const auto cut = uniform_index(rng, a.size());
    const auto donor = uniform_index(rng, b.size());
    return a.replace_subtree(cut, b.subtree(donor));
}

ExpressionTree one_point_mutation(const ExpressionTree& tree, std::size_t index, Rng& rng, const TerminalSet& terminals)
{
    const Node& old = tree.node(index);
    switch (old.symbol) {
    case Symbol::constant:
        return tree.with_node(index, Node::constant(old.value + std::normal_distribution<double>(0.0, 1.0)(rng)));
    case Symbol::variable:
        return tree.with_node(index, terminals.sample(rng));
    default: {
        std::vector<Symbol> candidates;
        for (auto s : function_symbols) {
            if (arity(s) == arity(old.symbol) && s != old.symbol) {
                candidates.push_back(s);
            }
        }
        return tree.with_node(index, Node::function(candidates[uniform_index(rng, candidates.size())]));
    }
    }
}

ExpressionTree subtree_mutation(const ExpressionTree& tree, std::size_t index, Rng& rng, const TerminalSet& terminals,
                                std::size_t depth_limit, std::size_t max_length)
{
    const auto level = tree.node_level(index);
    const auto allowed_depth = depth_limit >= level ? depth_limit - level + 1 : 1;
    const auto rest = tree.size() - tree.subtree_size(index);
    const auto max_subtree = max_length > rest ? max_length - rest : 1;
    const auto cap = std::max<std::size_t>(1, std::min(max_size_for_depth(allowed_depth), max_subtree));
    const auto target = std::uniform_int_distribution<std::size_t>(1, cap)(rng);
    return tree.replace_subtree(index, ptc2(rng, terminals, target, allowed_depth));
}

MutationResult mutate(const ExpressionTree& tree, Rng& rng, const GPConfig& config, const TerminalSet& terminals,
                      std::size_t depth_limit)
{
    MutationResult out { tree, false, false };
    if (bernoulli(rng, config.one_point_mutation_rate)) {
        out.tree = one_point_mutation(out.tree, uniform_index(rng, out.tree.size()), rng, terminals);
        out.one_point = true;
    }
    if (bernoulli(rng, config.subtree_mutation_rate)) {
        out.tree = subtree_mutation(out.tree, uniform_index(rng, out.tree.size()), rng, terminals, depth_limit,
                                    max_size_for_depth(config.initial_depth_limit));
        out.subtree = true;
    }
    return out;
}

Acceptance accept_offspring(std::size_t child_depth, double child_fitness, std::size_t current_limit,
                            double best_fitness_so_far) noexcept
{
    if (child_depth <= current_limit) {
        return { true, current_limit };
    }
    if (child_fitness > best_fitness_so_far) {
        return { true, child_depth };
    }
    return { false, current_limit };
}

FitnessEvaluator::FitnessEvaluator(const LaggedDesignMatrix& matrix, std::uint32_t target, const Partition& partition)
    : matrix_(matrix)
    , target_(target)
    , partition_(partition)
    , span_ { partition.fitness.first, partition.validation.last }
{
    if (target >= matrix.variable_count()) {
        throw SchemaError("target index " + std::to_string(target) + " out of range");
    }
    partition_.validate(matrix.length());
    if (partition_.fitness.first < matrix.first_valid_row()) {
        throw RangeError("fitness range starts at index " + std::to_string(partition_.fitness.first)
                         + " before the first fully lagged row " + std::to_string(matrix.first_valid_row()));
    }
}

std::vector<char> FitnessEvaluator::usable_rows(const ExpressionTree& tree, IndexRange rows) const
{
    std::vector<char> usable(rows.size(), 1);
    if (!matrix_.has_missing()) {
        return usable;
    }
    for (const auto& n : tree.nodes()) {
        if (!n.is_variable()) {
            continue;
        }
        auto values = matrix_.lagged(n.variable, n.lag, rows);
        for (std::size_t r = 0; r < values.size(); ++r) {
            if (is_missing(values[r])) {
                usable[r] = 0;
            }
        }
    }
    return usable;
}

std::vector<double> FitnessEvaluator::outputs(const ExpressionTree& tree, IndexRange rows) const
{
    auto out = evaluate(tree, matrix_, rows);
    if (matrix_.has_missing()) {
        auto usable = usable_rows(tree, rows);
        for (std::size_t r = 0; r < out.size(); ++r) {
            if (!usable[r]) {
                out[r] = missing_value;
            }
        }
    }
    return out;
}

std::span<const double> FitnessEvaluator::target(IndexRange rows) const
{
    return matrix_.table().values(target_).subspan(rows.first, rows.size());
}

std::pair<double, double> FitnessEvaluator::train_and_validation(const ExpressionTree& tree) const
{
    const auto out = evaluate(tree, matrix_, span_);
    const auto usable = usable_rows(tree, span_);
    const std::span<const double> all(out);
    const std::span<const char> mask(usable);
    const auto nf = partition_.fitness.size();
    const auto voff = partition_.validation.first - span_.first;
    const auto nv = partition_.validation.size();
    const double train = fitness_r_squared(all.subspan(0, nf), target(partition_.fitness), mask.subspan(0, nf));
    const double validation = fitness_r_squared(all.subspan(voff, nv), target(partition_.validation), mask.subspan(voff, nv));
    return { train, validation };
}

Individual FitnessEvaluator::make_individual(ExpressionTree tree) const
{
    Individual ind;
    std::tie(ind.fitness_train, ind.fitness_validation) = train_and_validation(tree);
    ind.depth = tree.depth();
    ind.size = tree.size();
    ind.tree = std::move(tree);
    return ind;
}

double FitnessEvaluator::score(const ExpressionTree& tree, const LinearScaling& scaling, IndexRange rows) const
{
    auto out = evaluate(tree, matrix_, rows);
    for (auto& v : out) {
        v = scaling.apply(v);
    }
    const auto usable = usable_rows(tree, rows);
    return fitness_r_squared(out, target(rows), usable);
}

std::string_view stop_reason_name(StopReason r) noexcept
{
    return r == StopReason::spearman_stop ? "spearman_stop" : "max_generations";
}

StopReason stop_reason_from_name(std::string_view name)
{
    if (name == "spearman_stop") return StopReason::spearman_stop;
    if (name == "max_generations") return StopReason::max_generations;
    throw ParseError("unknown stop reason '" + std::string(name) + "'", 1, 1);
}

RunResult run(const GPConfig& config, const LaggedDesignMatrix& matrix, std::uint32_t target,
              const Partition& partition, const RunHooks& hooks)
{
    config.validate();
    if (config.max_lag > matrix.max_lag()) {
        throw ConfigError("GP max_lag " + std::to_string(config.max_lag) + " exceeds the design matrix max_lag "
                          + std::to_string(matrix.max_lag()));
    }
    const FitnessEvaluator evaluator(matrix, target, partition);
    const auto names = matrix.table().names();

    {
        auto y = evaluator.target(partition.fitness);
        std::optional<double> first;
        bool varying = false;
        for (double v : y) {
            if (is_missing(v)) continue;
            if (!first) first = v;
            varying = varying || v != *first;
        }
        if (!varying) {
            throw ConfigError("target '" + names[target] + "' is constant on the fitness range");
        }
    }

    std::vector<std::uint32_t> inputs;
    for (std::uint32_t v = 0; v < matrix.variable_count(); ++v) {
        if (v != target) {
            inputs.push_back(v);
        }
    }
    const TerminalSet terminals(inputs, config.max_lag, config.constant_min, config.constant_max);
    Rng rng(config.rng_seed);

    std::vector<Individual> population;
    population.reserve(config.population_size);
    for (auto& tree : initialize_population(config, terminals, rng)) {
        population.push_back(evaluator.make_individual(std::move(tree)));
    }

    RunResult result;
    result.target = names[target];
    result.variables = names;
    result.config = config;
    result.partition = partition;

    std::size_t depth_limit = config.initial_depth_limit;
    double best_train = 0.0;
    std::optional<Individual> best_validation;
    std::vector<double> train(config.population_size);
    std::vector<double> validation(config.population_size);
    std::vector<Individual> next;
    next.reserve(config.population_size);

    for (std::size_t generation = 1;; ++generation) {
        if (hooks.after_evaluation) {
            hooks.after_evaluation(generation, population);
        }

        std::vector<std::size_t> counts(names.size(), 0);
        for (const auto& ind : population) {
            for (const auto& n : ind.tree.nodes()) {
                if (n.is_variable()) ++counts[n.variable];
            }
        }
        result.frequency_trace.push_back(frequency_from_counts(counts, names, inputs));

        const auto bv = best_on_validation(population);
        if (!best_validation || population[bv].fitness_validation > best_validation->fitness_validation
            || (population[bv].fitness_validation == best_validation->fitness_validation
                && population[bv].size < best_validation->size)) {
            best_validation = population[bv];
            result.best_generation = generation;
        }

        double size_sum = 0.0;
        for (std::size_t i = 0; i < population.size(); ++i) {
            train[i] = population[i].fitness_train;
            validation[i] = population[i].fitness_validation;
            best_train = std::max(best_train, train[i]);
            size_sum += static_cast<double>(population[i].size);
        }
        const double rho = spearman_rho(train, validation);

        GenerationRecord record { generation, best_train, best_validation->fitness_validation, rho, depth_limit,
                                  size_sum / static_cast<double>(population.size()) };
        result.history.push_back(record);
        if (hooks.on_generation) {
            hooks.on_generation(record);
        }

        result.generations_executed = generation;
        if (rho < config.spearman_stop_threshold) {
            result.stop_reason = StopReason::spearman_stop;
            break;
        }
        if (generation >= config.max_generations) {
            result.stop_reason = StopReason::max_generations;
            break;
        }

        next.clear();
        next.push_back(population[best_on_train(population)]);
        while (next.size() < config.population_size) {
            const auto a = tournament_select(population, config.tournament_size, rng);
            const auto b = tournament_select(population, config.tournament_size, rng);
            auto child_tree = subtree_crossover(population[a].tree, population[b].tree, rng);
            auto mutated = mutate(child_tree, rng, config, terminals, depth_limit);
            auto child = evaluator.make_individual(std::move(mutated.tree));

            const auto decision = accept_offspring(child.depth, child.fitness_train, depth_limit, best_train);
            if (hooks.on_offspring) {
                hooks.on_offspring({ generation, next.size(), child.depth, child.fitness_train, best_train,
                                     depth_limit, decision.depth_limit, decision.accepted });
            }
            if (decision.accepted) {
                depth_limit = decision.depth_limit;
                best_train = std::max(best_train, child.fitness_train);
                next.push_back(std::move(child));
            } else {
                next.push_back(population[a]);
            }
        }
        population.swap(next);
    }

    result.relevance = run_relevance(result.frequency_trace);

    auto& best = *best_validation;
    const auto fit_out = evaluator.outputs(best.tree, partition.fitness);
    const auto scaling = linear_scale(fit_out, evaluator.target(partition.fitness));
    result.best_model = { best.tree, scaling };
    result.scores.fitness = evaluator.score(best.tree, scaling, partition.fitness);
    result.scores.validation = evaluator.score(best.tree, scaling, partition.validation);
    result.scores.test = evaluator.score(best.tree, scaling, partition.test);
    return result;
}

RunResult run(const GPConfig& config, const LaggedDesignMatrix& matrix, std::string_view target,
              const Partition& partition, const RunHooks& hooks)
{
    return run(config, matrix, static_cast<std::uint32_t>(matrix.table().require_index(target)), partition, hooks);
}

} // namespace symreg
