#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "symreg/error.hpp"
#include "symreg/evolution.hpp"
#include "symreg/relevance.hpp"
#include "test_support.hpp"

using namespace symreg;
using T = ExpressionTree;

namespace {
const std::vector<std::string> xy { "x", "y" };
const std::vector<std::uint32_t> both { 0, 1 };
} // namespace

TEST_CASE("population frequency examples")
{
    const std::vector<T> pop { T::function(Symbol::add, T::var(0), T::var(1)),
                               T::function(Symbol::mul, T::var(0), T::var(0)) };
    const auto f = population_frequency(pop, xy, both);
    CHECK(f.at("x") == 0.75);
    CHECK(f.at("y") == 0.25);

    const std::vector<T> constants { T::constant(1), T::function(Symbol::sin, T::constant(2)) };
    const auto zero = population_frequency(constants, xy, both);
    CHECK(zero.at("x") == 0.0);
    CHECK(zero.at("y") == 0.0);
    CHECK(total_weight(zero) == 0.0);

    const std::vector<T> only_x { T::function(Symbol::exp, T::var(0, 4)) };
    const auto single = population_frequency(only_x, xy, both);
    CHECK(single.at("x") == 1.0);
    CHECK(single.at("y") == 0.0);

    // a reference outside the universe is a caller error
    const std::vector<std::uint32_t> just_y { 1 };
    CHECK_THROWS_AS(population_frequency(pop, xy, just_y), UsageError);
}

TEST_CASE("population frequency is a distribution and order independent")
{
    std::mt19937_64 rng(6);
    const std::vector<std::string> names { "a", "b", "c", "d" };
    const std::vector<std::uint32_t> all { 0, 1, 2, 3 };
    for (int i = 0; i < 100; ++i) {
        std::vector<T> pop;
        for (int k = 0; k < 20; ++k) pop.push_back(fixture::random_tree(rng, 5, 4, 2));
        const auto f = population_frequency(pop, names, all);
        std::shuffle(pop.begin(), pop.end(), rng);
        const auto g = population_frequency(pop, names, all);
        CHECK(f == g);
        const double total = total_weight(f);
        CHECK((total == 0.0 || std::fabs(total - 1.0) <= 1e-9));
        for (const auto& [name, w] : f) CHECK(w >= 0.0);
    }
}

TEST_CASE("run relevance is the mean over generations")
{
    using R = RelevanceVector;
    CHECK(run_relevance(std::vector<R> { { { "x", 0.5 } }, { { "x", 0.7 } } }).at("x") == doctest::Approx(0.6));
    CHECK(run_relevance(std::vector<R> { { { "x", 1.0 } }, { { "x", 0.0 } }, { { "x", 0.5 } } }).at("x") == 0.5);
    const R v { { "x", 0.25 }, { "y", 0.75 } };
    CHECK(run_relevance(std::vector<R> { v, v, v }) == v);
    CHECK_THROWS_AS(run_relevance(std::vector<R> {}), UsageError);
    CHECK_THROWS_AS(run_relevance(std::vector<R> { { { "x", 1.0 } }, { { "y", 1.0 } } }), UsageError);

    // all-zero generations participate as zeros
    const auto mixed = run_relevance(std::vector<R> { { { "x", 0.0 }, { "y", 0.0 } }, v });
    CHECK(mixed.at("x") == 0.125);
    CHECK(mixed.at("y") == 0.375);

    // generation order does not matter
    std::vector<R> gens { { { "x", 0.1 }, { "y", 0.9 } }, { { "x", 0.4 }, { "y", 0.6 } }, { { "x", 0.8 }, { "y", 0.2 } } };
    const auto fwd = run_relevance(gens);
    std::reverse(gens.begin(), gens.end());
    const auto rev = run_relevance(gens);
    for (const auto& [name, w] : fwd) CHECK(std::fabs(w - rev.at(name)) < 1e-15);
}

TEST_CASE("aggregation over runs")
{
    RunResult a, b, c;
    a.target = b.target = "y";
    c.target = "z";
    a.relevance = { { "x", 0.2 }, { "w", 0.8 } };
    b.relevance = { { "x", 0.4 }, { "w", 0.6 } };
    const auto one = aggregate_runs(std::vector<RunResult> { a });
    CHECK(one.mean == a.relevance);
    const auto two = aggregate_runs(std::vector<RunResult> { a, b });
    CHECK(two.target == "y");
    CHECK(two.mean.at("x") == doctest::Approx(0.3));
    CHECK(two.per_run.size() == 2);
    CHECK_THROWS_AS(aggregate_runs(std::vector<RunResult> { a, c }), UsageError);
    CHECK_THROWS_AS(aggregate_runs(std::vector<RunResult> {}), UsageError);
}

TEST_CASE("aggregation is consistent with weighted concatenation")
{
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> u(0, 1);
    auto random_vector = [&]() {
        const double p = u(rng);
        return RelevanceVector { { "a", p }, { "b", 1 - p } };
    };
    std::vector<RelevanceVector> first(3), second(5);
    for (auto& v : first) v = random_vector();
    for (auto& v : second) v = random_vector();
    auto all = first;
    all.insert(all.end(), second.begin(), second.end());
    const auto whole = aggregate_relevance("t", all).mean;
    const auto m1 = aggregate_relevance("t", first).mean;
    const auto m2 = aggregate_relevance("t", second).mean;
    for (const auto& [name, w] : whole) {
        CHECK(std::fabs(w - (3 * m1.at(name) + 5 * m2.at(name)) / 8) < 1e-12);
    }
    CHECK(std::fabs(total_weight(whole) - 1.0) < 1e-9);
}
