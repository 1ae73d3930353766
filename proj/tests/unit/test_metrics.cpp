#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "symreg/error.hpp"
#include "symreg/metrics.hpp"
#include "test_support.hpp"

using namespace symreg;

namespace {
constexpr double pinf = std::numeric_limits<double>::infinity();
constexpr double qnan = std::numeric_limits<double>::quiet_NaN();
using V = std::vector<double>;
} // namespace

TEST_CASE("r_squared examples")
{
    CHECK(r_squared(V { 1, 2, 3 }, V { 1, 2, 3 }) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(r_squared(V { 5, 5, 5 }, V { 1, 2, 3 }) == 0.0);
    CHECK(r_squared(V { 1, 2, 3 }, V { 4, 4, 4 }) == 0.0);
    // by hand: sxy = 10.5, sxx = 5, syy = 22.75, so R^2 = 110.25 / 113.75 = 63 / 65
    CHECK(std::fabs(r_squared(V { 1, 2, 3, 4 }, V { 2, 4, 7, 8 }) - 63.0 / 65.0) < 1e-12);
    // anti-correlation still gives R^2 = 1
    CHECK(r_squared(V { 1, 2, 3 }, V { 3, 2, 1 }) == doctest::Approx(1.0));
}

TEST_CASE("r_squared skips unusable rows and stays total")
{
    CHECK(r_squared(V { 1, qnan, 2, 3 }, V { 1, 100, 2, 3 }) == doctest::Approx(1.0));
    CHECK(r_squared(V { 1, 2, 3 }, V { 1, qnan, 3 }) == doctest::Approx(1.0));
    CHECK(r_squared(V { 1, pinf }, V { 1, 2 }) == 0.0);
    CHECK(r_squared(V {}, V {}) == 0.0);
    // overflow in the moments is mapped to 0, never NaN
    const double r = r_squared(V { 1e300, -1e300, 1e300 }, V { 1, 2, 3 });
    CHECK(std::isfinite(r));
    CHECK(r >= 0.0);
    CHECK(r <= 1.0);
}

TEST_CASE("fitness mapping: nonfinite output on a usable row is exactly zero")
{
    CHECK(fitness_r_squared(V { 1, 2, pinf, 4 }, V { 1, 2, 3, 4 }) == 0.0);
    CHECK(fitness_r_squared(V { 1, 2, qnan, 4 }, V { 1, 2, 3, 4 }) == 0.0);
    // the row is masked, so it does not count
    const std::vector<char> usable { 1, 1, 0, 1 };
    CHECK(fitness_r_squared(V { 1, 2, qnan, 4 }, V { 1, 2, 3, 4 }, usable) == doctest::Approx(1.0));
    // a missing target excludes the row as well
    CHECK(fitness_r_squared(V { 1, 2, qnan, 4 }, V { 1, 2, qnan, 4 }) == doctest::Approx(1.0));
    // constant output
    CHECK(fitness_r_squared(V { 3, 3, 3 }, V { 1, 2, 3 }) == 0.0);
}

TEST_CASE("r_squared matches the Pearson oracle on random inputs")
{
    std::mt19937_64 rng(1);
    std::normal_distribution<double> z(0, 1);
    for (int i = 0; i < 200; ++i) {
        const std::size_t n = 2 + i % 40;
        V x(n), y(n);
        for (std::size_t k = 0; k < n; ++k) {
            x[k] = z(rng);
            y[k] = 0.5 * x[k] + z(rng);
        }
        CHECK(std::fabs(r_squared(x, y) - oracle::r_squared(x, y)) < 1e-9);
    }
}

TEST_CASE("spearman examples")
{
    CHECK(spearman_rho(V { 1, 2, 3, 4 }, V { 10, 20, 30, 40 }) == doctest::Approx(1.0));
    CHECK(spearman_rho(V { 1, 2, 3, 4 }, V { 4, 3, 2, 1 }) == doctest::Approx(-1.0));
    CHECK(spearman_rho(V { 1, 2, 3, 4, 5 }, V { 1, 3, 2, 5, 4 }) == doctest::Approx(0.8).epsilon(1e-14));
    CHECK(spearman_rho(V { 1, 1, 1 }, V { 1, 2, 3 }) == 0.0);
    CHECK_THROWS_AS(spearman_rho(V { 1 }, V { 1 }), UsageError);
    CHECK_THROWS_AS(spearman_rho(V { 1, 2 }, V { 1, 2, 3 }), UsageError);
}

TEST_CASE("midranks share ties")
{
    CHECK(midranks(V { 10, 20, 10, 30 }) == V { 1.5, 3, 1.5, 4 });
    CHECK(midranks(V { 5, 5, 5 }) == V { 2, 2, 2 });
}

TEST_CASE("spearman matches the brute-force oracle with and without ties")
{
    std::mt19937_64 rng(4);
    std::normal_distribution<double> z(0, 1);
    std::uniform_int_distribution<int> small(0, 4);
    for (int i = 0; i < 300; ++i) {
        const std::size_t n = 2 + i % 50;
        const bool ties = i % 2 == 0;
        V a(n), b(n);
        for (std::size_t k = 0; k < n; ++k) {
            a[k] = ties ? small(rng) : z(rng);
            b[k] = ties ? small(rng) : z(rng) + a[k];
        }
        CHECK(std::fabs(spearman_rho(a, b) - oracle::spearman(a, b)) < 1e-12);
    }
}

TEST_CASE("linear_scale examples")
{
    auto s = linear_scale(V { 0, 1, 2 }, V { 10, 12, 14 });
    CHECK(s.a == doctest::Approx(10.0));
    CHECK(s.b == doctest::Approx(2.0));
    s = linear_scale(V { 3, 1, 4, 1, 5 }, V { 3, 1, 4, 1, 5 });
    CHECK(s.a == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(s.b == doctest::Approx(1.0));
    s = linear_scale(V { 2, 2, 2 }, V { 6, 7, 8 });
    CHECK(s.a == 7.0);
    CHECK(s.b == 0.0);
    CHECK(LinearScaling { 1.0, 3.0 }.apply(2.0) == 7.0);
}

TEST_CASE("linear_scale minimizes the squared error")
{
    std::mt19937_64 rng(9);
    std::normal_distribution<double> z(0, 1);
    for (int i = 0; i < 100; ++i) {
        V x(30), y(30);
        for (std::size_t k = 0; k < x.size(); ++k) {
            x[k] = z(rng);
            y[k] = 3 - 2 * x[k] + z(rng);
        }
        const auto s = linear_scale(x, y);
        auto sse = [&](double a, double b) {
            double e = 0;
            for (std::size_t k = 0; k < x.size(); ++k) e += (y[k] - a - b * x[k]) * (y[k] - a - b * x[k]);
            return e;
        };
        const double best = sse(s.a, s.b);
        for (double da : { -1e-3, 0.0, 1e-3 }) {
            for (double db : { -1e-3, 0.0, 1e-3 }) {
                CHECK(sse(s.a + da, s.b + db) >= best);
            }
        }
        const auto [oa, ob] = oracle::least_squares(x, y);
        CHECK(std::fabs(s.a - oa) < 1e-9);
        CHECK(std::fabs(s.b - ob) < 1e-9);
    }
}

TEST_CASE("quantile interpolates linearly")
{
    const V g { 1.0, 0.2, 0.6, 0.8, 0.4 };
    CHECK(quantile(g, 0.0) == 0.2);
    CHECK(quantile(g, 0.25) == doctest::Approx(0.4));
    CHECK(quantile(g, 0.5) == doctest::Approx(0.6));
    CHECK(quantile(g, 0.75) == doctest::Approx(0.8));
    CHECK(quantile(g, 1.0) == 1.0);
    CHECK(quantile(V { 1, 2 }, 0.5) == 1.5);
    CHECK_THROWS_AS(quantile(V {}, 0.5), UsageError);
}
