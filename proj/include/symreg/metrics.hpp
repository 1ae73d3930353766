#pragma once

#include <span>
#include <vector>

namespace symreg {

// Squared Pearson correlation of output and target. Rows with a nonfinite
// output or a missing target are skipped. Returns 0 for fewer than two usable
// rows, zero variance in either sequence, or a nonfinite correlation.
double r_squared(std::span<const double> output, std::span<const double> target);

// Fitness mapping used during evolution: rows are usable when the target is
// present and usable[i] is set (or usable is empty). A nonfinite output on any
// usable row yields exactly 0; otherwise the result equals r_squared.
double fitness_r_squared(std::span<const double> output, std::span<const double> target,
                         std::span<const char> usable = {});

// Fractional (mid) ranks, 1-based; tied values share the average of their ranks.
std::vector<double> midranks(std::span<const double> values);

// Spearman rank correlation: Pearson correlation of mid-ranks. Returns 0 when
// either rank vector has zero variance. Throws UsageError on unequal lengths
// or fewer than two elements.
double spearman_rho(std::span<const double> a, std::span<const double> b);

struct LinearScaling {
    double a = 0.0; // intercept
    double b = 1.0; // slope

    double apply(double x) const noexcept { return a + b * x; }
};

// Least-squares a, b minimizing sum (target - (a + b * output))^2 over rows
// where both are finite. Degenerate output variance gives b = 0, a = mean(target).
LinearScaling linear_scale(std::span<const double> output, std::span<const double> target);

// Quantile with linear interpolation between order statistics (position
// p * (n - 1) in the sorted sample). Throws UsageError on an empty sample.
double quantile(std::span<const double> sample, double p);

} // namespace symreg
