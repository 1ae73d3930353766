#include "symreg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "symreg/error.hpp"

namespace symreg {

namespace {

double pearson_of(std::span<const double> x, std::span<const double> y)
{
    const auto n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        return 0.0;
    }
    return sxy / std::sqrt(sxx * syy);
}

} // namespace

double r_squared(std::span<const double> output, std::span<const double> target)
{
    if (output.size() != target.size()) {
        throw UsageError("r_squared: sequences differ in length");
    }
    auto usable = [&](std::size_t i) { return std::isfinite(output[i]) && std::isfinite(target[i]); };
    double n = 0, mx = 0, my = 0;
    bool varying_x = false, varying_y = false;
    double first_x = 0, first_y = 0;
    for (std::size_t i = 0; i < output.size(); ++i) {
        if (usable(i)) {
            if (n == 0) {
                first_x = output[i];
                first_y = target[i];
            }
            varying_x = varying_x || output[i] != first_x;
            varying_y = varying_y || target[i] != first_y;
            n += 1;
            mx += output[i];
            my += target[i];
        }
    }
    // exact zero-variance test; rounding in the mean must not fake a correlation
    if (n < 2 || !varying_x || !varying_y) {
        return 0.0;
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < output.size(); ++i) {
        if (usable(i)) {
            const double dx = output[i] - mx;
            const double dy = target[i] - my;
            sxy += dx * dy;
            sxx += dx * dx;
            syy += dy * dy;
        }
    }
    if (sxx == 0.0 || syy == 0.0) {
        return 0.0;
    }
    const double r2 = (sxy * sxy) / (sxx * syy);
    if (!std::isfinite(r2)) {
        return 0.0;
    }
    return std::min(r2, 1.0);
}

double fitness_r_squared(std::span<const double> output, std::span<const double> target, std::span<const char> usable)
{
    if (output.size() != target.size() || (!usable.empty() && usable.size() != output.size())) {
        throw UsageError("fitness_r_squared: sequences differ in length");
    }
    bool masked = false;
    for (std::size_t i = 0; i < output.size(); ++i) {
        if (!std::isfinite(target[i])) {
            continue;
        }
        if (!usable.empty() && !usable[i]) {
            masked = true;
            continue;
        }
        if (!std::isfinite(output[i])) {
            return 0.0;
        }
    }
    if (!masked) {
        return r_squared(output, target);
    }
    std::vector<double> filtered(output.begin(), output.end());
    for (std::size_t i = 0; i < filtered.size(); ++i) {
        if (!usable[i]) {
            filtered[i] = std::numeric_limits<double>::quiet_NaN();
        }
    }
    return r_squared(filtered, target);
}

std::vector<double> midranks(std::span<const double> values)
{
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t { 0 });
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
    std::vector<double> ranks(values.size());
    for (std::size_t start = 0; start < order.size();) {
        std::size_t end = start + 1;
        while (end < order.size() && values[order[end]] == values[order[start]]) {
            ++end;
        }
        // positions start..end-1 hold ranks start+1..end
        const double rank = (static_cast<double>(start + 1) + static_cast<double>(end)) / 2.0;
        for (std::size_t k = start; k < end; ++k) {
            ranks[order[k]] = rank;
        }
        start = end;
    }
    return ranks;
}

double spearman_rho(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size()) {
        throw UsageError("spearman_rho: sequences differ in length");
    }
    if (a.size() < 2) {
        throw UsageError("spearman_rho: at least two observations are required");
    }
    const auto ra = midranks(a);
    const auto rb = midranks(b);
    const double rho = pearson_of(ra, rb);
    return std::clamp(rho, -1.0, 1.0);
}

LinearScaling linear_scale(std::span<const double> output, std::span<const double> target)
{
    if (output.size() != target.size()) {
        throw UsageError("linear_scale: sequences differ in length");
    }
    double n = 0, mx = 0, my = 0;
    bool varying = false;
    double first = 0;
    for (std::size_t i = 0; i < output.size(); ++i) {
        if (std::isfinite(output[i]) && std::isfinite(target[i])) {
            if (n == 0) {
                first = output[i];
            }
            varying = varying || output[i] != first;
            n += 1;
            mx += output[i];
            my += target[i];
        }
    }
    if (n == 0) {
        return { 0.0, 0.0 };
    }
    mx /= n;
    my /= n;
    if (!varying) {
        return { my, 0.0 };
    }
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < output.size(); ++i) {
        if (std::isfinite(output[i]) && std::isfinite(target[i])) {
            const double dx = output[i] - mx;
            sxy += dx * (target[i] - my);
            sxx += dx * dx;
        }
    }
    if (sxx == 0.0 || !std::isfinite(sxx) || !std::isfinite(sxy)) {
        return { my, 0.0 };
    }
    const double b = sxy / sxx;
    const double a = my - b * mx;
    if (!std::isfinite(a) || !std::isfinite(b)) {
        return { my, 0.0 };
    }
    return { a, b };
}

double quantile(std::span<const double> sample, double p)
{
    if (sample.empty()) {
        throw UsageError("quantile of an empty sample");
    }
    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    const double pos = std::clamp(p, 0.0, 1.0) * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

} // namespace symreg
