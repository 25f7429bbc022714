#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "error.hpp"

namespace ccmnet {

/// Pearson coefficient plus a flag raised when either input is constant.
struct Correlation {
    double value = 0.0;
    bool degenerate = false;
};

namespace detail {

inline bool is_constant(std::span<const double> x) {
    return std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); });
}

}  // namespace detail

/**
 * Sample Pearson correlation
 *   (<xy> - <x><y>) / sqrt((<x^2> - <x>^2)(<y^2> - <y>^2)),
 * evaluated with centred sums. A constant input yields 0 with `degenerate`
 * set. The result is clamped to [-1, 1].
 */
[[nodiscard]] inline Correlation pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw ValidationError("pearson: length mismatch");
    }
    if (x.size() < 2) {
        throw ValidationError("pearson: need at least 2 samples");
    }
    if (detail::is_constant(x) || detail::is_constant(y)) {
        return {0.0, true};
    }
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        return {0.0, true};
    }
    return {std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0), false};
}

/// Linear-interpolation quantile (Hyndman & Fan type 7) of an unsorted sample.
[[nodiscard]] inline double quantile(std::vector<double> values, double q) {
    if (values.empty()) {
        throw ValidationError("quantile: empty sample");
    }
    if (!(q >= 0.0 && q <= 1.0)) {
        throw ValidationError("quantile: q must lie in [0, 1]");
    }
    std::sort(values.begin(), values.end());
    const double h = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

/// Median; the mean of the two middle values for even sizes.
[[nodiscard]] inline double median(std::vector<double> values) {
    if (values.empty()) {
        throw ValidationError("median: empty sample");
    }
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1) {
        return upper;
    }
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

}  // namespace ccmnet
