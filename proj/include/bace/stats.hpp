#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "bace/error.hpp"

namespace bace {

inline double mean(const std::vector<double>& xs) {
    if (xs.empty()) throw invalid_input("mean of empty sample");
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

// Linear-interpolation percentile on sorted order statistics
// (h = (n-1)p, the numpy default). p in [0,1].
inline double percentile(std::vector<double> xs, double p) {
    if (xs.empty()) throw invalid_input("percentile of empty sample");
    std::sort(xs.begin(), xs.end());
    const double h = (static_cast<double>(xs.size()) - 1.0) * p;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= xs.size()) return xs.back();
    const double frac = h - static_cast<double>(lo);
    return xs[lo] + frac * (xs[lo + 1] - xs[lo]);
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

// Central 95% interval of a sample (2.5 / 97.5 percentiles).
inline Interval interval_95(const std::vector<double>& xs) {
    return {percentile(xs, 0.025), percentile(xs, 0.975)};
}

}  // namespace bace
