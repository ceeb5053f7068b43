#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "panelmon/error.hpp"

namespace panelmon::stats {

inline double mean(std::span<const double> x) {
    if (x.empty()) throw DataError("mean of empty sample");
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Population variance (divide by n).
inline double variance(std::span<const double> x) {
    const double mu = mean(x);
    double ss = 0.0;
    for (double v : x) ss += (v - mu) * (v - mu);
    return ss / static_cast<double>(x.size());
}

/// Linear-interpolation quantile (Hyndman-Fan type 7). Sorts a copy.
inline double quantile(std::vector<double> x, double q) {
    if (x.empty()) throw DataError("quantile of empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("quantile level must lie in [0, 1]");
    std::sort(x.begin(), x.end());
    const double pos = q * static_cast<double>(x.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, x.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return x[lo] + frac * (x[hi] - x[lo]);
}

inline double median(std::vector<double> x) {
    if (x.empty()) throw DataError("median of empty sample");
    const std::size_t n = x.size();
    auto mid = x.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(x.begin(), mid, x.end());
    const double upper = *mid;
    if (n % 2 == 1) return upper;
    const double lower = *std::max_element(x.begin(), mid);
    return 0.5 * (lower + upper);
}

/// Interquartile range Q3 - Q1 with type-7 quantiles.
inline double iqr(std::vector<double> x) {
    std::sort(x.begin(), x.end());
    return quantile(x, 0.75) - quantile(x, 0.25);
}

/// Lag-j sample autocorrelation with the usual 1/n normalization.
inline double autocorrelation(std::span<const double> x, std::size_t lag) {
    if (x.size() <= lag) throw DataError("series shorter than lag");
    const double mu = mean(x);
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
        den += (x[t] - mu) * (x[t] - mu);
        if (t + lag < x.size()) num += (x[t] - mu) * (x[t + lag] - mu);
    }
    return den > 0.0 ? num / den : 0.0;
}

}  // namespace panelmon::stats
