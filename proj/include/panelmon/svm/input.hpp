#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "panelmon/error.hpp"
#include "panelmon/series.hpp"

namespace panelmon::svm {

inline constexpr double kMinValidFraction = 0.2;

struct InputVector {
    std::vector<double> values;
    double valid_fraction = 1.0;
};

/// Outcome of building the window ending at an alert; `vector` is empty when
/// fewer than 20% of the window's entries were observed.
struct ImputeResult {
    std::optional<InputVector> vector;
    double valid_fraction = 0.0;

    bool rejected() const noexcept { return !vector.has_value(); }
};

/// Window (tau - m + 1 .. tau). Indices before the series start count as
/// missing. Leading gaps take the first valid value, interior gaps are
/// interpolated linearly, trailing gaps hold the last valid value.
inline ImputeResult impute_input_vector(const MaskedSeries& residuals, std::size_t tau, std::size_t m) {
    if (m < 1) throw ConfigError("input vector: m must be at least 1");
    if (tau >= residuals.size()) throw DataError("input vector: alert time beyond the series end");
    std::vector<double> v(m, 0.0);
    std::vector<std::uint8_t> ok(m, 0);
    std::size_t valid = 0;
    for (std::size_t u = 0; u < m; ++u) {
        if (tau + u + 1 < m) continue;
        const std::size_t t = tau + u + 1 - m;
        if (residuals.is_observed(t)) {
            v[u] = residuals.values[t];
            ok[u] = 1;
            ++valid;
        }
    }
    ImputeResult res;
    res.valid_fraction = static_cast<double>(valid) / static_cast<double>(m);
    if (valid == 0 || res.valid_fraction < kMinValidFraction) return res;

    std::size_t first = 0;
    while (!ok[first]) ++first;
    for (std::size_t u = 0; u < first; ++u) v[u] = v[first];
    std::size_t prev = first;
    for (std::size_t u = first + 1; u < m; ++u) {
        if (!ok[u]) continue;
        for (std::size_t g = prev + 1; g < u; ++g) {
            const double w = static_cast<double>(g - prev) / static_cast<double>(u - prev);
            v[g] = v[prev] + w * (v[u] - v[prev]);
        }
        prev = u;
    }
    for (std::size_t u = prev + 1; u < m; ++u) v[u] = v[prev];
    res.vector = InputVector{std::move(v), res.valid_fraction};
    return res;
}

}  // namespace panelmon::svm
