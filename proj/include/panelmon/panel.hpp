#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "panelmon/error.hpp"
#include "panelmon/series.hpp"
#include "panelmon/stats.hpp"

namespace panelmon {

enum class ModelMode { Additive, Multiplicative };

/// Window placement for moving averages and pattern estimators.
/// LeftSided windows use only past and current samples (real-time use).
enum class Alignment { Centered, LeftSided };

/// N processes observed on a common, equally spaced time grid.
struct Panel {
    std::vector<std::string> ids;
    MaskedGrid data;
    double time_origin = 0.0;
    double time_step = 1.0;

    std::size_t num_processes() const noexcept { return data.rows(); }
    std::size_t num_times() const noexcept { return data.cols(); }
    double time_at(std::size_t t) const noexcept { return time_origin + time_step * static_cast<double>(t); }

    void validate() const {
        if (ids.size() != data.rows()) throw DataError("panel: id count does not match row count");
        if (data.rows() < 2) throw ConfigError("panel: at least 2 processes are required");
        if (data.cols() < 1) throw DataError("panel: at least 1 time point is required");
        if (!(time_step > 0.0) || !std::isfinite(time_step)) throw DataError("panel: time step must be positive");
        for (std::size_t i = 0; i < data.rows(); ++i)
            for (std::size_t t = 0; t < data.cols(); ++t)
                if (data.is_observed(i, t) && !std::isfinite(data.values(i, t)))
                    throw DataError("panel: non-finite observed value for process " + ids[i]);
    }

    /// Index of a process id, or npos.
    std::size_t index_of(const std::string& id) const {
        for (std::size_t i = 0; i < ids.size(); ++i)
            if (ids[i] == id) return i;
        return npos;
    }
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

/// Output of the common-signal and level removal.
struct DetrendedPanel {
    std::vector<std::string> ids;
    MaskedGrid eta_tilde;        // after common-signal removal (and smoothing)
    MaskedGrid eta_hat;          // after level removal
    MaskedGrid levels;           // moving-average level that was subtracted
    MaskedSeries common_signal;  // cross-sectional median per time

    std::size_t num_processes() const noexcept { return eta_hat.rows(); }
    std::size_t num_times() const noexcept { return eta_hat.cols(); }
};

struct DecompositionOptions {
    ModelMode mode = ModelMode::Multiplicative;
    std::size_t smoothing_window = 1;  // MA on raw observations; 1 disables
    std::size_t level_window = 1;
    Alignment alignment = Alignment::Centered;
    std::size_t min_count = 3;          // observed processes needed for the median
    double min_valid_fraction = 0.5;    // per MA window
};

/// Cross-sectional median over observed entries at each time. Times with
/// fewer than min_count observations are missing.
inline MaskedSeries estimate_common_signal(const MaskedGrid& x, std::size_t min_count = 3) {
    if (x.rows() < 2) throw ConfigError("common signal: at least 2 processes are required");
    MaskedSeries c(x.cols());
    std::vector<double> column;
    column.reserve(x.rows());
    for (std::size_t t = 0; t < x.cols(); ++t) {
        column.clear();
        for (std::size_t i = 0; i < x.rows(); ++i)
            if (x.is_observed(i, t)) column.push_back(x.values(i, t));
        if (!column.empty() && column.size() >= min_count) c.set(t, stats::median(column));
    }
    return c;
}

inline MaskedSeries estimate_common_signal(const Panel& panel, std::size_t min_count = 3) {
    return estimate_common_signal(panel.data, min_count);
}

/// Divides (multiplicative) or subtracts (additive) the common signal.
/// Under the multiplicative model a non-positive signal leaves the entry missing.
inline MaskedGrid remove_common_signal(const MaskedGrid& x, const MaskedSeries& c_hat, ModelMode mode) {
    if (c_hat.size() != x.cols()) throw DataError("common signal length does not match panel length");
    MaskedGrid out(x.rows(), x.cols());
    for (std::size_t t = 0; t < x.cols(); ++t) {
        if (!c_hat.is_observed(t)) continue;
        const double c = c_hat.values[t];
        if (mode == ModelMode::Multiplicative && !(c > 0.0)) continue;
        for (std::size_t i = 0; i < x.rows(); ++i) {
            if (!x.is_observed(i, t)) continue;
            out.set(i, t, mode == ModelMode::Multiplicative ? x.values(i, t) / c : x.values(i, t) - c);
        }
    }
    return out;
}

/// Window bounds [lo, hi] (inclusive, clipped to the series) for time t.
/// Centered windows of even width extend one sample further into the past.
inline std::pair<std::size_t, std::size_t> window_bounds(std::size_t t, std::size_t window, std::size_t n,
                                                         Alignment alignment) {
    std::size_t before = 0, after = 0;
    if (alignment == Alignment::Centered) {
        before = window / 2;
        after = window - 1 - before;
    } else {
        before = window - 1;
    }
    const std::size_t lo = t >= before ? t - before : 0;
    const std::size_t hi = std::min(n - 1, t + after);
    return {lo, hi};
}

/// Moving average over observed values. Edge windows are truncated to the
/// in-range samples; the output is missing when fewer than min_valid_fraction
/// of the in-range samples are observed.
inline MaskedSeries ma_filter(const MaskedSeries& series, std::size_t window, Alignment alignment,
                              double min_valid_fraction = 0.5) {
    const std::size_t n = series.size();
    if (window < 1) throw ConfigError("ma_filter: window must be at least 1");
    if (window > n) throw ConfigError("ma_filter: window (" + std::to_string(window) +
                                      ") exceeds series length (" + std::to_string(n) + ")");
    MaskedSeries out(n);
    for (std::size_t t = 0; t < n; ++t) {
        const auto [lo, hi] = window_bounds(t, window, n, alignment);
        double sum = 0.0;
        std::size_t valid = 0;
        for (std::size_t s = lo; s <= hi; ++s) {
            if (series.is_observed(s)) {
                sum += series.values[s];
                ++valid;
            }
        }
        const double fraction = static_cast<double>(valid) / static_cast<double>(hi - lo + 1);
        if (valid > 0 && fraction >= min_valid_fraction) out.set(t, sum / static_cast<double>(valid));
    }
    return out;
}

struct LevelRemoval {
    MaskedGrid eta_hat;
    MaskedGrid levels;
};

/// Per-process MA level estimate, subtracted pointwise. The same window is
/// applied to every process.
inline LevelRemoval remove_levels(const MaskedGrid& eta_tilde, std::size_t level_window,
                                  Alignment alignment = Alignment::Centered, double min_valid_fraction = 0.5) {
    LevelRemoval out{MaskedGrid(eta_tilde.rows(), eta_tilde.cols()), MaskedGrid(eta_tilde.rows(), eta_tilde.cols())};
    for (std::size_t i = 0; i < eta_tilde.rows(); ++i) {
        const MaskedSeries row = eta_tilde.row(i);
        const MaskedSeries level = ma_filter(row, level_window, alignment, min_valid_fraction);
        out.levels.set_row(i, level);
        for (std::size_t t = 0; t < row.size(); ++t)
            if (row.is_observed(t) && level.is_observed(t)) out.eta_hat.set(i, t, row.values[t] - level.values[t]);
    }
    return out;
}

/// Full decomposition: optional smoothing of the observations, common-signal
/// removal, then level removal.
inline DetrendedPanel decompose(const Panel& panel, const DecompositionOptions& opt) {
    panel.validate();
    if (opt.level_window > panel.num_times() || opt.smoothing_window > panel.num_times())
        throw ConfigError("decompose: window exceeds panel length");

    MaskedGrid smoothed = panel.data;
    if (opt.smoothing_window > 1) {
        for (std::size_t i = 0; i < panel.num_processes(); ++i)
            smoothed.set_row(i, ma_filter(panel.data.row(i), opt.smoothing_window, opt.alignment,
                                          opt.min_valid_fraction));
    }

    DetrendedPanel out;
    out.ids = panel.ids;
    out.common_signal = estimate_common_signal(smoothed, opt.min_count);
    out.eta_tilde = remove_common_signal(smoothed, out.common_signal, opt.mode);
    auto lr = remove_levels(out.eta_tilde, opt.level_window, opt.alignment, opt.min_valid_fraction);
    out.eta_hat = std::move(lr.eta_hat);
    out.levels = std::move(lr.levels);
    return out;
}

}  // namespace panelmon
