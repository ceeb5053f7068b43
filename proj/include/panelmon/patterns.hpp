#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "panelmon/csv.hpp"
#include "panelmon/error.hpp"
#include "panelmon/panel.hpp"
#include "panelmon/series.hpp"

namespace panelmon {

/// Time-varying in-control mean and standard deviation.
struct ICPattern {
    MaskedSeries mu0;
    MaskedSeries sigma0;  // defined wherever mu0 is
    std::size_t window_delta = 0;  // boxcar width, 0 when K-NN
    std::size_t knn_k = 0;         // K-NN support, 0 when boxcar
    Alignment alignment = Alignment::Centered;

    std::size_t size() const noexcept { return mu0.size(); }
};

struct ResidualSeries {
    std::string process_id;
    MaskedSeries values;
};

namespace detail {

inline std::vector<std::size_t> pool_rows(const DetrendedPanel& d, const std::vector<std::string>& pool) {
    if (pool.empty()) throw ConfigError("IC pattern: empty pool");
    std::vector<std::size_t> rows;
    for (const auto& id : pool) {
        const auto it = std::find(d.ids.begin(), d.ids.end(), id);
        if (it == d.ids.end()) throw DataError("IC pattern: unknown process '" + id + "'");
        rows.push_back(static_cast<std::size_t>(it - d.ids.begin()));
    }
    std::sort(rows.begin(), rows.end());
    return rows;
}

}  // namespace detail

/// Boxcar estimator: mean and population variance over every observed
/// (pool member, time) pair inside a window of `delta` samples. The variance
/// is taken about the window mean mu0(t).
inline ICPattern estimate_ic_pattern_boxcar(const DetrendedPanel& d, const std::vector<std::string>& p2,
                                            std::size_t delta, Alignment alignment) {
    if (delta < 1) throw ConfigError("boxcar pattern: window must be at least 1");
    const auto rows = detail::pool_rows(d, p2);
    const std::size_t n = d.num_times();
    ICPattern pat{MaskedSeries(n), MaskedSeries(n), delta, 0, alignment};
    for (std::size_t t = 0; t < n; ++t) {
        const auto [lo, hi] = window_bounds(t, delta, n, alignment);
        double sum = 0.0;
        std::size_t cnt = 0;
        for (auto i : rows)
            for (std::size_t s = lo; s <= hi; ++s)
                if (d.eta_hat.is_observed(i, s)) {
                    sum += d.eta_hat.values(i, s);
                    ++cnt;
                }
        if (cnt == 0) continue;
        const double mu = sum / static_cast<double>(cnt);
        double ss = 0.0;
        for (auto i : rows)
            for (std::size_t s = lo; s <= hi; ++s)
                if (d.eta_hat.is_observed(i, s)) {
                    const double e = d.eta_hat.values(i, s) - mu;
                    ss += e * e;
                }
        pat.mu0.set(t, mu);
        pat.sigma0.set(t, std::sqrt(ss / static_cast<double>(cnt)));
    }
    return pat;
}

/// K-nearest-neighbour estimator: the support at t is the K observed
/// (pool member, time) pairs temporally closest to t. Ties go to the earlier
/// time, then to the lower process index. LeftSided restricts candidates to
/// times <= t; early times with fewer than K past points use what exists.
inline ICPattern estimate_ic_pattern_knn(const DetrendedPanel& d, const std::vector<std::string>& p2, std::size_t k,
                                         Alignment alignment) {
    if (k < 2) throw ConfigError("K-NN pattern: K must be at least 2");
    const auto rows = detail::pool_rows(d, p2);
    const std::size_t n = d.num_times();

    // Observed pool values per time slot, in process-index order.
    std::vector<std::vector<double>> slot(n);
    std::size_t total = 0;
    for (std::size_t t = 0; t < n; ++t)
        for (auto i : rows)
            if (d.eta_hat.is_observed(i, t)) {
                slot[t].push_back(d.eta_hat.values(i, t));
                ++total;
            }
    if (total < k)
        throw ConfigError("K-NN pattern: only " + std::to_string(total) + " observed pool points, fewer than K=" +
                          std::to_string(k));

    ICPattern pat{MaskedSeries(n), MaskedSeries(n), 0, k, alignment};
    std::vector<double> support;
    support.reserve(k);
    for (std::size_t t = 0; t < n; ++t) {
        support.clear();
        auto take = [&](std::size_t s) {
            for (double v : slot[s]) {
                if (support.size() == k) return;
                support.push_back(v);
            }
        };
        take(t);
        for (std::size_t dist = 1; support.size() < k; ++dist) {
            const bool has_past = dist <= t;
            const bool has_future = alignment == Alignment::Centered && t + dist < n;
            if (!has_past && !has_future) break;
            if (has_past) take(t - dist);
            if (has_future) take(t + dist);
        }
        if (support.empty()) continue;
        double sum = 0.0;
        for (double v : support) sum += v;
        const double mu = sum / static_cast<double>(support.size());
        double ss = 0.0;
        for (double v : support) ss += (v - mu) * (v - mu);
        pat.mu0.set(t, mu);
        pat.sigma0.set(t, std::sqrt(ss / static_cast<double>(support.size())));
    }
    return pat;
}

struct StandardizeResult {
    std::vector<ResidualSeries> residuals;
    std::size_t sigma_floor_hits = 0;  // observed points dropped because sigma0 <= floor
};

/// (eta - mu0) / sigma0 for every process. Missing where eta or the pattern is
/// missing, or where sigma0 does not exceed sigma_floor.
inline StandardizeResult standardize(const DetrendedPanel& d, const ICPattern& pat, double sigma_floor = 1e-8) {
    if (pat.size() != d.num_times()) throw DataError("standardize: pattern length does not match panel length");
    StandardizeResult out;
    for (std::size_t i = 0; i < d.num_processes(); ++i) {
        ResidualSeries r{d.ids[i], MaskedSeries(d.num_times())};
        for (std::size_t t = 0; t < d.num_times(); ++t) {
            if (!d.eta_hat.is_observed(i, t) || !pat.mu0.is_observed(t)) continue;
            const double s = pat.sigma0.values[t];
            if (!(s > sigma_floor)) {
                ++out.sigma_floor_hits;
                continue;
            }
            r.values.set(t, (d.eta_hat.values(i, t) - pat.mu0.values[t]) / s);
        }
        out.residuals.push_back(std::move(r));
    }
    return out;
}

inline void write_pattern(std::ostream& out, const ICPattern& pat, double time_origin = 0.0, double time_step = 1.0) {
    out << "time,mu0,sigma0\n";
    for (std::size_t t = 0; t < pat.size(); ++t) {
        out << csv::format(time_origin + time_step * static_cast<double>(t)) << ',';
        if (pat.mu0.is_observed(t)) out << csv::format(pat.mu0.values[t]) << ',' << csv::format(pat.sigma0.values[t]);
        else out << ',';
        out << '\n';
    }
}

}  // namespace panelmon
