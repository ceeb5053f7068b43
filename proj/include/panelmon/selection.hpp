#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "panelmon/error.hpp"
#include "panelmon/panel.hpp"
#include "panelmon/rng.hpp"
#include "panelmon/stats.hpp"

namespace panelmon {

struct StabilityScore {
    std::size_t process = 0;  // row index in the detrended panel
    std::string process_id;
    double mse = 0.0;
};

struct ScoreResult {
    std::vector<StabilityScore> scores;
    std::vector<std::string> ineligible;  // too few observed points
};

/// Robust form: med_t(eta)^2 + iqr_t(eta). Plain form: mean_t(eta^2), i.e. the
/// mean squared deviation from the panel median after decomposition.
inline double stability_score(std::vector<double> eta, bool robust) {
    if (eta.empty()) throw DataError("stability score of an empty series");
    if (robust) {
        const double med = stats::median(eta);
        return med * med + stats::iqr(std::move(eta));
    }
    double ss = 0.0;
    for (double v : eta) ss += v * v;
    return ss / static_cast<double>(eta.size());
}

inline ScoreResult stability_scores(const DetrendedPanel& d, bool robust, std::size_t min_obs = 30) {
    ScoreResult out;
    for (std::size_t i = 0; i < d.num_processes(); ++i) {
        std::vector<double> v;
        for (std::size_t t = 0; t < d.num_times(); ++t)
            if (d.eta_hat.is_observed(i, t)) v.push_back(d.eta_hat.values(i, t));
        if (v.size() < min_obs || v.empty()) {
            out.ineligible.push_back(d.ids[i]);
            continue;
        }
        out.scores.push_back({i, d.ids[i], stability_score(std::move(v), robust)});
    }
    if (out.scores.empty()) throw DataError("stability scores: no process has enough observed points");
    return out;
}

enum class ClusterMethod { KMeans, GaussianMixtureEM };

struct TwoClusterResult {
    std::vector<std::uint8_t> in_control;  // 1 = low-center (IC) group
    double ic_center = 0.0;
    double oc_center = 0.0;
    bool degenerate = false;
    std::vector<std::string> warnings;

    std::size_t ic_count() const { return static_cast<std::size_t>(std::count(in_control.begin(), in_control.end(), 1)); }
};

namespace detail {

struct KMeansFit {
    std::vector<std::uint8_t> low;
    double c_low = 0.0, c_high = 0.0, wcss = std::numeric_limits<double>::infinity();
};

inline KMeansFit lloyd_1d(const std::vector<double>& x, double c0, double c1) {
    KMeansFit fit;
    fit.low.assign(x.size(), 0);
    double a = std::min(c0, c1), b = std::max(c0, c1);
    for (int iter = 0; iter < 100; ++iter) {
        bool changed = false;
        double sa = 0.0, sb = 0.0;
        std::size_t na = 0, nb = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const std::uint8_t lo = std::abs(x[i] - a) <= std::abs(x[i] - b) ? 1 : 0;
            if (iter == 0 || lo != fit.low[i]) changed = true;
            fit.low[i] = lo;
            (lo ? sa : sb) += x[i];
            (lo ? na : nb) += 1;
        }
        if (na == 0 || nb == 0) return fit;  // wcss stays infinite
        a = sa / static_cast<double>(na);
        b = sb / static_cast<double>(nb);
        if (!changed) break;
    }
    fit.c_low = std::min(a, b);
    fit.c_high = std::max(a, b);
    if (a > b)
        for (auto& l : fit.low) l = 1 - l;
    fit.wcss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double c = fit.low[i] ? fit.c_low : fit.c_high;
        fit.wcss += (x[i] - c) * (x[i] - c);
    }
    return fit;
}

inline double normal_logpdf(double x, double mu, double var) {
    return -0.5 * (std::log(2.0 * 3.14159265358979323846 * var) + (x - mu) * (x - mu) / var);
}

}  // namespace detail

/// Splits 1-D scores into a low (IC) and a high (OC) group. The k-means path
/// seeds at min/max and then runs jittered restarts, keeping the lowest
/// within-cluster sum of squares. The EM path fits a two-component Gaussian
/// mixture started from the k-means partition and assigns by posterior.
inline TwoClusterResult cluster_two(const std::vector<double>& scores, ClusterMethod method,
                                    std::uint64_t seed = 0, int restarts = 50) {
    TwoClusterResult out;
    if (scores.empty()) throw DataError("cluster_two: no scores");
    const auto [mn_it, mx_it] = std::minmax_element(scores.begin(), scores.end());
    const double mn = *mn_it, mx = *mx_it;
    if (!(mx > mn)) {
        out.in_control.assign(scores.size(), 1);
        out.ic_center = out.oc_center = mn;
        out.degenerate = true;
        out.warnings.push_back("all stability scores are identical; every process is treated as in control");
        return out;
    }

    detail::KMeansFit best = detail::lloyd_1d(scores, mn, mx);
    Rng rng(derive_seed(seed, 0x6b6d));
    std::uniform_int_distribution<std::size_t> pick(0, scores.size() - 1);
    std::normal_distribution<double> jitter(0.0, 0.05 * (mx - mn));
    for (int r = 0; r < restarts; ++r) {
        const double c0 = scores[pick(rng)] + jitter(rng);
        const double c1 = scores[pick(rng)] + jitter(rng);
        auto fit = detail::lloyd_1d(scores, c0, c1);
        if (fit.wcss < best.wcss - 1e-15 * std::max(1.0, best.wcss)) best = std::move(fit);
    }

    if (method == ClusterMethod::KMeans) {
        out.in_control = best.low;
        out.ic_center = best.c_low;
        out.oc_center = best.c_high;
        return out;
    }

    // EM on a two-component univariate Gaussian mixture.
    const std::size_t n = scores.size();
    const double total_var = stats::variance(scores);
    const double var_floor = std::max(1e-12, 1e-6 * total_var);
    double mu[2] = {best.c_low, best.c_high};
    double var[2] = {0.0, 0.0};
    double w[2] = {0.5, 0.5};
    {
        std::size_t cnt[2] = {0, 0};
        for (std::size_t i = 0; i < n; ++i) {
            const int g = best.low[i] ? 0 : 1;
            var[g] += (scores[i] - mu[g]) * (scores[i] - mu[g]);
            ++cnt[g];
        }
        for (int g = 0; g < 2; ++g) var[g] = std::max(var_floor, cnt[g] ? var[g] / static_cast<double>(cnt[g]) : total_var);
    }
    std::vector<double> resp(n);  // posterior of component 0
    double prev_ll = -std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 200; ++iter) {
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double l0 = std::log(w[0]) + detail::normal_logpdf(scores[i], mu[0], var[0]);
            const double l1 = std::log(w[1]) + detail::normal_logpdf(scores[i], mu[1], var[1]);
            const double m = std::max(l0, l1);
            const double lse = m + std::log(std::exp(l0 - m) + std::exp(l1 - m));
            resp[i] = std::exp(l0 - lse);
            ll += lse;
        }
        double nk[2] = {0.0, 0.0}, sk[2] = {0.0, 0.0};
        for (std::size_t i = 0; i < n; ++i) {
            nk[0] += resp[i];
            nk[1] += 1.0 - resp[i];
            sk[0] += resp[i] * scores[i];
            sk[1] += (1.0 - resp[i]) * scores[i];
        }
        if (nk[0] < 1e-9 || nk[1] < 1e-9) break;
        for (int g = 0; g < 2; ++g) {
            mu[g] = sk[g] / nk[g];
            w[g] = nk[g] / static_cast<double>(n);
        }
        double vk[2] = {0.0, 0.0};
        for (std::size_t i = 0; i < n; ++i) {
            vk[0] += resp[i] * (scores[i] - mu[0]) * (scores[i] - mu[0]);
            vk[1] += (1.0 - resp[i]) * (scores[i] - mu[1]) * (scores[i] - mu[1]);
        }
        for (int g = 0; g < 2; ++g) var[g] = std::max(var_floor, vk[g] / nk[g]);
        if (std::abs(ll - prev_ll) < 1e-8) break;
        prev_ll = ll;
    }

    // IC = lower center; equal centers fall back to the lower variance.
    int ic = (mu[0] < mu[1] || (mu[0] == mu[1] && var[0] <= var[1])) ? 0 : 1;
    out.in_control.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const double l0 = std::log(w[0]) + detail::normal_logpdf(scores[i], mu[0], var[0]);
        const double l1 = std::log(w[1]) + detail::normal_logpdf(scores[i], mu[1], var[1]);
        const int g = l0 >= l1 ? 0 : 1;
        out.in_control[i] = g == ic ? 1 : 0;
    }
    const std::size_t n_ic = out.ic_count();
    if (n_ic == 0 || n_ic == n) {
        out.warnings.push_back("EM mixture collapsed to one group; falling back to the k-means partition");
        out.in_control = best.low;
        out.ic_center = best.c_low;
        out.oc_center = best.c_high;
        return out;
    }
    out.ic_center = mu[ic];
    out.oc_center = mu[1 - ic];
    return out;
}

struct Pools {
    std::vector<std::string> p1;
    std::vector<std::string> p2;
    ScoreResult scores;
    ClusterMethod method = ClusterMethod::KMeans;
    std::vector<std::string> warnings;

    bool in_p1(const std::string& id) const { return std::find(p1.begin(), p1.end(), id) != p1.end(); }
    bool in_p2(const std::string& id) const { return std::find(p2.begin(), p2.end(), id) != p2.end(); }
};

/// P1 from clustering all eligible processes, P2 from re-clustering within P1.
inline Pools select_pools(const DetrendedPanel& d, ClusterMethod method, bool robust, std::uint64_t seed = 0,
                          std::size_t min_obs = 30) {
    if (d.num_processes() < 4) throw ConfigError("select_pools: at least 4 processes are required");
    Pools pools;
    pools.method = method;
    pools.scores = stability_scores(d, robust, min_obs);

    std::vector<double> all;
    for (const auto& s : pools.scores.scores) all.push_back(s.mse);
    auto first = cluster_two(all, method, derive_seed(seed, 1));
    for (auto& w : first.warnings) pools.warnings.push_back("P1: " + w);

    std::vector<double> inner;
    std::vector<std::size_t> inner_idx;
    for (std::size_t j = 0; j < all.size(); ++j) {
        if (!first.in_control[j]) continue;
        pools.p1.push_back(pools.scores.scores[j].process_id);
        inner.push_back(all[j]);
        inner_idx.push_back(j);
    }

    if (pools.p1.size() == 1) {
        pools.p2 = pools.p1;
        pools.warnings.push_back("P1 has a single member; P2 := P1");
        return pools;
    }
    auto second = cluster_two(inner, method, derive_seed(seed, 2));
    for (auto& w : second.warnings) pools.warnings.push_back("P2: " + w);
    for (std::size_t j = 0; j < inner.size(); ++j)
        if (second.in_control[j]) pools.p2.push_back(pools.scores.scores[inner_idx[j]].process_id);
    return pools;
}

inline void write_pool_report(std::ostream& out, const Pools& pools) {
    out << "process_id,score,in_p1,in_p2\n";
    char buf[64];
    for (const auto& s : pools.scores.scores) {
        std::snprintf(buf, sizeof buf, "%.17g", s.mse);
        out << s.process_id << ',' << buf << ',' << (pools.in_p1(s.process_id) ? 1 : 0) << ','
            << (pools.in_p2(s.process_id) ? 1 : 0) << '\n';
    }
    for (const auto& id : pools.scores.ineligible) out << id << ",,0,0\n";
}

struct ShewhartFilterResult {
    DetrendedPanel filtered;
    std::size_t removed = 0;
    std::size_t examined = 0;
    double removed_fraction() const { return examined ? static_cast<double>(removed) / static_cast<double>(examined) : 0.0; }
};

/// At each time, removes pool observations outside med +/- iqr_multiple * IQR
/// of the observed pool cross-section. Times with fewer than 4 observed pool
/// values are left untouched. Processes outside the pool are not modified.
inline ShewhartFilterResult adaptive_shewhart_filter(const DetrendedPanel& d, const std::vector<std::string>& pool,
                                                     double iqr_multiple) {
    if (pool.empty()) throw ConfigError("adaptive Shewhart filter: empty pool");
    if (!(iqr_multiple > 0.0)) throw ConfigError("adaptive Shewhart filter: iqr multiple must be positive");
    ShewhartFilterResult out{d, 0, 0};
    std::vector<std::size_t> rows;
    for (const auto& id : pool) {
        const auto it = std::find(d.ids.begin(), d.ids.end(), id);
        if (it == d.ids.end()) throw DataError("adaptive Shewhart filter: unknown process '" + id + "'");
        rows.push_back(static_cast<std::size_t>(it - d.ids.begin()));
    }
    std::vector<double> column;
    for (std::size_t t = 0; t < d.num_times(); ++t) {
        column.clear();
        for (auto i : rows)
            if (d.eta_hat.is_observed(i, t)) column.push_back(d.eta_hat.values(i, t));
        out.examined += column.size();
        if (column.size() < 4 || std::isinf(iqr_multiple)) continue;
        const double med = stats::median(column);
        const double band = iqr_multiple * stats::iqr(column);
        for (auto i : rows) {
            if (!d.eta_hat.is_observed(i, t)) continue;
            const double v = d.eta_hat.values(i, t);
            if (v < med - band || v > med + band) {
                out.filtered.eta_hat.clear(i, t);
                ++out.removed;
            }
        }
    }
    return out;
}

}  // namespace panelmon
