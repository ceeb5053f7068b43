#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "panelmon/bootstrap.hpp"
#include "panelmon/cusum.hpp"
#include "panelmon/error.hpp"
#include "panelmon/stats.hpp"

namespace panelmon {

/// Which limits the bisection calibrates.
enum class LimitMode {
    Symmetric,   // h- = -h+, combined two-sided ARL matches the target
    UpperOnly,   // one-sided upward chart
    Asymmetric,  // each side calibrated alone to twice the target
};

struct CalibrationOptions {
    double k = 0.5;
    double arl0_target = 200.0;
    double rho = 0.0;  // 0 -> 5% of the target
    double h_low = 0.5;
    double h_high = 50.0;
    std::size_t replications = 2000;
    std::size_t length = 0;  // 0 -> 10 x target
    std::size_t max_iterations = 40;
    std::size_t max_widenings = 6;
    double h_resolution = 1e-6;
    LimitMode limits = LimitMode::Symmetric;
    GapPolicy gap_policy;

    double effective_rho() const { return rho > 0.0 ? rho : 0.05 * arl0_target; }
    std::size_t effective_length() const {
        return length > 0 ? length : static_cast<std::size_t>(std::ceil(10.0 * arl0_target));
    }
};

struct BisectionStep {
    double h = 0.0;
    double arl = 0.0;
};

struct DesignResult {
    CalibratedChart chart;
    std::vector<BisectionStep> iterations;  // upper side (or the symmetric limit)
    std::vector<BisectionStep> lower_iterations;  // asymmetric mode only
    bool converged = false;
    double achieved_arl = 0.0;
    double censored_fraction = 0.0;
    std::vector<std::string> warnings;
};

namespace detail {

struct BisectionOutcome {
    double h = 0.0;
    double arl = 0.0;
    double censored = 0.0;
    bool converged = false;
    std::vector<BisectionStep> steps;
};

/// Bisection on h for an ARL that is nondecreasing in h.
template <class ArlAt>
BisectionOutcome bisect_limit(ArlAt&& arl_at, double target, const CalibrationOptions& opt,
                              std::vector<std::string>& warnings) {
    if (!(opt.h_low < opt.h_high) || !(opt.h_low > 0.0))
        throw ConfigError("calibration: require 0 < h_low < h_high");
    double lo = opt.h_low, hi = opt.h_high;
    auto at_lo = arl_at(lo);
    for (std::size_t w = 0; !(at_lo.arl < target) && w < opt.max_widenings; ++w) at_lo = arl_at(lo *= 0.5);
    if (!(at_lo.arl < target))
        throw NumericalError("calibration: ARL at lower bound h=" + std::to_string(lo) + " is " +
                             std::to_string(at_lo.arl) + ", not below the target " + std::to_string(target) +
                             "; the residual source may be degenerate (no signal ever crosses a positive limit)");
    auto at_hi = arl_at(hi);
    for (std::size_t w = 0; !(at_hi.arl > target) && w < opt.max_widenings; ++w) at_hi = arl_at(hi *= 2.0);
    if (!(at_hi.arl > target))
        throw NumericalError("calibration: ARL at upper bound h=" + std::to_string(hi) + " is " +
                             std::to_string(at_hi.arl) + ", not above the target " + std::to_string(target) +
                             "; increase the simulated length L");

    BisectionOutcome out;
    const double rho = opt.effective_rho();
    double best_gap = std::numeric_limits<double>::infinity();
    for (std::size_t it = 0; it < opt.max_iterations; ++it) {
        const double h = 0.5 * (lo + hi);
        const auto est = arl_at(h);
        out.steps.push_back({h, est.arl});
        const double gap = std::abs(est.arl - target);
        if (gap < best_gap) {
            best_gap = gap;
            out.h = h;
            out.arl = est.arl;
            out.censored = est.censored_fraction;
        }
        if (gap <= rho) {
            out.converged = true;
            break;
        }
        if (est.arl < target) lo = h;
        else hi = h;
        if (hi - lo < opt.h_resolution) break;
    }
    if (!out.converged)
        warnings.push_back("calibration did not reach |ARL - target| <= rho; best h=" + std::to_string(out.h) +
                           " with ARL " + std::to_string(out.arl));
    if (out.censored > 0.05)
        warnings.push_back("censored fraction " + std::to_string(out.censored) + " at the selected limit");
    return out;
}

}  // namespace detail

/// Control-limit search by bisection on bootstrap ARL estimates. Every ARL
/// evaluation reuses the same replication streams, which makes the estimate
/// monotone in h.
template <class Source>
DesignResult calibrate_control_limit(const Source& source, const CalibrationOptions& opt) {
    if (!(opt.k > 0.0)) throw ConfigError("calibration: allowance k must be positive");
    if (!(opt.arl0_target > 1.0)) throw ConfigError("calibration: ARL0 target must exceed 1");
    const std::size_t L = opt.effective_length();
    constexpr double inf = std::numeric_limits<double>::infinity();

    DesignResult res;
    res.chart.k = opt.k;
    res.chart.gap_policy = opt.gap_policy;
    res.chart.provenance.arl0_target = opt.arl0_target;
    res.chart.provenance.replications = opt.replications;

    auto chart_with = [&](double hp, double hm) {
        CalibratedChart c = res.chart;
        c.h_plus = hp;
        c.h_minus = hm;
        return c;
    };

    switch (opt.limits) {
        case LimitMode::Symmetric: {
            auto o = detail::bisect_limit(
                [&](double h) { return estimate_arl(source, chart_with(h, -h), opt.replications, L); },
                opt.arl0_target, opt, res.warnings);
            res.chart.h_plus = o.h;
            res.chart.h_minus = -o.h;
            res.iterations = std::move(o.steps);
            res.converged = o.converged;
            res.achieved_arl = o.arl;
            res.censored_fraction = o.censored;
            break;
        }
        case LimitMode::UpperOnly: {
            auto o = detail::bisect_limit(
                [&](double h) { return estimate_arl(source, chart_with(h, -inf), opt.replications, L); },
                opt.arl0_target, opt, res.warnings);
            res.chart.h_plus = o.h;
            res.chart.h_minus = -inf;
            res.iterations = std::move(o.steps);
            res.converged = o.converged;
            res.achieved_arl = o.arl;
            res.censored_fraction = o.censored;
            break;
        }
        case LimitMode::Asymmetric: {
            // Each side alone at 2 x target: false-alarm rates add to ~1/target.
            CalibrationOptions side = opt;
            side.length = 2 * L;
            auto up = detail::bisect_limit(
                [&](double h) { return estimate_arl(source, chart_with(h, -inf), opt.replications, 2 * L); },
                2.0 * opt.arl0_target, side, res.warnings);
            auto down = detail::bisect_limit(
                [&](double h) { return estimate_arl(source, chart_with(inf, -h), opt.replications, 2 * L); },
                2.0 * opt.arl0_target, side, res.warnings);
            res.chart.h_plus = up.h;
            res.chart.h_minus = -down.h;
            res.iterations = std::move(up.steps);
            res.lower_iterations = std::move(down.steps);
            res.converged = up.converged && down.converged;
            const auto combined = estimate_arl(source, res.chart, opt.replications, L);
            res.achieved_arl = combined.arl;
            res.censored_fraction = combined.censored_fraction;
            break;
        }
    }
    return res;
}

struct ShiftSizeOptions {
    double delta0 = 1.0;
    double rho = 0.05;
    double quantile = 0.5;
    std::size_t replications = 2000;
    std::size_t oc_length = 0;  // 0 -> ARL0 target
    std::size_t max_outer_iterations = 10;
    CalibrationOptions design;  // k is overwritten with delta / 2 each round
};

struct ShiftSizeIteration {
    double delta_in = 0.0;
    double k = 0.0;
    double h = 0.0;
    std::size_t alerts = 0;
    double delta_out = 0.0;
};

struct ShiftSizeResult {
    double delta = 0.0;
    bool converged = false;
    std::vector<ShiftSizeIteration> trace;
    std::vector<std::string> warnings;
};

/// Iterative shift-size estimate: design a chart for k = delta/2 on the IC
/// source, run it on OC replications, and move delta to the requested quantile
/// of the absolute Montgomery estimates at the alerts.
template <class IcSource, class OcSource>
ShiftSizeResult estimate_shift_size(const IcSource& ic, const OcSource& oc, const ShiftSizeOptions& opt) {
    if (!(opt.delta0 > 0.0)) throw ConfigError("shift size: delta0 must be positive");
    ShiftSizeResult res;
    double delta = opt.delta0;
    const std::size_t L = opt.oc_length > 0 ? opt.oc_length
                                            : static_cast<std::size_t>(std::ceil(opt.design.arl0_target));
    for (std::size_t outer = 0; outer < opt.max_outer_iterations; ++outer) {
        CalibrationOptions copt = opt.design;
        copt.k = delta / 2.0;
        const auto design = calibrate_control_limit(ic, copt);
        for (auto& w : design.warnings) res.warnings.push_back(w);

        std::vector<double> est(opt.replications, std::numeric_limits<double>::quiet_NaN());
        parallel_for(opt.replications, [&](std::size_t b) {
            auto s = oc.stream(b);
            if (auto a = first_alert(s, design.chart, L)) est[b] = std::abs(montgomery_estimate(*a, design.chart.k));
        });
        std::vector<double> found;
        for (double e : est)
            if (!std::isnan(e)) found.push_back(e);
        if (found.empty())
            throw NumericalError("shift size: no alert in " + std::to_string(opt.replications) +
                                 " OC replications at delta=" + std::to_string(delta) +
                                 "; OC source is indistinguishable from IC");
        const double next = stats::quantile(std::move(found), opt.quantile);
        res.trace.push_back({delta, design.chart.k, design.chart.h_plus,
                             static_cast<std::size_t>(std::count_if(est.begin(), est.end(),
                                                                    [](double e) { return !std::isnan(e); })),
                             next});
        const bool done = std::abs(next - delta) <= opt.rho;
        delta = next;
        if (done) {
            res.converged = true;
            break;
        }
    }
    res.delta = delta;
    if (!res.converged) res.warnings.push_back("shift size did not converge within the outer iteration limit");
    return res;
}

struct AllowanceCandidate {
    double k = 0.0;
    double h = 0.0;
    double arl1 = 0.0;
    bool calibrated = false;
};

struct AllowanceResult {
    double k = 0.0;
    double h = 0.0;
    double arl1 = 0.0;
    std::vector<AllowanceCandidate> table;
    std::vector<std::string> warnings;
};

/// Allowance search: calibrate h for each candidate k, then measure ARL1 under
/// a jump of size delta from the first sample. Smallest ARL1 wins; ties go to
/// the k closest to delta/2.
template <class Source>
AllowanceResult optimize_allowance(const Source& ic, double delta, const std::vector<double>& k_grid,
                                   const CalibrationOptions& base, std::size_t replications, std::size_t length) {
    if (k_grid.empty()) throw ConfigError("allowance search: empty k grid");
    AllowanceResult res;
    bool any = false;
    for (double k : k_grid) {
        if (!(k > 0.0)) throw ConfigError("allowance search: every k must be positive");
        AllowanceCandidate cand{k, 0.0, 0.0, false};
        try {
            CalibrationOptions opt = base;
            opt.k = k;
            const auto design = calibrate_control_limit(ic, opt);
            cand.h = design.chart.h_plus;
            cand.arl1 = estimate_arl(ic, design.chart, replications, length, ShiftSpec::jump(delta)).arl;
            cand.calibrated = true;
        } catch (const NumericalError& e) {
            res.warnings.push_back("k=" + std::to_string(k) + " skipped: " + e.what());
        }
        res.table.push_back(cand);
        if (!cand.calibrated) continue;
        const bool better = !any || cand.arl1 < res.arl1 ||
                            (cand.arl1 == res.arl1 && std::abs(k - delta / 2) < std::abs(res.k - delta / 2));
        if (better) {
            res.k = k;
            res.h = cand.h;
            res.arl1 = cand.arl1;
            any = true;
        }
    }
    if (!any) throw NumericalError("allowance search: calibration failed for every k in the grid");
    return res;
}

}  // namespace panelmon
