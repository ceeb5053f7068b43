#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "panelmon/csv.hpp"
#include "panelmon/error.hpp"
#include "panelmon/series.hpp"

namespace panelmon {

/// How the chart treats missing residuals: zero the state at every gap, or
/// hold it frozen through gaps of at most `max_gap` samples.
struct GapPolicy {
    enum class Kind { ResetAlways, PropagateUpTo };
    Kind kind = Kind::ResetAlways;
    std::size_t max_gap = 0;

    static GapPolicy reset_always() { return {Kind::ResetAlways, 0}; }
    static GapPolicy propagate_up_to(std::size_t g) { return {Kind::PropagateUpTo, g}; }
};

struct ChartProvenance {
    double arl0_target = 0.0;
    std::size_t replications = 0;
    std::size_t block_length = 0;
    std::uint64_t seed = 0;
};

struct CalibratedChart {
    double k = 0.5;
    double h_plus = std::numeric_limits<double>::infinity();
    double h_minus = -std::numeric_limits<double>::infinity();
    GapPolicy gap_policy;
    ChartProvenance provenance;

    void validate() const {
        if (!(k > 0.0)) throw ConfigError("chart: allowance k must be positive");
        if (!(h_plus > 0.0)) throw ConfigError("chart: upper limit must be positive");
        if (!(h_minus < 0.0)) throw ConfigError("chart: lower limit must be negative");
    }
};

/// Two-sided CUSUM state. n_plus/n_minus count consecutive steps the
/// statistic has been nonzero since it last touched zero.
struct ChartState {
    double c_plus = 0.0;
    double c_minus = 0.0;
    std::size_t n_plus = 0;
    std::size_t n_minus = 0;
    std::size_t step = 0;
    std::size_t gap_run = 0;

    void reset() {
        c_plus = c_minus = 0.0;
        n_plus = n_minus = 0;
    }
};

enum class ChartSide { Upper, Lower };

inline const char* to_string(ChartSide s) { return s == ChartSide::Upper ? "upper" : "lower"; }

struct AlertEvent {
    std::size_t time = 0;  // 0-based time index
    ChartSide side = ChartSide::Upper;
    double statistic = 0.0;
    std::size_t n_nonzero = 0;
};

/// One CUSUM recursion step.
inline ChartState cusum_step(ChartState s, double residual, double k) {
    s.c_plus = std::max(0.0, s.c_plus + residual - k);
    s.c_minus = std::min(0.0, s.c_minus + residual + k);
    s.n_plus = s.c_plus > 0.0 ? s.n_plus + 1 : 0;
    s.n_minus = s.c_minus < 0.0 ? s.n_minus + 1 : 0;
    ++s.step;
    s.gap_run = 0;
    return s;
}

struct ChartRun {
    std::vector<AlertEvent> alerts;
    std::vector<double> c_plus;   // state after each time index
    std::vector<double> c_minus;
};

/// Incremental chart over one residual stream, for online use.
class ChartRunner {
public:
    ChartRunner(const CalibratedChart& chart, bool restart_on_alert)
        : chart_(chart), restart_(restart_on_alert) {}

    /// Feeds the residual at `time` (nullopt when missing); appends any alerts.
    void push(std::size_t time, std::optional<double> residual, std::vector<AlertEvent>& alerts) {
        if (!residual) {
            ++state_.gap_run;
            if (chart_.gap_policy.kind == GapPolicy::Kind::ResetAlways || state_.gap_run > chart_.gap_policy.max_gap)
                state_.reset();
            return;
        }
        state_ = cusum_step(state_, *residual, chart_.k);
        bool fired = false;
        if (state_.c_plus > chart_.h_plus) {
            alerts.push_back({time, ChartSide::Upper, state_.c_plus, state_.n_plus});
            fired = true;
        }
        if (state_.c_minus < chart_.h_minus) {
            alerts.push_back({time, ChartSide::Lower, state_.c_minus, state_.n_minus});
            fired = true;
        }
        if (fired && restart_) state_.reset();
    }

    const ChartState& state() const noexcept { return state_; }

private:
    CalibratedChart chart_;
    bool restart_;
    ChartState state_;
};

/// Runs the two-sided chart over a residual series with the chart's gap policy.
/// Traces hold the statistic after processing each index (after any restart).
inline ChartRun run_chart(const MaskedSeries& residuals, const CalibratedChart& chart, bool restart_on_alert) {
    ChartRun run;
    ChartRunner runner(chart, restart_on_alert);
    run.c_plus.reserve(residuals.size());
    run.c_minus.reserve(residuals.size());
    for (std::size_t t = 0; t < residuals.size(); ++t) {
        runner.push(t, residuals.is_observed(t) ? std::optional(residuals.values[t]) : std::nullopt, run.alerts);
        run.c_plus.push_back(runner.state().c_plus);
        run.c_minus.push_back(runner.state().c_minus);
    }
    return run;
}

/// Rough shift size in residual-sigma units from the statistic at an alert:
/// k + C+/N+ on the upper side, C-/N- - k on the lower side.
inline double montgomery_estimate(const AlertEvent& alert, double k) {
    if (alert.n_nonzero == 0) throw NumericalError("Montgomery estimate undefined: statistic was never nonzero");
    const double per_step = alert.statistic / static_cast<double>(alert.n_nonzero);
    return alert.side == ChartSide::Upper ? k + per_step : per_step - k;
}

/// Variant with lower side -k - C-/N-. Its sign is wrong for downward shifts;
/// kept so the test suite can show it fails to recover planted shifts.
inline double montgomery_estimate_sign_flipped(const AlertEvent& alert, double k) {
    if (alert.n_nonzero == 0) throw NumericalError("Montgomery estimate undefined: statistic was never nonzero");
    const double per_step = alert.statistic / static_cast<double>(alert.n_nonzero);
    return alert.side == ChartSide::Upper ? k + per_step : -k - per_step;
}

inline void write_alert_header(std::ostream& out) {
    out << "process_id,time,side,statistic,n_nonzero,montgomery_delta\n";
}

inline void write_alert_row(std::ostream& out, const std::string& process_id, double time, const AlertEvent& a,
                            double k) {
    out << process_id << ',' << csv::format(time) << ',' << to_string(a.side) << ',' << csv::format(a.statistic)
        << ',' << a.n_nonzero << ',' << csv::format(montgomery_estimate(a, k)) << '\n';
}

}  // namespace panelmon
