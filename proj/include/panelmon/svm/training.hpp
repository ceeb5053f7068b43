#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "panelmon/bootstrap.hpp"
#include "panelmon/cusum.hpp"
#include "panelmon/design.hpp"
#include "panelmon/parallel.hpp"
#include "panelmon/rng.hpp"
#include "panelmon/shifts.hpp"
#include "panelmon/stats.hpp"
#include "panelmon/svm/input.hpp"
#include "panelmon/svm/metrics.hpp"
#include "panelmon/svm/model.hpp"

namespace panelmon::svm {

struct SynthesisOptions {
    std::size_t m = 25;
    double delta_min = 1.5;
    std::size_t n_instances = 63000;
    std::uint64_t seed = 1;
    double half_normal_scale = 2.0;
    double eta_freq = 0.0;              // 0 -> 1/m
    double trend_divisor = 150.0;
    double trend_exponent = 1.5;
    std::size_t max_monitor_length = 0;  // 0 -> 20 m
    std::size_t max_attempts = 100;      // per instance
};

/// One labeled instance: the m residuals ending at the first alert.
struct Instance {
    std::vector<double> x;
    double delta = 0.0;
    ShiftForm form = ShiftForm::Jump;
    std::size_t start = 0;
    std::size_t alert_time = 0;
};

struct TrainingSet {
    std::vector<Instance> instances;
    std::size_t redraws = 0;
    std::size_t m = 0;
};

/// Superposes a random shift on a bootstrap series and keeps the window at the
/// chart's first alert. Magnitudes are delta_min + |N(0, s)| with a random
/// sign, forms are uniform; trends start at t = 0, jumps and oscillations at
/// t = m; monitoring starts at a uniform time in [m, 2m]. Instances without an
/// alert are redrawn.
template <class Source>
TrainingSet synthesize_training_set(const Source& source, const CalibratedChart& chart, const SynthesisOptions& opt) {
    if (opt.m < 2) throw ConfigError("synthesis: m must be at least 2");
    if (!(opt.delta_min > 0.0)) throw ConfigError("synthesis: delta_min must be positive");
    if (opt.n_instances < 1) throw ConfigError("synthesis: need at least one instance");
    chart.validate();
    const std::size_t m = opt.m;
    const std::size_t monitor = opt.max_monitor_length > 0 ? opt.max_monitor_length : 20 * m;
    const double eta = opt.eta_freq > 0.0 ? opt.eta_freq : 1.0 / static_cast<double>(m);

    TrainingSet set;
    set.m = m;
    set.instances.resize(opt.n_instances);
    std::vector<std::size_t> tries(opt.n_instances, 0);
    parallel_for(opt.n_instances, [&](std::size_t j) {
        for (std::size_t a = 0; a < opt.max_attempts; ++a) {
            const std::uint64_t s = derive_seed(derive_seed(opt.seed, j), a);
            Rng rng(s);
            Instance inst;
            inst.form = static_cast<ShiftForm>(std::uniform_int_distribution<int>(0, kNumShiftForms - 1)(rng));
            const double mag = opt.delta_min + std::abs(std::normal_distribution<double>(0.0, opt.half_normal_scale)(rng));
            inst.delta = std::bernoulli_distribution(0.5)(rng) ? mag : -mag;
            inst.start = std::uniform_int_distribution<std::size_t>(m, 2 * m)(rng);
            ShiftSpec shift{inst.form, inst.delta, inst.form == ShiftForm::Trend ? 0 : m, eta, opt.trend_divisor,
                            opt.trend_exponent};

            auto stream = source.stream(s);
            const std::size_t n = inst.start + monitor;
            std::vector<double> series(n);
            for (std::size_t t = 0; t < n; ++t) series[t] = stream.next() + shift.at(t);
            ChartState st;
            for (std::size_t t = inst.start; t < n; ++t) {
                st = cusum_step(st, series[t], chart.k);
                if (st.c_plus > chart.h_plus || st.c_minus < chart.h_minus) {
                    inst.alert_time = t;
                    inst.x.assign(series.begin() + static_cast<std::ptrdiff_t>(t + 1 - m),
                                  series.begin() + static_cast<std::ptrdiff_t>(t + 1));
                    break;
                }
            }
            if (inst.x.empty()) continue;
            tries[j] = a;
            set.instances[j] = std::move(inst);
            return;
        }
        throw NumericalError("synthesis: instance " + std::to_string(j) + " produced no alert in " +
                             std::to_string(opt.max_attempts) + " draws; delta_min is too small for the chart");
    });
    for (auto t : tries) set.redraws += t;
    if (set.redraws > opt.n_instances)
        throw NumericalError("synthesis: redraw rate " +
                             std::to_string(static_cast<double>(set.redraws) /
                                            static_cast<double>(set.redraws + opt.n_instances)) +
                             " exceeds 50%; delta_min is too small for the chart in force");
    return set;
}

inline Points instance_matrix(const std::vector<Instance>& v) {
    if (v.empty()) return Points(0, 0);
    const std::size_t m = v.front().x.size();
    Points X(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < v.size(); ++i)
        for (std::size_t d = 0; d < m; ++d) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = v[i].x[d];
    return X;
}

inline std::vector<double> delta_labels(const std::vector<Instance>& v) {
    std::vector<double> y;
    for (const auto& i : v) y.push_back(i.delta);
    return y;
}

inline std::vector<int> form_labels(const std::vector<Instance>& v) {
    std::vector<int> y;
    for (const auto& i : v) y.push_back(static_cast<int>(i.form));
    return y;
}

inline std::vector<std::string> form_names() {
    std::vector<std::string> out;
    for (std::size_t f = 0; f < kNumShiftForms; ++f) out.emplace_back(to_string(static_cast<ShiftForm>(f)));
    return out;
}

/// First `train_fraction` of the instances train, the rest test.
inline std::pair<std::vector<Instance>, std::vector<Instance>> split_train_test(std::vector<Instance> all,
                                                                                double train_fraction = 0.8) {
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(all.size())));
    std::vector<Instance> test(all.begin() + static_cast<std::ptrdiff_t>(n_train), all.end());
    all.resize(n_train);
    return {std::move(all), std::move(test)};
}

struct ShiftModels {
    SvrModel svr;
    SvcModel svc;
    double delta_min = 0.0;
    std::vector<std::string> warnings;
};

struct ShiftModelMetrics {
    RegressionMetrics regression;
    ClassificationMetrics classification;
};

inline ShiftModels train_shift_models(const std::vector<Instance>& train, const SvmConfig& cfg, double delta_min,
                                      TrainingMeta meta) {
    const Points X = instance_matrix(train);
    const auto y = delta_labels(train);
    const auto f = form_labels(train);
    ShiftModels out;
    out.delta_min = delta_min;
    out.svr = train_svr(X, y, cfg, meta, &out.warnings);
    out.svc = train_svc(X, f, cfg, meta, &out.warnings);
    return out;
}

inline ShiftModelMetrics evaluate(const ShiftModels& models, const std::vector<Instance>& test) {
    if (test.empty()) throw DataError("evaluate: empty test set");
    std::vector<double> yhat(test.size());
    std::vector<int> fhat(test.size());
    parallel_for(test.size(), [&](std::size_t j) {
        yhat[j] = models.svr.predict(test[j].x);
        fhat[j] = models.svc.predict(test[j].x);
    });
    return {regression_metrics(delta_labels(test), yhat), classification_metrics(form_labels(test), fhat, form_names())};
}

/// Per-alert characterization. Magnitudes inside (-delta_min, delta_min) are
/// reported unchanged and flagged.
struct AlertCharacterization {
    bool rejected = false;
    double valid_fraction = 0.0;
    double delta = 0.0;
    bool below_floor = false;
    ShiftForm form = ShiftForm::Jump;
};

inline AlertCharacterization characterize(const ShiftModels& models, const MaskedSeries& residuals, std::size_t tau) {
    AlertCharacterization out;
    const auto iv = impute_input_vector(residuals, tau, models.svr.m);
    out.valid_fraction = iv.valid_fraction;
    if (iv.rejected()) {
        out.rejected = true;
        return out;
    }
    out.delta = models.svr.predict(iv.vector->values);
    out.below_floor = std::abs(out.delta) < models.delta_min;
    out.form = static_cast<ShiftForm>(models.svc.predict(iv.vector->values));
    return out;
}

struct WindowSelection {
    std::size_t m = 0;
    CalibratedChart chart;
    std::vector<std::size_t> run_lengths;
    double censored_fraction = 0.0;
    std::vector<std::string> warnings;
};

/// Input-window length: the q-quantile (rounded up) of the run lengths of
/// `chart` on IC + delta_min jumps. Runs without an alert count as L.
template <class Source>
WindowSelection select_window_m(const Source& ic, const CalibratedChart& chart, double delta_min, double q,
                                std::size_t replications, std::size_t length, double shortest_period = 0.0) {
    if (!(delta_min > 0.0)) throw ConfigError("window selection: delta_min must be positive");
    if (!(q > 0.0 && q <= 1.0)) throw ConfigError("window selection: quantile must lie in (0, 1]");
    const auto est = estimate_arl(ic, chart, replications, length, ShiftSpec::jump(delta_min));
    WindowSelection out;
    out.chart = chart;
    out.run_lengths = est.run_lengths;
    out.censored_fraction = est.censored_fraction;
    std::vector<double> rl(est.run_lengths.begin(), est.run_lengths.end());
    out.m = static_cast<std::size_t>(std::ceil(stats::quantile(rl, q) - 1e-9));
    if (out.censored_fraction > 0.0 && out.m >= length)
        out.warnings.push_back("window selection: quantile falls on censored runs; m = L = " + std::to_string(length));
    if (shortest_period > 0.0 && static_cast<double>(out.m) > 0.5 * shortest_period)
        out.warnings.push_back("window selection: m = " + std::to_string(out.m) +
                               " exceeds half the shortest oscillation period " + std::to_string(shortest_period));
    return out;
}

/// Calibrates the chart for k = delta_min / 2 first.
template <class Source>
WindowSelection select_window_m(const Source& ic, double delta_min, double q, CalibrationOptions design,
                                std::size_t replications, std::size_t length, double shortest_period = 0.0) {
    design.k = delta_min / 2.0;
    auto d = calibrate_control_limit(ic, design);
    auto out = select_window_m(ic, d.chart, delta_min, q, replications, length, shortest_period);
    out.warnings.insert(out.warnings.begin(), d.warnings.begin(), d.warnings.end());
    return out;
}

}  // namespace panelmon::svm
