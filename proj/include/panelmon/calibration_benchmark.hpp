#pragma once

// Parametric versus moving-block-bootstrap chart design on autocorrelated
// data. Both charts monitor the same statistic, the standardized innovations
// of an ARMA(2,2) fitted to the design sample; they differ only in how the
// control limit is calibrated.

#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "panelmon/arma.hpp"
#include "panelmon/bootstrap.hpp"
#include "panelmon/csv.hpp"
#include "panelmon/design.hpp"
#include "panelmon/stats.hpp"
#include "panelmon/student_t.hpp"

namespace panelmon {

/// ARMA noise plus a linear trend and a sinusoidal seasonality, produced in
/// independent segments (the trend restarts with every segment).
struct SeriesGenerator {
    std::string name;
    ArmaModel arma;
    double trend_slope = 0.0;
    double season_amplitude = 0.0;
    std::size_t season_period = 7;
    std::size_t segment_length = 500;

    template <class Rng>
    std::vector<double> segment(Rng& rng) const {
        auto x = simulate_arma(arma, segment_length, rng);
        for (std::size_t t = 0; t < x.size(); ++t) {
            const double u = static_cast<double>(t);
            x[t] += trend_slope * u;
            if (season_amplitude != 0.0)
                x[t] += season_amplitude * std::sin(2.0 * std::numbers::pi * u / static_cast<double>(season_period));
        }
        return x;
    }
};

/// The four generators of the comparison. The ARMA(3,3) noise, trend and
/// seasonality are free choices: AR (1 - 0.95B)(1 - 0.09B^2), MA
/// (1 + 0.4B)(1 + 0.3B)(1 - 0.2B), innovation sd 0.5. The persistent AR root
/// occupies the fitted ARMA(2,2), which then cannot absorb the period-7 cycle.
inline std::vector<SeriesGenerator> default_generators() {
    std::vector<SeriesGenerator> g;
    const ArmaModel arma33{{0.95, 0.09, -0.0855}, {0.5, -0.02, -0.024}, 0.0, 0.5};
    g.push_back({"complex_positive", arma33, 0.002, 0.0});
    g.push_back({"complex_negative", arma33, 0.002, 1.0});
    g.push_back({"arma11_positive", {{0.8}, {0.2}, 0.0, 1.0}});
    g.push_back({"arma11_negative", {{-0.8}, {0.2}, 0.0, 1.0}});
    return g;
}

inline SeriesGenerator white_noise_generator() { return {"white_noise", {{}, {}, 0.0, 1.0}}; }

/// Fitted monitoring transform: ARMA filter then (e - center) / spread.
struct MonitoringTransform {
    ArmaModel model;
    double center = 0.0;
    double spread = 1.0;
};

/// Fresh generator output passed through the monitoring transform. Each new
/// segment is filtered from a zero pre-sample and its first `warmup`
/// innovations are skipped, exactly as for the design series.
class GeneratedResidualSource {
public:
    GeneratedResidualSource(SeriesGenerator gen, MonitoringTransform tr, std::size_t warmup, std::uint64_t seed)
        : gen_(std::move(gen)), tr_(std::move(tr)), warmup_(warmup), seed_(seed) {
        if (warmup_ >= gen_.segment_length) throw ConfigError("filter warm-up must be shorter than a segment");
    }

    class Stream {
    public:
        Stream(const GeneratedResidualSource& s, std::uint64_t seed) : src_(&s), rng_(seed), filter_(s.tr_.model) {}
        double next() {
            if (pos_ == seg_.size()) {
                seg_ = src_->gen_.segment(rng_);
                filter_ = ArmaState(src_->tr_.model);
                for (pos_ = 0; pos_ < src_->warmup_; ++pos_) filter_.filter(seg_[pos_]);
            }
            return (filter_.filter(seg_[pos_++]) - src_->tr_.center) / src_->tr_.spread;
        }

    private:
        const GeneratedResidualSource* src_;
        Rng rng_;
        ArmaState filter_;
        std::vector<double> seg_;
        std::size_t pos_ = 0;
    };

    Stream stream(std::uint64_t replication) const { return Stream(*this, derive_seed(seed_, replication)); }

private:
    SeriesGenerator gen_;
    MonitoringTransform tr_;
    std::size_t warmup_;
    std::uint64_t seed_;
};

struct BenchmarkConfig {
    std::vector<double> targets = {100, 200, 400};
    std::size_t replications = 2000;
    double k = 0.75;
    std::size_t block_length = 50;
    std::size_t design_series = 40;
    std::uint64_t seed = 1;
    std::size_t arma_p = 2;
    std::size_t arma_q = 2;
    bool arma_trend = true;  // regression on (1, t) with ARMA errors
    std::size_t filter_warmup = 20;  // leading innovations dropped from each design series
};

struct BenchmarkRow {
    std::string generator;
    std::string method;  // "mbb" or "parametric"
    double target_arl0 = 0.0;
    double achieved_arl0 = 0.0;
    double h = 0.0;
    bool failed = false;
    std::string note;
};

struct BenchmarkFit {
    MonitoringTransform transform;
    StudentT innovations;
    std::vector<std::vector<double>> standardized;  // design innovations per series
};

inline BenchmarkFit fit_benchmark(const SeriesGenerator& gen, const BenchmarkConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<double>> design;
    for (std::size_t i = 0; i < cfg.design_series; ++i) design.push_back(gen.segment(rng));
    BenchmarkFit fit;
    fit.transform.model = fit_arma(design, cfg.arma_p, cfg.arma_q, cfg.arma_trend).model;
    auto res = arma_residuals(design, fit.transform.model);
    std::vector<double> pooled;
    for (auto& r : res) {
        r.erase(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(std::min(cfg.filter_warmup, r.size())));
        pooled.insert(pooled.end(), r.begin(), r.end());
    }
    fit.transform.center = stats::mean(pooled);
    fit.transform.spread = std::sqrt(stats::variance(pooled));
    for (auto& r : res)
        for (auto& v : r) v = (v - fit.transform.center) / fit.transform.spread;
    for (auto& v : pooled) v = (v - fit.transform.center) / fit.transform.spread;
    fit.innovations = fit_student_t(pooled);
    fit.standardized = std::move(res);
    return fit;
}

/// One generator: fit, calibrate both charts per target, then measure the
/// achieved ARL0 on freshly generated data.
inline std::vector<BenchmarkRow> run_benchmark_generator(const SeriesGenerator& gen, const BenchmarkConfig& cfg) {
    std::vector<BenchmarkRow> rows;
    const std::uint64_t gseed = derive_seed(cfg.seed, std::hash<std::string>{}(gen.name));
    std::optional<BenchmarkFit> fit;
    std::string failure;
    try {
        fit = fit_benchmark(gen, cfg, derive_seed(gseed, 0));
    } catch (const NumericalError& e) {
        failure = e.what();
    }
    for (double target : cfg.targets) {
        for (const char* method : {"mbb", "parametric"}) {
            BenchmarkRow row;
            row.generator = gen.name;
            row.method = method;
            row.target_arl0 = target;
            if (!fit) {
                row.failed = true;
                row.note = failure;
                rows.push_back(row);
                continue;
            }
            CalibrationOptions opt;
            opt.k = cfg.k;
            opt.arl0_target = target;
            opt.replications = cfg.replications;
            try {
                DesignResult d;
                if (std::string(method) == "mbb") {
                    ResamplingScheme mbb(fit->standardized, ResamplingMode::MovingBlock, cfg.block_length,
                                         derive_seed(gseed, 1));
                    d = calibrate_control_limit(mbb, opt);
                } else {
                    IidSource par(fit->innovations.distribution(), derive_seed(gseed, 2));
                    d = calibrate_control_limit(par, opt);
                }
                GeneratedResidualSource fresh(gen, fit->transform, cfg.filter_warmup, derive_seed(gseed, 3));
                row.h = d.chart.h_plus;
                row.achieved_arl0 = estimate_arl(fresh, d.chart, cfg.replications, opt.effective_length()).arl;
            } catch (const NumericalError& e) {
                row.failed = true;
                row.note = e.what();
            }
            rows.push_back(row);
        }
    }
    return rows;
}

inline void write_benchmark(std::ostream& out, const std::vector<BenchmarkRow>& rows) {
    out << "generator,method,target_arl0,achieved_arl0,h\n";
    for (const auto& r : rows) {
        out << r.generator << ',' << r.method << ',' << csv::format(r.target_arl0) << ',';
        if (r.failed) out << ",\n";
        else out << csv::format(r.achieved_arl0) << ',' << csv::format(r.h) << '\n';
    }
}

}  // namespace panelmon
