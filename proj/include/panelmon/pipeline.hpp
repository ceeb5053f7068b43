#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "panelmon/bootstrap.hpp"
#include "panelmon/config.hpp"
#include "panelmon/csv.hpp"
#include "panelmon/cusum.hpp"
#include "panelmon/design.hpp"
#include "panelmon/panel.hpp"
#include "panelmon/patterns.hpp"
#include "panelmon/selection.hpp"
#include "panelmon/svm/training.hpp"

namespace panelmon {

inline constexpr int kBundleFormatVersion = 1;

struct PhaseOne {
    DetrendedPanel detrended;
    ICPattern pattern;
    std::vector<ResidualSeries> residuals;
    std::size_t shewhart_removed = 0;
};

/// Decomposition, P2 outlier filtering, IC pattern and standardization. The
/// filter only affects the data the pattern is estimated from.
inline PhaseOne run_phase_one(const Panel& panel, const PipelineConfig& cfg, const std::vector<std::string>& p2,
                              Alignment alignment) {
    DecompositionOptions dopt;
    dopt.mode = cfg.mode;
    dopt.smoothing_window = cfg.smoothing_window;
    dopt.level_window = cfg.level_window;
    dopt.alignment = alignment;
    PhaseOne out;
    out.detrended = decompose(panel, dopt);
    std::vector<std::string> present;
    for (const auto& id : p2)
        if (std::find(out.detrended.ids.begin(), out.detrended.ids.end(), id) != out.detrended.ids.end())
            present.push_back(id);
    if (present.empty()) throw DataError("none of the pattern pool (P2) processes is present in the panel");
    const auto filtered = adaptive_shewhart_filter(out.detrended, present, cfg.iqr_multiple);
    out.shewhart_removed = filtered.removed;
    out.pattern = cfg.pattern == PatternEstimator::Knn
                      ? estimate_ic_pattern_knn(filtered.filtered, present, cfg.pattern_k, alignment)
                      : estimate_ic_pattern_boxcar(filtered.filtered, present, cfg.pattern_window, alignment);
    out.residuals = standardize(out.detrended, out.pattern).residuals;
    return out;
}

struct Bundle {
    PipelineConfig config;
    std::vector<std::string> ids;
    Pools pools;
    ICPattern pattern;  // calibration (centered) pattern
    double time_origin = 0.0;
    double time_step = 1.0;
    CalibratedChart chart;
    double achieved_arl0 = 0.0;
    bool chart_converged = false;
    double delta_min = 0.0;
    bool delta_estimated = false;
    std::vector<ShiftSizeIteration> delta_trace;
    std::vector<AllowanceCandidate> allowance_table;
    std::size_t m = 0;
    svm::ShiftModels models;
    svm::ShiftModelMetrics metrics;
    std::size_t synthesis_redraws = 0;
    std::vector<std::string> warnings;
};

inline std::vector<ResidualSeries> select_residuals(const std::vector<ResidualSeries>& all,
                                                    const std::vector<std::string>& ids, bool member) {
    std::vector<ResidualSeries> out;
    for (const auto& r : all)
        if ((std::find(ids.begin(), ids.end(), r.process_id) != ids.end()) == member) out.push_back(r);
    return out;
}

/// Offline calibration: pools, pattern, chart design and shift models.
inline Bundle calibrate(const Panel& panel, const PipelineConfig& cfg) {
    validate(cfg);
    Bundle b;
    b.config = cfg;
    b.ids = panel.ids;
    b.time_origin = panel.time_origin;
    b.time_step = panel.time_step;

    DecompositionOptions dopt;
    dopt.mode = cfg.mode;
    dopt.smoothing_window = cfg.smoothing_window;
    dopt.level_window = cfg.level_window;
    const auto detrended = decompose(panel, dopt);
    b.pools = select_pools(detrended, cfg.clustering, cfg.robust_score, derive_seed(cfg.seed, 1), cfg.min_obs);
    for (const auto& w : b.pools.warnings) b.warnings.push_back("ic-selection: " + w);

    const auto p1 = run_phase_one(panel, cfg, b.pools.p2, Alignment::Centered);
    b.pattern = p1.pattern;
    const auto ic = ResamplingScheme::from_residuals(select_residuals(p1.residuals, b.pools.p1, true),
                                                     ResamplingMode::MovingBlock, cfg.block_length,
                                                     derive_seed(cfg.seed, 2));

    CalibrationOptions copt;
    copt.arl0_target = cfg.arl0;
    copt.rho = cfg.rho;
    copt.replications = cfg.replications;
    copt.length = cfg.length;
    copt.gap_policy = cfg.gap_policy();

    if (cfg.delta_min) {
        b.delta_min = *cfg.delta_min;
    } else {
        const auto oc_res = select_residuals(p1.residuals, b.pools.p1, false);
        if (oc_res.empty()) throw DataError("delta_min = auto needs processes outside P1 to serve as OC data");
        const auto oc = ResamplingScheme::from_residuals(oc_res, ResamplingMode::MovingBlock, cfg.block_length,
                                                         derive_seed(cfg.seed, 3));
        ShiftSizeOptions sopt;
        sopt.quantile = cfg.shift_quantile;
        sopt.replications = cfg.replications;
        sopt.design = copt;
        const auto r = estimate_shift_size(ic, oc, sopt);
        b.delta_min = r.delta;
        b.delta_estimated = true;
        b.delta_trace = r.trace;
        for (const auto& w : r.warnings) b.warnings.push_back("shift size: " + w);
    }

    if (cfg.k) {
        copt.k = *cfg.k;
    } else {
        const auto r = optimize_allowance(ic, b.delta_min, cfg.k_grid, copt, cfg.replications,
                                          copt.effective_length());
        copt.k = r.k;
        b.allowance_table = r.table;
        for (const auto& w : r.warnings) b.warnings.push_back("allowance: " + w);
    }
    const auto design = calibrate_control_limit(ic, copt);
    b.chart = design.chart;
    b.chart.provenance.block_length = cfg.block_length;
    b.chart.provenance.seed = cfg.seed;
    b.achieved_arl0 = design.achieved_arl;
    b.chart_converged = design.converged;
    for (const auto& w : design.warnings) b.warnings.push_back("calibration: " + w);

    if (cfg.m) {
        b.m = *cfg.m;
    } else {
        const auto w = svm::select_window_m(ic, b.delta_min, cfg.window_quantile, copt, cfg.replications,
                                            copt.effective_length(), 0.0);
        b.m = w.m;
        for (const auto& s : w.warnings) b.warnings.push_back(s);
    }

    svm::SynthesisOptions syn;
    syn.m = b.m;
    syn.delta_min = b.delta_min;
    syn.n_instances = cfg.svm_instances;
    syn.seed = derive_seed(cfg.seed, 4);
    syn.half_normal_scale = cfg.svm_half_normal_scale;
    const auto set = svm::synthesize_training_set(ic, b.chart, syn);
    b.synthesis_redraws = set.redraws;
    auto [train, test] = svm::split_train_test(set.instances, cfg.svm_train_fraction);
    svm::SvmConfig scfg = cfg.svm;
    scfg.m = b.m;
    b.models = svm::train_shift_models(train, scfg, b.delta_min, {train.size(), test.size(), cfg.seed});
    for (const auto& w : b.models.warnings) b.warnings.push_back(w);
    b.metrics = svm::evaluate(b.models, test);
    return b;
}

namespace detail {

inline void write_text(const std::filesystem::path& p, const std::string& s) {
    auto out = csv::open_out(p.string());
    out << s;
}

inline std::string read_text(const std::filesystem::path& p) {
    auto in = csv::open_in(p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline nlohmann::json read_json(const std::filesystem::path& p) {
    try {
        return nlohmann::json::parse(read_text(p));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(p.string() + ": " + e.what());
    }
}

inline double limit_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        throw DataError("bad limit value '" + s + "'");
    }
    return j.get<double>();
}

inline nlohmann::json limit_to_json(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

inline nlohmann::json chart_to_json(const CalibratedChart& c) {
    return {{"k", c.k},
            {"h_plus", limit_to_json(c.h_plus)},
            {"h_minus", limit_to_json(c.h_minus)},
            {"gap_max", c.gap_policy.kind == GapPolicy::Kind::ResetAlways ? 0 : c.gap_policy.max_gap},
            {"arl0_target", c.provenance.arl0_target},
            {"replications", c.provenance.replications},
            {"block_length", c.provenance.block_length},
            {"seed", c.provenance.seed}};
}

inline CalibratedChart chart_from_json(const nlohmann::json& j) {
    CalibratedChart c;
    c.k = j.at("k").get<double>();
    c.h_plus = limit_from_json(j.at("h_plus"));
    c.h_minus = limit_from_json(j.at("h_minus"));
    const auto g = j.at("gap_max").get<std::size_t>();
    c.gap_policy = g == 0 ? GapPolicy::reset_always() : GapPolicy::propagate_up_to(g);
    c.provenance = {j.at("arl0_target").get<double>(), j.at("replications").get<std::size_t>(),
                    j.at("block_length").get<std::size_t>(), j.at("seed").get<std::uint64_t>()};
    return c;
}

}  // namespace detail

inline std::string bundle_summary(const Bundle& b) {
    std::ostringstream s;
    s << "calibration bundle (format " << kBundleFormatVersion << ")\n";
    s << "preset: " << b.config.preset << '\n';
    s << "processes: " << b.ids.size() << '\n';
    s << "P1 size: " << b.pools.p1.size() << '\n';
    s << "P2 size: " << b.pools.p2.size() << '\n';
    s << "delta_min: " << csv::format(b.delta_min) << (b.delta_estimated ? " (estimated)" : "") << '\n';
    if (b.delta_estimated)
        s << "delta_min iterations: " << b.delta_trace.size() << '\n';
    s << "k: " << csv::format(b.chart.k) << (b.config.k ? "" : " (searched)") << '\n';
    s << "h+: " << csv::format(b.chart.h_plus) << '\n';
    s << "h-: " << csv::format(b.chart.h_minus) << '\n';
    s << "achieved ARL0: " << csv::format(b.achieved_arl0) << " (target " << csv::format(b.config.arl0) << ")\n";
    s << "m: " << b.m << '\n';
    s << "SVM train/test: " << b.models.svr.meta.n_train << '/' << b.models.svr.meta.n_test << '\n';
    s << "SVR MAPE: " << csv::format(b.metrics.regression.mape) << '\n';
    s << "SVR NRMSE: " << csv::format(b.metrics.regression.nrmse) << '\n';
    s << "SVC accuracy: " << csv::format(b.metrics.classification.accuracy) << '\n';
    for (const auto& w : b.warnings) s << "warning: " << w << '\n';
    return s.str();
}

inline void write_bundle(const std::string& dir, const Bundle& b) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const fs::path d(dir);
    nlohmann::json man = {{"format", "panelmon-bundle"},
                          {"version", kBundleFormatVersion},
                          {"ids", b.ids},
                          {"p1", b.pools.p1},
                          {"p2", b.pools.p2},
                          {"time_origin", b.time_origin},
                          {"time_step", b.time_step},
                          {"chart", detail::chart_to_json(b.chart)},
                          {"achieved_arl0", b.achieved_arl0},
                          {"chart_converged", b.chart_converged},
                          {"delta_min", b.delta_min},
                          {"delta_estimated", b.delta_estimated},
                          {"m", b.m},
                          {"warnings", b.warnings}};
    detail::write_text(d / "manifest.json", man.dump(2) + "\n");
    std::ostringstream cfg;
    write_config(cfg, b.config);
    detail::write_text(d / "config.txt", cfg.str());
    std::ostringstream pools;
    write_pool_report(pools, b.pools);
    detail::write_text(d / "pools.csv", pools.str());
    std::ostringstream pat;
    write_pattern(pat, b.pattern, b.time_origin, b.time_step);
    detail::write_text(d / "pattern.csv", pat.str());
    detail::write_text(d / "svr.json", b.models.svr.to_json().dump() + "\n");
    detail::write_text(d / "svc.json", b.models.svc.to_json().dump() + "\n");
    std::ostringstream reg, conf, pct;
    svm::write_regression_metrics(reg, b.metrics.regression);
    svm::write_confusion(conf, b.metrics.classification, false);
    svm::write_confusion(pct, b.metrics.classification, true);
    detail::write_text(d / "svm_regression.csv", reg.str());
    detail::write_text(d / "svm_confusion.csv", conf.str());
    detail::write_text(d / "svm_confusion_percent.csv", pct.str());
    detail::write_text(d / "summary.txt", bundle_summary(b));
}

/// Loads what monitoring needs: config, pools, chart, m and the models.
inline Bundle read_bundle(const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path d(dir);
    if (!fs::is_directory(d)) throw DataError("bundle '" + dir + "' is not a directory");
    const auto man = detail::read_json(d / "manifest.json");
    if (man.value("format", "") != "panelmon-bundle") throw DataError(dir + ": not a calibration bundle");
    const int v = man.value("version", -1);
    if (v != kBundleFormatVersion)
        throw DataError(dir + ": bundle format version " + std::to_string(v) + " cannot be read by this build (expects " +
                        std::to_string(kBundleFormatVersion) + "); recalibrate");
    Bundle b;
    try {
        b.ids = man.at("ids").get<std::vector<std::string>>();
        b.pools.p1 = man.at("p1").get<std::vector<std::string>>();
        b.pools.p2 = man.at("p2").get<std::vector<std::string>>();
        b.time_origin = man.at("time_origin").get<double>();
        b.time_step = man.at("time_step").get<double>();
        b.chart = detail::chart_from_json(man.at("chart"));
        b.achieved_arl0 = man.at("achieved_arl0").get<double>();
        b.chart_converged = man.at("chart_converged").get<bool>();
        b.delta_min = man.at("delta_min").get<double>();
        b.delta_estimated = man.at("delta_estimated").get<bool>();
        b.m = man.at("m").get<std::size_t>();
        b.warnings = man.at("warnings").get<std::vector<std::string>>();
        b.models.svr = svm::SvrModel::from_json(detail::read_json(d / "svr.json"));
        b.models.svc = svm::SvcModel::from_json(detail::read_json(d / "svc.json"));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(dir + ": malformed bundle: " + e.what());
    }
    b.models.delta_min = b.delta_min;
    b.config = load_config((d / "config.txt").string());
    return b;
}

struct AlertRecord {
    AlertEvent event;
    double time = 0.0;
    double montgomery = 0.0;
    svm::AlertCharacterization shift;
};

struct ProcessReport {
    std::string id;
    bool in_p1 = false;
    bool in_p2 = false;
    bool in_bundle = true;
    std::size_t observed = 0;
    std::vector<AlertRecord> alerts;
    MaskedSeries eta_tilde;
    MaskedSeries residuals;
    std::vector<double> c_plus;
    std::vector<double> c_minus;

    double alert_fraction() const {
        return observed ? static_cast<double>(alerts.size()) / static_cast<double>(observed) : 0.0;
    }
};

struct MonitoringReport {
    CalibratedChart chart;
    std::size_t m = 0;
    double time_origin = 0.0;
    double time_step = 1.0;
    std::size_t num_times = 0;
    std::vector<ProcessReport> processes;

    double time_at(std::size_t t) const { return time_origin + time_step * static_cast<double>(t); }

    const ProcessReport& process(const std::string& id) const {
        for (const auto& p : processes)
            if (p.id == id) return p;
        std::string known;
        for (const auto& p : processes) known += (known.empty() ? "" : ", ") + p.id;
        throw DataError("unknown process '" + id + "' (known: " + known + ")");
    }
};

/// Online monitoring: left-sided decomposition and pattern, one chart per
/// process, characterization at each alert. Everything reported for time t
/// depends only on observations up to t.
inline MonitoringReport monitor(const Panel& panel, const Bundle& b) {
    const auto p1 = run_phase_one(panel, b.config, b.pools.p2, Alignment::LeftSided);
    MonitoringReport rep;
    rep.chart = b.chart;
    rep.m = b.m;
    rep.time_origin = panel.time_origin;
    rep.time_step = panel.time_step;
    rep.num_times = panel.num_times();
    rep.processes.resize(panel.num_processes());
    parallel_for(panel.num_processes(), [&](std::size_t i) {
        auto& pr = rep.processes[i];
        pr.id = panel.ids[i];
        pr.in_p1 = std::find(b.pools.p1.begin(), b.pools.p1.end(), pr.id) != b.pools.p1.end();
        pr.in_p2 = std::find(b.pools.p2.begin(), b.pools.p2.end(), pr.id) != b.pools.p2.end();
        pr.in_bundle = std::find(b.ids.begin(), b.ids.end(), pr.id) != b.ids.end();
        pr.eta_tilde = p1.detrended.eta_tilde.row(i);
        pr.residuals = p1.residuals[i].values;
        pr.observed = pr.residuals.count_observed();
        const auto run = run_chart(pr.residuals, b.chart, b.config.restart_on_alert);
        pr.c_plus = run.c_plus;
        pr.c_minus = run.c_minus;
        for (const auto& a : run.alerts) {
            AlertRecord r;
            r.event = a;
            r.time = rep.time_at(a.time);
            r.montgomery = montgomery_estimate(a, b.chart.k);
            r.shift = svm::characterize(b.models, pr.residuals, a.time);
            pr.alerts.push_back(r);
        }
    });
    return rep;
}

namespace detail {

inline void write_wide(const std::filesystem::path& p, const MonitoringReport& rep,
                       const std::function<MaskedSeries(const ProcessReport&)>& col) {
    Panel out;
    out.time_origin = rep.time_origin;
    out.time_step = rep.time_step;
    out.data = MaskedGrid(rep.processes.size(), rep.num_times);
    for (std::size_t i = 0; i < rep.processes.size(); ++i) {
        out.ids.push_back(rep.processes[i].id);
        out.data.set_row(i, col(rep.processes[i]));
    }
    auto f = csv::open_out(p.string());
    csv::write_panel(f, out);
}

}  // namespace detail

inline void write_alerts(std::ostream& out, const MonitoringReport& rep) {
    out << "process_id,time,side,statistic,n_nonzero,montgomery_delta,rejected,valid_fraction,delta_hat,"
           "below_floor,form\n";
    for (const auto& p : rep.processes)
        for (const auto& a : p.alerts) {
            out << p.id << ',' << csv::format(a.time) << ',' << to_string(a.event.side) << ','
                << csv::format(a.event.statistic) << ',' << a.event.n_nonzero << ',' << csv::format(a.montgomery)
                << ',' << (a.shift.rejected ? 1 : 0) << ',' << csv::format(a.shift.valid_fraction) << ',';
            if (!a.shift.rejected)
                out << csv::format(a.shift.delta) << ',' << (a.shift.below_floor ? 1 : 0) << ','
                    << to_string(a.shift.form);
            else out << ",,";
            out << '\n';
        }
}

inline void write_report(const std::string& dir, const MonitoringReport& rep) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const fs::path d(dir);
    nlohmann::json meta = {{"format", "panelmon-report"},
                           {"version", kBundleFormatVersion},
                           {"chart", detail::chart_to_json(rep.chart)},
                           {"m", rep.m}};
    detail::write_text(d / "report.json", meta.dump(2) + "\n");
    std::ostringstream procs;
    procs << "process_id,in_p1,in_p2,in_bundle,observed,alerts,alert_fraction\n";
    for (const auto& p : rep.processes)
        procs << p.id << ',' << p.in_p1 << ',' << p.in_p2 << ',' << p.in_bundle << ',' << p.observed << ','
              << p.alerts.size() << ',' << csv::format(p.alert_fraction()) << '\n';
    detail::write_text(d / "processes.csv", procs.str());
    std::ostringstream alerts;
    write_alerts(alerts, rep);
    detail::write_text(d / "alerts.csv", alerts.str());
    detail::write_wide(d / "eta_tilde.csv", rep, [](const ProcessReport& p) { return p.eta_tilde; });
    detail::write_wide(d / "residuals.csv", rep, [](const ProcessReport& p) { return p.residuals; });
    detail::write_wide(d / "cusum_plus.csv", rep, [](const ProcessReport& p) { return MaskedSeries::from_values(p.c_plus); });
    detail::write_wide(d / "cusum_minus.csv", rep, [](const ProcessReport& p) { return MaskedSeries::from_values(p.c_minus); });
}

/// Reads the traces and alert list back from a report directory.
inline MonitoringReport read_report(const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path d(dir);
    if (!fs::is_directory(d)) throw DataError("report '" + dir + "' is not a directory");
    const auto meta = detail::read_json(d / "report.json");
    if (meta.value("format", "") != "panelmon-report") throw DataError(dir + ": not a monitoring report");
    const int v = meta.value("version", -1);
    if (v != kBundleFormatVersion)
        throw DataError(dir + ": report format version " + std::to_string(v) + " cannot be read by this build");
    MonitoringReport rep;
    rep.chart = detail::chart_from_json(meta.at("chart"));
    rep.m = meta.at("m").get<std::size_t>();
    const auto eta = csv::read_panel((d / "eta_tilde.csv").string());
    const auto res = csv::read_panel((d / "residuals.csv").string());
    const auto cp = csv::read_panel((d / "cusum_plus.csv").string());
    const auto cm = csv::read_panel((d / "cusum_minus.csv").string());
    rep.time_origin = res.time_origin;
    rep.time_step = res.time_step;
    rep.num_times = res.num_times();
    for (std::size_t i = 0; i < res.num_processes(); ++i) {
        ProcessReport p;
        p.id = res.ids[i];
        p.eta_tilde = eta.data.row(i);
        p.residuals = res.data.row(i);
        p.observed = p.residuals.count_observed();
        p.c_plus = cp.data.row(i).values;
        p.c_minus = cm.data.row(i).values;
        rep.processes.push_back(std::move(p));
    }
    auto in = csv::open_in((d / "alerts.csv").string());
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto c = csv::split(line);
        if (c.size() != 11) throw DataError(dir + "/alerts.csv: malformed row");
        AlertRecord a;
        csv::parse_double(c[1], a.time);
        a.event.side = c[2] == "upper" ? ChartSide::Upper : ChartSide::Lower;
        csv::parse_double(c[3], a.event.statistic);
        a.event.n_nonzero = std::stoul(c[4]);
        csv::parse_double(c[5], a.montgomery);
        a.shift.rejected = c[6] == "1";
        csv::parse_double(c[7], a.shift.valid_fraction);
        if (!a.shift.rejected) {
            csv::parse_double(c[8], a.shift.delta);
            a.shift.below_floor = c[9] == "1";
            a.shift.form = shift_form_from_string(c[10]);
        }
        a.event.time = static_cast<std::size_t>(std::llround((a.time - rep.time_origin) / rep.time_step));
        for (auto& p : rep.processes)
            if (p.id == c[0]) p.alerts.push_back(a);
    }
    return rep;
}

inline double signed_sqrt(double v) { return v < 0 ? -std::sqrt(-v) : std::sqrt(v); }

/// Writes the four plot-data files for one process into `out_dir`:
/// <id>_eta_tilde.csv, <id>_residuals.csv, <id>_cusum.csv (square-root scale)
/// and <id>_alerts.csv. Returns the paths written.
inline std::vector<std::string> export_plotdata(const MonitoringReport& rep, const std::string& process_id,
                                                const std::string& out_dir) {
    namespace fs = std::filesystem;
    const auto& p = rep.process(process_id);
    fs::create_directories(out_dir);
    const fs::path d(out_dir);
    std::vector<std::string> paths;
    auto series_file = [&](const std::string& name, const char* col, const MaskedSeries& s) {
        const auto path = (d / (process_id + "_" + name + ".csv")).string();
        auto out = csv::open_out(path);
        out << "time," << col << '\n';
        for (std::size_t t = 0; t < s.size(); ++t) {
            out << csv::format(rep.time_at(t)) << ',';
            if (s.is_observed(t)) out << csv::format(s.values[t]);
            out << '\n';
        }
        paths.push_back(path);
    };
    series_file("eta_tilde", "eta_tilde", p.eta_tilde);
    series_file("residuals", "residual", p.residuals);
    {
        const auto path = (d / (process_id + "_cusum.csv")).string();
        auto out = csv::open_out(path);
        out << "time,sqrt_c_plus,sqrt_c_minus,sqrt_h_plus,sqrt_h_minus\n";
        const double hp = signed_sqrt(rep.chart.h_plus), hm = signed_sqrt(rep.chart.h_minus);
        for (std::size_t t = 0; t < p.c_plus.size(); ++t)
            out << csv::format(rep.time_at(t)) << ',' << csv::format(signed_sqrt(p.c_plus[t])) << ','
                << csv::format(signed_sqrt(p.c_minus[t])) << ',' << csv::format(hp) << ',' << csv::format(hm) << '\n';
        paths.push_back(path);
    }
    {
        const auto path = (d / (process_id + "_alerts.csv")).string();
        auto out = csv::open_out(path);
        out << "time,side,delta_hat,form\n";
        for (const auto& a : p.alerts) {
            out << csv::format(a.time) << ',' << to_string(a.event.side) << ',';
            if (!a.shift.rejected) out << csv::format(a.shift.delta) << ',' << to_string(a.shift.form);
            else out << ',';
            out << '\n';
        }
        paths.push_back(path);
    }
    return paths;
}

}  // namespace panelmon
