#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "panelmon/calibration_benchmark.hpp"
#include "panelmon/config.hpp"
#include "panelmon/csv.hpp"
#include "panelmon/fixture.hpp"
#include "panelmon/pipeline.hpp"

namespace fs = std::filesystem;
using namespace panelmon;

namespace {

// Runs a command body; library errors become messages tagged with the
// command name and the error's exit code.
template <class Fn>
int guarded(const std::string& command, Fn&& fn) {
    try {
        fn();
        return 0;
    } catch (const Error& e) {
        std::cerr << "panelmon " << command << ": " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "panelmon " << command << ": " << e.what() << '\n';
        return 3;
    }
}

void print_alert_stream(const MonitoringReport& rep) {
    struct Row {
        std::size_t t;
        std::size_t p;
        std::size_t a;
    };
    std::vector<Row> rows;
    for (std::size_t p = 0; p < rep.processes.size(); ++p)
        for (std::size_t a = 0; a < rep.processes[p].alerts.size(); ++a)
            rows.push_back({rep.processes[p].alerts[a].event.time, p, a});
    std::stable_sort(rows.begin(), rows.end(), [](const Row& x, const Row& y) { return x.t < y.t; });
    for (const auto& r : rows) {
        const auto& pr = rep.processes[r.p];
        const auto& a = pr.alerts[r.a];
        std::cout << csv::format(a.time) << ' ' << pr.id << ' ' << to_string(a.event.side);
        if (a.shift.rejected) std::cout << " input-rejected";
        else std::cout << " delta=" << csv::format(a.shift.delta) << " form=" << to_string(a.shift.form);
        if (!pr.in_bundle) std::cout << " (not in bundle)";
        std::cout << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Panel process monitoring with bootstrap-calibrated CUSUM charts and SVM shift characterization"};
    app.require_subcommand(1);
    app.footer("Exit codes: 0 ok, 2 configuration error, 3 data error, 4 numerical failure.\n"
               "PANELMON_THREADS overrides the worker thread count.");

    std::string panel_path, config_path, out_dir, bundle_dir, report_dir, residuals_path, process_id, spec_path;
    double at = 0.0;
    bool no_restart = false;
    std::size_t bench_b = 0;
    std::vector<double> bench_targets;
    std::uint64_t bench_seed = 0;

    auto* cal = app.add_subcommand("calibrate", "Offline calibration: pools, pattern, chart and shift models");
    cal->add_option("--panel", panel_path, "Panel CSV (time,<id>...)")->required();
    cal->add_option("--config", config_path, "Configuration file (key = value)")->required();
    cal->add_option("--out", out_dir, "Bundle directory to write")->required();

    auto* mon = app.add_subcommand("monitor", "Online monitoring of a panel against a bundle");
    mon->add_option("--panel", panel_path, "Panel CSV")->required();
    mon->add_option("--bundle", bundle_dir, "Calibration bundle directory")->required();
    mon->add_option("--out", out_dir, "Report directory to write")->required();
    mon->add_flag("--no-restart", no_restart, "Keep the chart running after an alert");

    auto* chr = app.add_subcommand("characterize", "Shift size and form for one residual series at one time");
    chr->add_option("--bundle", bundle_dir, "Calibration bundle directory")->required();
    chr->add_option("--residuals", residuals_path, "Residual CSV (time,<id>...)")->required();
    chr->add_option("--at", at, "Alert time (in the file's time units)")->required();
    chr->add_option("--process", process_id, "Column to use when the file has several");

    auto* exp = app.add_subcommand("export-plotdata", "Write the four plot-data files for one process");
    exp->add_option("--report", report_dir, "Report directory")->required();
    exp->add_option("--process", process_id, "Process id")->required();
    exp->add_option("--out", out_dir, "Output directory (default: <report>/plotdata)");

    auto* bench = app.add_subcommand("bench-appendix-b", "Bootstrap vs parametric ARL0 comparison");
    bench->add_option("--config", config_path, "Configuration file (bench_* keys)")->required();
    bench->add_option("--replications", bench_b, "Override bench_replications");
    bench->add_option("--targets", bench_targets, "Override bench_targets")->delimiter(',');
    bench->add_option("--seed", bench_seed, "Override the master seed");
    bench->add_option("--out", out_dir, "CSV path (default: stdout)");

    auto* gen = app.add_subcommand("gen-fixture", "Generate a synthetic panel");
    gen->add_option("--spec", spec_path, "Fixture spec (key = value)")->required();
    gen->add_option("--out", out_dir, "Panel CSV path (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (*cal)
        return guarded("calibrate", [&] {
            const auto cfg = load_config(config_path);
            const auto panel = csv::read_panel(panel_path);
            const auto bundle = calibrate(panel, cfg);
            write_bundle(out_dir, bundle);
            std::cout << bundle_summary(bundle);
        });
    if (*mon)
        return guarded("monitor", [&] {
            auto bundle = read_bundle(bundle_dir);
            if (no_restart) bundle.config.restart_on_alert = false;
            const auto panel = csv::read_panel(panel_path);
            const auto rep = monitor(panel, bundle);
            write_report(out_dir, rep);
            print_alert_stream(rep);
            for (const auto& p : rep.processes)
                if (!p.in_bundle)
                    std::cerr << "panelmon monitor: process '" << p.id
                              << "' is not in the bundle; monitored with the pooled pattern\n";
        });
    if (*chr)
        return guarded("characterize", [&] {
            const auto bundle = read_bundle(bundle_dir);
            auto in = csv::open_in(residuals_path);
            // Residual files may hold a single series, which read_panel rejects.
            std::string header;
            std::getline(in, header);
            const auto cols = csv::split(header);
            if (cols.size() < 2 || cols[0] != "time")
                throw DataError(residuals_path + ":1: header must start with 'time'");
            std::size_t col = 1;
            if (!process_id.empty()) {
                const auto it = std::find(cols.begin() + 1, cols.end(), process_id);
                if (it == cols.end()) throw DataError(residuals_path + ": no column '" + process_id + "'");
                col = static_cast<std::size_t>(it - cols.begin());
            } else if (cols.size() > 2) {
                throw ConfigError("the residual file has several columns; choose one with --process");
            }
            std::vector<double> times;
            MaskedSeries series;
            std::string line;
            std::size_t line_no = 1;
            while (std::getline(in, line)) {
                ++line_no;
                if (line.empty()) continue;
                const auto cells = csv::split(line);
                if (cells.size() != cols.size())
                    throw DataError(residuals_path + ":" + std::to_string(line_no) + ": expected " +
                                    std::to_string(cols.size()) + " cells, found " + std::to_string(cells.size()));
                double t = 0.0, v = 0.0;
                if (!csv::parse_double(cells[0], t))
                    throw DataError(residuals_path + ":" + std::to_string(line_no) + ": invalid time value");
                times.push_back(t);
                series.values.push_back(kMissing);
                series.observed.push_back(0);
                if (!cells[col].empty()) {
                    if (!csv::parse_double(cells[col], v))
                        throw DataError(residuals_path + ":" + std::to_string(line_no) + ": invalid value");
                    series.set(series.size() - 1, v);
                }
            }
            const auto it = std::find_if(times.begin(), times.end(), [&](double t) {
                return std::abs(t - at) <= 1e-9 * std::max(1.0, std::abs(at));
            });
            if (it == times.end()) throw DataError(residuals_path + ": no row at time " + csv::format(at));
            const auto r = svm::characterize(bundle.models, series, static_cast<std::size_t>(it - times.begin()));
            std::cout << "valid_fraction," << csv::format(r.valid_fraction) << '\n';
            if (r.rejected) {
                std::cout << "rejected,1\n";
                return;
            }
            std::cout << "rejected,0\ndelta_hat," << csv::format(r.delta) << "\nbelow_floor," << (r.below_floor ? 1 : 0)
                      << "\nform," << to_string(r.form) << '\n';
        });
    if (*exp)
        return guarded("export-plotdata", [&] {
            const auto rep = read_report(report_dir);
            const auto dir = out_dir.empty() ? (fs::path(report_dir) / "plotdata").string() : out_dir;
            for (const auto& p : export_plotdata(rep, process_id, dir)) std::cout << p << '\n';
        });
    if (*bench)
        return guarded("bench-appendix-b", [&] {
            const auto cfg = load_config(config_path);
            BenchmarkConfig b;
            b.targets = bench_targets.empty() ? cfg.bench_targets : bench_targets;
            b.replications = bench_b ? bench_b : cfg.bench_replications;
            b.block_length = cfg.bench_block_length;
            b.k = cfg.bench_k;
            b.seed = bench_seed ? bench_seed : cfg.seed;
            std::vector<BenchmarkRow> rows;
            for (const auto& g : default_generators()) {
                auto r = run_benchmark_generator(g, b);
                rows.insert(rows.end(), r.begin(), r.end());
            }
            if (out_dir.empty()) {
                write_benchmark(std::cout, rows);
            } else {
                auto out = csv::open_out(out_dir);
                write_benchmark(out, rows);
            }
        });
    if (*gen)
        return guarded("gen-fixture", [&] {
            const auto panel = generate_fixture(load_fixture_spec(spec_path));
            if (out_dir.empty()) csv::write_panel(std::cout, panel);
            else csv::write_panel(out_dir, panel);
        });
    return 2;
}
