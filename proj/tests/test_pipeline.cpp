#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "panelmon/config.hpp"
#include "panelmon/pipeline.hpp"

using namespace panelmon;
namespace fs = std::filesystem;

namespace {

const char* kFastConfig = R"(
mode = multiplicative
smoothing_window = 1
level_window = 240
pattern = knn
pattern_k = 200
clustering = kmeans
iqr_multiple = 1
k = 0.75
arl0 = 200
replications = 500
block_length = 27
gap_max = 27
m = 25
svm_instances = 600
seed = 7
)";

Panel fixture_panel(std::uint64_t seed, std::size_t length = 1200) {
    FixtureSpec spec;
    spec.seed = seed;
    spec.length = length;
    spec.planted.push_back({0, ShiftSpec::jump(3.0, 700)});
    return generate_fixture(spec);
}

const Bundle& shared_bundle() {
    static const Bundle b = calibrate(fixture_panel(3), parse_config_string(kFastConfig));
    return b;
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("panelmon_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Panel prefix(const Panel& p, std::size_t T) {
    Panel out = p;
    out.data = MaskedGrid(p.num_processes(), T);
    for (std::size_t i = 0; i < p.num_processes(); ++i)
        for (std::size_t t = 0; t < T; ++t)
            if (p.data.is_observed(i, t)) out.data.set(i, t, p.data.values(i, t));
    return out;
}

}  // namespace

TEST(Config, WriteParseRoundTrip) {
    auto c = parse_config_string("preset = sunspot\nk = auto\nk_grid = 0.3, 0.6\nsvm_gamma = 0.05\n");
    std::ostringstream a;
    write_config(a, c);
    std::istringstream in(a.str());
    const auto back = parse_config(in);
    std::ostringstream b;
    write_config(b, back);
    EXPECT_EQ(a.str(), b.str());
    EXPECT_FALSE(back.k.has_value());
    EXPECT_EQ(back.k_grid, (std::vector<double>{0.3, 0.6}));
}

TEST(Config, SunspotPresetValues) {
    const auto c = preset_config("sunspot");
    EXPECT_EQ(c.mode, ModelMode::Multiplicative);
    EXPECT_EQ(c.smoothing_window, 27u);
    EXPECT_EQ(c.level_window, 240u);
    EXPECT_EQ(c.pattern, PatternEstimator::Knn);
    EXPECT_EQ(c.pattern_k, 200u);
    EXPECT_EQ(c.clustering, ClusterMethod::KMeans);
    EXPECT_EQ(c.iqr_multiple, 1.0);
    EXPECT_EQ(*c.delta_min, 1.5);
    EXPECT_EQ(*c.k, 0.75);
    EXPECT_EQ(c.arl0, 200.0);
    EXPECT_EQ(c.block_length, 27u);
    EXPECT_EQ(c.gap_max, 27u);
    EXPECT_EQ(*c.m, 25u);
    EXPECT_EQ(c.svm.lambda, 10.0);
    EXPECT_EQ(c.svm.epsilon, 0.001);
}

TEST(Config, KeysOverridePresetRegardlessOfOrder) {
    const auto c = parse_config_string("k = 0.5\npreset = sunspot\n");
    EXPECT_EQ(*c.k, 0.5);
    EXPECT_EQ(c.smoothing_window, 27u);
}

TEST(Config, UnknownKeyNamesLine) {
    try {
        parse_config_string("k = 0.5\n\nbogus = 1\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos);
    }
}

TEST(Config, DuplicateKeyRejected) {
    EXPECT_THROW(parse_config_string("k = 0.5\nk = 0.6\n"), ConfigError);
}

TEST(Config, InvalidValuesRejected) {
    EXPECT_THROW(parse_config_string("k = -1\n"), ConfigError);
    EXPECT_THROW(parse_config_string("arl0 = lots\n"), ConfigError);
    EXPECT_THROW(parse_config_string("preset = moon\n"), ConfigError);
    EXPECT_THROW(parse_config_string("mode = sideways\n"), ConfigError);
    EXPECT_THROW(parse_config_string("just a line\n"), ConfigError);
}

TEST(FixtureSpecParse, PlantsAndKeys) {
    std::istringstream in("seed = 4\nlength = 300\nplant = 0, jump, 3, 100\nplant = 2, oscillation, 2, 50\n");
    const auto f = parse_fixture_spec(in);
    EXPECT_EQ(f.seed, 4u);
    EXPECT_EQ(f.length, 300u);
    ASSERT_EQ(f.planted.size(), 2u);
    EXPECT_EQ(f.planted[1].shift.form, ShiftForm::Oscillation);
    EXPECT_EQ(f.planted[1].shift.onset, 50u);
    std::istringstream bad("colour = red\n");
    EXPECT_THROW(parse_fixture_spec(bad), ConfigError);
}

TEST(Ingestion, RaggedRowNamesLine) {
    std::istringstream in("time,a,b\n0,1,2\n1,1,2\n2,1\n");
    try {
        csv::read_panel(in, "panel.csv");
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("panel.csv:4:"), std::string::npos) << e.what();
    }
}

TEST(Calibrate, SummaryListsPoolsAndLimits) {
    const auto& b = shared_bundle();
    EXPECT_EQ(b.pools.p1.size(), 15u);
    EXPECT_FALSE(b.pools.p2.empty());
    EXPECT_GT(b.chart.h_plus, 0.0);
    EXPECT_EQ(b.chart.h_minus, -b.chart.h_plus);
    const auto s = bundle_summary(b);
    EXPECT_NE(s.find("P1 size: 15"), std::string::npos);
    EXPECT_NE(s.find("P2 size: "), std::string::npos);
    EXPECT_NE(s.find("h+: "), std::string::npos);
    EXPECT_NE(s.find("achieved ARL0: "), std::string::npos);
    EXPECT_NE(s.find("SVC accuracy: "), std::string::npos);
}

TEST(Calibrate, AutoDeltaIsEstimatedAndRecorded) {
    auto cfg = parse_config_string(std::string(kFastConfig) + "delta_min = auto\n");
    cfg.replications = 300;
    const auto b = calibrate(fixture_panel(5, 900), cfg);
    EXPECT_TRUE(b.delta_estimated);
    EXPECT_FALSE(b.delta_trace.empty());
    EXPECT_GT(b.delta_min, 0.0);
    EXPECT_NE(bundle_summary(b).find("(estimated)"), std::string::npos);
}

TEST(Bundle, RoundTripKeepsChartAndModels) {
    const auto& b = shared_bundle();
    const auto dir = scratch("bundle_rt");
    write_bundle(dir.string(), b);
    const auto r = read_bundle(dir.string());
    EXPECT_EQ(r.chart.k, b.chart.k);
    EXPECT_EQ(r.chart.h_plus, b.chart.h_plus);
    EXPECT_EQ(r.chart.h_minus, b.chart.h_minus);
    EXPECT_EQ(r.chart.gap_policy.max_gap, b.chart.gap_policy.max_gap);
    EXPECT_EQ(r.pools.p1, b.pools.p1);
    EXPECT_EQ(r.pools.p2, b.pools.p2);
    EXPECT_EQ(r.m, b.m);
    EXPECT_EQ(r.models.svr.to_json().dump(), b.models.svr.to_json().dump());
    EXPECT_EQ(r.models.svc.to_json().dump(), b.models.svc.to_json().dump());
    std::ostringstream c1, c2;
    write_config(c1, r.config);
    write_config(c2, b.config);
    EXPECT_EQ(c1.str(), c2.str());
}

TEST(Bundle, OtherFormatVersionRefused) {
    const auto dir = scratch("bundle_version");
    write_bundle(dir.string(), shared_bundle());
    auto man = nlohmann::json::parse(slurp(dir / "manifest.json"));
    man["version"] = kBundleFormatVersion + 1;
    std::ofstream(dir / "manifest.json") << man.dump();
    try {
        read_bundle(dir.string());
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("version"), std::string::npos) << e.what();
    }
}

TEST(Determinism, ByteIdenticalBundlesAndReports) {
    const auto panel = fixture_panel(11, 900);
    const auto cfg = parse_config_string(kFastConfig);
    const auto d1 = scratch("det1"), d2 = scratch("det2");
    for (const auto& d : {d1, d2}) {
        const auto b = calibrate(panel, cfg);
        write_bundle((d / "bundle").string(), b);
        write_report((d / "report").string(), monitor(panel, read_bundle((d / "bundle").string())));
    }
    std::size_t files = 0;
    for (const auto& e : fs::recursive_directory_iterator(d1)) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), d1);
        EXPECT_EQ(slurp(e.path()), slurp(d2 / rel)) << rel;
        ++files;
    }
    EXPECT_GE(files, 15u);
}

TEST(Monitor, PrefixReplayLeavesEarlierOutputUnchanged) {
    const auto& b = shared_bundle();
    const auto panel = fixture_panel(21);
    const auto full = monitor(panel, b);
    for (std::size_t cut : {400u, 650u, 900u}) {
        const auto part = monitor(prefix(panel, cut), b);
        for (std::size_t i = 0; i < panel.num_processes(); ++i) {
            const auto& f = full.processes[i];
            const auto& p = part.processes[i];
            for (std::size_t t = 0; t < cut; ++t) {
                ASSERT_EQ(f.residuals.is_observed(t), p.residuals.is_observed(t));
                if (f.residuals.is_observed(t)) {
                    ASSERT_EQ(f.residuals.values[t], p.residuals.values[t]) << f.id << " " << t;
                }
                ASSERT_EQ(f.c_plus[t], p.c_plus[t]);
                ASSERT_EQ(f.c_minus[t], p.c_minus[t]);
            }
            std::vector<AlertRecord> early;
            for (const auto& a : f.alerts)
                if (a.event.time < cut) early.push_back(a);
            ASSERT_EQ(early.size(), p.alerts.size()) << f.id << " cut " << cut;
            for (std::size_t a = 0; a < early.size(); ++a) {
                EXPECT_EQ(early[a].event.time, p.alerts[a].event.time);
                EXPECT_EQ(early[a].shift.rejected, p.alerts[a].shift.rejected);
                EXPECT_EQ(early[a].shift.delta, p.alerts[a].shift.delta);
                EXPECT_EQ(early[a].shift.form, p.alerts[a].shift.form);
            }
        }
    }
}

TEST(Monitor, PlantedJumpAlertsWithinWindow) {
    const auto& b = shared_bundle();
    const auto rep = monitor(fixture_panel(31), b);
    const auto& p0 = rep.process("p0");
    const AlertRecord* first = nullptr;
    for (const auto& a : p0.alerts)
        if (a.event.time >= 700) {
            first = &a;
            break;
        }
    ASSERT_NE(first, nullptr);
    EXPECT_LT(first->event.time, 700 + b.m);
    EXPECT_EQ(first->event.side, ChartSide::Upper);
    EXPECT_GT(first->montgomery, 1.5);
}

TEST(Monitor, IdenticalProcessesGiveNoAlerts) {
    Panel p;
    p.ids = {"a", "b", "c"};
    p.data = MaskedGrid(3, 600);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t t = 0; t < 600; ++t) p.data.set(i, t, 100.0 + 10.0 * std::sin(0.01 * static_cast<double>(t)));
    Bundle b = shared_bundle();
    b.pools.p1 = b.pools.p2 = {"a", "b", "c"};
    const auto rep = monitor(p, b);
    for (const auto& pr : rep.processes) {
        EXPECT_TRUE(pr.alerts.empty());
        EXPECT_EQ(pr.alert_fraction(), 0.0);
    }
}

TEST(Monitor, UnknownProcessIsMonitoredAndFlagged) {
    auto panel = fixture_panel(41, 800);
    panel.ids[5] = "newcomer";
    const auto rep = monitor(panel, shared_bundle());
    const auto& p = rep.process("newcomer");
    EXPECT_FALSE(p.in_bundle);
    EXPECT_GT(p.observed, 0u);
    EXPECT_TRUE(rep.process("p0").in_bundle);
}

TEST(Monitor, EveryAlertHasPredictionsOrRejection) {
    FixtureSpec spec;
    spec.seed = 51;
    spec.length = 1200;
    spec.missing_fraction = 0.3;
    spec.planted.push_back({0, ShiftSpec::jump(3.0, 700)});
    auto b = shared_bundle();
    const auto rep = monitor(generate_fixture(spec), b);
    std::size_t alerts = 0;
    for (const auto& p : rep.processes) {
        EXPECT_GE(p.alert_fraction(), 0.0);
        EXPECT_LE(p.alert_fraction(), 1.0);
        for (const auto& a : p.alerts) {
            ++alerts;
            if (a.shift.rejected) {
                EXPECT_LT(a.shift.valid_fraction, svm::kMinValidFraction);
            } else {
                EXPECT_TRUE(std::isfinite(a.shift.delta));
                EXPECT_GE(a.shift.valid_fraction, svm::kMinValidFraction);
            }
        }
    }
    EXPECT_GT(alerts, 0u);
}

TEST(Report, ResidualsRoundTripBitExact) {
    const auto rep = monitor(fixture_panel(61, 800), shared_bundle());
    const auto dir = scratch("report_rt");
    write_report(dir.string(), rep);
    const auto back = read_report(dir.string());
    ASSERT_EQ(back.processes.size(), rep.processes.size());
    for (std::size_t i = 0; i < rep.processes.size(); ++i) {
        const auto& a = rep.processes[i];
        const auto& b = back.processes[i];
        EXPECT_EQ(a.residuals.observed, b.residuals.observed);
        for (std::size_t t = 0; t < a.residuals.size(); ++t)
            if (a.residuals.is_observed(t)) {
                ASSERT_EQ(a.residuals.values[t], b.residuals.values[t]);
            }
        EXPECT_EQ(a.c_plus, b.c_plus);
        ASSERT_EQ(a.alerts.size(), b.alerts.size());
        for (std::size_t k = 0; k < a.alerts.size(); ++k) {
            EXPECT_EQ(a.alerts[k].event.time, b.alerts[k].event.time);
            EXPECT_EQ(a.alerts[k].shift.delta, b.alerts[k].shift.delta);
        }
    }
}

TEST(PlotData, SquareRootScaleAndHeaders) {
    MonitoringReport rep;
    rep.chart.k = 0.5;
    rep.chart.h_plus = 8.5;
    rep.chart.h_minus = -8.5;
    rep.num_times = 2;
    ProcessReport p;
    p.id = "x";
    p.eta_tilde = MaskedSeries::from_values({1.0, 1.1});
    p.residuals = MaskedSeries::from_values({0.5, 2.0});
    p.c_plus = {9.0, 0.0};
    p.c_minus = {0.0, -4.0};
    rep.processes.push_back(p);
    const auto dir = scratch("plot");
    const auto files = export_plotdata(rep, "x", dir.string());
    ASSERT_EQ(files.size(), 4u);
    std::istringstream cusum(slurp(files[2]));
    std::string header, row0, row1;
    std::getline(cusum, header);
    std::getline(cusum, row0);
    std::getline(cusum, row1);
    const auto c0 = csv::split(row0), c1 = csv::split(row1);
    double v = 0;
    csv::parse_double(c0[1], v);
    EXPECT_EQ(v, 3.0);
    csv::parse_double(c0[3], v);
    EXPECT_NEAR(v, 2.915, 5e-4);
    csv::parse_double(c0[4], v);
    EXPECT_NEAR(v, -2.915, 5e-4);
    csv::parse_double(c1[2], v);
    EXPECT_EQ(v, -2.0);
    EXPECT_EQ(slurp(files[3]), "time,side,delta_hat,form\n");
}

TEST(PlotData, UnknownProcessListsKnownIds) {
    MonitoringReport rep;
    ProcessReport a, b;
    a.id = "alpha";
    b.id = "beta";
    rep.processes = {a, b};
    try {
        export_plotdata(rep, "gamma", scratch("plot_unknown").string());
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("alpha, beta"), std::string::npos) << e.what();
    }
}
