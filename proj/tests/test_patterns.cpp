#include <gtest/gtest.h>

#include <random>

#include "panelmon/patterns.hpp"

using namespace panelmon;

namespace {

DetrendedPanel rows_to_panel(const std::vector<std::vector<double>>& rows) {
    DetrendedPanel d;
    const std::size_t T = rows.front().size();
    d.eta_hat = MaskedGrid(rows.size(), T);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        d.ids.push_back("s" + std::to_string(i));
        for (std::size_t t = 0; t < T; ++t)
            if (!std::isnan(rows[i][t])) d.eta_hat.set(i, t, rows[i][t]);
    }
    return d;
}

DetrendedPanel random_panel(std::size_t n, std::size_t T, std::uint64_t seed, double miss = 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> u;
    std::vector<std::vector<double>> rows(n, std::vector<double>(T));
    for (auto& r : rows)
        for (std::size_t t = 0; t < T; ++t)
            r[t] = u(rng) < miss ? kMissing : 0.3 * std::sin(0.05 * static_cast<double>(t)) + nd(rng);
    return rows_to_panel(rows);
}

}  // namespace

TEST(Boxcar, ConstantPanel) {
    auto d = rows_to_panel({{2, 2, 2, 2}, {2, 2, 2, 2}});
    auto p = estimate_ic_pattern_boxcar(d, d.ids, 3, Alignment::Centered);
    for (std::size_t t = 0; t < 4; ++t) {
        EXPECT_DOUBLE_EQ(p.mu0.values[t], 2.0);
        EXPECT_DOUBLE_EQ(p.sigma0.values[t], 0.0);
    }
}

TEST(Boxcar, TwoPointVariance) {
    auto d = rows_to_panel({{0, 0, 0}, {2, 2, 2}});
    auto p = estimate_ic_pattern_boxcar(d, d.ids, 1, Alignment::Centered);
    for (std::size_t t = 0; t < 3; ++t) {
        EXPECT_DOUBLE_EQ(p.mu0.values[t], 1.0);
        EXPECT_DOUBLE_EQ(p.sigma0.values[t], 1.0);
    }
}

TEST(Boxcar, WindowArithmetic) {
    // At t=1 the centered window of 3 covers all of [0, 6, 0]: mean 2, variance (4+16+4)/3.
    auto d = rows_to_panel({{0, 6, 0}});
    auto p = estimate_ic_pattern_boxcar(d, d.ids, 3, Alignment::Centered);
    EXPECT_DOUBLE_EQ(p.mu0.values[1], 2.0);
    EXPECT_NEAR(p.sigma0.values[1] * p.sigma0.values[1], 8.0, 1e-12);
    // At the edge t=2 the window truncates to {6, 0}.
    EXPECT_DOUBLE_EQ(p.mu0.values[2], 3.0);
    EXPECT_NEAR(p.sigma0.values[2], 3.0, 1e-12);
}

TEST(Boxcar, EmptySupportLeavesPatternMissing) {
    auto d = rows_to_panel({{1, kMissing, kMissing, kMissing, 2}});
    auto p = estimate_ic_pattern_boxcar(d, d.ids, 1, Alignment::Centered);
    EXPECT_TRUE(p.mu0.is_observed(0));
    EXPECT_FALSE(p.mu0.is_observed(2));
}

TEST(Boxcar, RejectsEmptyPoolAndUnknownId) {
    auto d = rows_to_panel({{1, 2}});
    EXPECT_THROW(estimate_ic_pattern_boxcar(d, {}, 1, Alignment::Centered), ConfigError);
    EXPECT_THROW(estimate_ic_pattern_boxcar(d, {"nope"}, 1, Alignment::Centered), DataError);
    EXPECT_THROW(estimate_ic_pattern_boxcar(d, d.ids, 0, Alignment::Centered), ConfigError);
}

TEST(Knn, EqualsBoxcarOfOneWhenKIsPoolSize) {
    auto d = random_panel(5, 40, 3);
    auto a = estimate_ic_pattern_knn(d, d.ids, 5, Alignment::Centered);
    auto b = estimate_ic_pattern_boxcar(d, d.ids, 1, Alignment::Centered);
    for (std::size_t t = 0; t < 40; ++t) {
        EXPECT_NEAR(a.mu0.values[t], b.mu0.values[t], 1e-12);
        EXPECT_NEAR(a.sigma0.values[t], b.sigma0.values[t], 1e-12);
    }
}

TEST(Knn, GapSkippingExample) {
    // Neighbours of t=2 in [1, missing, 3]: itself (3) then t=1 missing, t=0 (1).
    auto d = rows_to_panel({{1, kMissing, 3}});
    auto p = estimate_ic_pattern_knn(d, d.ids, 2, Alignment::Centered);
    EXPECT_DOUBLE_EQ(p.mu0.values[2], 2.0);
}

TEST(Knn, FullSupportIsGlobalMean) {
    auto d = random_panel(3, 20, 8, 0.2);
    std::size_t total = 0;
    double sum = 0;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t t = 0; t < 20; ++t)
            if (d.eta_hat.is_observed(i, t)) {
                sum += d.eta_hat.values(i, t);
                ++total;
            }
    auto p = estimate_ic_pattern_knn(d, d.ids, total, Alignment::Centered);
    for (std::size_t t = 0; t < 20; ++t) EXPECT_NEAR(p.mu0.values[t], sum / static_cast<double>(total), 1e-12);
}

TEST(Knn, TooFewPointsIsConfigError) {
    auto d = rows_to_panel({{1, kMissing, 3}});
    EXPECT_THROW(estimate_ic_pattern_knn(d, d.ids, 3, Alignment::Centered), ConfigError);
    EXPECT_THROW(estimate_ic_pattern_knn(d, d.ids, 1, Alignment::Centered), ConfigError);
}

TEST(Knn, TieGoesToEarlierTime) {
    // t=1 with K=2: itself (10) plus one of t=0 (0) or t=2 (100); earlier wins.
    auto d = rows_to_panel({{0, 10, 100}});
    auto p = estimate_ic_pattern_knn(d, d.ids, 2, Alignment::Centered);
    EXPECT_DOUBLE_EQ(p.mu0.values[1], 5.0);
}

TEST(Knn, TieGoesToLowerProcessIndex) {
    auto d = rows_to_panel({{1}, {2}, {30}});
    auto p = estimate_ic_pattern_knn(d, d.ids, 2, Alignment::Centered);
    EXPECT_DOUBLE_EQ(p.mu0.values[0], 1.5);
    // Pool order given out of index order does not change the tie-break.
    auto q = estimate_ic_pattern_knn(d, {"s2", "s1", "s0"}, 2, Alignment::Centered);
    EXPECT_DOUBLE_EQ(q.mu0.values[0], 1.5);
}

TEST(Knn, MatchesBoxcarOnInteriorWithKEqualPoolTimesWindow) {
    const std::size_t n = 4, T = 60, delta = 7;
    auto d = random_panel(n, T, 11);
    auto a = estimate_ic_pattern_knn(d, d.ids, n * delta, Alignment::Centered);
    auto b = estimate_ic_pattern_boxcar(d, d.ids, delta, Alignment::Centered);
    for (std::size_t t = delta; t + delta < T; ++t) {
        EXPECT_NEAR(a.mu0.values[t], b.mu0.values[t], 1e-12);
        EXPECT_NEAR(a.sigma0.values[t], b.sigma0.values[t], 1e-12);
    }
}

TEST(Patterns, LeftSidedIsCausal) {
    auto d = random_panel(3, 50, 2, 0.1);
    auto sentinel = d;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t t = 30; t < 50; ++t) sentinel.eta_hat.set(i, t, 1e6 + static_cast<double>(t));
    for (int which = 0; which < 2; ++which) {
        auto est = [&](const DetrendedPanel& x) {
            return which == 0 ? estimate_ic_pattern_boxcar(x, x.ids, 9, Alignment::LeftSided)
                              : estimate_ic_pattern_knn(x, x.ids, 12, Alignment::LeftSided);
        };
        auto a = est(d), b = est(sentinel);
        for (std::size_t t = 0; t < 30; ++t) {
            EXPECT_EQ(a.mu0.values[t], b.mu0.values[t]) << t;
            EXPECT_EQ(a.sigma0.values[t], b.sigma0.values[t]) << t;
        }
    }
}

TEST(Standardize, Arithmetic) {
    DetrendedPanel d = rows_to_panel({{2.0, 1.0, 3.0}});
    ICPattern pat{MaskedSeries::from_values({1.0, 1.0, 1.0}), MaskedSeries::from_values({0.5, 0.2, 0.0}), 1, 0,
                  Alignment::Centered};
    auto r = standardize(d, pat);
    EXPECT_DOUBLE_EQ(r.residuals[0].values.values[0], 2.0);
    EXPECT_DOUBLE_EQ(r.residuals[0].values.values[1], 0.0);
    EXPECT_FALSE(r.residuals[0].values.is_observed(2));
    EXPECT_EQ(r.sigma_floor_hits, 1u);
}

TEST(Standardize, PooledMomentsOverSupport) {
    // Boxcar on fully observed data with a window covering the whole span:
    // every t sees the same support, so the pooled residual moments are exact.
    auto d = random_panel(6, 31, 4);
    auto p = estimate_ic_pattern_boxcar(d, d.ids, 63, Alignment::Centered);
    auto r = standardize(d, p);
    double s = 0, ss = 0;
    std::size_t c = 0;
    for (auto& rs : r.residuals)
        for (std::size_t t = 0; t < 31; ++t) {
            s += rs.values.values[t];
            ss += rs.values.values[t] * rs.values.values[t];
            ++c;
        }
    const double m = s / static_cast<double>(c);
    EXPECT_NEAR(m, 0.0, 1e-6);
    EXPECT_NEAR(ss / static_cast<double>(c) - m * m, 1.0, 1e-6);
}

TEST(Standardize, PerTimeMomentsWithUnitWindow) {
    auto d = random_panel(8, 25, 6);
    auto p = estimate_ic_pattern_boxcar(d, d.ids, 1, Alignment::Centered);
    auto r = standardize(d, p);
    for (std::size_t t = 0; t < 25; ++t) {
        double s = 0, ss = 0;
        for (auto& rs : r.residuals) {
            s += rs.values.values[t];
            ss += rs.values.values[t] * rs.values.values[t];
        }
        EXPECT_NEAR(s / 8, 0.0, 1e-9);
        EXPECT_NEAR(ss / 8, 1.0, 1e-9);
    }
}

TEST(Standardize, AffineEquivariance) {
    auto d = random_panel(5, 60, 12, 0.15);
    auto e = d;
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t t = 0; t < 60; ++t) e.eta_hat.values(i, t) = 3.5 * e.eta_hat.values(i, t) - 2.0;
    for (int which = 0; which < 2; ++which) {
        auto est = [&](const DetrendedPanel& x) {
            return which == 0 ? estimate_ic_pattern_boxcar(x, x.ids, 5, Alignment::Centered)
                              : estimate_ic_pattern_knn(x, x.ids, 20, Alignment::LeftSided);
        };
        auto ra = standardize(d, est(d)), rb = standardize(e, est(e));
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t t = 0; t < 60; ++t) {
                ASSERT_EQ(ra.residuals[i].values.is_observed(t), rb.residuals[i].values.is_observed(t));
                if (ra.residuals[i].values.is_observed(t)) {
                    EXPECT_NEAR(ra.residuals[i].values.values[t], rb.residuals[i].values.values[t], 1e-9);
                }
            }
    }
}

TEST(Standardize, AppliesToProcessesOutsidePool) {
    auto d = rows_to_panel({{0, 0, 0}, {2, 2, 2}, {7, 7, 7}});
    auto p = estimate_ic_pattern_boxcar(d, {"s0", "s1"}, 1, Alignment::Centered);
    auto r = standardize(d, p);
    ASSERT_EQ(r.residuals.size(), 3u);
    EXPECT_DOUBLE_EQ(r.residuals[2].values.values[0], 6.0);
}

TEST(Patterns, CsvExport) {
    auto d = rows_to_panel({{0, 2}, {2, kMissing}});
    auto p = estimate_ic_pattern_boxcar(d, d.ids, 1, Alignment::Centered);
    std::ostringstream out;
    write_pattern(out, p, 10.0, 0.5);
    EXPECT_EQ(out.str(), "time,mu0,sigma0\n10,1,1\n10.5,2,0\n");
}
