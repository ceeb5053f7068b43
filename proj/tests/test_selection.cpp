#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "oracles/partition.hpp"
#include "panelmon/selection.hpp"

using namespace panelmon;

namespace {

DetrendedPanel panel_from_rows(const std::vector<std::vector<double>>& rows) {
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

}  // namespace

TEST(StabilityScore, RobustFormulaArithmetic) {
    // median 0.2, type-7 IQR 0.3
    std::vector<double> eta = {0.05, 0.2, 0.35};
    EXPECT_NEAR(stats::median(eta), 0.2, 1e-15);
    EXPECT_NEAR(stats::iqr(eta), 0.15, 1e-15);
    std::vector<double> eta2 = {-0.1, 0.2, 0.5};
    EXPECT_NEAR(stats::iqr(eta2), 0.3, 1e-15);
    EXPECT_NEAR(stability_score(eta2, true), 0.04 + 0.3, 1e-15);
}

TEST(StabilityScore, ZeroSeries) {
    EXPECT_EQ(stability_score({0, 0, 0, 0}, true), 0.0);
    EXPECT_EQ(stability_score({0, 0, 0, 0}, false), 0.0);
}

TEST(StabilityScore, PlainMeanOfSquares) {
    EXPECT_NEAR(stability_score({-1, 0, 1}, false), 2.0 / 3.0, 1e-15);
}

TEST(StabilityScore, PermutationInvariant) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    std::vector<double> v(101);
    for (auto& x : v) x = nd(rng);
    const double r = stability_score(v, true), p = stability_score(v, false);
    for (int rep = 0; rep < 10; ++rep) {
        std::shuffle(v.begin(), v.end(), rng);
        EXPECT_DOUBLE_EQ(stability_score(v, true), r);
        EXPECT_NEAR(stability_score(v, false), p, 1e-12);
    }
}

TEST(StabilityScore, RobustFormResistsPlantedOutliers) {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> nd(0.0, 0.1);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> v(400);
        for (auto& x : v) x = nd(rng);
        auto dirty = v;
        for (std::size_t j = 0; j < 40; ++j) dirty[j * 10] = 5.0;  // 10% of points
        const double dr = std::abs(stability_score(dirty, true) - stability_score(v, true));
        const double dp = std::abs(stability_score(dirty, false) - stability_score(v, false));
        EXPECT_LT(dr, dp);
    }
}

TEST(StabilityScores, IneligibleReportedSeparately) {
    std::vector<double> full(40, 0.1), sparse(40, kMissing);
    sparse[0] = 1.0;
    auto d = panel_from_rows({full, sparse});
    auto s = stability_scores(d, true, 30);
    ASSERT_EQ(s.scores.size(), 1u);
    ASSERT_EQ(s.ineligible.size(), 1u);
    EXPECT_EQ(s.ineligible[0], "s1");
}

TEST(StabilityScores, NoEligibleProcessThrows) {
    auto d = panel_from_rows({{1, 2}, {3, 4}});
    EXPECT_THROW(stability_scores(d, true, 30), DataError);
}

TEST(ClusterTwo, KMeansMatchesExhaustiveOracle) {
    std::vector<double> x = {0.1, 0.12, 0.11, 0.9, 0.95};
    auto r = cluster_two(x, ClusterMethod::KMeans);
    EXPECT_EQ(r.in_control, oracle::best_two_partition(x));
    EXPECT_EQ(r.in_control, (std::vector<std::uint8_t>{1, 1, 1, 0, 0}));
}

TEST(ClusterTwo, TwoPoints) {
    auto r = cluster_two({0.1, 5.0}, ClusterMethod::KMeans);
    EXPECT_EQ(r.in_control, (std::vector<std::uint8_t>{1, 0}));
}

TEST(ClusterTwo, IdenticalScoresDegenerate) {
    for (auto m : {ClusterMethod::KMeans, ClusterMethod::GaussianMixtureEM}) {
        auto r = cluster_two({0.3, 0.3, 0.3}, m);
        EXPECT_TRUE(r.degenerate);
        EXPECT_EQ(r.ic_count(), 3u);
        EXPECT_FALSE(r.warnings.empty());
    }
}

TEST(ClusterTwo, RandomKMeansAgreesWithOracleAndIsIntervalSplit) {
    std::mt19937_64 rng(21);
    for (int rep = 0; rep < 200; ++rep) {
        std::uniform_int_distribution<int> nn(2, 14);
        const int n = nn(rng);
        std::lognormal_distribution<double> ln(0.0, 1.0);
        std::vector<double> x(static_cast<std::size_t>(n));
        for (auto& v : x) v = ln(rng);
        auto r = cluster_two(x, ClusterMethod::KMeans, static_cast<std::uint64_t>(rep));
        EXPECT_EQ(r.in_control, oracle::best_two_partition(x)) << "rep " << rep;
        double max_ic = -1e300, min_oc = 1e300;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (r.in_control[i]) max_ic = std::max(max_ic, x[i]);
            else min_oc = std::min(min_oc, x[i]);
        }
        EXPECT_LT(max_ic, min_oc);
        EXPECT_GT(r.ic_count(), 0u);
        EXPECT_LT(r.ic_count(), x.size());
    }
}

TEST(ClusterTwo, EmSeparatesAsymmetricClusters) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> tight(0.1, 0.01), wide(2.0, 0.8);
    std::vector<double> x;
    for (int i = 0; i < 30; ++i) x.push_back(std::abs(tight(rng)));
    for (int i = 0; i < 10; ++i) x.push_back(std::abs(wide(rng)) + 0.5);
    auto r = cluster_two(x, ClusterMethod::GaussianMixtureEM);
    for (int i = 0; i < 30; ++i) EXPECT_EQ(r.in_control[static_cast<std::size_t>(i)], 1);
    for (int i = 30; i < 40; ++i) EXPECT_EQ(r.in_control[static_cast<std::size_t>(i)], 0);
    EXPECT_LT(r.ic_center, r.oc_center);
}

TEST(ClusterTwo, DeterministicGivenSeed) {
    std::vector<double> x = {0.3, 0.1, 0.7, 0.75, 0.2, 1.4, 0.05};
    for (auto m : {ClusterMethod::KMeans, ClusterMethod::GaussianMixtureEM})
        EXPECT_EQ(cluster_two(x, m, 99).in_control, cluster_two(x, m, 99).in_control);
}

TEST(SelectPools, RecoversPlantedStableGroup) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto p = fixtures::stable_unstable_panel(15, 6, 600, 1.0, 5.0, seed);
        DecompositionOptions opt;
        opt.level_window = 61;
        auto d = decompose(p, opt);
        auto pools = select_pools(d, ClusterMethod::KMeans, true, seed);
        std::vector<std::string> expected;
        for (int i = 0; i < 15; ++i) expected.push_back("p" + std::to_string(i));
        EXPECT_EQ(pools.p1, expected) << "seed " << seed;
    }
}

TEST(SelectPools, NestedAndOrderedByMeanScore) {
    auto p = fixtures::stable_unstable_panel(12, 9, 500, 1.0, 3.0, 42, true);
    DecompositionOptions opt;
    opt.level_window = 51;
    auto d = decompose(p, opt);
    for (auto m : {ClusterMethod::KMeans, ClusterMethod::GaussianMixtureEM}) {
        auto pools = select_pools(d, m, true, 1);
        ASSERT_FALSE(pools.p2.empty());
        double all = 0, s1 = 0, s2 = 0;
        for (const auto& s : pools.scores.scores) {
            all += s.mse;
            if (pools.in_p1(s.process_id)) s1 += s.mse;
            if (pools.in_p2(s.process_id)) {
                EXPECT_TRUE(pools.in_p1(s.process_id));
                s2 += s.mse;
            }
        }
        all /= static_cast<double>(pools.scores.scores.size());
        s1 /= static_cast<double>(pools.p1.size());
        s2 /= static_cast<double>(pools.p2.size());
        EXPECT_LE(s2, s1);
        EXPECT_LE(s1, all);
        EXPECT_LT(pools.p2.size(), pools.p1.size());
    }
}

TEST(SelectPools, TwoTightPairsMatchOracle) {
    // Scores {0.1, 0.1, 10, 10}: rows with constant |eta| give plain MSE = eta^2.
    const double a = std::sqrt(0.1), b = std::sqrt(10.0);
    std::vector<double> ra(40, a), rb(40, b);
    auto d = panel_from_rows({ra, ra, rb, rb});
    auto pools = select_pools(d, ClusterMethod::KMeans, false);
    std::vector<double> scores;
    for (auto& s : pools.scores.scores) scores.push_back(s.mse);
    EXPECT_EQ(oracle::best_two_partition(scores), (std::vector<std::uint8_t>{1, 1, 0, 0}));
    EXPECT_EQ(pools.p1, (std::vector<std::string>{"s0", "s1"}));
    EXPECT_EQ(pools.p2, pools.p1);  // identical scores inside P1
    EXPECT_FALSE(pools.warnings.empty());
}

TEST(SelectPools, IdenticalRowsAllInBothPools) {
    std::vector<double> r(40, 0.5);
    auto d = panel_from_rows({r, r, r, r, r});
    auto pools = select_pools(d, ClusterMethod::KMeans, true);
    EXPECT_EQ(pools.p1.size(), 5u);
    EXPECT_EQ(pools.p2.size(), 5u);
    EXPECT_GE(pools.warnings.size(), 2u);
}

TEST(SelectPools, TooFewProcesses) {
    std::vector<double> r(40, 0.5);
    EXPECT_THROW(select_pools(panel_from_rows({r, r, r}), ClusterMethod::KMeans, true), ConfigError);
}

TEST(SelectPools, PoolReportCsv) {
    std::vector<double> ra(40, 0.1), rb(40, 3.0);
    auto d = panel_from_rows({ra, ra, ra, rb, rb});
    auto pools = select_pools(d, ClusterMethod::KMeans, false);
    std::ostringstream out;
    write_pool_report(out, pools);
    EXPECT_EQ(out.str().substr(0, 30), "process_id,score,in_p1,in_p2\ns");
    EXPECT_NE(out.str().find("s3,9,0,0"), std::string::npos) << out.str();
}

TEST(ShewhartFilter, RemovesCrossSectionalOutlier) {
    // med 0.05, IQR 1.35: band [-1.3, 1.4]
    auto d = panel_from_rows({{0.0}, {0.1}, {-0.1}, {5.0}});
    auto r = adaptive_shewhart_filter(d, d.ids, 1.0);
    EXPECT_TRUE(r.filtered.eta_hat.is_observed(0, 0));
    EXPECT_TRUE(r.filtered.eta_hat.is_observed(1, 0));
    EXPECT_TRUE(r.filtered.eta_hat.is_observed(2, 0));
    EXPECT_FALSE(r.filtered.eta_hat.is_observed(3, 0));
    EXPECT_EQ(r.removed, 1u);
    EXPECT_TRUE(d.eta_hat.is_observed(3, 0));  // input untouched
}

TEST(ShewhartFilter, EqualValuesNothingRemoved) {
    auto d = panel_from_rows({{0.3}, {0.3}, {0.3}, {0.3}, {0.3}});
    EXPECT_EQ(adaptive_shewhart_filter(d, d.ids, 1.0).removed, 0u);
}

TEST(ShewhartFilter, InfiniteMultipleIsIdentity) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd;
    std::vector<std::vector<double>> rows(6, std::vector<double>(30));
    for (auto& r : rows)
        for (auto& v : r) v = nd(rng);
    auto d = panel_from_rows(rows);
    auto r = adaptive_shewhart_filter(d, d.ids, std::numeric_limits<double>::infinity());
    EXPECT_EQ(r.removed, 0u);
    EXPECT_EQ(r.filtered.eta_hat.values, d.eta_hat.values);
}

TEST(ShewhartFilter, FewerThanFourPoolValuesSkipped) {
    auto d = panel_from_rows({{0.0}, {0.1}, {9.0}, {kMissing}});
    EXPECT_EQ(adaptive_shewhart_filter(d, d.ids, 0.1).removed, 0u);
}

TEST(ShewhartFilter, NeverRemovesMedianObservation) {
    std::mt19937_64 rng(17);
    std::cauchy_distribution<double> cd;
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<std::vector<double>> rows(5, std::vector<double>(1));
        for (auto& r : rows) r[0] = cd(rng);
        auto d = panel_from_rows(rows);
        auto r = adaptive_shewhart_filter(d, d.ids, 0.01);
        std::vector<double> col;
        for (auto& row : rows) col.push_back(row[0]);
        const double med = stats::median(col);
        for (std::size_t i = 0; i < 5; ++i)
            if (rows[i][0] == med) { EXPECT_TRUE(r.filtered.eta_hat.is_observed(i, 0)); }
    }
}

TEST(ShewhartFilter, OnlyPoolMembersFiltered) {
    auto d = panel_from_rows({{0.0}, {0.1}, {-0.1}, {0.05}, {50.0}});
    auto r = adaptive_shewhart_filter(d, {"s0", "s1", "s2", "s3"}, 1.0);
    EXPECT_TRUE(r.filtered.eta_hat.is_observed(4, 0));
}
