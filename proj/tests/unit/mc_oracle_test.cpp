#include <gtest/gtest.h>

#include <cmath>

#include "socialdata/mc_oracle.hpp"

using namespace socialdata;

TEST(Random, SplitMixReferenceValues) {
    // First outputs for seed 0 of the reference SplitMix64.
    SplitMix64 s(0);
    EXPECT_EQ(s.next(), 0xe220a8397b1dcdafULL);
    EXPECT_EQ(s.next(), 0x6e789e6aa1b965f4ULL);
}

TEST(Random, NormalMoments) {
    SplitMix64 seeder(7);
    Xoshiro256 rng(seeder);
    double s1 = 0, s2 = 0, s4 = 0;
    const int n = 400000;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        s1 += z;
        s2 += z * z;
        s4 += z * z * z * z;
    }
    EXPECT_NEAR(s1 / n, 0.0, 0.01);
    EXPECT_NEAR(s2 / n, 1.0, 0.01);
    EXPECT_NEAR(s4 / n, 3.0, 0.05);
}

TEST(Moments, MergeMatchesSequential) {
    detail::Moments all, a, b;
    for (int i = 0; i < 1000; ++i) {
        const double x = std::sin(i) * 5 + 1;
        all.add(x);
        (i < 377 ? a : b).add(x);
    }
    a.merge(b);
    EXPECT_NEAR(a.mean, all.mean, 1e-13);
    EXPECT_NEAR(a.variance(), all.variance(), 1e-12);
}

TEST(Simulate, RejectsTooFewDraws) {
    EXPECT_THROW(simulate({2, 1, 0, 1}, PolicySpec::complete(), 0, 1), ValidationError);
    EXPECT_THROW(simulate({2, 1, 0, 1}, PolicySpec::complete(), 999, 1), ValidationError);
}

TEST(Simulate, SameSeedIsBitIdentical) {
    const DataEnvironment e{3, 0.5, 0.5, 1.0};
    const auto a = simulate(e, PolicySpec::noised(1.0, 0.5), 20000, 99);
    const auto b = simulate(e, PolicySpec::noised(1.0, 0.5), 20000, 99);
    EXPECT_EQ(a, b);
    const auto c = simulate(e, PolicySpec::noised(1.0, 0.5), 20000, 100);
    EXPECT_NE(a.estimates.at("delta_pi").mean, c.estimates.at("delta_pi").mean);
    EXPECT_EQ(a.shards, kShards);
    EXPECT_EQ(a.seed, 99u);
}

TEST(Simulate, CommonPreferencesAgreeWithClosedForms) {
    const auto r = simulate({2, 1.0, 0.0, 1.0, 10.0, 0.0}, PolicySpec::complete(), 200000, 5);
    EXPECT_LE(std::abs(r.comparisons.at("delta_pi").z), 4.0);
    EXPECT_NEAR(r.comparisons.at("delta_pi").analytic, 1.0 / 6, 1e-15);
    EXPECT_LE(r.max_abs_z(), 4.5);
    for (const auto& [k, e] : r.estimates) EXPECT_GT(e.se, 0.0) << k;
}

TEST(Simulate, AllPoliciesAgreeWithClosedForms) {
    const DataEnvironment e{3, 0.4, 0.3, 1.0, 10.0, 1.0};
    for (auto p : {PolicySpec::none(), PolicySpec::complete(), PolicySpec::anonymized(),
                   PolicySpec::noised(0.8, 0.4)}) {
        const auto r = simulate(e, p, 100000, 11);
        EXPECT_LE(r.max_abs_z(), 4.5) << to_string(p.kind);
    }
}

TEST(Simulate, OffPathPricesCoincideAcrossCollectionPolicies) {
    const auto r = simulate({4, 0.5, 0.5, 1.0}, PolicySpec::anonymized(), 20000, 3);
    const auto& m = r.estimates.at("offpath_price_mean_gap");
    EXPECT_NEAR(m.mean, 0.0, 1e-9);
    EXPECT_LE(std::abs(r.comparisons.at("offpath_price_var_gap").z), 4.0);
}

TEST(ProjectionCheck, SingleSignal) {
    const auto o = build_observation({1, 0, 0, 1.0}, PolicySpec::complete(), Scope::Full);
    const auto c = projection_check(o, 200000, 1);
    EXPECT_DOUBLE_EQ(c.analytic, 0.5);
    EXPECT_LE(std::abs(c.z), 4.0);
    EXPECT_NEAR(c.empirical, 0.5, 0.01);
}

TEST(ProjectionCheck, SumStatistic) {
    const auto o = build_observation({2, 0.5, 0.0, 1.0}, PolicySpec::anonymized(), Scope::Full);
    const auto c = projection_check(o, 200000, 2);
    EXPECT_NEAR(c.analytic, 0.45, 1e-15);
    EXPECT_LE(std::abs(c.z), 4.0);
}

TEST(ProjectionCheck, ZeroVarianceTarget) {
    ObservationModel o;
    o.target_var = 0.0;
    o.cross = {0.0};
    o.cov = Matrix::square(1, 2.0);
    const auto c = projection_check(o, 1000, 1);
    EXPECT_EQ(c.empirical, 0.0);
    EXPECT_EQ(c.analytic, 0.0);
    EXPECT_EQ(c.z, 0.0);
}

TEST(ProjectionCheck, RankDeficientDesign) {
    const auto o = build_observation({4, 1.0, 0.0, 0.0}, PolicySpec::complete(), Scope::Full);
    const auto c = projection_check(o, 5000, 4);
    EXPECT_NEAR(c.analytic, 1.0, 1e-15);
    EXPECT_NEAR(c.empirical, 1.0, 0.1);
}

TEST(ProjectionCheck, RejectsTooFewDraws) {
    const auto o = build_observation({1, 0, 0, 1.0}, PolicySpec::complete(), Scope::Full);
    EXPECT_THROW(projection_check(o, 10, 1), ValidationError);
}
