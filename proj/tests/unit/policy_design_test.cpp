#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "socialdata/policy_design.hpp"

using namespace socialdata;

namespace {

double engine_revenue(const DataEnvironment& e, double cn, double in) {
    return equilibrium_outcome(e, PolicySpec::noised(cn, in)).revenue;
}

// Pooled and grouped revenue from component loadings. Consumers are indexed
// group by group; groups use disjoint components.
struct GroupOracle {
    const GroupedEnvironment& g;
    std::size_t total;
    Eigen::Index dim;

    explicit GroupOracle(const GroupedEnvironment& ge)
        : g(ge), total(ge.total_consumers()),
          dim(static_cast<Eigen::Index>(ge.groups() + 2 * ge.total_consumers())) {}

    std::size_t offset(std::size_t j) const {
        std::size_t o = 0;
        for (std::size_t k = 0; k < j; ++k) o += g.group_sizes[k];
        return o;
    }
    Eigen::VectorXd w(std::size_t j, std::size_t i) const {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
        v(static_cast<Eigen::Index>(j)) = std::sqrt(g.common_var[j]);
        v(static_cast<Eigen::Index>(g.groups() + offset(j) + i)) = std::sqrt(g.idio_var[j]);
        return v;
    }
    Eigen::VectorXd s(std::size_t j, std::size_t i) const {
        Eigen::VectorXd v = w(j, i);
        v(static_cast<Eigen::Index>(g.groups() + total + offset(j) + i)) = g.noise_scale[j];
        return v;
    }
    Eigen::VectorXd group_sum(std::size_t j, bool skip_first) const {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
        for (std::size_t i = skip_first ? 1 : 0; i < g.group_sizes[j]; ++i) v += s(j, i);
        return v;
    }

    double grouped() const {
        double r = 0.0;
        for (std::size_t j = 0; j < g.groups(); ++j) {
            std::vector<Eigen::VectorXd> full, loo;
            for (std::size_t k = 0; k < g.groups(); ++k) {
                full.push_back(group_sum(k, false));
                loo.push_back(group_sum(k, k == j));
            }
            const double n = static_cast<double>(g.group_sizes[j]);
            r += n * (3 * oracle::gain(w(j, 0), loo) - oracle::gain(w(j, 0), full)) / 8;
        }
        return r;
    }

    double pooled() const {
        Eigen::VectorXd t = Eigen::VectorXd::Zero(dim), avg = Eigen::VectorXd::Zero(dim);
        for (std::size_t j = 0; j < g.groups(); ++j) {
            t += group_sum(j, false);
            for (std::size_t i = 0; i < g.group_sizes[j]; ++i) avg += w(j, i) / static_cast<double>(total);
        }
        const double g_uniform = oracle::gain(avg, {t});
        double r = 0.0;
        for (std::size_t j = 0; j < g.groups(); ++j) {
            const double n = static_cast<double>(g.group_sizes[j]);
            r += n * (3 * oracle::gain(w(j, 0), {t - s(j, 0)}) - g_uniform) / 8;
        }
        return r;
    }
};

}  // namespace

TEST(NoisedRevenue, Examples) {
    EXPECT_NEAR(noised_revenue(0.5, 0.5, 0.0, 1.0, 2), -0.01875, 1e-15);
    const auto st = oracle::noise_stationary(0.5, 0.0, 1.0, 2);
    EXPECT_NEAR(st.x, 3.598, 1e-3);
    EXPECT_NEAR(noised_revenue(0.5, 0.5, st.x, 1.0, 2), 0.00449, 1e-5);
    for (double se : {0.0, 1.0, 100.0})
        for (std::size_t n : {1u, 2u, 10u}) EXPECT_LE(noised_revenue(0.0, 1.0, se, 1.0, n), 0.0);
}

TEST(NoisedRevenue, RejectsDegenerateInput) {
    EXPECT_THROW(noised_revenue(0, 0, 0, 0, 3), ValidationError);
    EXPECT_THROW(noised_revenue(0.5, 0.5, 0, 1, 0), ValidationError);
    EXPECT_THROW(noised_revenue(-0.5, 0.5, 0, 1, 2), ValidationError);
}

TEST(NoisedRevenue, MatchesGenericEngine) {
    for (double a : {0.0, 0.25, 0.5, 0.75, 1.0})
        for (double b : {0.0, 0.5, 1.0})
            for (double s : {0.0, 0.5, 1.0, 2.0})
                for (std::size_t n : {1u, 2u, 3u, 5u, 10u, 100u})
                    for (double cn : {0.0, 0.3, 5.0})
                        for (double in : {0.0, 0.7}) {
                            const DataEnvironment e{n, a, b, s};
                            const double closed = noised_revenue(
                                a, 1 - a, s * s * b + cn, s * s * (1 - b) + in, n);
                            const double generic = engine_revenue(e, cn, in);
                            EXPECT_NEAR(closed, generic, std::max(1e-9 * std::abs(generic), 1e-14));
                        }
}

TEST(OptimizeNoise, InteriorOptimumAtHalfCorrelation) {
    const auto o = optimize_noise({2, 0.5, 0.0, 1.0});
    const auto st = oracle::noise_stationary(0.5, 0.0, 1.0, 2);
    EXPECT_NEAR(o.common_noise_var, st.x, 1e-4);
    EXPECT_NEAR(o.revenue, st.revenue, 1e-12);
    EXPECT_NEAR(o.common_noise_var, 3.598, 0.01);
    EXPECT_NEAR(o.revenue, 0.00449, 1e-4);
    EXPECT_EQ(o.idio_noise_var, 0.0);
    EXPECT_EQ(o.boundary, NoiseBoundary::Interior);
}

TEST(OptimizeNoise, NoNoiseWhenPreferencesAreCommon) {
    const auto o = optimize_noise({2, 1.0, 0.0, 1.0});
    EXPECT_EQ(o.common_noise_var, 0.0);
    EXPECT_NEAR(o.revenue, 5.0 / 24, 1e-15);
    EXPECT_EQ(o.boundary, NoiseBoundary::AtZero);
}

TEST(OptimizeNoise, BelowThresholdIsUnprofitable) {
    const auto o = optimize_noise({2, 0.2, 0.0, 1.0});
    EXPECT_LE(o.revenue, 0.0);
    EXPECT_TRUE(o.boundary == NoiseBoundary::AtUpperLimit || o.revenue > -1e-6);
}

TEST(OptimizeNoise, NeverWorseThanNoNoise) {
    for (double a : {0.1, 0.4, 0.6, 0.9})
        for (double b : {0.0, 0.5})
            for (double s : {0.5, 1.0, 2.0})
                for (std::size_t n : {2u, 3u, 8u}) {
                    const auto o = optimize_noise({n, a, b, s});
                    EXPECT_GE(o.revenue, o.revenue_at_zero);
                }
}

TEST(OptimizeNoise, MatchesStationaryPointOracle) {
    for (double a : {0.45, 0.5, 0.6, 0.7})
        for (std::size_t n : {2u, 3u}) {
            const auto st = oracle::noise_stationary(a, 0.0, 1.0, n);
            if (!(st.x > 0.0)) continue;
            const auto o = optimize_noise({n, a, 0.0, 1.0});
            EXPECT_NEAR(o.common_noise_var, st.x, 1e-4 * std::max(1.0, st.x));
            EXPECT_NEAR(o.revenue, st.revenue, 1e-12);
        }
}

TEST(OptimizeNoise, IdiosyncraticNoiseNeverHelps) {
    int points = 0;
    for (double a : {0.3, 0.5, 0.7, 0.9, 1.0})
        for (double b : {0.0, 0.5})
            for (double s : {0.5, 1.0})
                for (std::size_t n : {2u, 3u, 5u, 10u, 50u}) {
                    if (++points > 50) break;
                    const DataEnvironment e{n, a, b, s};
                    const auto o = optimize_noise(e);
                    const double r0 = noised_revenue(a, 1 - a, s * s * b + o.common_noise_var,
                                                     s * s * (1 - b), n);
                    const double r1 = noised_revenue(a, 1 - a, s * s * b + o.common_noise_var,
                                                     s * s * (1 - b) + 1e-4, n);
                    EXPECT_LE(r1, r0 + 1e-15);
                    EXPECT_EQ(o.idio_noise_var, 0.0);
                }
    EXPECT_GE(points, 50);
}

TEST(ProfitabilityThreshold, Examples) {
    EXPECT_NEAR(profitability_threshold(2), (2 * std::sqrt(3.0) + 1) / 11, 1e-15);
    EXPECT_NEAR(profitability_threshold(2), 0.405827, 1e-6);
    EXPECT_THROW(profitability_threshold(0), ValidationError);
}

TEST(ProfitabilityThreshold, DecreasesToZero) {
    double last = 1.0;
    for (std::size_t n = 1; n <= 1000; ++n) {
        const double t = profitability_threshold(n);
        EXPECT_LT(t, last);
        last = t;
    }
    EXPECT_LT(profitability_threshold(1'000'000), 2e-6);
}

TEST(ProfitabilityThreshold, RationalizedFormAgrees) {
    for (std::size_t n = 1; n <= 1'000'000; n += (n < 1000 ? 1 : 997)) {
        const double nn = static_cast<double>(n);
        EXPECT_NEAR(profitability_threshold(n), 1.0 / (nn * (std::sqrt(3.0) - 1) + 1), 1e-12);
    }
}

TEST(ProfitabilityThreshold, MatchesOptimizerSignFlip) {
    for (std::size_t n : {2u, 3u, 5u, 10u}) {
        double lo = 0.0, hi = 1.0;
        while (hi - lo > 1e-6) {
            const double mid = 0.5 * (lo + hi);
            (optimize_noise({n, mid, 0.0, 1.0}).revenue > 0.0 ? hi : lo) = mid;
        }
        EXPECT_NEAR(0.5 * (lo + hi), profitability_threshold(n), 1e-4) << "N = " << n;
    }
}

TEST(OptimalNoise, DivergesAtThreshold) {
    const double t = profitability_threshold(2);
    double last = INFINITY;
    for (double a = t + 0.005; a <= 1.0; a += 0.01) {
        const double x = optimize_noise({2, a, 0.0, 1.0}).common_noise_var;
        EXPECT_LE(x, last);
        last = x;
    }
    EXPECT_GT(optimize_noise({2, t + 1e-4, 0.0, 1.0}).common_noise_var, 1e3);
}

TEST(Segmentation, SingleGroupIsNeutral) {
    GroupedEnvironment g{{5}, {0.4}, {0.6}, {1.0}};
    const auto r = segmentation_compare(g);
    EXPECT_NEAR(r.revenue_grouped, r.revenue_pooled, 1e-15);
}

TEST(Segmentation, MatchesLoadingOracle) {
    const GroupedEnvironment cases[] = {
        GroupedEnvironment::symmetric(2, 1, 0.5, 0.5, 1.0),
        GroupedEnvironment::symmetric(2, 4, 0.5, 0.5, 1.0),
        GroupedEnvironment::symmetric(3, 2, 0.2, 0.8, 0.5),
        GroupedEnvironment{{2, 3}, {0.5, 0.25}, {0.5, 0.75}, {1.0, 2.0}},
    };
    for (const auto& g : cases) {
        const GroupOracle o(g);
        const auto r = segmentation_compare(g);
        EXPECT_NEAR(r.revenue_grouped, o.grouped(), 1e-12);
        EXPECT_NEAR(r.revenue_pooled, o.pooled(), 1e-12);
    }
}

TEST(Segmentation, PoolingWinsInTinyGroups) {
    const auto r = segmentation_compare(GroupedEnvironment::symmetric(2, 1, 0.5, 0.5, 1.0));
    EXPECT_NEAR(r.revenue_pooled, -0.0625, 1e-15);
    EXPECT_NEAR(r.revenue_grouped, -0.125, 1e-15);
    EXPECT_EQ(r.recommended, Segmentation::Pooled);
}

TEST(Segmentation, GroupingWinsInLargeGroups) {
    const auto shape = GroupedEnvironment::symmetric(2, 1, 0.5, 0.5, 1.0);
    const auto r = segmentation_compare(shape, 1000);
    ASSERT_TRUE(r.crossover_n.has_value());
    for (std::size_t n = *r.crossover_n; n <= 1000; ++n) {
        const auto c = segmentation_compare(GroupedEnvironment::symmetric(2, n, 0.5, 0.5, 1.0));
        EXPECT_GT(c.revenue_grouped, c.revenue_pooled);
        EXPECT_EQ(c.recommended, Segmentation::Grouped);
    }
    const auto before =
        segmentation_compare(GroupedEnvironment::symmetric(2, *r.crossover_n - 1, 0.5, 0.5, 1.0));
    EXPECT_EQ(before.recommended, Segmentation::Pooled);
}

TEST(Recommender, WelfareAtFullHorizontalRevelation) {
    const RecommenderEnvironment r{10.0, 0.5, 0.5, 0.5, 0.5, 0.0};
    const auto o = recommender_policy(r, 0.0, 1.0);
    EXPECT_NEAR(o.delta_w, 6.125, 1e-12);
    EXPECT_NEAR(o.delta_pi, 5.0 - 0.25, 1e-12);
    EXPECT_NEAR(o.delta_u, 2.5 - 1.125, 1e-12);
    EXPECT_TRUE(o.valid);
    EXPECT_TRUE(o.aggregate_vertical);
    EXPECT_TRUE(o.reveal_horizontal);
}

TEST(Recommender, InvalidWhenHorizontalDispersionIsLarge) {
    const RecommenderEnvironment r{10.0, 0.5, 0.5, 2.0, 1.0, 0.0};
    const auto o = recommender_policy(r, 0.0, 1.0);
    EXPECT_FALSE(o.valid);
    EXPECT_FALSE(o.aggregate_vertical);
    EXPECT_FALSE(o.reveal_horizontal);
}

TEST(Recommender, RejectsOutOfRangeVariances) {
    const RecommenderEnvironment r{10.0, 0.5, 0.5, 0.5, 0.5, 0.0};
    EXPECT_THROW(recommender_policy(r, 1.5, 0.0), ValidationError);
    EXPECT_THROW(recommender_policy(r, 0.0, 1.5), ValidationError);
    EXPECT_THROW(recommender_policy(r, -0.1, 0.0), ValidationError);
}

TEST(Recommender, WelfareMonotoneWhenValid) {
    const RecommenderEnvironment r{10.0, 0.5, 0.5, 0.5, 0.5, 0.0};
    const double h = 1e-6;
    for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 20; ++j) {
            const double vw = i / 20.0, vl = j / 20.0;
            const double w0 = recommender_policy(r, vw, vl).delta_w;
            EXPECT_GT(recommender_policy(r, vw, vl + h).delta_w, w0);
            EXPECT_LT(recommender_policy(r, vw + h, vl).delta_w, w0);
        }
}
