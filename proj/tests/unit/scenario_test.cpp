#include <gtest/gtest.h>

#include "socialdata/scenario.hpp"

using namespace socialdata;

TEST(ParseScenario, ReadsAllBlocks) {
    const auto sc = parse_scenario(
        "# two consumers\n"
        "n_consumers = 2\n"
        "alpha = 0.5   # correlation\n"
        "beta = 0\n"
        "sigma = 1\n"
        "mu = 10\n"
        "cost = 0.5\n"
        "policy = noised\n"
        "common_noise_var = 3.598\n"
        "draws = 100000\n"
        "seed = 18446744073709551615\n"
        "n_list = 1, 10, 100\n"
        "alpha_grid = 0.1,0.2\n");
    EXPECT_EQ(sc.env, (DataEnvironment{2, 0.5, 0.0, 1.0, 10.0, 0.5}));
    EXPECT_EQ(sc.policy, PolicySpec::noised(3.598, 0.0));
    EXPECT_EQ(*sc.run.draws, 100000u);
    EXPECT_EQ(*sc.run.seed, 18446744073709551615ULL);
    EXPECT_EQ(sc.run.n_list, (std::vector<std::size_t>{1, 10, 100}));
    EXPECT_EQ(sc.run.alpha_grid, (std::vector<double>{0.1, 0.2}));
}

TEST(ParseScenario, DefaultsForMarketShift) {
    const auto sc = parse_scenario("n_consumers=3\nalpha=1\nbeta=0\nsigma=1\npolicy=complete\n");
    EXPECT_EQ(sc.env.mu, 10.0);
    EXPECT_EQ(sc.env.cost, 0.0);
    EXPECT_FALSE(sc.run.draws);
}

TEST(ParseScenario, GroupedPolicy) {
    const auto sc = parse_scenario(
        "policy = grouped\ngroup_sizes = 3,4\ngroup_common_var = 0.5,0.25\n"
        "group_idio_var = 0.5,0.75\ngroup_noise = 1,2\n");
    ASSERT_TRUE(sc.policy.groups);
    EXPECT_EQ(sc.policy.groups->group_sizes, (std::vector<std::size_t>{3, 4}));
    EXPECT_EQ(sc.policy.groups->noise_scale, (std::vector<double>{1.0, 2.0}));
}

namespace {

std::string error_field(const std::string& text) {
    try {
        parse_scenario(text);
    } catch (const ValidationError& e) {
        return e.field();
    }
    return "";
}

const char* kBase = "n_consumers = 2\nalpha = 0.5\nbeta = 0\nsigma = 1\n";

}  // namespace

TEST(ParseScenario, Errors) {
    EXPECT_EQ(error_field(std::string(kBase) + "policy = complete\ncolour = red\n"), "colour");
    EXPECT_EQ(error_field(std::string(kBase) + "policy = complete\nalpha = 0.2\n"), "alpha");
    EXPECT_EQ(error_field(std::string(kBase)), "policy");
    EXPECT_EQ(error_field(std::string(kBase) + "policy = identity\n"), "policy");
    EXPECT_EQ(error_field("alpha = 0.5\nbeta = 0\nsigma = 1\npolicy = complete\n"), "n_consumers");
    EXPECT_EQ(error_field("n_consumers = 2\nalpha = 2\nbeta = 0\nsigma = 1\npolicy = complete\n"),
              "alpha");
    EXPECT_EQ(error_field("n_consumers = 2\nalpha = 0,5\nbeta = 0\nsigma = 1\npolicy = complete\n"),
              "alpha");
    EXPECT_EQ(error_field("n_consumers = -2\nalpha = 0.5\nbeta = 0\nsigma = 1\npolicy = complete\n"),
              "n_consumers");
    EXPECT_EQ(error_field(std::string(kBase) + "policy = complete\ncommon_noise_var = 1\n"),
              "common_noise_var");
    EXPECT_EQ(error_field(std::string(kBase) + "policy = complete\ngroup_sizes = 1\n"),
              "group_sizes");
    EXPECT_EQ(error_field(std::string(kBase) + "policy = complete\nseed = abc\n"), "seed");
    EXPECT_EQ(error_field(std::string(kBase) + "policy complete\n"), "line 5");
    EXPECT_EQ(error_field("policy = grouped\ngroup_sizes = 3\n"), "group_common_var");
}

TEST(ScenarioRoundTrip, SerializeThenParseIsExact) {
    std::vector<PolicySpec> policies = {PolicySpec::none(), PolicySpec::complete(),
                                        PolicySpec::anonymized(), PolicySpec::noised(1.0 / 3, 0.1)};
    for (double a : {0.0, 0.1, 1.0 / 3, 0.75, 1.0})
        for (double b : {0.0, 0.2, 1.0})
            for (double s : {0.0, 0.1, 2.0 / 3})
                for (std::size_t n : {1u, 7u, 1000000u})
                    for (const auto& p : policies) {
                        Scenario sc;
                        sc.env = {n, a, b, s, 10.0 / 7, 0.3};
                        sc.policy = p;
                        sc.run.draws = 12345;
                        sc.run.seed = 0xdeadbeefcafebabeULL;
                        sc.run.n_list = {1, 2, 3};
                        sc.run.alpha_grid = {0.1, 1e-7};
                        validate(sc.env);
                        EXPECT_EQ(parse_scenario(serialize_scenario(sc)), sc);
                    }
    Scenario g;
    g.policy = PolicySpec::grouped(GroupedEnvironment{{2, 5}, {0.1, 0.7}, {0.9, 1.0 / 3}, {1, 0}});
    EXPECT_EQ(parse_scenario(serialize_scenario(g)), g);
}
