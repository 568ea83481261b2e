#include "oracles.hpp"
#include "prl/environment.hpp"
#include "prl/pmdp.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace prl;

namespace {

PmdpSpec single_state(std::vector<double> rewards) {
    PmdpSpec spec(1, 1, rewards.size(), RewardNoise::deterministic);
    for (std::size_t n = 0; n < rewards.size(); ++n) {
        spec.kernel(n, 0, 0)[0] = 1.0;
        spec.reward(n, 0, 0) = rewards[n];
    }
    return spec;
}

}  // namespace

TEST(Augment, CopiesKernelRowIntoNextPeriodBlock) {
    const auto spec = oracle::random_spec(2, 2, 3, 7);
    const auto model = augment(spec);
    for (std::size_t s = 0; s < 2; ++s)
        for (std::size_t a = 0; a < 2; ++a)
            for (std::size_t s2 = 0; s2 < 2; ++s2)
                EXPECT_EQ(model.transition({s, 1}, a, {s2, 2}), spec.kernel(0, s, a)[s2]);
}

TEST(Augment, NoMassOutsideSuccessorPeriod) {
    const auto model = augment(oracle::random_spec(2, 2, 3, 11));
    for (std::size_t s = 0; s < 2; ++s)
        for (std::size_t n = 1; n <= 3; ++n)
            for (std::size_t a = 0; a < 2; ++a)
                for (std::size_t s2 = 0; s2 < 2; ++s2)
                    for (std::size_t n2 = 1; n2 <= 3; ++n2) {
                        if (n2 == next_period_index(n, 3)) continue;
                        EXPECT_EQ(model.transition({s, n}, a, {s2, n2}), 0.0);
                    }
    EXPECT_EQ(model.transition({0, 2}, 0, {0, 1}), 0.0);
}

TEST(Augment, WrapsFromLastPeriodToFirst) {
    const auto spec = oracle::random_spec(3, 2, 4, 3);
    const auto model = augment(spec);
    for (std::size_t s = 0; s < 3; ++s) {
        const auto row = model.transition_row({s, 4}, 1);
        double first_block = 0.0;
        for (std::size_t s2 = 0; s2 < 3; ++s2) first_block += row[model.index({s2, 1})];
        EXPECT_NEAR(first_block, 1.0, 1e-12);
        EXPECT_EQ(model.reward({s, 4}, 1), spec.reward(3, s, 1));
    }
}

TEST(Augment, RejectsBadRowNamingIndex) {
    auto spec = oracle::random_spec(2, 2, 3, 5);
    spec.kernel(1, 0, 1)[0] += 0.1;
    try {
        augment(spec);
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.path(), "kernels[1][0][1]");
    }
    spec = oracle::random_spec(2, 2, 3, 5);
    spec.reward(2, 1, 0) = 1.5;
    EXPECT_THROW(augment(spec), ValidationError);
    spec = oracle::random_spec(2, 2, 3, 5);
    spec.kernel(0, 0, 0)[0] = -0.1;
    spec.kernel(0, 0, 0)[1] = 1.1;
    EXPECT_THROW(augment(spec), ValidationError);
    EXPECT_THROW(augment(single_state({0.5})), ValidationError);  // N = 1
}

TEST(Environment, PointMassKernelIsDeterministic) {
    PmdpSpec spec(2, 1, 2, RewardNoise::deterministic);
    for (std::size_t n = 0; n < 2; ++n)
        for (std::size_t s = 0; s < 2; ++s) {
            spec.kernel(n, s, 0)[0] = 1.0;
            spec.reward(n, s, 0) = 0.37;
        }
    Environment env(spec, 99, 1);
    for (int i = 0; i < 100; ++i) {
        const auto tr = env.step(0);
        EXPECT_EQ(tr.next.state, 0u);
        EXPECT_EQ(tr.reward, 0.37);
    }
}

TEST(Environment, BernoulliRewardMean) {
    auto spec = single_state({0.5, 0.5});
    spec.reward_noise = RewardNoise::bernoulli;
    Environment env(spec, 2024, 0);
    double total = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double r = env.step(0).reward;
        ASSERT_TRUE(r == 0.0 || r == 1.0);
        total += r;
    }
    EXPECT_NEAR(total / 100000.0, 0.5, 0.01);
}

TEST(Environment, PeriodIndexTracksTime) {
    const auto spec = oracle::random_spec(3, 2, 4, 1, RewardNoise::bernoulli);
    Environment env(spec, 5);
    std::mt19937_64 policy_rng(8);
    for (int i = 0; i < 200; ++i) {
        EXPECT_EQ(env.state().period_index, static_cast<std::size_t>((env.time() - 1) % 4 + 1));
        env.step(policy_rng() % 2);
    }
    EXPECT_THROW(env.step(2), ValidationError);
}

TEST(Environment, AugmentedSimulationMatchesPeriodicSimulation) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto spec = oracle::random_spec(3, 2, 5, seed, RewardNoise::bernoulli);
        const auto model = augment(spec);
        Environment pmdp(spec, seed * 17, 2);
        AmdpEnvironment amdp(model, seed * 17, 2);
        std::mt19937_64 policy_rng(seed);
        for (int t = 0; t < 2000; ++t) {
            const std::size_t a = policy_rng() % 2;
            const auto x = pmdp.step(a);
            const auto y = amdp.step(a);
            ASSERT_EQ(x.next, y.next);
            ASSERT_EQ(x.reward, y.reward);
        }
    }
}

TEST(CosineBenchmark, RewardsAndSwitchingProbability) {
    const auto spec = cosine_benchmark(5, 0.4, RewardNoise::deterministic);
    EXPECT_NEAR(spec.reward(4, 0, 0), 0.5, 1e-15);  // 0.2 + 0.3 cos(2 pi)
    EXPECT_EQ(spec.reward(4, 1, 1), 0.0);           // 0.2 - 0.3 = -0.1, clamped
    EXPECT_EQ(spec.reward(4, 0, 1), 1.0);           // 1.2, clamped
    EXPECT_NEAR(spec.kernel(4, 0, 1)[1], 0.5, 1e-12);  // beta = 0.5 + 0.3 sin(2 pi)
    EXPECT_EQ(spec.kernel(2, 0, 0)[0], 1.0);
    EXPECT_EQ(spec.kernel(2, 1, 0)[1], 1.0);
    const double beta1 = 0.5 + 0.3 * std::sin(2.0 * std::numbers::pi / 5.0);
    EXPECT_NEAR(spec.kernel(0, 0, 1)[1], beta1, 1e-15);
    EXPECT_NEAR(spec.kernel(0, 1, 1)[0], beta1, 1e-15);
}

TEST(CosineBenchmark, ValidForAllPeriodsUpTo50) {
    for (std::size_t N = 2; N <= 50; ++N) EXPECT_NO_THROW(cosine_benchmark(N).validate()) << N;
    EXPECT_THROW(cosine_benchmark(1), ValidationError);
    EXPECT_THROW(cosine_benchmark(5, std::nan("")), ValidationError);
}
