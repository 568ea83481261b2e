#include "oracles.hpp"
#include "prl/evi.hpp"
#include "prl/exact_solver.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

using namespace prl;

TEST(Radii, TransitionRadius) {
    // Uncapped value sqrt(140 ln(8000) / 10) = 11.21699 exceeds the L1 diameter.
    EXPECT_EQ(p_radius(10, 100, 2, 5, 2, 0.05), 2.0);
    const double big = 1e7;
    EXPECT_NEAR(p_radius(big, 100, 2, 5, 2, 0.05), 11.216985133683098 / std::sqrt(big / 10), 1e-12);
    EXPECT_NEAR(p_radius(2 * big, 100, 2, 5, 2, 0.05) * std::sqrt(2.0), p_radius(big, 100, 2, 5, 2, 0.05), 1e-12);
    EXPECT_LT(p_radius(1e15, 100, 2, 5, 2, 0.05), 1e-5);
}

TEST(Radii, RewardRadius) {
    EXPECT_NEAR(r_radius(10, 100, 2, 2, 0.05), 1.8406847640016124, 1e-12);
    EXPECT_LT(r_radius(1e15, 100, 2, 2, 0.05), 1e-6);
    EXPECT_GT(r_radius(10, 100, 2, 2, 0.01), r_radius(10, 100, 2, 2, 0.05));
}

TEST(InnerMax, ShiftsMassTowardBestState) {
    const std::vector<double> p{0.5, 0.5}, u{1.0, 0.0};
    const auto q = inner_max_p(p, 0.2, u);
    EXPECT_NEAR(q[0], 0.6, 1e-12);
    EXPECT_NEAR(q[1], 0.4, 1e-12);
    EXPECT_EQ(inner_max_p(p, 0.0, u), p);
    const auto full = inner_max_p(p, 2.0, u);
    EXPECT_EQ(full[0], 1.0);
    EXPECT_EQ(full[1], 0.0);
}

TEST(InnerMax, MatchesGridSearch) {
    std::mt19937_64 rng(77);
    constexpr int units = 200;  // coarse grid here; the acceptance suite uses 1e-3
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t S = 2 + trial % 3;
        const auto center = oracle::random_grid_distribution(S, units, rng);
        const int radius = 2 * static_cast<int>(rng() % (units + 1));  // even, so radius/2 stays on the grid
        std::vector<double> u(S), p(S);
        for (std::size_t s = 0; s < S; ++s) {
            u[s] = uniform01(rng);
            p[s] = center[s] / double(units);
        }
        const auto q = inner_max_p(p, radius / double(units), u);
        const double got = std::inner_product(q.begin(), q.end(), u.begin(), 0.0);
        EXPECT_NEAR(got, oracle::grid_search_inner_max(center, radius, u, units), 1e-9) << trial;
    }
}

TEST(InnerMax, StaysInBallAndNeverWorse) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t S = 1 + rng() % 6;
        std::vector<double> p(S), u(S);
        double sum = 0.0;
        for (auto& v : p) sum += (v = uniform01(rng));
        for (auto& v : p) v /= sum;
        for (auto& v : u) v = std::floor(uniform01(rng) * 4);  // ties on purpose
        const double radius = 2.0 * uniform01(rng);
        const auto q = inner_max_p(p, radius, u);
        double total = 0.0, l1 = 0.0, before = 0.0, after = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
            ASSERT_GE(q[s], 0.0);
            total += q[s];
            l1 += std::abs(q[s] - p[s]);
            before += p[s] * u[s];
            after += q[s] * u[s];
        }
        EXPECT_NEAR(total, 1.0, 1e-9);
        EXPECT_LE(l1, radius + 1e-9);
        EXPECT_GE(after, before - 1e-12);
    }
}

TEST(ModifiedEvi, PointSetOnForcedCycle) {
    PmdpSpec spec(1, 1, 2, RewardNoise::deterministic);
    spec.kernel(0, 0, 0)[0] = spec.kernel(1, 0, 0)[0] = 1.0;
    spec.reward(0, 0, 0) = 1.0;
    const auto res = modified_evi(point_confidence_set(AmdpModel(spec)), 0.99, 1e-8);
    EXPECT_NEAR(res.rho_tilde, 0.5, 1e-8);
    EXPECT_EQ(res.policy.actions, (std::vector<std::size_t>{0, 0}));
    EXPECT_LE(res.span, 1e-8);
}

TEST(ModifiedEvi, PointSetMatchesExactSolver) {
    const double eps = 1e-8;
    for (std::uint64_t seed = 10; seed < 15; ++seed) {
        const AmdpModel m(oracle::random_spec(2, 2, 3, seed));
        const auto evi = modified_evi(point_confidence_set(m), 0.99, eps);
        const double exact = optimal_gain(m, 0.99, eps).gain;
        EXPECT_NEAR(evi.rho_tilde, exact, 2 * eps);
        EXPECT_NEAR(policy_gain(m, evi.policy), exact, 2 * eps);
        for (double tau : {0.5, 0.9}) EXPECT_NEAR(modified_evi(point_confidence_set(m), tau, eps).rho_tilde, exact, 2 * eps);
    }
}

TEST(ModifiedEvi, OptimisticWhenTruthInside) {
    const AmdpModel m(cosine_benchmark(5));
    const double rho_star = optimal_gain(m).gain;
    auto conf = point_confidence_set(m);
    // Perturbed estimates with radii that still cover the truth.
    std::mt19937_64 rng(9);
    for (std::size_t x = 0; x < m.size(); ++x)
        for (std::size_t a = 0; a < 2; ++a) {
            auto row = conf.p_row(x, a);
            const double shift = 0.05 * uniform01(rng) * std::min(row[0], row[1]);
            row[0] -= shift;
            row[1] += shift;
            conf.p_radius[conf.pair(x, a)] = 2 * shift + 0.01;
            conf.r_hat[conf.pair(x, a)] = clamp_unit(conf.r_hat[conf.pair(x, a)] + 0.02);
            conf.r_radius[conf.pair(x, a)] = 0.03;
        }
    ASSERT_TRUE(conf.contains(m));
    const double eps = 1e-3;
    EXPECT_GE(modified_evi(conf, 0.99, eps).rho_tilde, rho_star - eps);
}

TEST(ModifiedEvi, EnlargingRadiiNeverDecreasesGain) {
    const double eps = 1e-6;
    for (std::uint64_t seed = 20; seed < 25; ++seed) {
        const AmdpModel m(oracle::random_spec(3, 2, 3, seed));
        auto conf = point_confidence_set(m);
        double prev = modified_evi(conf, 0.99, eps).rho_tilde;
        for (double scale : {0.05, 0.2, 0.5, 1.0}) {
            for (std::size_t k = 0; k < conf.p_radius.size(); ++k) {
                conf.p_radius[k] = std::min(2.0, scale * 2.0);
                conf.r_radius[k] = scale * 0.3;
            }
            const double cur = modified_evi(conf, 0.99, eps).rho_tilde;
            EXPECT_GE(cur, prev - eps) << seed << " " << scale;
            prev = cur;
        }
    }
}

TEST(ModifiedEvi, IterationCap) {
    const AmdpModel m(cosine_benchmark(5));
    EXPECT_THROW(modified_evi(point_confidence_set(m), 0.99, 1e-12, 2), ConvergenceError);
}

TEST(ConfidenceSet, ContainsDetectsExclusion) {
    const AmdpModel m(oracle::random_spec(2, 2, 3, 4));
    auto conf = point_confidence_set(m);
    EXPECT_TRUE(conf.contains(m));
    conf.r_hat[3] += 0.1;
    EXPECT_FALSE(conf.contains(m));
    conf.r_radius[3] = 0.1 + 1e-9;
    EXPECT_TRUE(conf.contains(m));
}
