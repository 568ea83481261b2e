#include "oracles.hpp"
#include "prl/harness.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace prl;

namespace {

ExperimentConfig small_config(std::int64_t T, std::size_t runs) {
    ExperimentConfig cfg;
    cfg.spec = cosine_benchmark(5);
    cfg.environment = {{"bench", {{"name", "cosine"}, {"N", 5}}}};
    cfg.horizon = T;
    cfg.runs = runs;
    cfg.base_seed = 11;
    return cfg;
}

}  // namespace

TEST(PseudoRegret, OptimalAgentHasNoRegret) {
    const std::vector<double> means(100, 0.7);
    for (double r : pseudo_regret(means, 0.7)) EXPECT_EQ(r, 0.0);
}

TEST(PseudoRegret, ConstantGapOnPeriodicSchedule) {
    // Single state, two actions: a0 earns (0.9, 0.1), a1 earns (0.4, 0.4).
    // rho* = 0.5 and always-a1 has gap 0.1, so regret(t) = 0.1 t +- 0.4.
    std::vector<double> means;
    for (int t = 0; t < 1000; ++t) means.push_back(0.4);
    const auto curve = pseudo_regret(means, 0.5);
    for (std::size_t t = 1; t <= curve.size(); ++t) EXPECT_NEAR(curve[t - 1], 0.1 * t, 0.4 + 1e-9);

    // Optimal behaviour (alternating 0.9, 0.1) oscillates within N * max-gap.
    std::vector<double> opt;
    for (int t = 0; t < 1000; ++t) opt.push_back(t % 2 == 0 ? 0.9 : 0.1);
    const auto osc = pseudo_regret(opt, 0.5);
    for (std::size_t t = 1; t < osc.size(); ++t) EXPECT_GE(osc[t] - osc[t - 1], -2 * 0.4 - 1e-12);
    EXPECT_NEAR(osc.back(), 0.0, 1e-9);
}

TEST(TheoreticalBound, ClosedForm) {
    EXPECT_NEAR(theoretical_bound(1000, 0.05, 1, 3, 1, 2.0), 20301.318626787364, 1e-6);
    EXPECT_NEAR(theoretical_bound(1000, 0.05, 1, 6, 1, 2.0), 2 * theoretical_bound(1000, 0.05, 1, 3, 1, 2.0), 1e-6);
    EXPECT_NEAR(theoretical_bound(1000, 0.05, 1, 3, 4, 2.0), 2 * theoretical_bound(1000, 0.05, 1, 3, 1, 2.0), 1e-6);
}

TEST(VariationBudget, ConstantAndBenchmark) {
    PmdpSpec flat(1, 2, 4, RewardNoise::deterministic);
    for (std::size_t n = 0; n < 4; ++n) {
        flat.kernel(n, 0, 0)[0] = flat.kernel(n, 0, 1)[0] = 1.0;
        flat.reward(n, 0, 0) = 0.3;
        flat.reward(n, 0, 1) = 0.6;
    }
    EXPECT_EQ(variation_budget(flat, 1000), 0.0);

    // Values from direct summation over t of the clamped cosine schedule.
    const auto bench = cosine_benchmark(5);
    EXPECT_NEAR(variation_budget(bench, 600), 357.344938344386, 1e-9);
    EXPECT_NEAR(variation_budget(bench, 6000), 3577.8682304944027, 1e-8);
    EXPECT_NEAR(variation_budget(bench, 6), 2.9819660112501056, 1e-12);  // one full period
    EXPECT_NEAR(variation_budget(cosine_benchmark(15), 3000), 670.6442814832408, 1e-9);
}

TEST(RegretSlope, RecoversPowerLaw) {
    std::vector<double> curve(6000);
    for (std::size_t t = 1; t <= curve.size(); ++t) curve[t - 1] = 3.0 * std::pow(double(t), 0.5);
    EXPECT_NEAR(regret_loglog_slope(curve), 0.5, 1e-12);
    EXPECT_EQ(dyadic_checkpoints(6000), (std::vector<std::int64_t>{64, 128, 256, 512, 1024, 2048, 4096, 6000}));
    EXPECT_TRUE(std::isnan(regret_loglog_slope(std::vector<double>(64, 1.0))));
}

TEST(EpisodeBound, ClosedForm) {
    EXPECT_NEAR(episode_count_bound(6000, 2, 5, 2), 20 * std::log2(2400.0), 1e-12);
}

TEST(RunExperiment, SingleStepSmoke) {
    const auto res = run_experiment(small_config(1, 2));
    ASSERT_EQ(res.runs.size(), 6u);
    for (const auto& r : res.runs) {
        EXPECT_FALSE(r.failed) << r.error;
        EXPECT_EQ(r.steps.size(), 1u);
        EXPECT_EQ(r.episodes.size(), 1u);
    }
}

TEST(RunExperiment, RunInvariants) {
    const auto cfg = small_config(1500, 3);
    const auto res = run_experiment(cfg);
    const double rho = res.optimum.gain;
    for (const auto& r : res.runs) {
        ASSERT_FALSE(r.failed) << r.error;
        std::int64_t steps = 0;
        for (const auto& ep : r.episodes) steps += ep.length;
        EXPECT_EQ(steps, cfg.horizon);

        double cum_mean = 0.0, cum = 0.0;
        for (std::size_t i = 0; i < r.steps.size(); ++i) {
            cum_mean += r.steps[i].mean_reward;
            cum += r.steps[i].reward;
            ASSERT_NEAR(r.regret[i], static_cast<double>(i + 1) * rho - cum_mean, 1e-9);
            ASSERT_EQ(r.steps[i].state.period_index, i % 5 + 1);
        }
        // Bernoulli noise: sampled and mean totals differ by O(sqrt(T)); 6 sigma with sigma <= sqrt(T)/2.
        EXPECT_LE(std::abs(cum - cum_mean), 6.0 * 0.5 * std::sqrt(double(cfg.horizon)));
    }
    EXPECT_EQ(res.agents.size(), 3u);
    EXPECT_EQ(res.agents[0].name, "pucrl2");
    EXPECT_TRUE(res.agents[0].diagnostics.exclusion_frequency.has_value());
    EXPECT_FALSE(res.agents[1].diagnostics.exclusion_frequency.has_value());
}

TEST(RunExperiment, AggregationIndependentOfScheduling) {
    auto cfg = small_config(800, 4);
    cfg.threads = 1;
    const auto serial = run_experiment(cfg);
    cfg.threads = 3;
    const auto parallel = run_experiment(cfg);
    for (std::size_t a = 0; a < serial.agents.size(); ++a) {
        EXPECT_EQ(serial.agents[a].final_cumulative_reward.mean, parallel.agents[a].final_cumulative_reward.mean);
        EXPECT_EQ(serial.agents[a].final_regret.stddev, parallel.agents[a].final_regret.stddev);
        EXPECT_EQ(serial.agents[a].mean_regret, parallel.agents[a].mean_regret);
    }
}

TEST(RunExperiment, StationaryControl) {
    // Identical periods: PUCRL2 only pays for its N-fold larger state space.
    // The regret bound grows linearly in N, so the smallest period is used,
    // and regret is summed over a fixed batch of random instances.
    double p = 0.0, u = 0.0;
    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
        const auto base = oracle::random_spec(2, 2, 2, seed);
        PmdpSpec spec(2, 2, 2, RewardNoise::bernoulli);
        for (std::size_t n = 0; n < 2; ++n)
            for (std::size_t s = 0; s < 2; ++s)
                for (std::size_t a = 0; a < 2; ++a) {
                    const auto row = base.kernel(0, s, a);
                    std::copy(row.begin(), row.end(), spec.kernel(n, s, a).begin());
                    spec.reward(n, s, a) = base.reward(0, s, a);
                }
        auto cfg = small_config(6000, 10);
        cfg.spec = spec;
        cfg.environment = {{"inline", true}};
        cfg.agents = {{"pucrl2", {}, {}}, {"ucrl2", {}, {}}};
        const auto res = run_experiment(cfg);
        p += res.agents[0].final_regret.mean;
        u += res.agents[1].final_regret.mean;
    }
    EXPECT_LE(p, 2.0 * u);
    EXPECT_LE(u, 2.0 * p);
}

TEST(RunExperiment, RejectsInvalidConfig) {
    auto cfg = small_config(0, 1);
    EXPECT_THROW(run_experiment(cfg), ValidationError);
    cfg = small_config(10, 1);
    cfg.agents = {{"ucrl3", {}, {}}};
    EXPECT_THROW(run_experiment(cfg), ValidationError);
}
