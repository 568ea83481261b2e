#pragma once

#include "prl/pmdp.hpp"

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>

namespace prl {

/// Uniform double in [0, 1) from the top 53 bits of one 64-bit draw. Fixed
/// arithmetic keeps trajectories identical across standard libraries.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Inverse-CDF sample. Zero-probability entries are never selected.
inline std::size_t sample_index(std::span<const double> probs, double u) {
    double cum = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0.0) continue;
        cum += probs[i];
        last_positive = i;
        if (u < cum) return i;
    }
    return last_positive;  // u landed in rounding slack above the cumulative sum
}

struct Transition {
    AugmentedState next;
    double reward = 0.0;
    double mean_reward = 0.0;
};

/// Simulator for a periodic MDP. Time starts at t = 1 with period index 1;
/// the period index always equals ((t - 1) mod N) + 1.
class Environment {
public:
    Environment(const PmdpSpec& spec, std::uint64_t seed, std::size_t start_state)
        : spec_(&spec), rng_(seed), current_{start_state, 1} {
        if (start_state >= spec.n_states) throw ValidationError("start_state", "out of range");
    }

    /// Start state drawn uniformly from the same stream.
    Environment(const PmdpSpec& spec, std::uint64_t seed) : spec_(&spec), rng_(seed) {
        current_.state = std::min<std::size_t>(
            static_cast<std::size_t>(uniform01(rng_) * static_cast<double>(spec.n_states)),
            spec.n_states - 1);
    }

    AugmentedState state() const noexcept { return current_; }
    std::int64_t time() const noexcept { return t_; }

    Transition step(std::size_t action) {
        if (action >= spec_->n_actions) throw ValidationError("action", "out of range");
        const std::size_t phase = current_.period_index - 1;
        const double mean = spec_->reward(phase, current_.state, action);
        const auto row = spec_->kernel(phase, current_.state, action);
        const std::size_t next = sample_index(row, uniform01(rng_));
        double reward = mean;
        if (spec_->reward_noise == RewardNoise::bernoulli) reward = uniform01(rng_) < mean ? 1.0 : 0.0;

        ++t_;
        current_ = {next, next_period_index(current_.period_index, spec_->period)};
        return {current_, reward, mean};
    }

private:
    const PmdpSpec* spec_;
    std::mt19937_64 rng_;
    AugmentedState current_{};
    std::int64_t t_ = 1;
};

/// Simulator driven by the augmented model's full S*N transition rows. With
/// the same seed it reproduces Environment's trajectory exactly.
class AmdpEnvironment {
public:
    AmdpEnvironment(const AmdpModel& model, std::uint64_t seed, std::size_t start_state)
        : model_(&model), rng_(seed), current_{start_state, 1} {}

    AugmentedState state() const noexcept { return current_; }
    std::int64_t time() const noexcept { return t_; }

    Transition step(std::size_t action) {
        const double mean = model_->reward(current_, action);
        const auto row = model_->transition_row(current_, action);
        const std::size_t next = sample_index(row, uniform01(rng_));
        double reward = mean;
        if (model_->spec().reward_noise == RewardNoise::bernoulli)
            reward = uniform01(rng_) < mean ? 1.0 : 0.0;
        ++t_;
        current_ = model_->state_at(next);
        return {current_, reward, mean};
    }

private:
    const AmdpModel* model_;
    std::mt19937_64 rng_;
    AugmentedState current_{};
    std::int64_t t_ = 1;
};

}  // namespace prl
