#pragma once

#include "prl/errors.hpp"

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace prl {

enum class RewardNoise { deterministic, bernoulli };

inline const char* to_string(RewardNoise noise) {
    return noise == RewardNoise::bernoulli ? "bernoulli" : "deterministic";
}

/// Periodic MDP: S states, A actions, period N, one transition kernel and one
/// mean-reward table per period index.
///
/// Storage is flat. Accessors take a zero-based `phase` in 0..N-1, which is
/// period index n = phase + 1.
struct PmdpSpec {
    std::size_t n_states = 0;
    std::size_t n_actions = 0;
    std::size_t period = 0;
    std::vector<double> kernels;       // [N][S][A][S]
    std::vector<double> mean_rewards;  // [N][S][A]
    RewardNoise reward_noise = RewardNoise::bernoulli;

    PmdpSpec() = default;
    PmdpSpec(std::size_t S, std::size_t A, std::size_t N, RewardNoise noise = RewardNoise::bernoulli)
        : n_states(S), n_actions(A), period(N),
          kernels(N * S * A * S, 0.0), mean_rewards(N * S * A, 0.0), reward_noise(noise) {}

    std::size_t row_offset(std::size_t phase, std::size_t s, std::size_t a) const {
        return ((phase * n_states + s) * n_actions + a) * n_states;
    }

    std::span<const double> kernel(std::size_t phase, std::size_t s, std::size_t a) const {
        return {kernels.data() + row_offset(phase, s, a), n_states};
    }
    std::span<double> kernel(std::size_t phase, std::size_t s, std::size_t a) {
        return {kernels.data() + row_offset(phase, s, a), n_states};
    }

    double reward(std::size_t phase, std::size_t s, std::size_t a) const {
        return mean_rewards[(phase * n_states + s) * n_actions + a];
    }
    double& reward(std::size_t phase, std::size_t s, std::size_t a) {
        return mean_rewards[(phase * n_states + s) * n_actions + a];
    }

    /// Throws ValidationError naming the first offending (n, s, a).
    void validate() const;

    bool operator==(const PmdpSpec&) const = default;
};

inline std::string index_path(const char* field, std::size_t phase, std::size_t s, std::size_t a) {
    return std::string(field) + "[" + std::to_string(phase) + "][" + std::to_string(s) + "][" +
           std::to_string(a) + "]";
}

inline void PmdpSpec::validate() const {
    if (n_states < 1) throw ValidationError("S", "must be positive");
    if (n_actions < 1) throw ValidationError("A", "must be positive");
    if (period < 2) throw ValidationError("N", "period must be at least 2");
    if (kernels.size() != period * n_states * n_actions * n_states)
        throw ValidationError("kernels", "expected N*S*A*S entries");
    if (mean_rewards.size() != period * n_states * n_actions)
        throw ValidationError("rewards", "expected N*S*A entries");

    for (std::size_t n = 0; n < period; ++n) {
        for (std::size_t s = 0; s < n_states; ++s) {
            for (std::size_t a = 0; a < n_actions; ++a) {
                double sum = 0.0;
                for (double p : kernel(n, s, a)) {
                    if (!(p >= 0.0) || !std::isfinite(p))
                        throw ValidationError(index_path("kernels", n, s, a),
                                              "negative or non-finite probability");
                    sum += p;
                }
                if (std::abs(sum - 1.0) > 1e-9)
                    throw ValidationError(index_path("kernels", n, s, a),
                                          "row sums to " + std::to_string(sum));
                const double r = reward(n, s, a);
                if (!(r >= 0.0 && r <= 1.0))
                    throw ValidationError(index_path("rewards", n, s, a), "mean reward outside [0,1]");
            }
        }
    }
}

/// (s, n) with n the 1-based period index.
struct AugmentedState {
    std::size_t state = 0;
    std::size_t period_index = 1;

    bool operator==(const AugmentedState&) const = default;
};

/// Period index that follows n in the cycle 1, 2, ..., N, 1, ...
constexpr std::size_t next_period_index(std::size_t n, std::size_t N) { return (n % N) + 1; }

/// Stationary MDP on S*N augmented states. Flat index of (s, n) is
/// (n - 1) * S + s, so the reference state (0, 1) sits at index 0 and each
/// period index owns a contiguous block of S entries.
class AmdpModel {
public:
    explicit AmdpModel(PmdpSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

    const PmdpSpec& spec() const noexcept { return spec_; }
    std::size_t n_states() const noexcept { return spec_.n_states; }
    std::size_t n_actions() const noexcept { return spec_.n_actions; }
    std::size_t period() const noexcept { return spec_.period; }
    std::size_t size() const noexcept { return spec_.n_states * spec_.period; }

    std::size_t index(AugmentedState x) const noexcept {
        return (x.period_index - 1) * spec_.n_states + x.state;
    }
    AugmentedState state_at(std::size_t idx) const noexcept {
        return {idx % spec_.n_states, idx / spec_.n_states + 1};
    }
    /// First flat index of the successor block for flat state `idx`.
    std::size_t successor_block(std::size_t idx) const noexcept {
        const std::size_t phase = idx / spec_.n_states;
        return ((phase + 1) % spec_.period) * spec_.n_states;
    }

    /// Next-state distribution over the S successors at the following period index.
    std::span<const double> successors(std::size_t idx, std::size_t a) const {
        return spec_.kernel(idx / spec_.n_states, idx % spec_.n_states, a);
    }

    /// p((s', n') | (s, n), a) over the full augmented space.
    double transition(AugmentedState from, std::size_t a, AugmentedState to) const {
        if (to.period_index != next_period_index(from.period_index, spec_.period)) return 0.0;
        return spec_.kernel(from.period_index - 1, from.state, a)[to.state];
    }

    /// Full augmented row of length S*N.
    std::vector<double> transition_row(AugmentedState from, std::size_t a) const {
        std::vector<double> row(size(), 0.0);
        const std::size_t block = successor_block(index(from));
        const auto succ = spec_.kernel(from.period_index - 1, from.state, a);
        for (std::size_t s = 0; s < spec_.n_states; ++s) row[block + s] = succ[s];
        return row;
    }

    double reward(AugmentedState x, std::size_t a) const {
        return spec_.reward(x.period_index - 1, x.state, a);
    }
    double reward(std::size_t idx, std::size_t a) const {
        return spec_.reward(idx / spec_.n_states, idx % spec_.n_states, a);
    }

private:
    PmdpSpec spec_;
};

inline AmdpModel augment(const PmdpSpec& spec) { return AmdpModel(spec); }

inline double clamp_unit(double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }

/// Two-state, two-action benchmark with cosine-modulated rewards and a
/// sine-modulated switching probability beta_n = 0.5 + 0.3 sin(5 v_p pi n / N).
/// Mean rewards are clamped to [0, 1]. State/action 0 and 1 stand for s1/s2 and
/// a1/a2; a1 is a self-loop in both states.
inline PmdpSpec cosine_benchmark(std::size_t N, double v_p = 0.4,
                                 RewardNoise noise = RewardNoise::bernoulli) {
    if (N < 2) throw ValidationError("N", "period must be at least 2");
    constexpr double pi = std::numbers::pi;
    PmdpSpec spec(2, 2, N, noise);
    for (std::size_t phase = 0; phase < N; ++phase) {
        const double n = static_cast<double>(phase + 1);
        const double c = std::cos(2.0 * pi * n / static_cast<double>(N));
        const double beta = 0.5 + 0.3 * std::sin(5.0 * v_p * pi * n / static_cast<double>(N));
        if (!(beta >= 0.0 && beta <= 1.0))
            throw ValidationError("vp", "switching probability outside [0,1] at n=" +
                                            std::to_string(phase + 1));

        spec.reward(phase, 0, 0) = clamp_unit(0.2 + 0.3 * c);
        spec.reward(phase, 0, 1) = clamp_unit(0.2 + c);
        spec.reward(phase, 1, 0) = clamp_unit(0.2 - c);
        spec.reward(phase, 1, 1) = clamp_unit(0.2 - 0.3 * c);

        auto k = [&](std::size_t s, std::size_t a) { return spec.kernel(phase, s, a); };
        k(0, 0)[0] = 1.0;
        k(0, 0)[1] = 0.0;
        k(0, 1)[0] = 1.0 - beta;
        k(0, 1)[1] = beta;
        k(1, 0)[0] = 0.0;
        k(1, 0)[1] = 1.0;
        k(1, 1)[0] = beta;
        k(1, 1)[1] = 1.0 - beta;
    }
    spec.validate();
    return spec;
}

}  // namespace prl
