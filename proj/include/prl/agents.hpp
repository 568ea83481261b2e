#pragma once

#include "prl/evi.hpp"
#include "prl/pmdp.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace prl {

/// Common learner interface. act() is deterministic given the agent's history.
class Agent {
public:
    virtual ~Agent() = default;

    virtual std::size_t act(AugmentedState x, std::int64_t t) = 0;
    virtual void observe(AugmentedState x, std::size_t action, double reward, AugmentedState next) = 0;
    virtual std::string name() const = 0;

    /// Current episode index k (0 before the first planning call).
    virtual std::int64_t episode() const = 0;
    virtual nlohmann::json metadata() const = 0;

    /// Confidence set and plan of the current episode, if any.
    virtual const ConfidenceSet* confidence_set() const { return nullptr; }
    virtual const EviResult* plan() const { return nullptr; }
};

struct UcrlConfig {
    std::string label = "pucrl2";
    std::size_t n_states = 0;
    std::size_t n_actions = 0;
    /// Period the agent plans over; 1 ignores the period index entirely.
    std::size_t period = 1;
    double delta = 0.05;
    double tau = default_tau;
    /// Sliding window length in transitions; 0 keeps the full history.
    std::size_t window = 0;
    /// Additive widening of every transition radius.
    double eta = 0.0;
    std::uint64_t seed = 0;
};

/**
 * Optimistic episodic learner covering PUCRL2 (period = N), UCRL2
 * (period = 1) and sliding-window UCRL2 with confidence widening
 * (window > 0, eta > 0).
 *
 * An episode ends after the step on which the executed pair's in-episode
 * visits reach its pre-episode count (floored at 1). With a window, an
 * episode also ends after `window` steps. The next act() then freezes the
 * statistics into a ConfidenceSet and re-plans with eps = 1/sqrt(t_k).
 */
class UcrlAgent final : public Agent {
public:
    explicit UcrlAgent(UcrlConfig cfg) : cfg_(std::move(cfg)) {
        if (cfg_.n_states < 1) throw ValidationError("S", "must be positive");
        if (cfg_.n_actions < 1) throw ValidationError("A", "must be positive");
        if (cfg_.period < 1) throw ValidationError("N", "must be positive");
        if (!(cfg_.delta > 0.0 && cfg_.delta < 1.0)) throw ValidationError("delta", "must lie in (0,1)");
        if (!(cfg_.tau > 0.0 && cfg_.tau < 1.0)) throw ValidationError("tau", "must lie in (0,1)");
        if (!(cfg_.eta >= 0.0)) throw ValidationError("eta", "must be non-negative");

        const std::size_t pairs = n_agent_states() * cfg_.n_actions;
        counts_.assign(pairs, 0);
        transition_counts_.assign(pairs * cfg_.n_states, 0);
        reward_sums_.assign(pairs, 0.0);
        pre_episode_counts_.assign(pairs, 0);
        visits_.assign(pairs, 0);
    }

    std::size_t act(AugmentedState x, std::int64_t t) override {
        maybe_replan(t);
        return plan_->policy(agent_index(x));
    }

    void observe(AugmentedState x, std::size_t action, double reward, AugmentedState next) override {
        const std::size_t k = agent_index(x) * cfg_.n_actions + action;
        record(k, next.state, reward, +1);
        if (cfg_.window > 0) {
            history_.push_back({k, next.state, reward});
            if (history_.size() > cfg_.window) {
                const auto& old = history_.front();
                record(old.pair, old.next_state, old.reward, -1);
                history_.pop_front();
            }
        }
        ++visits_[k];
        ++episode_steps_;
        ++steps_;
        if (static_cast<double>(visits_[k]) >= std::max<double>(1.0, static_cast<double>(pre_episode_counts_[k])))
            replan_pending_ = true;
        if (cfg_.window > 0 && episode_steps_ >= static_cast<std::int64_t>(cfg_.window)) replan_pending_ = true;
    }

    /// Starts a new episode when the previous step triggered the stopping
    /// rule (or no plan exists yet). Returns the new plan when one was made.
    std::optional<EviResult> maybe_replan(std::int64_t t) {
        if (plan_ && !replan_pending_) return std::nullopt;
        conf_ = build_confidence_set(t);
        plan_ = modified_evi(conf_, cfg_.tau, 1.0 / std::sqrt(static_cast<double>(t)));
        pre_episode_counts_ = counts_;
        std::fill(visits_.begin(), visits_.end(), 0);
        replan_pending_ = false;
        episode_steps_ = 0;
        ++episode_;
        return plan_;
    }

    ConfidenceSet build_confidence_set(std::int64_t t_k) const {
        const std::size_t S = cfg_.n_states;
        const std::size_t A = cfg_.n_actions;
        ConfidenceSet conf(S, A, cfg_.period);
        conf.t_k = t_k;
        conf.delta = cfg_.delta;
        const double t = static_cast<double>(t_k);
        for (std::size_t k = 0; k < counts_.size(); ++k) {
            const double raw = static_cast<double>(counts_[k]);
            const double n = std::max(1.0, raw);
            conf.counts[k] = n;
            auto row = std::span<double>(conf.p_hat.data() + k * S, S);
            if (counts_[k] > 0) {
                for (std::size_t s = 0; s < S; ++s)
                    row[s] = static_cast<double>(transition_counts_[k * S + s]) / raw;
            } else {
                std::fill(row.begin(), row.end(), 1.0 / static_cast<double>(S));
            }
            conf.r_hat[k] = reward_sums_[k] / n;
            conf.p_radius[k] = std::min(2.0, p_radius(n, t, S, cfg_.period, A, cfg_.delta) + cfg_.eta);
            conf.r_radius[k] = r_radius(n, t, S, A, cfg_.delta);
        }
        return conf;
    }

    std::string name() const override { return cfg_.label; }
    std::int64_t episode() const override { return episode_; }
    const ConfidenceSet* confidence_set() const override { return plan_ ? &conf_ : nullptr; }
    const EviResult* plan() const override { return plan_ ? &*plan_ : nullptr; }
    const UcrlConfig& config() const noexcept { return cfg_; }

    nlohmann::json metadata() const override {
        nlohmann::json j{{"name", cfg_.label},       {"S", cfg_.n_states}, {"A", cfg_.n_actions},
                         {"planning_period", cfg_.period}, {"delta", cfg_.delta}, {"tau", cfg_.tau},
                         {"seed", cfg_.seed}};
        if (cfg_.window > 0) {
            j["window"] = cfg_.window;
            j["eta"] = cfg_.eta;
        }
        return j;
    }

    std::size_t n_agent_states() const noexcept { return cfg_.n_states * cfg_.period; }
    std::size_t agent_index(AugmentedState x) const noexcept {
        return ((x.period_index - 1) % cfg_.period) * cfg_.n_states + x.state;
    }

    /// Live (windowed, if applicable) visit counts per pair.
    const std::vector<std::int64_t>& counts() const noexcept { return counts_; }
    const std::vector<std::int64_t>& pre_episode_counts() const noexcept { return pre_episode_counts_; }
    const std::vector<std::int64_t>& episode_visits() const noexcept { return visits_; }
    std::int64_t steps() const noexcept { return steps_; }

private:
    struct Observation {
        std::size_t pair;
        std::size_t next_state;
        double reward;
    };

    void record(std::size_t k, std::size_t next_state, double reward, int sign) {
        counts_[k] += sign;
        transition_counts_[k * cfg_.n_states + next_state] += sign;
        reward_sums_[k] += sign * reward;
    }

    UcrlConfig cfg_;
    std::vector<std::int64_t> counts_;
    std::vector<std::int64_t> transition_counts_;
    std::vector<double> reward_sums_;
    std::vector<std::int64_t> pre_episode_counts_;
    std::vector<std::int64_t> visits_;
    std::deque<Observation> history_;
    ConfidenceSet conf_;
    std::optional<EviResult> plan_;
    bool replan_pending_ = false;
    std::int64_t episode_ = 0;
    std::int64_t episode_steps_ = 0;
    std::int64_t steps_ = 0;
};

inline std::unique_ptr<UcrlAgent> pucrl2_new(std::size_t S, std::size_t A, std::size_t N, double delta,
                                             double tau = default_tau, std::uint64_t seed = 0) {
    return std::make_unique<UcrlAgent>(UcrlConfig{"pucrl2", S, A, N, delta, tau, 0, 0.0, seed});
}

inline std::unique_ptr<UcrlAgent> ucrl2_new(std::size_t S, std::size_t A, double delta,
                                            double tau = default_tau, std::uint64_t seed = 0) {
    return std::make_unique<UcrlAgent>(UcrlConfig{"ucrl2", S, A, 1, delta, tau, 0, 0.0, seed});
}

inline std::unique_ptr<UcrlAgent> swucrl2_new(std::size_t S, std::size_t A, double delta, std::size_t window,
                                              double eta, double tau = default_tau, std::uint64_t seed = 0) {
    if (window < 1) throw ValidationError("window", "must be at least 1");
    return std::make_unique<UcrlAgent>(UcrlConfig{"swucrl2", S, A, 1, delta, tau, window, eta, seed});
}

}  // namespace prl
