#pragma once

#include "prl/agents.hpp"
#include "prl/environment.hpp"
#include "prl/evi.hpp"
#include "prl/exact_solver.hpp"
#include "prl/pmdp.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace prl {

struct AgentSpec {
    std::string name;  // pucrl2 | ucrl2 | swucrl2
    std::optional<std::size_t> window;
    std::optional<double> eta;

    bool operator==(const AgentSpec&) const = default;
};

struct ExperimentConfig {
    PmdpSpec spec;
    /// How the environment was specified (inline or benchmark parameters), echoed to outputs.
    nlohmann::json environment;
    std::int64_t horizon = 6000;
    double delta = 0.05;
    double tau = default_tau;
    std::vector<AgentSpec> agents{{"pucrl2", {}, {}}, {"ucrl2", {}, {}}, {"swucrl2", {}, {}}};
    std::size_t runs = 30;
    std::uint64_t base_seed = 1;
    /// Worker threads; 0 picks the hardware concurrency.
    unsigned threads = 0;

    void validate() const {
        spec.validate();
        if (horizon < 1) throw ValidationError("T", "horizon must be at least 1");
        if (runs < 1) throw ValidationError("runs", "must be at least 1");
        if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("delta", "must lie in (0,1)");
        if (!(tau > 0.0 && tau < 1.0)) throw ValidationError("tau", "must lie in (0,1)");
        if (agents.empty()) throw ValidationError("agents", "at least one agent required");
        for (std::size_t i = 0; i < agents.size(); ++i) {
            const auto& a = agents[i];
            const std::string path = "agents[" + std::to_string(i) + "]";
            if (a.name != "pucrl2" && a.name != "ucrl2" && a.name != "swucrl2")
                throw ValidationError(path, "unknown agent '" + a.name + "'");
            if (a.window && *a.window < 1) throw ValidationError(path + ".window", "must be at least 1");
            if (a.eta && !(*a.eta >= 0.0)) throw ValidationError(path + ".eta", "must be non-negative");
        }
    }

    std::uint64_t run_seed(std::size_t run) const noexcept { return base_seed + run; }
};

/// Sliding-window default: 50 * N * S * A.
inline std::size_t default_window(const PmdpSpec& spec) {
    return 50 * spec.period * spec.n_states * spec.n_actions;
}
inline constexpr double default_eta = 0.1;

inline std::unique_ptr<UcrlAgent> make_agent(const AgentSpec& agent, const ExperimentConfig& cfg,
                                             std::uint64_t seed) {
    const auto& spec = cfg.spec;
    if (agent.name == "pucrl2")
        return pucrl2_new(spec.n_states, spec.n_actions, spec.period, cfg.delta, cfg.tau, seed);
    if (agent.name == "ucrl2") return ucrl2_new(spec.n_states, spec.n_actions, cfg.delta, cfg.tau, seed);
    if (agent.name == "swucrl2")
        return swucrl2_new(spec.n_states, spec.n_actions, cfg.delta, agent.window.value_or(default_window(spec)),
                           agent.eta.value_or(default_eta), cfg.tau, seed);
    throw ValidationError("agents", "unknown agent '" + agent.name + "'");
}

struct StepRecord {
    std::int64_t t = 0;
    AugmentedState state;
    std::size_t action = 0;
    double reward = 0.0;
    double mean_reward = 0.0;
    std::int64_t episode = 0;
};

struct EpisodeRecord {
    std::int64_t index = 0;
    std::int64_t start = 0;  // t_k
    std::int64_t length = 0;
    double rho_tilde = 0.0;
    std::int64_t evi_iterations = 0;
    /// Whether the true model lay inside the episode's confidence set; empty
    /// when the agent does not plan over the environment's period.
    std::optional<bool> contains_truth;
};

struct RunResult {
    std::string agent;
    std::size_t run = 0;
    std::uint64_t seed = 0;
    nlohmann::json metadata;
    std::vector<StepRecord> steps;
    std::vector<double> cumulative_reward;       // sampled rewards
    std::vector<double> cumulative_mean_reward;  // true means of executed pairs
    std::vector<double> regret;                  // pseudo-regret
    std::vector<double> sampled_regret;
    std::vector<EpisodeRecord> episodes;
    bool failed = false;
    std::string error;
};

/// Prefix sums of (rho_star - mean reward of the executed pair).
inline std::vector<double> pseudo_regret(std::span<const double> mean_rewards, double rho_star) {
    std::vector<double> curve(mean_rewards.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < mean_rewards.size(); ++i) {
        acc += rho_star - mean_rewards[i];
        curve[i] = acc;
    }
    return curve;
}

/// 34 D S N sqrt(A T ln(T / delta)).
inline double theoretical_bound(double T, double delta, std::size_t S, std::size_t N, std::size_t A,
                                double diameter) {
    return 34.0 * diameter * static_cast<double>(S * N) *
           std::sqrt(static_cast<double>(A) * T * std::log(T / delta));
}

/// S N A log2(8 T / (S N A)).
inline double episode_count_bound(double T, std::size_t S, std::size_t N, std::size_t A) {
    const double sna = static_cast<double>(S * N * A);
    return sna * std::log2(8.0 * T / sna);
}

/// Reward variation budget sum_{t=1}^{T-1} max_{s,a} |r_{t+1}(s,a) - r_t(s,a)|
/// along the periodic schedule.
inline double variation_budget(const PmdpSpec& spec, std::int64_t T) {
    const std::size_t N = spec.period;
    std::vector<double> step_change(N, 0.0);  // change from phase n to phase n+1
    for (std::size_t n = 0; n < N; ++n) {
        const std::size_t m = (n + 1) % N;
        for (std::size_t s = 0; s < spec.n_states; ++s)
            for (std::size_t a = 0; a < spec.n_actions; ++a)
                step_change[n] = std::max(step_change[n], std::abs(spec.reward(m, s, a) - spec.reward(n, s, a)));
    }
    double total = 0.0;
    for (std::int64_t t = 1; t < T; ++t) total += step_change[static_cast<std::size_t>((t - 1) % static_cast<std::int64_t>(N))];
    return total;
}

/// Dyadic checkpoints 2^6, 2^7, ... up to T, plus T itself.
inline std::vector<std::int64_t> dyadic_checkpoints(std::int64_t T) {
    std::vector<std::int64_t> points;
    for (std::int64_t t = 64; t <= T; t *= 2) points.push_back(t);
    if (!points.empty() && points.back() != T && T > 64) points.push_back(T);
    return points;
}

/// Least-squares slope of log(regret) against log(t) over dyadic checkpoints.
/// Checkpoints with non-positive regret are skipped; NaN if fewer than two remain.
inline double regret_loglog_slope(std::span<const double> regret) {
    std::vector<double> xs, ys;
    for (std::int64_t t : dyadic_checkpoints(static_cast<std::int64_t>(regret.size()))) {
        const double r = regret[static_cast<std::size_t>(t - 1)];
        if (r <= 0.0) continue;
        xs.push_back(std::log(static_cast<double>(t)));
        ys.push_back(std::log(r));
    }
    if (xs.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    return sxy / sxx;
}

/// One agent on one seeded environment for `cfg.horizon` steps.
inline RunResult run_single(const ExperimentConfig& cfg, const AmdpModel& model, double rho_star,
                            const AgentSpec& agent_spec, std::size_t run) {
    RunResult out;
    out.agent = agent_spec.name;
    out.run = run;
    out.seed = cfg.run_seed(run);
    const auto T = static_cast<std::size_t>(cfg.horizon);
    try {
        auto agent = make_agent(agent_spec, cfg, out.seed);
        out.metadata = agent->metadata();
        Environment env(cfg.spec, out.seed);
        const bool audit = agent->config().period == cfg.spec.period;

        out.steps.reserve(T);
        out.cumulative_reward.reserve(T);
        out.cumulative_mean_reward.reserve(T);
        out.regret.reserve(T);
        out.sampled_regret.reserve(T);
        double cum = 0.0, cum_mean = 0.0;
        std::int64_t last_episode = 0;

        for (std::int64_t t = 1; t <= cfg.horizon; ++t) {
            const AugmentedState x = env.state();
            const std::size_t a = agent->act(x, t);
            if (agent->episode() != last_episode) {
                last_episode = agent->episode();
                EpisodeRecord ep;
                ep.index = last_episode;
                ep.start = t;
                ep.rho_tilde = agent->plan()->rho_tilde;
                ep.evi_iterations = agent->plan()->iterations;
                if (audit) ep.contains_truth = agent->confidence_set()->contains(model);
                out.episodes.push_back(ep);
            }
            const Transition tr = env.step(a);
            agent->observe(x, a, tr.reward, tr.next);
            ++out.episodes.back().length;

            cum += tr.reward;
            cum_mean += tr.mean_reward;
            out.steps.push_back({t, x, a, tr.reward, tr.mean_reward, last_episode});
            out.cumulative_reward.push_back(cum);
            out.cumulative_mean_reward.push_back(cum_mean);
            out.regret.push_back(static_cast<double>(t) * rho_star - cum_mean);
            out.sampled_regret.push_back(static_cast<double>(t) * rho_star - cum);
        }
    } catch (const std::exception& e) {
        out.failed = true;
        out.error = e.what();
    }
    return out;
}

struct Stat {
    double mean = 0.0;
    double stddev = 0.0;
};

inline Stat mean_std(std::span<const double> xs) {
    Stat st;
    if (xs.empty()) return st;
    for (double x : xs) st.mean += x;
    st.mean /= static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - st.mean) * (x - st.mean);
        st.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return st;
}

struct AgentDiagnostics {
    double episode_bound = 0.0;
    std::int64_t max_episodes = 0;
    bool episodes_within_bound = true;
    /// Fraction of audited episodes whose confidence set excluded the true model.
    std::optional<double> exclusion_frequency;
    std::int64_t audited_episodes = 0;
    /// Audited episodes with the truth inside M_k but rho_tilde + 1/sqrt(t_k) < rho*.
    std::int64_t optimism_violations = 0;
    double regret_bound = 0.0;
    double max_final_regret = 0.0;
    bool regret_within_bound = true;
    /// Slope fitted to the across-run mean pseudo-regret curve.
    double regret_slope = 0.0;
    std::vector<double> run_slopes;
};

struct AgentSummary {
    std::string name;
    nlohmann::json metadata;
    std::size_t completed_runs = 0;
    std::vector<std::size_t> failed_runs;
    Stat final_cumulative_reward;
    Stat final_regret;
    Stat final_sampled_regret;
    Stat episodes;
    std::vector<double> mean_cumulative_reward;  // over completed runs, per t
    std::vector<double> mean_regret;
    AgentDiagnostics diagnostics;
};

struct ExperimentResult {
    ExperimentConfig config;
    GainResult optimum;
    DiameterResult diameter;
    std::vector<RunResult> runs;  // agent-major, then run index
    std::vector<AgentSummary> agents;
};

/**
 * Diagnostics for one agent's runs: episode counts against
 * S N A log2(8T/(SNA)) using the agent's own planning period, confidence-set
 * exclusion frequency and optimism (only for agents planning over the
 * environment's period), final regret against the regret bound, and the
 * log-log slope of the mean regret curve.
 */
inline AgentDiagnostics diagnostics(std::span<const RunResult> runs, const AgentSummary& summary,
                                    const ExperimentConfig& cfg, double rho_star, double diam) {
    AgentDiagnostics d;
    const auto& spec = cfg.spec;
    const std::size_t planning_period = summary.metadata.value("planning_period", std::size_t{1});
    const double T = static_cast<double>(cfg.horizon);
    d.episode_bound = episode_count_bound(T, spec.n_states, planning_period, spec.n_actions);
    d.regret_bound = theoretical_bound(T, cfg.delta, spec.n_states, spec.period, spec.n_actions, diam);

    std::int64_t excluded = 0;
    for (const auto& r : runs) {
        if (r.failed) continue;
        const auto m = static_cast<std::int64_t>(r.episodes.size());
        d.max_episodes = std::max(d.max_episodes, m);
        if (static_cast<double>(m) > d.episode_bound) d.episodes_within_bound = false;
        for (const auto& ep : r.episodes) {
            if (!ep.contains_truth) continue;
            ++d.audited_episodes;
            if (!*ep.contains_truth) {
                ++excluded;
            } else if (ep.rho_tilde + 1.0 / std::sqrt(static_cast<double>(ep.start)) < rho_star) {
                ++d.optimism_violations;
            }
        }
        const double final_regret = r.regret.back();
        d.max_final_regret = std::max(d.max_final_regret, final_regret);
        if (final_regret > d.regret_bound) d.regret_within_bound = false;
        d.run_slopes.push_back(regret_loglog_slope(r.regret));
    }
    if (d.audited_episodes > 0)
        d.exclusion_frequency = static_cast<double>(excluded) / static_cast<double>(d.audited_episodes);
    d.regret_slope = regret_loglog_slope(summary.mean_regret);
    return d;
}

inline AgentSummary summarize(std::span<const RunResult> runs, const ExperimentConfig& cfg, double rho_star,
                              double diam) {
    AgentSummary s;
    s.name = runs.front().agent;
    const auto T = static_cast<std::size_t>(cfg.horizon);
    s.mean_cumulative_reward.assign(T, 0.0);
    s.mean_regret.assign(T, 0.0);
    std::vector<double> cum, reg, sreg, eps;
    for (const auto& r : runs) {
        if (r.failed) {
            s.failed_runs.push_back(r.run);
            continue;
        }
        if (s.metadata.is_null()) s.metadata = r.metadata;
        ++s.completed_runs;
        cum.push_back(r.cumulative_reward.back());
        reg.push_back(r.regret.back());
        sreg.push_back(r.sampled_regret.back());
        eps.push_back(static_cast<double>(r.episodes.size()));
        for (std::size_t t = 0; t < T; ++t) {
            s.mean_cumulative_reward[t] += r.cumulative_reward[t];
            s.mean_regret[t] += r.regret[t];
        }
    }
    if (s.completed_runs > 0) {
        const double k = static_cast<double>(s.completed_runs);
        for (std::size_t t = 0; t < T; ++t) {
            s.mean_cumulative_reward[t] /= k;
            s.mean_regret[t] /= k;
        }
    }
    s.final_cumulative_reward = mean_std(cum);
    s.final_regret = mean_std(reg);
    s.final_sampled_regret = mean_std(sreg);
    s.episodes = mean_std(eps);
    if (s.completed_runs > 0) s.diagnostics = diagnostics(runs, s, cfg, rho_star, diam);
    return s;
}

/// Runs every agent on every seeded run, in parallel, then aggregates. The
/// output depends only on `cfg`: results are stored by (agent, run) slot.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentResult result;
    result.config = cfg;
    const AmdpModel model(cfg.spec);
    result.optimum = optimal_gain(model, default_tau, 1e-8);
    result.diameter = diameter(model);
    const double rho_star = result.optimum.gain;

    const std::size_t n_jobs = cfg.agents.size() * cfg.runs;
    result.runs.resize(n_jobs);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t j; (j = next.fetch_add(1)) < n_jobs;)
            result.runs[j] = run_single(cfg, model, rho_star, cfg.agents[j / cfg.runs], j % cfg.runs);
    };
    unsigned n_threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, n_jobs));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    }

    for (std::size_t a = 0; a < cfg.agents.size(); ++a) {
        const std::span<const RunResult> slice(result.runs.data() + a * cfg.runs, cfg.runs);
        result.agents.push_back(summarize(slice, cfg, rho_star, result.diameter.value));
        if (result.agents.back().name.empty()) result.agents.back().name = cfg.agents[a].name;
    }
    return result;
}

}  // namespace prl
