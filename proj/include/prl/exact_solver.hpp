#pragma once

// Exact planning on a known augmented MDP.

#include "prl/errors.hpp"
#include "prl/pmdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

namespace prl {

/// Action per augmented state, indexed by AmdpModel's flat index.
struct StationaryPolicy {
    std::vector<std::size_t> actions;

    std::size_t operator()(std::size_t idx) const { return actions[idx]; }
    std::size_t size() const noexcept { return actions.size(); }
    bool operator==(const StationaryPolicy&) const = default;
};

struct GainResult {
    double gain = 0.0;
    std::vector<double> bias;  // bias[0] == 0 (reference state (0, 1))
    StationaryPolicy policy;
    std::int64_t iterations = 0;
};

inline constexpr double default_tau = 0.99;
inline constexpr std::int64_t default_iteration_cap = 1'000'000;

/**
 * Optimal average reward by relative value iteration on the aperiodicity
 * transformed model (self-loop of weight 1 - tau mixed into every row). The
 * transform leaves every stationary policy's gain unchanged while removing
 * the period-N oscillation that would stall plain value iteration.
 *
 * Stops when span(u_{i+1} - u_i) <= eps; the gain is the midpoint of that
 * difference vector, so it lies within eps/2 of the true optimum.
 */
inline GainResult optimal_gain(const AmdpModel& model, double tau = default_tau, double eps = 1e-8,
                               std::int64_t max_iterations = default_iteration_cap) {
    if (!(tau > 0.0 && tau < 1.0)) throw ValidationError("tau", "must lie in (0,1)");
    if (!(eps > 0.0)) throw ValidationError("eps", "must be positive");

    const std::size_t X = model.size();
    const std::size_t A = model.n_actions();
    const std::size_t S = model.n_states();
    std::vector<double> u(X, 0.0), next(X, 0.0);
    StationaryPolicy policy{std::vector<std::size_t>(X, 0)};
    double span = std::numeric_limits<double>::infinity();

    for (std::int64_t it = 1; it <= max_iterations; ++it) {
        for (std::size_t x = 0; x < X; ++x) {
            const std::size_t block = model.successor_block(x);
            double best = -std::numeric_limits<double>::infinity();
            std::size_t best_a = 0;
            for (std::size_t a = 0; a < A; ++a) {
                const auto p = model.successors(x, a);
                double ev = 0.0;
                for (std::size_t s = 0; s < S; ++s) ev += p[s] * u[block + s];
                const double q = model.reward(x, a) + tau * ev + (1.0 - tau) * u[x];
                if (q > best) {
                    best = q;
                    best_a = a;
                }
            }
            next[x] = best;
            policy.actions[x] = best_a;
        }

        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t x = 0; x < X; ++x) {
            const double d = next[x] - u[x];
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
        span = hi - lo;
        const double ref = next[0];
        for (std::size_t x = 0; x < X; ++x) u[x] = next[x] - ref;

        if (span <= eps) return {0.5 * (hi + lo), u, std::move(policy), it};
    }
    throw ConvergenceError("relative value iteration hit its iteration cap", span);
}

/// One-step state transition matrix (S x S, row-major) at `phase` under `policy`.
inline std::vector<double> policy_step_matrix(const AmdpModel& model, const StationaryPolicy& policy,
                                              std::size_t phase) {
    const std::size_t S = model.n_states();
    std::vector<double> P(S * S);
    for (std::size_t s = 0; s < S; ++s) {
        const auto row = model.successors(phase * S + s, policy(phase * S + s));
        std::copy(row.begin(), row.end(), P.begin() + static_cast<std::ptrdiff_t>(s * S));
    }
    return P;
}

inline std::vector<double> row_times(std::span<const double> x, const std::vector<double>& P) {
    const std::size_t S = x.size();
    std::vector<double> y(S, 0.0);
    for (std::size_t i = 0; i < S; ++i) {
        if (x[i] == 0.0) continue;
        for (std::size_t j = 0; j < S; ++j) y[j] += x[i] * P[i * S + j];
    }
    return y;
}

/**
 * Exact long-run average reward of a stationary policy from a start state
 * drawn uniformly at period index 1.
 *
 * The N per-step kernels are composed into the one-period map M. The Cesaro
 * limit of x0 M^k is found by power iteration on the lazy chain (I + M) / 2,
 * whose powers converge to the same limit even when M is periodic or
 * multichain. That distribution is then pushed around the cycle once and the
 * N per-step mean rewards are averaged.
 */
inline double policy_gain(const AmdpModel& model, const StationaryPolicy& policy,
                          double tolerance = 1e-12, std::int64_t max_iterations = 10'000'000) {
    const std::size_t S = model.n_states();
    const std::size_t N = model.period();
    if (policy.size() != model.size()) throw ValidationError("policy", "must cover all S*N states");
    for (std::size_t x = 0; x < policy.size(); ++x)
        if (policy(x) >= model.n_actions()) throw ValidationError("policy", "action out of range");

    std::vector<std::vector<double>> steps;
    steps.reserve(N);
    for (std::size_t n = 0; n < N; ++n) steps.push_back(policy_step_matrix(model, policy, n));

    std::vector<double> M(S * S, 0.0);
    for (std::size_t s = 0; s < S; ++s) {
        std::vector<double> e(S, 0.0);
        e[s] = 1.0;
        for (const auto& P : steps) e = row_times(e, P);
        std::copy(e.begin(), e.end(), M.begin() + static_cast<std::ptrdiff_t>(s * S));
    }

    std::vector<double> mu(S, 1.0 / static_cast<double>(S));
    bool converged = false;
    double change = 0.0;
    for (std::int64_t it = 0; it < max_iterations; ++it) {
        auto moved = row_times(mu, M);
        change = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
            const double v = 0.5 * (mu[s] + moved[s]);
            change += std::abs(v - mu[s]);
            mu[s] = v;
        }
        if (change <= tolerance) {
            converged = true;
            break;
        }
    }
    if (!converged) throw ConvergenceError("stationary distribution power iteration did not converge", change);

    double total = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t s = 0; s < S; ++s) total += mu[s] * model.reward(n * S + s, policy(n * S + s));
        mu = row_times(mu, steps[n]);
    }
    return total / static_cast<double>(N);
}

/// Brute-force oracle: evaluates all A^(S*N) deterministic stationary policies.
inline GainResult enumerate_policies_gain(const AmdpModel& model, std::uint64_t cap = 100'000) {
    const std::size_t X = model.size();
    const std::size_t A = model.n_actions();
    std::uint64_t count = 1;
    for (std::size_t i = 0; i < X; ++i) {
        count *= A;
        if (count > cap) throw SizeError("A^(S*N) exceeds enumeration cap " + std::to_string(cap));
    }

    GainResult best;
    best.gain = -std::numeric_limits<double>::infinity();
    StationaryPolicy policy{std::vector<std::size_t>(X, 0)};
    for (std::uint64_t code = 0; code < count; ++code) {
        std::uint64_t c = code;
        for (std::size_t x = 0; x < X; ++x) {
            policy.actions[x] = static_cast<std::size_t>(c % A);
            c /= A;
        }
        const double g = policy_gain(model, policy);
        if (g > best.gain) {
            best.gain = g;
            best.policy = policy;
        }
    }
    best.iterations = static_cast<std::int64_t>(count);
    return best;
}

struct DiameterResult {
    double value = 0.0;
    /// (source, target) flat-index pairs whose target cannot be reached almost surely.
    std::vector<std::pair<std::size_t, std::size_t>> unreachable;
    std::int64_t iterations = 0;

    bool finite() const noexcept { return std::isfinite(value); }
};

namespace detail {

/// States from which some policy reaches `target` with probability one
/// (fixpoint: drop states that cannot reach the target, then drop actions that
/// may leave the surviving set, and repeat).
inline std::vector<char> almost_sure_reach(const AmdpModel& model, std::size_t target) {
    const std::size_t X = model.size();
    const std::size_t A = model.n_actions();
    const std::size_t S = model.n_states();
    std::vector<char> alive(X, 1);
    std::vector<char> action_ok(X * A, 1);

    for (bool changed = true; changed;) {
        changed = false;
        // Backward reachability to target through allowed actions.
        std::vector<char> reach(X, 0);
        reach[target] = 1;
        for (bool grew = true; grew;) {
            grew = false;
            for (std::size_t x = 0; x < X; ++x) {
                if (reach[x] || !alive[x]) continue;
                const std::size_t block = model.successor_block(x);
                for (std::size_t a = 0; a < A && !reach[x]; ++a) {
                    if (!action_ok[x * A + a]) continue;
                    const auto p = model.successors(x, a);
                    for (std::size_t s = 0; s < S; ++s)
                        if (p[s] > 0.0 && reach[block + s]) {
                            reach[x] = 1;
                            grew = true;
                            break;
                        }
                }
            }
        }
        for (std::size_t x = 0; x < X; ++x)
            if (alive[x] && !reach[x]) {
                alive[x] = 0;
                changed = true;
            }
        for (std::size_t x = 0; x < X; ++x) {
            if (!alive[x] || x == target) continue;
            const std::size_t block = model.successor_block(x);
            bool any = false;
            for (std::size_t a = 0; a < A; ++a) {
                if (!action_ok[x * A + a]) continue;
                const auto p = model.successors(x, a);
                for (std::size_t s = 0; s < S; ++s)
                    if (p[s] > 0.0 && !alive[block + s]) {
                        action_ok[x * A + a] = 0;
                        changed = true;
                        break;
                    }
                any = any || action_ok[x * A + a];
            }
            if (!any) {
                alive[x] = 0;
                changed = true;
            }
        }
    }
    return alive;
}

}  // namespace detail

/// Minimal expected hitting times of `target` from every state (stochastic
/// shortest path value iteration). Unreachable sources get +inf.
inline std::vector<double> hitting_times(const AmdpModel& model, std::size_t target, double tolerance = 1e-9,
                                         std::int64_t* iterations = nullptr,
                                         StationaryPolicy* policy_out = nullptr) {
    const std::size_t X = model.size();
    const std::size_t A = model.n_actions();
    const std::size_t S = model.n_states();
    const auto alive = detail::almost_sure_reach(model, target);
    const std::int64_t cap = 1'000'000 * static_cast<std::int64_t>(model.period());

    std::vector<double> h(X, 0.0), next(X, 0.0);
    StationaryPolicy policy{std::vector<std::size_t>(X, 0)};
    constexpr double inf = std::numeric_limits<double>::infinity();
    for (std::size_t x = 0; x < X; ++x)
        if (!alive[x]) h[x] = inf;

    std::int64_t it = 0;
    double delta = inf;
    while (delta > tolerance) {
        if (++it > cap) throw ConvergenceError("hitting-time iteration hit its cap", delta);
        delta = 0.0;
        for (std::size_t x = 0; x < X; ++x) {
            if (x == target || !alive[x]) {
                next[x] = h[x];
                continue;
            }
            const std::size_t block = model.successor_block(x);
            double best = inf;
            for (std::size_t a = 0; a < A; ++a) {
                const auto p = model.successors(x, a);
                double ev = 1.0;
                bool safe = true;
                for (std::size_t s = 0; s < S; ++s) {
                    if (p[s] <= 0.0) continue;
                    if (!alive[block + s]) {
                        safe = false;
                        break;
                    }
                    ev += p[s] * h[block + s];
                }
                if (safe && ev < best) {
                    best = ev;
                    policy.actions[x] = a;
                }
            }
            next[x] = best;
            delta = std::max(delta, std::abs(best - h[x]) / std::max(1.0, best));
        }
        h.swap(next);
    }
    if (iterations) *iterations += it;
    if (policy_out) *policy_out = std::move(policy);
    return h;
}

/// Diameter: max over ordered pairs of distinct augmented states of the
/// minimal expected first-hitting time.
inline DiameterResult diameter(const AmdpModel& model, double tolerance = 1e-9) {
    DiameterResult result;
    const std::size_t X = model.size();
    for (std::size_t target = 0; target < X; ++target) {
        const auto h = hitting_times(model, target, tolerance, &result.iterations);
        for (std::size_t source = 0; source < X; ++source) {
            if (source == target) continue;
            if (!std::isfinite(h[source])) result.unreachable.emplace_back(source, target);
            result.value = std::max(result.value, h[source]);
        }
    }
    return result;
}

}  // namespace prl
