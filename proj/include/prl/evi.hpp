#pragma once

#include "prl/errors.hpp"
#include "prl/exact_solver.hpp"
#include "prl/pmdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

namespace prl {

/// L1 radius of the transition confidence ball:
/// min(2, sqrt(14 S N ln(2 A t_k / delta) / count)).
inline double p_radius(double count, double t_k, std::size_t S, std::size_t N, std::size_t A, double delta) {
    const double raw = std::sqrt(14.0 * static_cast<double>(S * N) *
                                 std::log(2.0 * static_cast<double>(A) * t_k / delta) / count);
    return std::min(2.0, raw);
}

/// Reward confidence half-width sqrt(7 ln(2 S A t_k / delta) / (2 count)).
inline double r_radius(double count, double t_k, std::size_t S, std::size_t A, double delta) {
    return std::sqrt(7.0 * std::log(2.0 * static_cast<double>(S * A) * t_k / delta) / (2.0 * count));
}

/// Successor indices sorted by value, best first; ties keep the lower index first.
inline void sort_by_value_desc(std::span<const double> u, std::vector<std::size_t>& order) {
    order.resize(u.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return u[i] > u[j]; });
}

/// Inner maximisation with a precomputed best-first order. Writes the
/// maximising distribution to `out` and returns sum(out * u).
inline double inner_max_p(std::span<const double> p_hat, double radius, std::span<const double> u,
                          std::span<const std::size_t> order, std::span<double> out) {
    const std::size_t S = p_hat.size();
    std::copy(p_hat.begin(), p_hat.end(), out.begin());
    if (S == 0) return 0.0;

    const std::size_t best = order[0];
    out[best] = std::min(1.0, p_hat[best] + 0.5 * radius);
    double total = 0.0;
    for (double v : out) total += v;
    for (std::size_t k = S; k-- > 1 && total > 1.0;) {
        const std::size_t l = order[k];
        const double rest = total - out[l];
        const double v = std::max(0.0, 1.0 - rest);
        total = rest + v;
        out[l] = v;
    }
    double value = 0.0;
    for (std::size_t s = 0; s < S; ++s) value += out[s] * u[s];
    return value;
}

/// Distribution within L1 distance `radius` of `p_hat` maximising sum(p * u).
inline std::vector<double> inner_max_p(std::span<const double> p_hat, double radius, std::span<const double> u) {
    std::vector<std::size_t> order;
    sort_by_value_desc(u, order);
    std::vector<double> out(p_hat.size());
    inner_max_p(p_hat, radius, u, order, out);
    return out;
}

/**
 * Plausible-model set around empirical estimates, for X = S*N agent states
 * (N = 1 gives the unaugmented layout). Transition estimates are over the S
 * successors at the next period index; flat state x = phase*S + s.
 */
struct ConfidenceSet {
    std::size_t n_states = 0;
    std::size_t n_actions = 0;
    std::size_t period = 1;
    std::vector<double> counts;    // [X][A], floored at 1
    std::vector<double> p_hat;     // [X][A][S]
    std::vector<double> r_hat;     // [X][A]
    std::vector<double> p_radius;  // [X][A], capped at 2
    std::vector<double> r_radius;  // [X][A]
    std::int64_t t_k = 1;
    double delta = 0.05;

    ConfidenceSet() = default;
    ConfidenceSet(std::size_t S, std::size_t A, std::size_t N)
        : n_states(S), n_actions(A), period(N),
          counts(S * N * A, 1.0), p_hat(S * N * A * S, 0.0), r_hat(S * N * A, 0.0),
          p_radius(S * N * A, 0.0), r_radius(S * N * A, 0.0) {}

    std::size_t size() const noexcept { return n_states * period; }
    std::size_t pair(std::size_t x, std::size_t a) const noexcept { return x * n_actions + a; }
    std::size_t successor_block(std::size_t x) const noexcept {
        return ((x / n_states + 1) % period) * n_states;
    }
    std::span<const double> p_row(std::size_t x, std::size_t a) const {
        return {p_hat.data() + pair(x, a) * n_states, n_states};
    }
    std::span<double> p_row(std::size_t x, std::size_t a) {
        return {p_hat.data() + pair(x, a) * n_states, n_states};
    }

    /// True when `model`'s transition rows and mean rewards all lie inside the
    /// set. Requires matching S, A and N.
    bool contains(const AmdpModel& model, double slack = 1e-12) const {
        if (model.n_states() != n_states || model.n_actions() != n_actions || model.period() != period)
            throw ValidationError("model", "shape does not match confidence set");
        for (std::size_t x = 0; x < size(); ++x) {
            for (std::size_t a = 0; a < n_actions; ++a) {
                const auto truth = model.successors(x, a);
                const auto est = p_row(x, a);
                double l1 = 0.0;
                for (std::size_t s = 0; s < n_states; ++s) l1 += std::abs(truth[s] - est[s]);
                if (l1 > p_radius[pair(x, a)] + slack) return false;
                if (std::abs(model.reward(x, a) - r_hat[pair(x, a)]) > r_radius[pair(x, a)] + slack) return false;
            }
        }
        return true;
    }
};

/// Point set at the true model: estimates equal the truth, every radius zero.
inline ConfidenceSet point_confidence_set(const AmdpModel& model) {
    ConfidenceSet conf(model.n_states(), model.n_actions(), model.period());
    for (std::size_t x = 0; x < model.size(); ++x) {
        for (std::size_t a = 0; a < model.n_actions(); ++a) {
            const auto row = model.successors(x, a);
            std::copy(row.begin(), row.end(), conf.p_row(x, a).begin());
            conf.r_hat[conf.pair(x, a)] = model.reward(x, a);
        }
    }
    return conf;
}

struct EviResult {
    StationaryPolicy policy;
    double rho_tilde = 0.0;
    std::vector<double> u;
    std::int64_t iterations = 0;
    double span = 0.0;
};

/**
 * Extended value iteration over a confidence set with the aperiodicity
 * transform:
 *
 *   u'(x) = max_a { min(1, r_hat + d_r) + tau * max_{p in ball} sum_s' p(s') u(s', n+1)
 *                   + (1 - tau) * u(x) }
 *
 * followed by subtracting u'(reference) with reference x = 0, i.e. (s=0, n=1).
 * Terminates once max - min of the one-sweep difference u' - u is at most
 * eps. rho_tilde is the midpoint of that difference; the greedy policy is
 * the argmax of the final sweep (lowest action index on ties).
 */
inline EviResult modified_evi(const ConfidenceSet& conf, double tau, double eps,
                              std::int64_t max_iterations = default_iteration_cap) {
    if (!(tau > 0.0 && tau < 1.0)) throw ValidationError("tau", "must lie in (0,1)");
    if (!(eps > 0.0)) throw ValidationError("eps", "must be positive");

    const std::size_t S = conf.n_states;
    const std::size_t A = conf.n_actions;
    const std::size_t N = conf.period;
    const std::size_t X = conf.size();

    std::vector<double> optimistic_r(X * A);
    for (std::size_t i = 0; i < X * A; ++i) optimistic_r[i] = std::min(1.0, conf.r_hat[i] + conf.r_radius[i]);

    std::vector<double> u(X, 0.0), next(X, 0.0), scratch(S);
    std::vector<std::vector<std::size_t>> order(N);
    StationaryPolicy policy{std::vector<std::size_t>(X, 0)};
    double span = std::numeric_limits<double>::infinity();

    for (std::int64_t it = 1; it <= max_iterations; ++it) {
        for (std::size_t phase = 0; phase < N; ++phase)
            sort_by_value_desc(std::span<const double>(u).subspan(phase * S, S), order[phase]);

        for (std::size_t x = 0; x < X; ++x) {
            const std::size_t block = conf.successor_block(x);
            const std::span<const double> u_next(u.data() + block, S);
            const auto& ord = order[block / S];
            double best = -std::numeric_limits<double>::infinity();
            std::size_t best_a = 0;
            for (std::size_t a = 0; a < A; ++a) {
                const std::size_t k = conf.pair(x, a);
                const double ev = inner_max_p(conf.p_row(x, a), conf.p_radius[k], u_next, ord, scratch);
                const double q = optimistic_r[k] + tau * ev + (1.0 - tau) * u[x];
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

        if (span <= eps) return {std::move(policy), 0.5 * (hi + lo), u, it, span};
    }
    throw ConvergenceError("modified extended value iteration hit its iteration cap", span);
}

}  // namespace prl
