#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "fairgraph/error.hpp"
#include "fairgraph/model.hpp"

namespace fairgraph {

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// Cosine similarity; 0 when either vector has zero norm.
inline double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw Error("cosine of vectors with different lengths");
    }
    const double na = norm(a);
    const double nb = norm(b);
    if (na == 0.0 || nb == 0.0) {
        return 0.0;
    }
    return dot(a, b) / (na * nb);
}

inline constexpr std::size_t kMaxExactShapleyAgents = 10;

/// Shapley values of an n-player game by enumerating all n! orderings.
/// `value` maps a coalition bitmask to its worth and is evaluated once per
/// coalition.
inline std::vector<double> shapley_by_permutations(std::size_t n,
                                                   const std::function<double(std::uint32_t)>& value) {
    if (n == 0) {
        return {};
    }
    if (n > kMaxExactShapleyAgents) {
        throw CapabilityError("exact Shapley enumeration supports at most " +
                              std::to_string(kMaxExactShapleyAgents) + " agents, got " + std::to_string(n));
    }
    const std::uint32_t full = (1u << n);
    std::vector<double> worth(full);
    for (std::uint32_t m = 0; m < full; ++m) {
        worth[m] = value(m);
    }
    std::vector<double> phi(n, 0.0);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    double perms = 0.0;
    do {
        std::uint32_t mask = 0;
        for (std::size_t i : order) {
            const std::uint32_t next = mask | (1u << i);
            phi[i] += worth[next] - worth[mask];
            mask = next;
        }
        perms += 1.0;
    } while (std::next_permutation(order.begin(), order.end()));
    for (auto& p : phi) {
        p /= perms;
    }
    return phi;
}

/// Size-weighted mean gradient of the agents in `mask`.
inline std::vector<double> coalition_gradient(const std::vector<GradientVector>& grads,
                                              const std::vector<std::size_t>& sizes, std::uint32_t mask) {
    const std::size_t d = grads.front().size();
    std::vector<double> u(d, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (mask & (1u << i)) {
            total += static_cast<double>(sizes[i]);
        }
    }
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (!(mask & (1u << i))) {
            continue;
        }
        const double w = static_cast<double>(sizes[i]) / total;
        for (std::size_t j = 0; j < d; ++j) {
            u[j] += w * grads[i][j];
        }
    }
    return u;
}

/// Exact gradient-based Shapley values with nu(S) = cos(u_S, u_N), where u_S
/// is the size-weighted mean of the coalition's gradients and nu(empty) = 0.
inline std::vector<double> exact_shapley(const std::vector<GradientVector>& grads,
                                         const std::vector<std::size_t>& sizes) {
    const std::size_t n = grads.size();
    if (n > kMaxExactShapleyAgents) {
        throw CapabilityError("exact Shapley enumeration supports at most " +
                              std::to_string(kMaxExactShapleyAgents) + " agents, got " + std::to_string(n));
    }
    if (sizes.size() != n) {
        throw Error("exact_shapley: one size per gradient required");
    }
    if (n == 0) {
        return {};
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (grads[i].size() != grads[0].size()) {
            throw Error("exact_shapley: gradients differ in length");
        }
        if (sizes[i] == 0) {
            throw DegenerateInputError("exact_shapley: agent " + std::to_string(i) + " has no data");
        }
        if (norm(grads[i].values) == 0.0) {
            throw DegenerateInputError("exact_shapley: agent " + std::to_string(i) + " has a zero gradient");
        }
    }
    const auto full = coalition_gradient(grads, sizes, (1u << n) - 1);
    const double full_norm = norm(full);
    if (full_norm == 0.0) {
        throw DegenerateInputError("exact_shapley: grand-coalition gradient has zero norm");
    }
    return shapley_by_permutations(n, [&](std::uint32_t mask) {
        if (mask == 0) {
            return 0.0;
        }
        const auto u = coalition_gradient(grads, sizes, mask);
        const double un = norm(u);
        if (un == 0.0) {
            throw DegenerateInputError("exact_shapley: coalition gradient has zero norm");
        }
        return dot(u, full) / (un * full_norm);
    });
}

/// zeta_i = cos(u_i, u_N). Agents with a zero-norm upload get 0.
inline std::vector<double> approx_shapley(const std::vector<GradientVector>& grads, const GradientVector& global) {
    if (norm(global.values) == 0.0) {
        throw DegenerateInputError("approx_shapley: global gradient has zero norm");
    }
    std::vector<double> zeta;
    zeta.reserve(grads.size());
    for (const auto& g : grads) {
        zeta.push_back(cosine(g.values, global.values));
    }
    return zeta;
}

/// Per-agent values r_i^t with their history r_i^1..r_i^t.
struct ValueState {
    std::vector<double> values;
    std::vector<std::vector<double>> history;
    int round = 0;

    static ValueState initial(std::size_t n_agents) {
        return {std::vector<double>(n_agents, 1.0 / static_cast<double>(n_agents)),
                std::vector<std::vector<double>>(n_agents), 0};
    }

    std::size_t size() const { return values.size(); }

    bool operator==(const ValueState&) const = default;
};

struct ValueUpdate {
    ValueState state;
    bool reset = false; // normalizer was <= 1e-12; values fell back to 1/N
};

/// raw_i = r_i^{t-1} + alpha1 * (zeta_i + alpha2 * decay^(t-1) * d_i), then
/// normalized to sum to 1. `diversity_decay` = 1 leaves the diversity term
/// constant across rounds.
inline ValueUpdate update_values(const ValueState& state, std::span<const double> zeta,
                                 std::span<const double> diversity, double alpha1, double alpha2,
                                 double diversity_decay = 1.0) {
    const std::size_t n = state.size();
    if (zeta.size() != n || diversity.size() != n) {
        throw Error("update_values: per-agent inputs must match the number of agents");
    }
    if (alpha1 < 0.0 || alpha2 < 0.0) {
        throw Error("update_values: alpha1 and alpha2 must be >= 0");
    }
    const double decay = std::pow(diversity_decay, static_cast<double>(state.round));
    ValueUpdate out{state, false};
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        out.state.values[i] = state.values[i] + alpha1 * (zeta[i] + alpha2 * decay * diversity[i]);
        sum += out.state.values[i];
    }
    if (sum > 1e-12) {
        for (auto& v : out.state.values) {
            v /= sum;
        }
    } else {
        std::fill(out.state.values.begin(), out.state.values.end(), 1.0 / static_cast<double>(n));
        out.reset = true;
    }
    for (std::size_t i = 0; i < n; ++i) {
        out.state.history[i].push_back(out.state.values[i]);
    }
    ++out.state.round;
    return out;
}

/// Records the current values as this round's values without an assessment
/// (the opening round, before any upload exists).
inline ValueState carry_values(const ValueState& state) {
    ValueState out = state;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out.history[i].push_back(out.values[i]);
    }
    ++out.round;
    return out;
}

} // namespace fairgraph
