#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairgraph/error.hpp"
#include "fairgraph/federation.hpp"
#include "fairgraph/valuation.hpp"

namespace fairgraph {

/// Sample Pearson correlation. Throws when either sequence is constant.
inline double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw Error("pearson: sequences must have equal length >= 2");
    }
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw Error("pearson: correlation is undefined for a constant sequence");
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// Ranks starting at 1; ties share their average rank.
inline std::vector<double> average_ranks(std::span<const double> x) {
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(x.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) {
            ++j;
        }
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            ranks[order[k]] = r;
        }
        i = j + 1;
    }
    return ranks;
}

inline double spearman(std::span<const double> x, std::span<const double> y) {
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    return pearson(rx, ry);
}

/// rho(self-train accuracy, federated accuracy) across agents.
inline double gradient_fairness(std::span<const double> selftrain_acc, std::span<const double> federated_acc) {
    if (selftrain_acc.size() < 3) {
        throw Error("gradient_fairness needs at least 3 agents");
    }
    return pearson(selftrain_acc, federated_acc);
}

enum class Bucket { Low, Med, High };

inline std::string_view bucket_name(Bucket b) {
    switch (b) {
    case Bucket::Low: return "LOW";
    case Bucket::Med: return "MED";
    case Bucket::High: return "HIGH";
    }
    return "?";
}

inline Bucket parse_bucket(std::string_view s) {
    if (s == "LOW" || s == "low") return Bucket::Low;
    if (s == "MED" || s == "med" || s == "MEDIUM" || s == "medium") return Bucket::Med;
    if (s == "HIGH" || s == "high") return Bucket::High;
    throw ConfigError("unknown bucket '" + std::string(s) + "'");
}

/// Mean per-round payoff of the agents in `bucket`, over one report stream.
inline double bucket_mean_payoff(const std::vector<RoundReport>& stream, std::span<const Bucket> buckets,
                                 Bucket bucket) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& r : stream) {
        if (r.agents.size() != buckets.size()) {
            throw Error("payoff_fairness: bucket assignment does not cover the agents");
        }
        for (std::size_t i = 0; i < r.agents.size(); ++i) {
            if (buckets[i] != bucket) {
                continue;
            }
            if (!r.agents[i].payoff) {
                throw Error("payoff_fairness: report stream carries no payoffs");
            }
            sum += *r.agents[i].payoff;
            ++count;
        }
    }
    if (count == 0) {
        throw Error("payoff_fairness: bucket " + std::string(bucket_name(bucket)) + " is empty");
    }
    return sum / static_cast<double>(count);
}

/// Mean per-round payoff within each bucket that has agents, averaged over seeds.
inline std::map<Bucket, double> payoff_fairness(const std::vector<std::vector<RoundReport>>& streams,
                                                std::span<const Bucket> buckets) {
    if (streams.empty() || buckets.empty()) {
        throw Error("payoff_fairness: no streams or no buckets");
    }
    std::map<Bucket, double> out;
    for (Bucket b : {Bucket::Low, Bucket::Med, Bucket::High}) {
        if (std::find(buckets.begin(), buckets.end(), b) == buckets.end()) {
            continue;
        }
        double sum = 0.0;
        for (const auto& s : streams) {
            sum += bucket_mean_payoff(s, buckets, b);
        }
        out[b] = sum / static_cast<double>(streams.size());
    }
    return out;
}

enum class PayoffScheme { Equal, Individual, Union, ShapleyVolume };

inline PayoffScheme parse_payoff_scheme(std::string_view s) {
    if (s == "EQUAL" || s == "equal") return PayoffScheme::Equal;
    if (s == "INDIVIDUAL" || s == "individual") return PayoffScheme::Individual;
    if (s == "UNION" || s == "union") return PayoffScheme::Union;
    if (s == "SHAPLEY_VOLUME" || s == "shapley_volume" || s == "shapley") return PayoffScheme::ShapleyVolume;
    throw ConfigError("unknown payoff scheme '" + std::string(s) + "'");
}

/// Comparison payoff schemes over the volume function Phi(S) = log(1 + sum_{j in S} |D_j|).
inline std::vector<double> baseline_payoffs(PayoffScheme scheme, std::span<const std::size_t> sizes, double budget) {
    const std::size_t n = sizes.size();
    if (n == 0) {
        return {};
    }
    for (auto s : sizes) {
        if (s == 0) {
            throw Error("baseline_payoffs: sizes must be positive");
        }
    }
    auto volume = [](double total) { return std::log1p(total); };
    std::vector<double> share(n);
    switch (scheme) {
    case PayoffScheme::Equal:
        std::fill(share.begin(), share.end(), 1.0);
        break;
    case PayoffScheme::Individual:
        for (std::size_t i = 0; i < n; ++i) {
            share[i] = volume(static_cast<double>(sizes[i]));
        }
        break;
    case PayoffScheme::Union: {
        const double total = std::accumulate(sizes.begin(), sizes.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            share[i] = volume(total) - volume(total - static_cast<double>(sizes[i]));
        }
        break;
    }
    case PayoffScheme::ShapleyVolume:
        share = shapley_by_permutations(n, [&](std::uint32_t mask) {
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (mask & (1u << i)) {
                    total += static_cast<double>(sizes[i]);
                }
            }
            return volume(total);
        });
        break;
    }
    const double sum = std::accumulate(share.begin(), share.end(), 0.0);
    for (auto& s : share) {
        s = s / sum * budget;
    }
    return share;
}

struct ShapleyAgreement {
    double mean_spearman = 0.0;
    double min_spearman = 1.0;
    double max_efficiency_error = 0.0; // max |sum_i phi_i - 1|
    int trials = 0;
};

/// Compares the cosine approximation against exact Shapley values on
/// `trials` instances of n standard-normal gradients of length `dim` with
/// random dataset sizes in [10, 100]. Both sides use the size-weighted
/// grand-coalition gradient.
inline ShapleyAgreement verify_shapley(std::size_t n, int trials, std::size_t dim, std::uint64_t seed) {
    if (n < 2 || trials < 1 || dim < 1) {
        throw Error("verify_shapley needs n >= 2, trials >= 1, dim >= 1");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> size_dist(10, 100);
    ShapleyAgreement out;
    double sum = 0.0;
    for (int t = 0; t < trials; ++t) {
        std::vector<GradientVector> grads(n, GradientVector::zeros(dim));
        std::vector<std::size_t> sizes(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < dim; ++j) {
                grads[i][j] = gauss(rng);
            }
            sizes[i] = size_dist(rng);
        }
        const auto phi = exact_shapley(grads, sizes);
        const GradientVector global(coalition_gradient(grads, sizes, (1u << n) - 1));
        const auto zeta = approx_shapley(grads, global);
        const double rho = spearman(zeta, phi);
        sum += rho;
        out.min_spearman = std::min(out.min_spearman, rho);
        const double eff = std::accumulate(phi.begin(), phi.end(), 0.0);
        out.max_efficiency_error = std::max(out.max_efficiency_error, std::abs(eff - 1.0));
    }
    out.trials = trials;
    out.mean_spearman = sum / static_cast<double>(trials);
    return out;
}

} // namespace fairgraph
