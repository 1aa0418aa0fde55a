#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "fairgraph/error.hpp"
#include "fairgraph/graph.hpp"

namespace fairgraph {

using Rng = std::mt19937_64;

// Decorrelates child seeds derived from one experiment seed (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

enum class PartitionMode {
    Iid,       // shuffled round-robin shards
    LabelSkew, // shuffled, then stably grouped by class before dealing contiguous blocks
};

struct PartitionOptions {
    int n_agents = 10;
    double global_test_frac = 0.1;
    double local_test_frac = 0.1;
    std::uint64_t seed = 0;
    PartitionMode mode = PartitionMode::Iid;
};

/// Splits `graphs` into a server test set and `n_agents` local train/test shards.
///
/// round(global_test_frac * |graphs|) graphs are reserved for the server after
/// a seeded shuffle; the remainder is dealt into shards whose sizes differ by
/// at most one. Each shard keeps round(local_test_frac * |shard|) graphs for
/// testing (at least one). Throws SizingError when some agent would end up
/// with fewer than 2 train or 1 test graph.
inline FederationData partition(const std::vector<Graph>& graphs, const PartitionOptions& opt) {
    if (opt.n_agents < 2) {
        throw SizingError("partition needs at least 2 agents");
    }
    for (double f : {opt.global_test_frac, opt.local_test_frac}) {
        if (!(f > 0.0 && f < 1.0)) {
            throw SizingError("test fractions must lie in (0, 1)");
        }
    }
    const std::size_t total = graphs.size();
    const auto n_agents = static_cast<std::size_t>(opt.n_agents);
    const auto n_global = static_cast<std::size_t>(std::llround(opt.global_test_frac * double(total)));
    if (n_global >= total || (total - n_global) / n_agents < 3) {
        throw SizingError("only " + std::to_string(total) + " graphs for " +
                          std::to_string(n_agents) + " agents");
    }

    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(opt.seed);
    std::shuffle(order.begin(), order.end(), rng);

    FederationData fed;
    for (std::size_t i = 0; i < n_global; ++i) {
        fed.global_test.push_back(graphs[order[i]]);
    }
    std::vector<std::size_t> rest(order.begin() + static_cast<std::ptrdiff_t>(n_global), order.end());

    std::vector<std::vector<std::size_t>> shards(n_agents);
    if (opt.mode == PartitionMode::Iid) {
        for (std::size_t i = 0; i < rest.size(); ++i) {
            shards[i % n_agents].push_back(rest[i]);
        }
    } else {
        std::stable_sort(rest.begin(), rest.end(), [&](std::size_t a, std::size_t b) {
            return graphs[a].class_label() < graphs[b].class_label();
        });
        std::size_t pos = 0;
        for (std::size_t a = 0; a < n_agents; ++a) {
            std::size_t len = rest.size() / n_agents + (a < rest.size() % n_agents ? 1 : 0);
            shards[a].assign(rest.begin() + static_cast<std::ptrdiff_t>(pos),
                             rest.begin() + static_cast<std::ptrdiff_t>(pos + len));
            pos += len;
        }
        // dealing contiguous class blocks leaves each shard sorted by class; reshuffle locally
        for (auto& s : shards) {
            std::shuffle(s.begin(), s.end(), rng);
        }
    }

    for (std::size_t a = 0; a < n_agents; ++a) {
        const auto& shard = shards[a];
        auto n_test = static_cast<std::size_t>(std::llround(opt.local_test_frac * double(shard.size())));
        n_test = std::max<std::size_t>(n_test, 1);
        if (shard.size() < n_test + 2) {
            throw SizingError("agent " + std::to_string(a) + " would receive only " +
                              std::to_string(shard.size()) + " graphs");
        }
        AgentDataset ds;
        ds.agent_id = static_cast<int>(a);
        const std::size_t n_train = shard.size() - n_test;
        for (std::size_t i = 0; i < shard.size(); ++i) {
            (i < n_train ? ds.train : ds.test).push_back(graphs[shard[i]]);
        }
        fed.agents.push_back(std::move(ds));
    }
    return fed;
}

/// Applies floor(flip_ratio * |E|) random edge flips. Each flip removes a
/// uniformly chosen existing edge or inserts a uniformly chosen absent
/// non-self-loop pair with probability 1/2 each; when one option is
/// impossible (no edges, or a complete graph) the other is taken. Inserted
/// edges are unlabeled. Node labels and the class label are untouched.
inline Graph perturb_edges(const Graph& g, double flip_ratio, std::uint64_t seed) {
    if (!(flip_ratio >= 0.0 && flip_ratio < 1.0)) {
        throw Error("flip_ratio must lie in [0, 1)");
    }
    const auto flips = static_cast<std::size_t>(std::floor(flip_ratio * double(g.num_edges())));
    if (flips == 0) {
        return g;
    }
    const int n = static_cast<int>(g.num_nodes());
    const std::size_t max_edges = static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2;

    std::vector<Edge> edges = g.edges();
    std::vector<int> labels = g.edge_labels();
    std::set<Edge> present(edges.begin(), edges.end());
    Rng rng(seed);
    std::bernoulli_distribution coin(0.5);

    for (std::size_t f = 0; f < flips; ++f) {
        bool remove = coin(rng);
        if (edges.empty()) {
            remove = false;
        } else if (edges.size() == max_edges) {
            remove = true;
        }
        if (remove) {
            std::uniform_int_distribution<std::size_t> pick(0, edges.size() - 1);
            std::size_t i = pick(rng);
            present.erase(edges[i]);
            edges[i] = edges.back();
            labels[i] = labels.back();
            edges.pop_back();
            labels.pop_back();
        } else {
            std::vector<Edge> absent;
            absent.reserve(max_edges - edges.size());
            for (int u = 0; u < n; ++u) {
                for (int v = u + 1; v < n; ++v) {
                    if (!present.count({u, v})) {
                        absent.emplace_back(u, v);
                    }
                }
            }
            std::uniform_int_distribution<std::size_t> pick(0, absent.size() - 1);
            Edge e = absent[pick(rng)];
            present.insert(e);
            edges.push_back(e);
            labels.push_back(kNoLabel);
        }
    }
    return Graph(g.node_labels(), std::move(edges), std::move(labels), g.class_label());
}

} // namespace fairgraph
