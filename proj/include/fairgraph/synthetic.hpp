#pragma once

#include <cstdint>
#include <random>
#include <set>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairgraph/graph.hpp"
#include "fairgraph/partition.hpp"

namespace fairgraph {

/// Generator for a two-class corpus whose label lives in the wiring.
///
/// Every graph is a chain of small rings joined by bridges, with a few
/// pendant nodes. Node labels have the same marginal distribution in both
/// classes; class 0 wires mostly equal-label neighbors, class 1 mostly
/// different-label neighbors. Random edge flips therefore erode the signal.
struct SyntheticOptions {
    int n_graphs = 400;
    int n_node_labels = 3;
    int min_rings = 2;
    int max_rings = 4;
    int min_ring_len = 3;
    int max_ring_len = 6;
    int max_pendants = 3;
    double affinity = 0.85; // chance a wiring choice follows the class rule
    bool random_class1 = false; // class 1 draws neighbor labels uniformly instead of avoiding equal labels
    std::uint64_t seed = 7;
};

inline SyntheticOptions synthetic_from_json(const nlohmann::json& j, SyntheticOptions o = {}) {
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) {
            field = j.at(key).get<std::decay_t<decltype(field)>>();
        }
    };
    get("n_graphs", o.n_graphs);
    get("n_node_labels", o.n_node_labels);
    get("min_rings", o.min_rings);
    get("max_rings", o.max_rings);
    get("min_ring_len", o.min_ring_len);
    get("max_ring_len", o.max_ring_len);
    get("max_pendants", o.max_pendants);
    get("affinity", o.affinity);
    get("random_class1", o.random_class1);
    get("seed", o.seed);
    return o;
}

inline Graph generate_graph(int class_label, const SyntheticOptions& o, Rng& rng) {
    std::uniform_int_distribution<int> label_dist(0, o.n_node_labels - 1);
    std::uniform_int_distribution<int> rings_dist(o.min_rings, o.max_rings);
    std::uniform_int_distribution<int> len_dist(o.min_ring_len, o.max_ring_len);
    std::uniform_int_distribution<int> pendant_dist(0, o.max_pendants);
    std::bernoulli_distribution follow(o.affinity);

    std::vector<int> labels;
    std::vector<Edge> edges;
    // label for a node wired to `anchor` under the class rule
    auto next_label = [&](int anchor) {
        if (class_label == 1 && o.random_class1) {
            return label_dist(rng);
        }
        const bool same = class_label == 0 ? follow(rng) : !follow(rng);
        if (same || o.n_node_labels == 1) {
            return anchor;
        }
        std::uniform_int_distribution<int> other(1, o.n_node_labels - 1);
        return (anchor + other(rng)) % o.n_node_labels;
    };
    auto add_node = [&](int label) {
        labels.push_back(label);
        return static_cast<int>(labels.size()) - 1;
    };

    const int rings = rings_dist(rng);
    int attach = -1;
    for (int r = 0; r < rings; ++r) {
        const int len = len_dist(rng);
        const int first = attach < 0 ? add_node(label_dist(rng)) : add_node(next_label(labels[attach]));
        if (attach >= 0) {
            edges.push_back(make_edge(attach, first));
        }
        int prev = first;
        for (int j = 1; j < len; ++j) {
            int v = add_node(next_label(labels[prev]));
            edges.push_back(make_edge(prev, v));
            prev = v;
        }
        edges.push_back(make_edge(prev, first));
        std::uniform_int_distribution<int> pick(first, static_cast<int>(labels.size()) - 1);
        attach = pick(rng);
    }
    const int pendants = pendant_dist(rng);
    for (int p = 0; p < pendants; ++p) {
        std::uniform_int_distribution<int> pick(0, static_cast<int>(labels.size()) - 1);
        const int anchor = pick(rng);
        const int v = add_node(next_label(labels[anchor]));
        edges.push_back(make_edge(anchor, v));
    }
    return Graph(std::move(labels), std::move(edges), {}, class_label);
}

/// Balanced corpus: graph i has class i % 2.
inline std::vector<Graph> generate_corpus(const SyntheticOptions& o) {
    Rng rng(o.seed);
    std::vector<Graph> graphs;
    graphs.reserve(static_cast<std::size_t>(o.n_graphs));
    for (int i = 0; i < o.n_graphs; ++i) {
        graphs.push_back(generate_graph(i % 2, o, rng));
    }
    return graphs;
}

} // namespace fairgraph
