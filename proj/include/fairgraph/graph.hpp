#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fairgraph/error.hpp"

namespace fairgraph {

// Edge label used for edges that carry none.
inline constexpr int kNoLabel = -1;

using Edge = std::pair<int, int>;

inline Edge make_edge(int u, int v) { return u < v ? Edge{u, v} : Edge{v, u}; }

/// Labeled undirected simple graph with a class label.
///
/// Edges are stored normalized (first < second) and sorted, with a parallel
/// array of edge labels. Construction validates the invariants; a Graph that
/// exists is always well formed.
class Graph {
public:
    Graph() = default;

    /// Throws StructuralError on self-loops, duplicate edges, endpoints out of
    /// range, negative node labels or a negative class label. `edge_labels`
    /// may be empty (every edge reads as kNoLabel) or parallel to `edges`.
    Graph(std::vector<int> node_labels, std::vector<Edge> edges, std::vector<int> edge_labels,
          int class_label)
        : node_labels_(std::move(node_labels)), class_label_(class_label) {
        if (class_label_ < 0) {
            throw StructuralError("graph class label must be >= 0");
        }
        for (int l : node_labels_) {
            if (l < 0) {
                throw StructuralError("node labels must be >= 0");
            }
        }
        if (!edge_labels.empty() && edge_labels.size() != edges.size()) {
            throw StructuralError("edge label count does not match edge count");
        }
        const int n = static_cast<int>(node_labels_.size());
        std::vector<std::pair<Edge, int>> tagged;
        tagged.reserve(edges.size());
        for (std::size_t i = 0; i < edges.size(); ++i) {
            auto [u, v] = edges[i];
            if (u < 0 || v < 0 || u >= n || v >= n) {
                throw StructuralError("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                                      ") references a node outside [0, " + std::to_string(n) + ")");
            }
            if (u == v) {
                throw StructuralError("self-loop on node " + std::to_string(u));
            }
            tagged.emplace_back(make_edge(u, v), edge_labels.empty() ? kNoLabel : edge_labels[i]);
        }
        std::sort(tagged.begin(), tagged.end());
        for (std::size_t i = 1; i < tagged.size(); ++i) {
            if (tagged[i].first == tagged[i - 1].first) {
                throw StructuralError("duplicate edge (" + std::to_string(tagged[i].first.first) +
                                      ", " + std::to_string(tagged[i].first.second) + ")");
            }
        }
        edges_.reserve(tagged.size());
        edge_labels_.reserve(tagged.size());
        for (auto& [e, l] : tagged) {
            edges_.push_back(e);
            edge_labels_.push_back(l);
        }
    }

    std::size_t num_nodes() const { return node_labels_.size(); }
    std::size_t num_edges() const { return edges_.size(); }

    const std::vector<int>& node_labels() const { return node_labels_; }
    const std::vector<Edge>& edges() const { return edges_; }
    const std::vector<int>& edge_labels() const { return edge_labels_; }
    int class_label() const { return class_label_; }

    bool has_edge_labels() const {
        return std::any_of(edge_labels_.begin(), edge_labels_.end(),
                           [](int l) { return l != kNoLabel; });
    }

    /// Label of edge {u, v}; kNoLabel when the edge is unlabeled or absent.
    int edge_label(int u, int v) const {
        auto e = make_edge(u, v);
        auto it = std::lower_bound(edges_.begin(), edges_.end(), e);
        if (it == edges_.end() || *it != e) {
            return kNoLabel;
        }
        return edge_labels_[static_cast<std::size_t>(it - edges_.begin())];
    }

    bool has_edge(int u, int v) const {
        return std::binary_search(edges_.begin(), edges_.end(), make_edge(u, v));
    }

    /// Sorted neighbor lists.
    std::vector<std::vector<int>> adjacency() const {
        std::vector<std::vector<int>> adj(num_nodes());
        for (auto [u, v] : edges_) {
            adj[static_cast<std::size_t>(u)].push_back(v);
            adj[static_cast<std::size_t>(v)].push_back(u);
        }
        for (auto& nb : adj) {
            std::sort(nb.begin(), nb.end());
        }
        return adj;
    }

    std::vector<int> degrees() const {
        std::vector<int> deg(num_nodes(), 0);
        for (auto [u, v] : edges_) {
            ++deg[static_cast<std::size_t>(u)];
            ++deg[static_cast<std::size_t>(v)];
        }
        return deg;
    }

    friend bool operator==(const Graph&, const Graph&) = default;

private:
    std::vector<int> node_labels_;
    std::vector<Edge> edges_;
    std::vector<int> edge_labels_;
    int class_label_ = 0;
};

/// One agent's local data after splitting.
struct AgentDataset {
    int agent_id = 0;
    std::vector<Graph> train;
    std::vector<Graph> test;
};

struct FederationData {
    std::vector<AgentDataset> agents;
    std::vector<Graph> global_test;

    std::size_t num_agents() const { return agents.size(); }
};

inline int num_classes(const std::vector<Graph>& graphs) {
    int c = 0;
    for (const auto& g : graphs) {
        c = std::max(c, g.class_label() + 1);
    }
    return c;
}

inline int num_classes(const FederationData& fed) {
    int c = num_classes(fed.global_test);
    for (const auto& a : fed.agents) {
        c = std::max({c, num_classes(a.train), num_classes(a.test)});
    }
    return c;
}

/// Largest node label + 1 over every graph in the federation.
inline int num_node_labels(const FederationData& fed) {
    int m = 0;
    auto scan = [&m](const std::vector<Graph>& gs) {
        for (const auto& g : gs) {
            for (int l : g.node_labels()) {
                m = std::max(m, l + 1);
            }
        }
    };
    scan(fed.global_test);
    for (const auto& a : fed.agents) {
        scan(a.train);
        scan(a.test);
    }
    return m;
}

} // namespace fairgraph
