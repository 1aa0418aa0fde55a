#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairgraph/error.hpp"
#include "fairgraph/graph.hpp"

namespace fairgraph {

enum class MotifKind { Bond, Ring };

/// Canonical bond or ring key.
///
/// Bond: nodes = (label_u, label_v) sorted ascending, edges = (edge_label).
/// Ring: the lexicographically smallest (nodes, edges) pair over all
/// rotations and reflections of the labeled cycle, where edges[j] joins
/// nodes[j] and nodes[j + 1 mod L].
struct MotifKey {
    MotifKind kind = MotifKind::Bond;
    std::vector<int> nodes;
    std::vector<int> edges;

    auto operator<=>(const MotifKey&) const = default;
    bool operator==(const MotifKey&) const = default;

    /// Byte form used for ordering and export, e.g. "ring((0,0,0),(None,None,None))".
    std::string to_string() const {
        auto seq = [](const std::vector<int>& xs) {
            std::string s = "(";
            for (std::size_t i = 0; i < xs.size(); ++i) {
                if (i) {
                    s += ',';
                }
                s += xs[i] == kNoLabel ? std::string("None") : std::to_string(xs[i]);
            }
            return s + ")";
        };
        std::string head = kind == MotifKind::Bond ? "bond(" : "ring(";
        std::string e = kind == MotifKind::Bond ? (edges.at(0) == kNoLabel ? "None" : std::to_string(edges[0]))
                                                : seq(edges);
        return head + seq(nodes) + "," + e + ")";
    }
};

inline MotifKey make_bond_key(int label_u, int label_v, int edge_label) {
    return MotifKey{MotifKind::Bond, {std::min(label_u, label_v), std::max(label_u, label_v)}, {edge_label}};
}

/// Canonicalizes a labeled cycle: edge_labels[j] joins node_labels[j] and node_labels[j + 1 mod L].
inline MotifKey make_ring_key(const std::vector<int>& node_labels, const std::vector<int>& edge_labels) {
    const std::size_t L = node_labels.size();
    if (L < 3 || edge_labels.size() != L) {
        throw Error("ring needs L >= 3 nodes and L edge labels");
    }
    std::pair<std::vector<int>, std::vector<int>> best;
    bool have = false;
    std::vector<int> ns(L), es(L);
    for (std::size_t r = 0; r < L; ++r) {
        for (int dir = 0; dir < 2; ++dir) {
            for (std::size_t j = 0; j < L; ++j) {
                if (dir == 0) {
                    ns[j] = node_labels[(r + j) % L];
                    es[j] = edge_labels[(r + j) % L];
                } else {
                    // walk backwards from r: node r-j, edge between r-j and r-j-1
                    ns[j] = node_labels[(r + L - j) % L];
                    es[j] = edge_labels[(r + 2 * L - j - 1) % L];
                }
            }
            if (!have || std::tie(ns, es) < std::tie(best.first, best.second)) {
                best = {ns, es};
                have = true;
            }
        }
    }
    return MotifKey{MotifKind::Ring, std::move(best.first), std::move(best.second)};
}

/// Bridge edges (edges on no cycle), iterative lowlink DFS. Returned sorted.
inline std::vector<Edge> find_bridges(const Graph& g) {
    const auto adj = g.adjacency();
    const std::size_t n = g.num_nodes();
    std::vector<int> disc(n, -1), low(n, 0);
    std::vector<Edge> bridges;
    int timer = 0;
    struct Frame {
        int v;
        int parent;
        std::size_t next;
    };
    for (std::size_t root = 0; root < n; ++root) {
        if (disc[root] != -1) {
            continue;
        }
        std::vector<Frame> stack{{static_cast<int>(root), -1, 0}};
        disc[root] = low[root] = timer++;
        while (!stack.empty()) {
            auto& f = stack.back();
            const auto v = static_cast<std::size_t>(f.v);
            if (f.next < adj[v].size()) {
                int w = adj[v][f.next++];
                auto wu = static_cast<std::size_t>(w);
                if (w == f.parent) {
                    continue; // simple graph: the single parent edge
                }
                if (disc[wu] == -1) {
                    disc[wu] = low[wu] = timer++;
                    stack.push_back({w, f.v, 0});
                } else {
                    low[v] = std::min(low[v], disc[wu]);
                }
            } else {
                int child = f.v;
                int parent = f.parent;
                stack.pop_back();
                if (parent >= 0) {
                    auto pu = static_cast<std::size_t>(parent);
                    auto cu = static_cast<std::size_t>(child);
                    low[pu] = std::min(low[pu], low[cu]);
                    if (low[cu] > disc[pu]) {
                        bridges.push_back(make_edge(parent, child));
                    }
                }
            }
        }
    }
    std::sort(bridges.begin(), bridges.end());
    return bridges;
}

/// All chordless (induced) cycles of length 3..max_len as vertex sequences in
/// cycle order, each reported once, starting at its smallest vertex.
inline std::vector<std::vector<int>> chordless_cycles(const Graph& g, int max_len) {
    const auto adj = g.adjacency();
    auto adjacent = [&](int a, int b) {
        const auto& nb = adj[static_cast<std::size_t>(a)];
        return std::binary_search(nb.begin(), nb.end(), b);
    };
    std::vector<std::vector<int>> cycles;
    std::vector<int> path;
    std::vector<char> on_path(g.num_nodes(), 0);

    // path = s, p1, ..., pk is an induced path with every p_j > s
    auto extend = [&](auto&& self) -> void {
        const int s = path.front();
        const int last = path.back();
        for (int w : adj[static_cast<std::size_t>(last)]) {
            if (w <= s || on_path[static_cast<std::size_t>(w)]) {
                continue;
            }
            bool chord = false;
            for (std::size_t j = 1; j + 1 < path.size(); ++j) {
                if (adjacent(w, path[j])) {
                    chord = true;
                    break;
                }
            }
            if (chord) {
                continue;
            }
            if (adjacent(w, s)) {
                // closes the cycle; each cycle is seen in both directions, keep one
                if (path[1] < w) {
                    auto c = path;
                    c.push_back(w);
                    cycles.push_back(std::move(c));
                }
                continue;
            }
            if (static_cast<int>(path.size()) + 2 <= max_len) {
                path.push_back(w);
                on_path[static_cast<std::size_t>(w)] = 1;
                self(self);
                on_path[static_cast<std::size_t>(w)] = 0;
                path.pop_back();
            }
        }
    };

    for (std::size_t s = 0; s < g.num_nodes(); ++s) {
        for (int p1 : adj[s]) {
            if (p1 <= static_cast<int>(s)) {
                continue;
            }
            path = {static_cast<int>(s), p1};
            on_path[s] = on_path[static_cast<std::size_t>(p1)] = 1;
            if (max_len >= 3) {
                extend(extend);
            }
            on_path[s] = on_path[static_cast<std::size_t>(p1)] = 0;
        }
    }
    return cycles;
}

/// Occurrence counts C(k)_G: one per bridge edge for bonds, one per distinct
/// vertex set for rings.
inline std::map<MotifKey, int> count_motifs(const Graph& g, int max_ring_len) {
    if (max_ring_len < 3) {
        throw Error("max_ring_len must be >= 3");
    }
    std::map<MotifKey, int> counts;
    const auto& labels = g.node_labels();
    for (auto [u, v] : find_bridges(g)) {
        ++counts[make_bond_key(labels[static_cast<std::size_t>(u)], labels[static_cast<std::size_t>(v)],
                               g.edge_label(u, v))];
    }
    for (const auto& cycle : chordless_cycles(g, max_ring_len)) {
        const std::size_t L = cycle.size();
        std::vector<int> ns(L), es(L);
        for (std::size_t j = 0; j < L; ++j) {
            ns[j] = labels[static_cast<std::size_t>(cycle[j])];
            es[j] = g.edge_label(cycle[j], cycle[(j + 1) % L]);
        }
        ++counts[make_ring_key(ns, es)];
    }
    return counts;
}

inline std::set<MotifKey> extract_motifs(const Graph& g, int max_ring_len) {
    std::set<MotifKey> keys;
    for (auto& [k, c] : count_motifs(g, max_ring_len)) {
        keys.insert(k);
    }
    return keys;
}

/// Retained motif keys with their TF-IDF scores and per-agent membership.
struct MotifVocabulary {
    std::vector<MotifKey> keys;  // sorted by to_string()
    std::vector<double> tfidf;   // parallel to keys
    int max_ring_len = 8;
    double beta_s = 0.9;
    double cutoff = 0.0;         // smallest retained score
    std::size_t candidates = 0;  // keys seen before pruning
    // membership[agent][k] = indexes into that agent's train set of graphs containing key k
    std::vector<std::vector<std::vector<std::size_t>>> membership;

    std::size_t size() const { return keys.size(); }

    std::optional<std::size_t> index_of(const MotifKey& key) const {
        for (std::size_t k = 0; k < keys.size(); ++k) {
            if (keys[k] == key) {
                return k;
            }
        }
        return std::nullopt;
    }
};

/// For each vocabulary key, the indexes of `graphs` that contain it.
inline std::vector<std::vector<std::size_t>> motif_membership(const std::vector<MotifKey>& keys,
                                                              const std::vector<Graph>& graphs,
                                                              int max_ring_len) {
    std::map<MotifKey, std::size_t> index;
    for (std::size_t k = 0; k < keys.size(); ++k) {
        index.emplace(keys[k], k);
    }
    std::vector<std::vector<std::size_t>> members(keys.size());
    for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
        for (const auto& key : extract_motifs(graphs[gi], max_ring_len)) {
            if (auto it = index.find(key); it != index.end()) {
                members[it->second].push_back(gi);
            }
        }
    }
    return members;
}

/// Builds the pooled TF-IDF motif vocabulary over every agent's train graphs.
///
/// Per agent i and graph G containing k:
///   T_{k,G} = C(k)_G * log((1 + |D_i|) / (1 + |D_{i,k}|)) + 1
/// T_k is the mean of T_{k,G} over all containing graphs across agents. The
/// top ceil(beta_s * |candidates|) keys by T_k (ties by byte form) are kept.
inline MotifVocabulary build_vocabulary(const FederationData& fed, int max_ring_len, double beta_s) {
    if (!(beta_s > 0.0 && beta_s <= 1.0)) {
        throw ConfigError("beta_s must lie in (0, 1]");
    }
    std::size_t total = 0;
    for (const auto& a : fed.agents) {
        total += a.train.size();
    }
    if (fed.agents.empty() || total == 0) {
        throw Error("cannot build a motif vocabulary from an empty federation");
    }

    std::vector<std::vector<std::map<MotifKey, int>>> counts(fed.agents.size());
    for (std::size_t i = 0; i < fed.agents.size(); ++i) {
        for (const auto& g : fed.agents[i].train) {
            counts[i].push_back(count_motifs(g, max_ring_len));
        }
    }

    std::map<MotifKey, std::pair<double, std::size_t>> acc; // sum of T_{k,G}, #containing graphs
    for (std::size_t i = 0; i < fed.agents.size(); ++i) {
        const double n_local = static_cast<double>(counts[i].size());
        std::map<MotifKey, std::size_t> df;
        for (const auto& per_graph : counts[i]) {
            for (const auto& [k, c] : per_graph) {
                ++df[k];
            }
        }
        for (const auto& per_graph : counts[i]) {
            for (const auto& [k, c] : per_graph) {
                const double idf = std::log((1.0 + n_local) / (1.0 + static_cast<double>(df[k])));
                auto& [sum, cnt] = acc[k];
                sum += static_cast<double>(c) * idf + 1.0;
                ++cnt;
            }
        }
    }

    struct Scored {
        MotifKey key;
        std::string bytes;
        double score;
    };
    std::vector<Scored> scored;
    scored.reserve(acc.size());
    for (auto& [k, sc] : acc) {
        scored.push_back({k, k.to_string(), sc.first / static_cast<double>(sc.second)});
    }
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        if (a.score != b.score) {
            return a.score > b.score;
        }
        return a.bytes < b.bytes;
    });
    // 1e-9 keeps products like 0.9 * 10 = 9.000000000000002 from rounding up
    auto keep = static_cast<std::size_t>(std::ceil(beta_s * static_cast<double>(scored.size()) - 1e-9));
    keep = std::min(keep, scored.size());
    scored.resize(keep);
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) { return a.bytes < b.bytes; });

    MotifVocabulary vocab;
    vocab.max_ring_len = max_ring_len;
    vocab.beta_s = beta_s;
    vocab.candidates = acc.size();
    vocab.cutoff = scored.empty() ? 0.0 : scored.front().score;
    for (auto& s : scored) {
        vocab.cutoff = std::min(vocab.cutoff, s.score);
        vocab.keys.push_back(s.key);
        vocab.tfidf.push_back(s.score);
    }

    std::map<MotifKey, std::size_t> index;
    for (std::size_t k = 0; k < vocab.keys.size(); ++k) {
        index.emplace(vocab.keys[k], k);
    }
    vocab.membership.assign(fed.agents.size(), std::vector<std::vector<std::size_t>>(vocab.keys.size()));
    for (std::size_t i = 0; i < fed.agents.size(); ++i) {
        for (std::size_t gi = 0; gi < counts[i].size(); ++gi) {
            for (const auto& [k, c] : counts[i][gi]) {
                if (auto it = index.find(k); it != index.end()) {
                    vocab.membership[i][it->second].push_back(gi);
                }
            }
        }
    }
    return vocab;
}

/// Number of vocabulary keys with at least one member in `members`.
inline std::size_t motifs_present(const std::vector<std::vector<std::size_t>>& members) {
    return static_cast<std::size_t>(
        std::count_if(members.begin(), members.end(), [](const auto& m) { return !m.empty(); }));
}

/// d_i = k_i / K.
inline double graph_diversity(const MotifVocabulary& vocab, int agent_id) {
    if (agent_id < 0 || static_cast<std::size_t>(agent_id) >= vocab.membership.size()) {
        throw Error("agent id " + std::to_string(agent_id) + " has no membership record");
    }
    if (vocab.keys.empty()) {
        throw Error("graph diversity is undefined for an empty motif vocabulary");
    }
    return static_cast<double>(motifs_present(vocab.membership[static_cast<std::size_t>(agent_id)])) /
           static_cast<double>(vocab.keys.size());
}

inline nlohmann::json vocabulary_to_json(const MotifVocabulary& vocab) {
    nlohmann::json j;
    j["max_ring_len"] = vocab.max_ring_len;
    j["beta_s"] = vocab.beta_s;
    j["candidates"] = vocab.candidates;
    j["cutoff"] = vocab.cutoff;
    auto keys = nlohmann::json::array();
    for (std::size_t k = 0; k < vocab.keys.size(); ++k) {
        const auto& key = vocab.keys[k];
        nlohmann::json e;
        e["key"] = key.to_string();
        e["kind"] = key.kind == MotifKind::Bond ? "bond" : "ring";
        e["nodes"] = key.nodes;
        auto labels = nlohmann::json::array();
        for (int l : key.edges) {
            labels.push_back(l == kNoLabel ? nlohmann::json(nullptr) : nlohmann::json(l));
        }
        e["edges"] = std::move(labels);
        e["tfidf"] = vocab.tfidf[k];
        auto counts = nlohmann::json::array();
        for (const auto& agent : vocab.membership) {
            counts.push_back(agent[k].size());
        }
        e["membership"] = std::move(counts);
        keys.push_back(std::move(e));
    }
    j["keys"] = std::move(keys);
    return j;
}

} // namespace fairgraph
