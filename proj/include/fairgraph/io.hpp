#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairgraph/error.hpp"
#include "fairgraph/graph.hpp"

namespace fairgraph {

enum class DatasetFormat { TuText, Jsonl };

inline DatasetFormat parse_dataset_format(std::string_view s) {
    if (s == "tu" || s == "TU_TEXT" || s == "tu_text") {
        return DatasetFormat::TuText;
    }
    if (s == "jsonl" || s == "JSONL") {
        return DatasetFormat::Jsonl;
    }
    throw ConfigError("unknown dataset format '" + std::string(s) + "' (expected tu or jsonl)");
}

namespace detail {

inline std::string where(const std::filesystem::path& file, std::size_t line) {
    return file.string() + ":" + std::to_string(line);
}

inline std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline long long parse_integer(std::string_view tok, const std::filesystem::path& file,
                               std::size_t line, std::string_view field) {
    std::string t = trim(tok);
    if (t.empty()) {
        throw ParseError(where(file, line) + ": empty " + std::string(field));
    }
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(t, &used);
    } catch (const std::exception&) {
        throw ParseError(where(file, line) + ": " + std::string(field) + " '" + t +
                         "' is not an integer");
    }
    if (used != t.size()) {
        throw ParseError(where(file, line) + ": " + std::string(field) + " '" + t +
                         "' is not an integer");
    }
    return v;
}

// Reads one integer per non-blank line (the first comma-separated column).
inline std::vector<long long> read_int_column(const std::filesystem::path& file,
                                              std::string_view field) {
    std::ifstream in(file);
    if (!in) {
        throw ParseError("cannot open " + file.string());
    }
    std::vector<long long> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) {
            continue;
        }
        auto comma = line.find(',');
        out.push_back(parse_integer(std::string_view(line).substr(0, comma), file, lineno, field));
    }
    return out;
}

// Fills missing node labels with node degrees.
inline std::vector<int> degree_labels(std::size_t n, const std::vector<Edge>& edges) {
    std::vector<int> deg(n, 0);
    for (auto [u, v] : edges) {
        ++deg[static_cast<std::size_t>(u)];
        ++deg[static_cast<std::size_t>(v)];
    }
    return deg;
}

} // namespace detail

/// Loads a dataset laid out like the public TUDataset text format.
///
/// `path` is either the file prefix ("dir/PROTEINS", resolving to
/// dir/PROTEINS_A.txt and friends) or a directory named after the dataset.
/// Edges listed in both directions are merged and self-loops dropped. Graph
/// labels are remapped to the dense range [0, C) in sorted order.
inline std::vector<Graph> load_tu_dataset(const std::filesystem::path& path) {
    namespace fs = std::filesystem;
    fs::path prefix = path;
    if (fs::is_directory(path)) {
        auto name = path.filename().empty() ? path.parent_path().filename() : path.filename();
        prefix = path / name;
    }
    auto file = [&](const char* suffix) { return fs::path(prefix.string() + suffix); };

    const auto graph_labels_file = file("_graph_labels.txt");
    if (!fs::exists(graph_labels_file)) {
        throw ParseError("missing graph_labels component: " + graph_labels_file.string());
    }
    const auto indicator_file = file("_graph_indicator.txt");
    const auto adjacency_file = file("_A.txt");
    for (const auto& f : {indicator_file, adjacency_file}) {
        if (!fs::exists(f)) {
            throw ParseError("missing dataset component: " + f.string());
        }
    }

    const auto raw_graph_labels = detail::read_int_column(graph_labels_file, "graph label");
    const auto indicator = detail::read_int_column(indicator_file, "graph id");
    const std::size_t num_graphs = raw_graph_labels.size();

    std::vector<long long> sorted_labels = raw_graph_labels;
    std::sort(sorted_labels.begin(), sorted_labels.end());
    sorted_labels.erase(std::unique(sorted_labels.begin(), sorted_labels.end()), sorted_labels.end());

    // node (0-based global) -> (graph, local index)
    std::vector<std::pair<std::size_t, int>> where_node(indicator.size());
    std::vector<int> graph_sizes(num_graphs, 0);
    for (std::size_t v = 0; v < indicator.size(); ++v) {
        long long gid = indicator[v];
        if (gid < 1 || static_cast<std::size_t>(gid) > num_graphs) {
            throw StructuralError(detail::where(indicator_file, v + 1) + ": graph id " +
                                  std::to_string(gid) + " outside [1, " +
                                  std::to_string(num_graphs) + "]");
        }
        auto g = static_cast<std::size_t>(gid - 1);
        where_node[v] = {g, graph_sizes[g]++};
    }

    std::vector<std::vector<int>> node_labels(num_graphs);
    const auto node_labels_file = file("_node_labels.txt");
    const bool has_node_labels = fs::exists(node_labels_file);
    if (has_node_labels) {
        const auto labels = detail::read_int_column(node_labels_file, "node label");
        if (labels.size() != indicator.size()) {
            throw ParseError(node_labels_file.string() + ": " + std::to_string(labels.size()) +
                             " node labels for " + std::to_string(indicator.size()) + " nodes");
        }
        for (std::size_t v = 0; v < labels.size(); ++v) {
            if (labels[v] < 0) {
                throw ParseError(detail::where(node_labels_file, v + 1) + ": negative node label");
            }
            node_labels[where_node[v].first].push_back(static_cast<int>(labels[v]));
        }
    }

    std::optional<std::vector<long long>> edge_label_column;
    const auto edge_labels_file = file("_edge_labels.txt");
    if (fs::exists(edge_labels_file)) {
        edge_label_column = detail::read_int_column(edge_labels_file, "edge label");
    }

    std::vector<std::map<Edge, int>> edges(num_graphs);
    std::ifstream in(adjacency_file);
    if (!in) {
        throw ParseError("cannot open " + adjacency_file.string());
    }
    std::string line;
    std::size_t lineno = 0;
    std::size_t edge_row = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) {
            continue;
        }
        auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw ParseError(detail::where(adjacency_file, lineno) + ": expected 'i, j'");
        }
        std::string_view sv(line);
        long long a = detail::parse_integer(sv.substr(0, comma), adjacency_file, lineno, "source node");
        long long b = detail::parse_integer(sv.substr(comma + 1), adjacency_file, lineno, "target node");
        for (long long x : {a, b}) {
            if (x < 1 || static_cast<std::size_t>(x) > indicator.size()) {
                throw StructuralError(detail::where(adjacency_file, lineno) + ": node index " +
                                      std::to_string(x) + " does not exist");
            }
        }
        auto [ga, la] = where_node[static_cast<std::size_t>(a - 1)];
        auto [gb, lb] = where_node[static_cast<std::size_t>(b - 1)];
        if (ga != gb) {
            throw StructuralError(detail::where(adjacency_file, lineno) +
                                  ": edge joins nodes of different graphs");
        }
        int label = kNoLabel;
        if (edge_label_column) {
            if (edge_row >= edge_label_column->size()) {
                throw ParseError(edge_labels_file.string() + ": fewer edge labels than edges");
            }
            label = static_cast<int>((*edge_label_column)[edge_row]);
        }
        ++edge_row;
        if (la != lb) {
            edges[ga].emplace(make_edge(la, lb), label);
        }
    }

    std::vector<Graph> graphs;
    graphs.reserve(num_graphs);
    for (std::size_t g = 0; g < num_graphs; ++g) {
        std::vector<Edge> es;
        std::vector<int> els;
        for (auto& [e, l] : edges[g]) {
            es.push_back(e);
            els.push_back(l);
        }
        auto n = static_cast<std::size_t>(graph_sizes[g]);
        auto labels = has_node_labels ? std::move(node_labels[g]) : detail::degree_labels(n, es);
        auto cls = std::lower_bound(sorted_labels.begin(), sorted_labels.end(), raw_graph_labels[g]) -
                   sorted_labels.begin();
        graphs.emplace_back(std::move(labels), std::move(es), std::move(els), static_cast<int>(cls));
    }
    return graphs;
}

/// One JSON object per line: {"nodes": [labels], "edges": [[u, v], ...],
/// "edge_labels": [l or null, ...] (optional), "label": c}. When "nodes" is
/// absent, "num_nodes" must be given and node labels default to degrees.
inline Graph graph_from_json(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw ParseError("graph record is not an object");
    }
    if (!j.contains("label") || !j["label"].is_number_integer()) {
        throw ParseError("field 'label' missing or not an integer");
    }
    std::vector<Edge> edges;
    if (j.contains("edges")) {
        if (!j["edges"].is_array()) {
            throw ParseError("field 'edges' is not an array");
        }
        for (const auto& e : j["edges"]) {
            if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() ||
                !e[1].is_number_integer()) {
                throw ParseError("field 'edges' must hold [u, v] integer pairs");
            }
            edges.emplace_back(e[0].get<int>(), e[1].get<int>());
        }
    }
    std::vector<int> edge_labels;
    if (j.contains("edge_labels") && !j["edge_labels"].is_null()) {
        if (!j["edge_labels"].is_array()) {
            throw ParseError("field 'edge_labels' is not an array");
        }
        for (const auto& l : j["edge_labels"]) {
            if (l.is_null()) {
                edge_labels.push_back(kNoLabel);
            } else if (l.is_number_integer()) {
                edge_labels.push_back(l.get<int>());
            } else {
                throw ParseError("field 'edge_labels' must hold integers or null");
            }
        }
    }
    std::vector<int> nodes;
    if (j.contains("nodes")) {
        if (!j["nodes"].is_array()) {
            throw ParseError("field 'nodes' is not an array");
        }
        for (const auto& l : j["nodes"]) {
            if (!l.is_number_integer()) {
                throw ParseError("field 'nodes' must hold integer labels");
            }
            nodes.push_back(l.get<int>());
        }
    } else if (j.contains("num_nodes") && j["num_nodes"].is_number_integer()) {
        auto n = j["num_nodes"].get<int>();
        if (n < 0) {
            throw ParseError("field 'num_nodes' is negative");
        }
        for (auto [u, v] : edges) {
            if (u < 0 || v < 0 || u >= n || v >= n) {
                throw StructuralError("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                                      ") references a missing node");
            }
        }
        nodes = detail::degree_labels(static_cast<std::size_t>(n), edges);
    } else {
        throw ParseError("field 'nodes' (or 'num_nodes') missing");
    }
    return Graph(std::move(nodes), std::move(edges), std::move(edge_labels), j["label"].get<int>());
}

inline nlohmann::json graph_to_json(const Graph& g) {
    nlohmann::json j;
    j["nodes"] = g.node_labels();
    auto edges = nlohmann::json::array();
    for (auto [u, v] : g.edges()) {
        edges.push_back({u, v});
    }
    j["edges"] = std::move(edges);
    if (g.has_edge_labels()) {
        auto labels = nlohmann::json::array();
        for (int l : g.edge_labels()) {
            labels.push_back(l == kNoLabel ? nlohmann::json(nullptr) : nlohmann::json(l));
        }
        j["edge_labels"] = std::move(labels);
    }
    j["label"] = g.class_label();
    return j;
}

inline std::vector<Graph> load_jsonl_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open " + path.string());
    }
    std::vector<Graph> graphs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) {
            continue;
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(detail::where(path, lineno) + ": " + e.what());
        }
        try {
            graphs.push_back(graph_from_json(j));
        } catch (const ParseError& e) {
            throw ParseError(detail::where(path, lineno) + ": " + e.what());
        } catch (const StructuralError& e) {
            throw StructuralError(detail::where(path, lineno) + ": " + e.what());
        }
    }
    return graphs;
}

inline std::vector<Graph> load_dataset(const std::filesystem::path& path, DatasetFormat format) {
    return format == DatasetFormat::TuText ? load_tu_dataset(path) : load_jsonl_dataset(path);
}

inline void write_jsonl_dataset(const std::filesystem::path& path, const std::vector<Graph>& graphs) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    for (const auto& g : graphs) {
        out << graph_to_json(g).dump() << '\n';
    }
}

} // namespace fairgraph
