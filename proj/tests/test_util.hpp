#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "fairgraph/graph.hpp"

namespace fairgraph::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        std::string name = "fairgraph_";
        if (info) {
            name += std::string(info->test_suite_name()) + "_" + info->name();
        }
        path_ = std::filesystem::temp_directory_path() / name;
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& f) const { return path_ / f; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Erdos-Renyi style graph with n nodes, edge probability p and labels in [0, n_labels).
inline Graph random_graph(std::mt19937_64& rng, int n, double p, int n_labels, int class_label = 0,
                          int n_edge_labels = 0) {
    std::uniform_int_distribution<int> lab(0, n_labels - 1);
    std::bernoulli_distribution coin(p);
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (auto& l : labels) {
        l = lab(rng);
    }
    std::vector<Edge> edges;
    std::vector<int> elabels;
    for (int u = 0; u < n; ++u) {
        for (int v = u + 1; v < n; ++v) {
            if (coin(rng)) {
                edges.push_back({u, v});
                if (n_edge_labels > 0) {
                    elabels.push_back(std::uniform_int_distribution<int>(0, n_edge_labels - 1)(rng));
                }
            }
        }
    }
    return Graph(std::move(labels), std::move(edges), std::move(elabels), class_label);
}

inline Graph triangle(int class_label = 0) { return Graph({0, 0, 0}, {{0, 1}, {1, 2}, {0, 2}}, {}, class_label); }

inline Graph path3(int class_label = 0) { return Graph({0, 1, 0}, {{0, 1}, {1, 2}}, {}, class_label); }

} // namespace fairgraph::testing
