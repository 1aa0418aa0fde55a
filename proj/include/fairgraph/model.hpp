#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairgraph/error.hpp"
#include "fairgraph/graph.hpp"
#include "fairgraph/motif.hpp"

namespace fairgraph {

// Node-label categories beyond this share the last (overflow) feature slot.
inline constexpr std::size_t kMaxInputDim = 32;

/// Dimensions of the reference classifier.
///
/// Flat layout: omega (d_hidden x d_in, row-major), then phi
/// (n_classes x d_hidden, row-major), then bias (n_classes).
struct ModelShape {
    std::size_t d_in = 1;
    std::size_t d_hidden = 16;
    std::size_t n_classes = 2;

    std::size_t omega_size() const { return d_hidden * d_in; }
    std::size_t phi_offset() const { return omega_size(); }
    std::size_t bias_offset() const { return phi_offset() + n_classes * d_hidden; }
    std::size_t size() const { return bias_offset() + n_classes; }

    bool operator==(const ModelShape&) const = default;
};

/// Input width for a federation: one slot per node label, capped at kMaxInputDim.
inline std::size_t input_dim(const FederationData& fed) {
    return std::clamp<std::size_t>(static_cast<std::size_t>(num_node_labels(fed)), 1, kMaxInputDim);
}

/// Model parameters as a flat vector plus their shape.
struct ParamVector {
    ModelShape shape;
    std::vector<double> values;

    static ParamVector zeros(const ModelShape& shape) { return {shape, std::vector<double>(shape.size(), 0.0)}; }

    /// Glorot-normal weights, zero bias.
    static ParamVector random(const ModelShape& shape, std::uint64_t seed) {
        ParamVector p = zeros(shape);
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> w_omega(0.0, std::sqrt(2.0 / double(shape.d_in + shape.d_hidden)));
        std::normal_distribution<double> w_phi(0.0, std::sqrt(2.0 / double(shape.d_hidden + shape.n_classes)));
        for (std::size_t i = 0; i < shape.omega_size(); ++i) {
            p.values[i] = w_omega(rng);
        }
        for (std::size_t i = shape.phi_offset(); i < shape.bias_offset(); ++i) {
            p.values[i] = w_phi(rng);
        }
        return p;
    }

    static ParamVector unflatten(const ModelShape& shape, std::span<const double> flat) {
        if (flat.size() != shape.size()) {
            throw Error("flat parameter length " + std::to_string(flat.size()) + " does not match shape (" +
                        std::to_string(shape.size()) + ")");
        }
        return {shape, std::vector<double>(flat.begin(), flat.end())};
    }

    std::vector<double> flatten() const { return values; }

    std::size_t size() const { return values.size(); }

    double& omega(std::size_t h, std::size_t i) { return values[h * shape.d_in + i]; }
    double omega(std::size_t h, std::size_t i) const { return values[h * shape.d_in + i]; }
    double& phi(std::size_t c, std::size_t h) { return values[shape.phi_offset() + c * shape.d_hidden + h]; }
    double phi(std::size_t c, std::size_t h) const { return values[shape.phi_offset() + c * shape.d_hidden + h]; }
    double& bias(std::size_t c) { return values[shape.bias_offset() + c]; }
    double bias(std::size_t c) const { return values[shape.bias_offset() + c]; }

    bool operator==(const ParamVector&) const = default;
};

/// A gradient (or gradient-unit update) in the flat parameter layout.
struct GradientVector {
    std::vector<double> values;

    GradientVector() = default;
    explicit GradientVector(std::vector<double> v) : values(std::move(v)) {}
    static GradientVector zeros(std::size_t n) { return GradientVector(std::vector<double>(n, 0.0)); }

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
    double& operator[](std::size_t i) { return values[i]; }

    bool operator==(const GradientVector&) const = default;
};

/// Vocabulary index -> prototype vector of length d_hidden.
using PrototypeMap = std::map<std::size_t, std::vector<double>>;

namespace detail {

// Sparse aggregated input of one node: (feature slot, count) for x_v + sum of neighbor x_u.
using SparseRow = std::vector<std::pair<std::size_t, double>>;

inline std::vector<SparseRow> aggregate_inputs(const Graph& g, std::size_t d_in) {
    const auto& labels = g.node_labels();
    auto slot = [&](int v) { return std::min(static_cast<std::size_t>(labels[static_cast<std::size_t>(v)]), d_in - 1); };
    std::vector<std::map<std::size_t, double>> acc(g.num_nodes());
    for (std::size_t v = 0; v < g.num_nodes(); ++v) {
        acc[v][slot(static_cast<int>(v))] += 1.0;
    }
    for (auto [u, v] : g.edges()) {
        acc[static_cast<std::size_t>(u)][slot(v)] += 1.0;
        acc[static_cast<std::size_t>(v)][slot(u)] += 1.0;
    }
    std::vector<SparseRow> rows(g.num_nodes());
    for (std::size_t v = 0; v < g.num_nodes(); ++v) {
        rows[v].assign(acc[v].begin(), acc[v].end());
    }
    return rows;
}

struct Forward {
    std::vector<SparseRow> inputs;
    std::vector<double> pre;  // n x d_hidden pre-activations
    std::vector<double> embedding;
};

inline Forward forward(const ParamVector& p, const Graph& g) {
    if (g.num_nodes() == 0) {
        throw Error("cannot embed an empty graph");
    }
    const auto& s = p.shape;
    Forward f;
    f.inputs = aggregate_inputs(g, s.d_in);
    const std::size_t n = g.num_nodes();
    f.pre.assign(n * s.d_hidden, 0.0);
    f.embedding.assign(s.d_hidden, 0.0);
    for (std::size_t v = 0; v < n; ++v) {
        for (std::size_t h = 0; h < s.d_hidden; ++h) {
            double z = 0.0;
            for (auto [i, c] : f.inputs[v]) {
                z += p.omega(h, i) * c;
            }
            f.pre[v * s.d_hidden + h] = z;
            f.embedding[h] += z > 0.0 ? z : 0.0;
        }
    }
    for (auto& e : f.embedding) {
        e /= static_cast<double>(n);
    }
    return f;
}

inline std::vector<double> logits(const ParamVector& p, const std::vector<double>& e) {
    const auto& s = p.shape;
    std::vector<double> out(s.n_classes);
    for (std::size_t c = 0; c < s.n_classes; ++c) {
        double z = p.bias(c);
        for (std::size_t h = 0; h < s.d_hidden; ++h) {
            z += p.phi(c, h) * e[h];
        }
        out[c] = z;
    }
    return out;
}

inline void check_finite(double x, const char* what) {
    if (!std::isfinite(x)) {
        throw NumericError(std::string("non-finite value in ") + what);
    }
}

} // namespace detail

/// Graph embedding: mean over nodes of ReLU(W (x_v + sum_{u in N(v)} x_u)).
inline std::vector<double> embed(const ParamVector& params, const Graph& g) {
    return detail::forward(params, g).embedding;
}

/// Index of the largest class score; ties go to the lowest index.
inline int predict(const ParamVector& params, const Graph& g) {
    auto z = detail::logits(params, embed(params, g));
    return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
}

inline double evaluate(const ParamVector& params, const std::vector<Graph>& data) {
    if (data.empty()) {
        throw Error("cannot evaluate on an empty dataset");
    }
    std::size_t correct = 0;
    for (const auto& g : data) {
        correct += predict(params, g) == g.class_label() ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

/// c_{i,k}: mean embedding of the agent's graphs containing motif k, for every
/// motif the agent holds.
inline PrototypeMap local_prototypes(const ParamVector& params, const std::vector<Graph>& data,
                                     const MotifVocabulary& vocab, int agent_id) {
    const auto& members = vocab.membership.at(static_cast<std::size_t>(agent_id));
    std::vector<std::vector<double>> cache(data.size());
    PrototypeMap protos;
    for (std::size_t k = 0; k < members.size(); ++k) {
        if (members[k].empty()) {
            continue;
        }
        std::vector<double> c(params.shape.d_hidden, 0.0);
        for (std::size_t gi : members[k]) {
            if (cache.at(gi).empty()) {
                cache[gi] = embed(params, data[gi]);
            }
            for (std::size_t h = 0; h < c.size(); ++h) {
                c[h] += cache[gi][h];
            }
        }
        for (auto& x : c) {
            x /= static_cast<double>(members[k].size());
        }
        protos.emplace(k, std::move(c));
    }
    return protos;
}

struct LossAndGrad {
    double loss = 0.0;        // supervised + lambda * regularizer
    double supervised = 0.0;  // mean cross-entropy
    double regularizer = 0.0; // sum_k ||c_{i,k} - c_{N,k}||_2 (before lambda)
    GradientVector grad;
};

/// Local objective: mean cross-entropy plus lambda times the summed L2
/// distance between each local motif prototype (recomputed from `params`)
/// and its global counterpart, over motifs present in both. The gradient
/// includes the path through the prototypes into omega; at zero distance the
/// regularizer's subgradient is taken as 0.
inline LossAndGrad loss_and_grad(const ParamVector& params, const std::vector<Graph>& data,
                                 const PrototypeMap& global_protos, const MotifVocabulary& vocab,
                                 int agent_id, double lambda) {
    if (lambda < 0.0) {
        throw Error("lambda must be >= 0");
    }
    if (data.empty()) {
        throw Error("loss_and_grad needs at least one graph");
    }
    // ReLU would silently map a NaN weight to 0
    for (double w : params.values) {
        detail::check_finite(w, "parameters");
    }
    const auto& s = params.shape;
    const std::size_t n_data = data.size();
    std::vector<detail::Forward> fw;
    fw.reserve(n_data);
    for (const auto& g : data) {
        fw.push_back(detail::forward(params, g));
    }

    LossAndGrad out;
    out.grad = GradientVector::zeros(s.size());
    auto& grad = out.grad.values;
    std::vector<std::vector<double>> d_embed(n_data, std::vector<double>(s.d_hidden, 0.0));

    for (std::size_t gi = 0; gi < n_data; ++gi) {
        const int y = data[gi].class_label();
        if (static_cast<std::size_t>(y) >= s.n_classes) {
            throw Error("class label " + std::to_string(y) + " outside model range");
        }
        auto z = detail::logits(params, fw[gi].embedding);
        const double zmax = *std::max_element(z.begin(), z.end());
        double denom = 0.0;
        for (double v : z) {
            denom += std::exp(v - zmax);
        }
        const double log_denom = std::log(denom) + zmax;
        out.supervised += (log_denom - z[static_cast<std::size_t>(y)]) / static_cast<double>(n_data);
        for (std::size_t c = 0; c < s.n_classes; ++c) {
            const double dz = (std::exp(z[c] - log_denom) - (static_cast<int>(c) == y ? 1.0 : 0.0)) /
                              static_cast<double>(n_data);
            grad[s.bias_offset() + c] += dz;
            for (std::size_t h = 0; h < s.d_hidden; ++h) {
                grad[s.phi_offset() + c * s.d_hidden + h] += dz * fw[gi].embedding[h];
                d_embed[gi][h] += dz * params.phi(c, h);
            }
        }
    }

    if (lambda > 0.0 && !global_protos.empty()) {
        const auto& members = vocab.membership.at(static_cast<std::size_t>(agent_id));
        for (const auto& [k, target] : global_protos) {
            if (k >= members.size() || members[k].empty()) {
                continue;
            }
            const auto& mk = members[k];
            std::vector<double> diff(s.d_hidden, 0.0);
            for (std::size_t gi : mk) {
                if (gi >= n_data) {
                    throw Error("membership index outside the agent's data");
                }
                for (std::size_t h = 0; h < s.d_hidden; ++h) {
                    diff[h] += fw[gi].embedding[h];
                }
            }
            double sq = 0.0;
            for (std::size_t h = 0; h < s.d_hidden; ++h) {
                diff[h] = diff[h] / static_cast<double>(mk.size()) - target.at(h);
                sq += diff[h] * diff[h];
            }
            const double dist = std::sqrt(sq);
            out.regularizer += dist;
            if (dist > 0.0) {
                const double scale = lambda / (dist * static_cast<double>(mk.size()));
                for (std::size_t gi : mk) {
                    for (std::size_t h = 0; h < s.d_hidden; ++h) {
                        d_embed[gi][h] += scale * diff[h];
                    }
                }
            }
        }
    }

    for (std::size_t gi = 0; gi < n_data; ++gi) {
        const auto& f = fw[gi];
        const double inv_n = 1.0 / static_cast<double>(f.inputs.size());
        for (std::size_t v = 0; v < f.inputs.size(); ++v) {
            for (std::size_t h = 0; h < s.d_hidden; ++h) {
                if (f.pre[v * s.d_hidden + h] <= 0.0) {
                    continue;
                }
                const double dz = d_embed[gi][h] * inv_n;
                for (auto [i, c] : f.inputs[v]) {
                    grad[h * s.d_in + i] += dz * c;
                }
            }
        }
    }

    out.loss = out.supervised + lambda * out.regularizer;
    detail::check_finite(out.loss, "loss");
    for (double g : grad) {
        detail::check_finite(g, "gradient");
    }
    return out;
}

struct TrainResult {
    ParamVector params;
    GradientVector upload; // sum of per-step gradients == (before - after) / lr
    double initial_loss = 0.0;
};

/// Full-batch gradient descent for `epochs` steps against fixed global prototypes.
inline TrainResult local_train(const ParamVector& params, const std::vector<Graph>& data,
                               const PrototypeMap& global_protos, const MotifVocabulary& vocab, int agent_id,
                               double lambda, int epochs, double lr) {
    if (epochs < 1) {
        throw Error("epochs must be >= 1");
    }
    if (!(lr > 0.0)) {
        throw Error("learning rate must be > 0");
    }
    TrainResult r{params, GradientVector::zeros(params.size()), 0.0};
    for (int e = 0; e < epochs; ++e) {
        auto lg = loss_and_grad(r.params, data, global_protos, vocab, agent_id, lambda);
        if (e == 0) {
            r.initial_loss = lg.loss;
        }
        for (std::size_t j = 0; j < lg.grad.size(); ++j) {
            r.params.values[j] -= lr * lg.grad[j];
            r.upload[j] += lg.grad[j];
        }
    }
    return r;
}

namespace detail {

inline void write_le_doubles(std::ostream& out, std::span<const double> xs) {
    for (double x : xs) {
        auto bits = std::bit_cast<std::uint64_t>(x);
        char bytes[8];
        for (int b = 0; b < 8; ++b) {
            bytes[b] = static_cast<char>((bits >> (8 * b)) & 0xffu);
        }
        out.write(bytes, 8);
    }
}

inline std::vector<double> read_le_doubles(std::istream& in, std::size_t count) {
    std::vector<double> xs(count);
    for (auto& x : xs) {
        unsigned char bytes[8];
        if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
            throw ParseError("truncated parameter file");
        }
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) {
            bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
        }
        x = std::bit_cast<double>(bits);
    }
    return xs;
}

} // namespace detail

inline nlohmann::json shape_to_json(const ModelShape& s) {
    return {{"d_in", s.d_in}, {"d_hidden", s.d_hidden}, {"n_classes", s.n_classes}, {"length", s.size()}};
}

inline ModelShape shape_from_json(const nlohmann::json& j) {
    ModelShape s{j.at("d_in").get<std::size_t>(), j.at("d_hidden").get<std::size_t>(),
                 j.at("n_classes").get<std::size_t>()};
    if (j.contains("length") && j["length"].get<std::size_t>() != s.size()) {
        throw ParseError("shape header length does not match its dimensions");
    }
    return s;
}

/// Writes `<base>.bin` (little-endian float64, flat layout) and `<base>.json` (shape header).
inline void save_params(const std::filesystem::path& base, const ParamVector& p) {
    std::ofstream bin(base.string() + ".bin", std::ios::binary);
    std::ofstream hdr(base.string() + ".json");
    if (!bin || !hdr) {
        throw Error("cannot write parameters to " + base.string());
    }
    detail::write_le_doubles(bin, p.values);
    hdr << shape_to_json(p.shape).dump(2) << '\n';
}

inline ParamVector load_params(const std::filesystem::path& base) {
    std::ifstream hdr(base.string() + ".json");
    std::ifstream bin(base.string() + ".bin", std::ios::binary);
    if (!hdr || !bin) {
        throw ParseError("cannot open parameters at " + base.string());
    }
    ModelShape s;
    try {
        s = shape_from_json(nlohmann::json::parse(hdr));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(base.string() + ".json: " + e.what());
    }
    return ParamVector{s, detail::read_le_doubles(bin, s.size())};
}

} // namespace fairgraph
