#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairgraph/error.hpp"
#include "fairgraph/graph.hpp"
#include "fairgraph/model.hpp"
#include "fairgraph/motif.hpp"
#include "fairgraph/partition.hpp"
#include "fairgraph/valuation.hpp"

namespace fairgraph {

struct FederationConfig {
    double alpha1 = 0.05;
    double alpha2 = 1.0;
    double lambda = 0.1;
    double beta = 1.0;
    double budget = 1.0;
    int epochs = 1;
    double lr = 0.1;
    std::size_t d_hidden = 16;
    std::size_t d_in = 0; // 0: derive from the data's node labels
    int max_ring_len = 8;
    double beta_s = 0.9;
    double diversity_decay = 1.0;
    int threads = 1;
};

inline nlohmann::json config_to_json(const FederationConfig& c) {
    return {{"alpha1", c.alpha1},   {"alpha2", c.alpha2},     {"lambda", c.lambda},
            {"beta", c.beta},       {"budget", c.budget},     {"epochs", c.epochs},
            {"lr", c.lr},           {"d_hidden", c.d_hidden}, {"d_in", c.d_in},
            {"max_ring_len", c.max_ring_len}, {"beta_s", c.beta_s}, {"diversity_decay", c.diversity_decay}};
}

/// Reads the keys present in `j` over the defaults in `base`.
inline FederationConfig config_from_json(const nlohmann::json& j, FederationConfig base = {}) {
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) {
            field = j.at(key).get<std::decay_t<decltype(field)>>();
        }
    };
    get("alpha1", base.alpha1);
    get("alpha2", base.alpha2);
    get("lambda", base.lambda);
    get("beta", base.beta);
    get("budget", base.budget);
    get("epochs", base.epochs);
    get("lr", base.lr);
    get("d_hidden", base.d_hidden);
    get("d_in", base.d_in);
    get("max_ring_len", base.max_ring_len);
    get("beta_s", base.beta_s);
    get("diversity_decay", base.diversity_decay);
    get("threads", base.threads);
    if (base.beta < 1.0) {
        throw ConfigError("beta must be >= 1");
    }
    if (!(base.budget > 0.0)) {
        throw ConfigError("budget must be > 0");
    }
    if (base.epochs < 1 || !(base.lr > 0.0) || base.d_hidden == 0 || base.max_ring_len < 3) {
        throw ConfigError("epochs >= 1, lr > 0, d_hidden > 0 and max_ring_len >= 3 are required");
    }
    return base;
}

// ---------------------------------------------------------------------------
// Server-side reductions

struct GradientAggregation {
    GradientVector gradient;
    std::vector<double> weights; // normalized weight of each upload
    bool fallback = false;       // every value <= 0; uniform weights were used
};

/// u_N = sum_i ReLU(r_i) u_i / sum_i ReLU(r_i).
inline GradientAggregation aggregate_gradients(const std::vector<GradientVector>& uploads,
                                               std::span<const double> values) {
    if (uploads.empty() || uploads.size() != values.size()) {
        throw Error("aggregate_gradients: one value per upload required");
    }
    GradientAggregation out;
    out.weights.resize(uploads.size());
    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        out.weights[i] = std::max(values[i], 0.0);
        total += out.weights[i];
    }
    if (total > 0.0) {
        for (auto& w : out.weights) {
            w /= total;
        }
    } else {
        std::fill(out.weights.begin(), out.weights.end(), 1.0 / static_cast<double>(uploads.size()));
        out.fallback = true;
    }
    out.gradient = GradientVector::zeros(uploads.front().size());
    for (std::size_t i = 0; i < uploads.size(); ++i) {
        if (out.weights[i] == 0.0) {
            continue;
        }
        for (std::size_t j = 0; j < out.gradient.size(); ++j) {
            out.gradient[j] += out.weights[i] * uploads[i][j];
        }
    }
    return out;
}

/// c_{N,k} = sum_{i in N_k} ReLU(r_i) c_{i,k} / sum_{i in N_k} ReLU(r_i).
/// Motifs whose holders all have r_i <= 0 are left out.
inline PrototypeMap aggregate_prototypes(const std::vector<PrototypeMap>& protos, std::span<const double> values) {
    if (protos.size() != values.size()) {
        throw Error("aggregate_prototypes: one value per agent required");
    }
    std::map<std::size_t, std::pair<std::vector<double>, double>> acc;
    for (std::size_t i = 0; i < protos.size(); ++i) {
        const double w = std::max(values[i], 0.0);
        if (w == 0.0) {
            continue;
        }
        for (const auto& [k, c] : protos[i]) {
            auto& [sum, total] = acc[k];
            if (sum.empty()) {
                sum.assign(c.size(), 0.0);
            }
            for (std::size_t h = 0; h < c.size(); ++h) {
                sum[h] += w * c[h];
            }
            total += w;
        }
    }
    PrototypeMap out;
    for (auto& [k, st] : acc) {
        for (auto& x : st.first) {
            x /= st.second;
        }
        out.emplace(k, std::move(st.first));
    }
    return out;
}

struct GradientAllocation {
    std::vector<GradientVector> gradients;
    std::vector<std::size_t> components;
    bool no_positive_value = false;
};

/// Indexes of `u` ordered by decreasing |u_j|, ties by lower index.
inline std::vector<std::size_t> magnitude_order(const GradientVector& u) {
    std::vector<std::size_t> order(u.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return std::abs(u[a]) > std::abs(u[b]); });
    return order;
}

/// Sparsified reward: agent i with r_i > 0 receives the
/// floor(D tanh(beta r_i) / max_j tanh(beta r_j)) largest-magnitude entries of
/// u_N (max over positive-value agents); agents with r_i <= 0 get zeros.
inline GradientAllocation allocate_gradient(const GradientVector& global, std::span<const double> values,
                                            double beta) {
    if (beta < 1.0) {
        throw Error("allocate_gradient: beta must be >= 1");
    }
    const std::size_t d = global.size();
    GradientAllocation out;
    out.gradients.assign(values.size(), GradientVector::zeros(d));
    out.components.assign(values.size(), 0);
    double max_t = 0.0;
    for (double r : values) {
        if (r > 0.0) {
            max_t = std::max(max_t, std::tanh(beta * r));
        }
    }
    if (max_t <= 0.0) {
        out.no_positive_value = true;
        return out;
    }
    const auto order = magnitude_order(global);
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] > 0.0)) {
            continue;
        }
        // divide first so the top agent gets exactly d
        const double ratio = static_cast<double>(d) * (std::tanh(beta * values[i]) / max_t);
        const auto n = std::min(d, static_cast<std::size_t>(std::floor(ratio)));
        out.components[i] = n;
        for (std::size_t j = 0; j < n; ++j) {
            out.gradients[i][order[j]] = global[order[j]];
        }
    }
    return out;
}

struct PayoffAllocation {
    std::vector<double> payoffs;
    std::vector<double> compensation;
    bool degenerate = false; // raw payoffs summed to <= 1e-12; everyone got 0
};

/// Payoff with punishment and delayed-contribution compensation.
///
/// mu_i = max(r_i^t - mean(r_i^1..r_i^{t-1}), 0) (0 at t = 1); raw_i = r_i^t
/// when r_i^t < 0, else r_i^t + mu_i; payoff_i = raw_i * B / sum_j raw_j.
/// `previous[i]` holds r_i^1..r_i^{t-1}.
inline PayoffAllocation allocate_payoff(std::span<const double> values,
                                        const std::vector<std::vector<double>>& previous, double budget,
                                        int round) {
    if (round < 1) {
        throw Error("allocate_payoff: round must be >= 1");
    }
    if (previous.size() != values.size()) {
        throw Error("allocate_payoff: one history per agent required");
    }
    PayoffAllocation out;
    out.payoffs.resize(values.size());
    out.compensation.assign(values.size(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (previous[i].size() != static_cast<std::size_t>(round - 1)) {
            throw Error("allocate_payoff: history of agent " + std::to_string(i) + " has " +
                        std::to_string(previous[i].size()) + " entries, expected " + std::to_string(round - 1));
        }
        if (round > 1) {
            const double mean = std::accumulate(previous[i].begin(), previous[i].end(), 0.0) /
                                static_cast<double>(previous[i].size());
            out.compensation[i] = std::max(values[i] - mean, 0.0);
        }
        out.payoffs[i] = values[i] < 0.0 ? values[i] : values[i] + out.compensation[i];
        total += out.payoffs[i];
    }
    if (total > 1e-12) {
        for (auto& p : out.payoffs) {
            p = p * budget / total;
        }
    } else {
        std::fill(out.payoffs.begin(), out.payoffs.end(), 0.0);
        out.degenerate = true;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Round protocol

struct AgentState {
    AgentDataset dataset;
    ParamVector params;
    GradientVector last_upload;
    PrototypeMap prototypes;
    double payoff_total = 0.0;
    double diversity = 0.0;
};

struct ServerState {
    ValueState values;
    GradientVector global_grad;
    PrototypeMap global_protos;
    ParamVector global_params; // server model, stepped by lr * u_N each round
    double budget = 1.0;
    int round = 0;
};

struct AgentReport {
    int id = 0;
    std::optional<double> value;
    std::optional<double> zeta;
    std::optional<std::size_t> components;
    std::optional<double> aggregation_weight;
    std::optional<double> payoff;
    std::optional<double> compensation;
    double train_loss = 0.0;
    double test_accuracy = 0.0;
};

struct RoundFlags {
    bool value_reset = false;
    bool aggregation_fallback = false;
    bool zero_global_gradient = false;
    bool no_positive_value = false;
    bool payoff_degenerate = false;

    bool any() const {
        return value_reset || aggregation_fallback || zero_global_gradient || no_positive_value || payoff_degenerate;
    }
};

struct RoundReport {
    int round = 0;
    std::vector<AgentReport> agents;
    std::optional<double> global_accuracy;
    RoundFlags flags;
};

inline nlohmann::json report_to_json(const RoundReport& r) {
    nlohmann::json j;
    j["round"] = r.round;
    auto agents = nlohmann::json::array();
    for (const auto& a : r.agents) {
        nlohmann::json ja;
        ja["id"] = a.id;
        auto put = [&ja](const char* key, const auto& opt) {
            if (opt) {
                ja[key] = *opt;
            }
        };
        put("value", a.value);
        put("zeta", a.zeta);
        put("components", a.components);
        put("aggregation_weight", a.aggregation_weight);
        put("payoff", a.payoff);
        put("compensation", a.compensation);
        ja["train_loss"] = a.train_loss;
        ja["test_accuracy"] = a.test_accuracy;
        agents.push_back(std::move(ja));
    }
    j["agents"] = std::move(agents);
    if (r.global_accuracy) {
        j["global_accuracy"] = *r.global_accuracy;
    }
    auto flags = nlohmann::json::array();
    if (r.flags.value_reset) flags.push_back("value_reset");
    if (r.flags.aggregation_fallback) flags.push_back("aggregation_fallback");
    if (r.flags.zero_global_gradient) flags.push_back("zero_global_gradient");
    if (r.flags.no_positive_value) flags.push_back("no_positive_value");
    if (r.flags.payoff_degenerate) flags.push_back("payoff_degenerate");
    j["flags"] = std::move(flags);
    return j;
}

inline RoundReport report_from_json(const nlohmann::json& j) {
    RoundReport r;
    r.round = j.at("round").get<int>();
    for (const auto& ja : j.at("agents")) {
        AgentReport a;
        a.id = ja.at("id").get<int>();
        auto get = [&ja](const char* key, auto& opt) {
            if (ja.contains(key)) {
                opt = ja[key].get<typename std::decay_t<decltype(opt)>::value_type>();
            }
        };
        get("value", a.value);
        get("zeta", a.zeta);
        get("components", a.components);
        get("aggregation_weight", a.aggregation_weight);
        get("payoff", a.payoff);
        get("compensation", a.compensation);
        a.train_loss = ja.at("train_loss").get<double>();
        a.test_accuracy = ja.at("test_accuracy").get<double>();
        r.agents.push_back(a);
    }
    if (j.contains("global_accuracy")) {
        r.global_accuracy = j["global_accuracy"].get<double>();
    }
    for (const auto& f : j.at("flags")) {
        const auto s = f.get<std::string>();
        r.flags.value_reset |= s == "value_reset";
        r.flags.aggregation_fallback |= s == "aggregation_fallback";
        r.flags.zero_global_gradient |= s == "zero_global_gradient";
        r.flags.no_positive_value |= s == "no_positive_value";
        r.flags.payoff_degenerate |= s == "payoff_degenerate";
    }
    return r;
}

/// Read-only inputs shared by every round.
struct RoundContext {
    FederationConfig config;
    MotifVocabulary vocab;
    std::vector<Graph> global_test;
};

struct RoundOutcome {
    ServerState server;
    std::vector<AgentState> agents;
    RoundReport report;
};

namespace detail {

template <class Fn>
void for_each_agent(std::size_t n, int threads, Fn&& fn) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::vector<std::future<void>> jobs;
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    for (std::size_t w = 0; w < workers; ++w) {
        jobs.push_back(std::async(std::launch::async, [&, w] {
            for (std::size_t i = w; i < n; i += workers) {
                fn(i);
            }
        }));
    }
    for (auto& j : jobs) {
        j.get();
    }
}

} // namespace detail

/// One communication round.
///
/// Round 1 has no uploads yet, so it records r^1 = r^0 and starts at local
/// training. Later rounds: aggregate last uploads with r^{t-1}; value the
/// uploads against the fresh u_N and update to r^t; hand each agent its
/// sparsified share of u_N; local training; prototype aggregation with r^t;
/// payoff allocation.
inline RoundOutcome run_round(ServerState server, std::vector<AgentState> agents, const RoundContext& ctx) {
    const auto& cfg = ctx.config;
    const std::size_t n = agents.size();
    const int t = server.round + 1;
    RoundReport report;
    report.round = t;
    report.agents.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        report.agents[i].id = agents[i].dataset.agent_id;
    }

    if (t == 1) {
        server.values = carry_values(server.values);
    } else {
        std::vector<GradientVector> uploads;
        uploads.reserve(n);
        for (const auto& a : agents) {
            uploads.push_back(a.last_upload);
        }
        auto agg = aggregate_gradients(uploads, server.values.values);
        report.flags.aggregation_fallback = agg.fallback;
        server.global_grad = agg.gradient;

        std::vector<double> zeta(n, 0.0);
        if (norm(agg.gradient.values) > 0.0) {
            zeta = approx_shapley(uploads, agg.gradient);
        } else {
            report.flags.zero_global_gradient = true;
        }
        std::vector<double> diversity(n);
        for (std::size_t i = 0; i < n; ++i) {
            diversity[i] = agents[i].diversity;
        }
        auto upd = update_values(server.values, zeta, diversity, cfg.alpha1, cfg.alpha2, cfg.diversity_decay);
        server.values = std::move(upd.state);
        report.flags.value_reset = upd.reset;

        auto alloc = allocate_gradient(server.global_grad, server.values.values, cfg.beta);
        report.flags.no_positive_value = alloc.no_positive_value;
        for (std::size_t i = 0; i < n; ++i) {
            auto& p = agents[i].params.values;
            for (std::size_t j = 0; j < p.size(); ++j) {
                p[j] -= cfg.lr * alloc.gradients[i][j];
            }
            report.agents[i].zeta = zeta[i];
            report.agents[i].components = alloc.components[i];
            report.agents[i].aggregation_weight = agg.weights[i];
        }
        for (std::size_t j = 0; j < server.global_params.values.size(); ++j) {
            server.global_params.values[j] -= cfg.lr * server.global_grad[j];
        }
    }

    detail::for_each_agent(n, cfg.threads, [&](std::size_t i) {
        auto& a = agents[i];
        auto tr = local_train(a.params, a.dataset.train, server.global_protos, ctx.vocab, static_cast<int>(i),
                              cfg.lambda, cfg.epochs, cfg.lr);
        a.params = std::move(tr.params);
        a.last_upload = std::move(tr.upload);
        a.prototypes = local_prototypes(a.params, a.dataset.train, ctx.vocab, static_cast<int>(i));
        report.agents[i].train_loss = tr.initial_loss;
        report.agents[i].test_accuracy = evaluate(a.params, a.dataset.test);
    });

    std::vector<PrototypeMap> protos;
    protos.reserve(n);
    for (const auto& a : agents) {
        protos.push_back(a.prototypes);
    }
    server.global_protos = aggregate_prototypes(protos, server.values.values);

    std::vector<std::vector<double>> previous(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& h = server.values.history[i];
        previous[i].assign(h.begin(), h.end() - 1);
    }
    auto pay = allocate_payoff(server.values.values, previous, server.budget, t);
    report.flags.payoff_degenerate = pay.degenerate;
    for (std::size_t i = 0; i < n; ++i) {
        agents[i].payoff_total += pay.payoffs[i];
        report.agents[i].value = server.values.values[i];
        report.agents[i].payoff = pay.payoffs[i];
        report.agents[i].compensation = pay.compensation[i];
    }
    if (!ctx.global_test.empty()) {
        report.global_accuracy = evaluate(server.global_params, ctx.global_test);
    }
    server.round = t;
    return {std::move(server), std::move(agents), std::move(report)};
}

// ---------------------------------------------------------------------------
// Federation driver

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Owns the state of one simulated federation.
class Federation {
public:
    Federation(FederationData data, FederationConfig config, std::uint64_t seed) : seed_(seed) {
        if (data.agents.empty()) {
            throw Error("a federation needs at least one agent");
        }
        ctx_.config = config;
        ctx_.global_test = std::move(data.global_test);
        ctx_.vocab = build_vocabulary(data, config.max_ring_len, config.beta_s);
        // include agent test graphs when sizing the input and class ranges
        FederationData sizing;
        sizing.agents = data.agents;
        sizing.global_test = ctx_.global_test;
        shape_.d_in = config.d_in ? config.d_in : input_dim(sizing);
        shape_.d_hidden = config.d_hidden;
        shape_.n_classes = static_cast<std::size_t>(std::max(2, num_classes(sizing)));
        const auto init = ParamVector::random(shape_, derive_seed(seed, 1));

        const std::size_t n = data.agents.size();
        server_.values = ValueState::initial(n);
        server_.global_grad = GradientVector::zeros(shape_.size());
        server_.global_params = init;
        server_.budget = config.budget;
        std::vector<double> sizes;
        for (std::size_t i = 0; i < n; ++i) {
            AgentState a;
            a.dataset = std::move(data.agents[i]);
            a.params = init;
            a.last_upload = GradientVector::zeros(shape_.size());
            a.diversity = ctx_.vocab.keys.empty() ? 0.0 : graph_diversity(ctx_.vocab, static_cast<int>(i));
            a.prototypes = local_prototypes(a.params, a.dataset.train, ctx_.vocab, static_cast<int>(i));
            sizes.push_back(static_cast<double>(a.dataset.train.size()));
            agents_.push_back(std::move(a));
        }
        std::vector<PrototypeMap> protos;
        for (const auto& a : agents_) {
            protos.push_back(a.prototypes);
        }
        server_.global_protos = aggregate_prototypes(protos, sizes);
    }

    RoundReport step() {
        auto out = run_round(std::move(server_), std::move(agents_), ctx_);
        server_ = std::move(out.server);
        agents_ = std::move(out.agents);
        return std::move(out.report);
    }

    std::vector<RoundReport> run(int rounds) {
        std::vector<RoundReport> reports;
        for (int r = 0; r < rounds; ++r) {
            reports.push_back(step());
        }
        return reports;
    }

    const ServerState& server() const { return server_; }
    const std::vector<AgentState>& agents() const { return agents_; }
    const MotifVocabulary& vocabulary() const { return ctx_.vocab; }
    const FederationConfig& config() const { return ctx_.config; }
    const ModelShape& shape() const { return shape_; }
    const std::vector<Graph>& global_test() const { return ctx_.global_test; }
    std::uint64_t seed() const { return seed_; }

    std::uint64_t config_hash() const { return fnv1a(config_to_json(ctx_.config).dump()); }

    /// Writes manifest.json plus flat float64 arrays for every parameter and gradient vector.
    void save_checkpoint(const std::filesystem::path& dir) const {
        namespace fs = std::filesystem;
        fs::create_directories(dir);
        auto protos_json = [](const PrototypeMap& m) {
            nlohmann::json j = nlohmann::json::object();
            for (const auto& [k, v] : m) {
                j[std::to_string(k)] = v;
            }
            return j;
        };
        nlohmann::json m;
        m["round"] = server_.round;
        m["seed"] = seed_;
        m["config"] = config_to_json(ctx_.config);
        m["config_hash"] = config_hash();
        m["shape"] = shape_to_json(shape_);
        m["budget"] = server_.budget;
        m["values"] = server_.values.values;
        m["history"] = server_.values.history;
        m["value_round"] = server_.values.round;
        m["global_protos"] = protos_json(server_.global_protos);
        auto agents = nlohmann::json::array();
        for (std::size_t i = 0; i < agents_.size(); ++i) {
            const auto& a = agents_[i];
            agents.push_back({{"agent_id", a.dataset.agent_id},
                              {"payoff_total", a.payoff_total},
                              {"diversity", a.diversity},
                              {"prototypes", protos_json(a.prototypes)}});
            save_params(dir / ("agent_" + std::to_string(i) + "_params"), a.params);
            write_vector(dir / ("agent_" + std::to_string(i) + "_upload.bin"), a.last_upload.values);
        }
        m["agents"] = std::move(agents);
        save_params(dir / "server_params", server_.global_params);
        write_vector(dir / "global_grad.bin", server_.global_grad.values);
        std::ofstream(dir / "manifest.json") << m.dump(2) << '\n';
    }

    /// Rebuilds a federation from `data` and `config`, then overwrites its
    /// state with a checkpoint. Throws ConfigError when the checkpoint was
    /// written under a different configuration.
    static Federation restore(const std::filesystem::path& dir, FederationData data, FederationConfig config) {
        std::ifstream in(dir / "manifest.json");
        if (!in) {
            throw ParseError("cannot open " + (dir / "manifest.json").string());
        }
        const auto m = nlohmann::json::parse(in);
        Federation fed(std::move(data), config, m.at("seed").get<std::uint64_t>());
        if (m.at("config_hash").get<std::uint64_t>() != fed.config_hash()) {
            throw ConfigError("checkpoint config hash does not match the supplied configuration");
        }
        if (shape_from_json(m.at("shape")) != fed.shape_ || m.at("agents").size() != fed.agents_.size()) {
            throw ConfigError("checkpoint shape or agent count does not match the supplied data");
        }
        auto protos_from = [](const nlohmann::json& j) {
            PrototypeMap out;
            for (auto it = j.begin(); it != j.end(); ++it) {
                out.emplace(std::stoul(it.key()), it.value().get<std::vector<double>>());
            }
            return out;
        };
        auto& s = fed.server_;
        s.round = m.at("round").get<int>();
        s.budget = m.at("budget").get<double>();
        s.values.values = m.at("values").get<std::vector<double>>();
        s.values.history = m.at("history").get<std::vector<std::vector<double>>>();
        s.values.round = m.at("value_round").get<int>();
        s.global_protos = protos_from(m.at("global_protos"));
        s.global_params = load_params(dir / "server_params");
        s.global_grad = GradientVector(read_vector(dir / "global_grad.bin", fed.shape_.size()));
        for (std::size_t i = 0; i < fed.agents_.size(); ++i) {
            auto& a = fed.agents_[i];
            const auto& ja = m.at("agents")[i];
            a.payoff_total = ja.at("payoff_total").get<double>();
            a.diversity = ja.at("diversity").get<double>();
            a.prototypes = protos_from(ja.at("prototypes"));
            a.params = load_params(dir / ("agent_" + std::to_string(i) + "_params"));
            a.last_upload = GradientVector(read_vector(dir / ("agent_" + std::to_string(i) + "_upload.bin"),
                                                       fed.shape_.size()));
        }
        return fed;
    }

private:
    static void write_vector(const std::filesystem::path& path, const std::vector<double>& v) {
        std::ofstream out(path, std::ios::binary);
        detail::write_le_doubles(out, v);
    }

    static std::vector<double> read_vector(const std::filesystem::path& path, std::size_t n) {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            throw ParseError("cannot open " + path.string());
        }
        return detail::read_le_doubles(in, n);
    }

    std::uint64_t seed_ = 0;
    RoundContext ctx_;
    ModelShape shape_;
    ServerState server_;
    std::vector<AgentState> agents_;
};

} // namespace fairgraph
