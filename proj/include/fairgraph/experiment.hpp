#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairgraph/contribution.hpp"
#include "fairgraph/error.hpp"
#include "fairgraph/federation.hpp"
#include "fairgraph/io.hpp"
#include "fairgraph/metrics.hpp"
#include "fairgraph/partition.hpp"
#include "fairgraph/synthetic.hpp"

namespace fairgraph {

enum class ExperimentMode { Federated, SelfTrain, LeaveOneOut };

inline ExperimentMode parse_mode(std::string_view s) {
    if (s == "federated" || s == "FEDERATED") return ExperimentMode::Federated;
    if (s == "self_train" || s == "SELF_TRAIN") return ExperimentMode::SelfTrain;
    if (s == "leave_one_out" || s == "LEAVE_ONE_OUT" || s == "loo") return ExperimentMode::LeaveOneOut;
    throw ConfigError("unknown mode '" + std::string(s) + "'");
}

inline std::string_view mode_name(ExperimentMode m) {
    switch (m) {
    case ExperimentMode::Federated: return "federated";
    case ExperimentMode::SelfTrain: return "self_train";
    case ExperimentMode::LeaveOneOut: return "leave_one_out";
    }
    return "?";
}

/// Agents [offset, offset + agents) get flip ratios drawn uniformly from [lo, hi).
struct BucketSpec {
    Bucket bucket = Bucket::High;
    double lo = 0.0;
    double hi = 0.0;
    int agents = 0;
};

struct ExperimentConfig {
    std::optional<std::filesystem::path> dataset_path;
    DatasetFormat dataset_format = DatasetFormat::Jsonl;
    SyntheticOptions synthetic; // used when dataset_path is empty
    int n_agents = 10;
    std::vector<std::uint64_t> seeds{0};
    int rounds = 200;
    double global_test_frac = 0.1;
    double local_test_frac = 0.1;
    PartitionMode partition_mode = PartitionMode::Iid;
    FederationConfig federation;
    std::vector<BucketSpec> perturbation; // empty: clean data
    ExperimentMode mode = ExperimentMode::Federated;
    bool self_train = true; // compute the self-train baseline for gradient fairness
    int exclude = -1;       // agent dropped in LEAVE_ONE_OUT mode
};

/// The standard low/medium/high-quality plan: 3 agents at [0.7, 1), 3 at [0.3, 0.7), 4 at [0, 0.3).
inline std::vector<BucketSpec> standard_perturbation() {
    return {{Bucket::Low, 0.7, 1.0, 3}, {Bucket::Med, 0.3, 0.7, 3}, {Bucket::High, 0.0, 0.3, 4}};
}

inline void validate(const ExperimentConfig& c) {
    if (c.seeds.empty()) {
        throw ConfigError("at least one seed is required");
    }
    if (c.rounds < 0) {
        throw ConfigError("rounds must be >= 0");
    }
    if (!c.perturbation.empty()) {
        int covered = 0;
        for (const auto& b : c.perturbation) {
            if (b.agents < 0 || !(b.lo >= 0.0 && b.lo <= b.hi && b.hi <= 1.0)) {
                throw ConfigError("perturbation buckets need agents >= 0 and 0 <= lo <= hi <= 1");
            }
            covered += b.agents;
        }
        if (covered != c.n_agents) {
            throw ConfigError("perturbation buckets cover " + std::to_string(covered) + " agents, expected " +
                              std::to_string(c.n_agents));
        }
    }
    if (c.mode == ExperimentMode::LeaveOneOut && (c.exclude < 0 || c.exclude >= c.n_agents)) {
        throw ConfigError("LEAVE_ONE_OUT mode needs 0 <= exclude < n_agents");
    }
}

inline nlohmann::json experiment_to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    if (c.dataset_path) {
        j["dataset"] = {{"path", c.dataset_path->string()},
                        {"format", c.dataset_format == DatasetFormat::TuText ? "tu" : "jsonl"}};
    } else {
        const auto& s = c.synthetic;
        j["dataset"] = {{"synthetic",
                         {{"n_graphs", s.n_graphs},
                          {"n_node_labels", s.n_node_labels},
                          {"min_rings", s.min_rings},
                          {"max_rings", s.max_rings},
                          {"min_ring_len", s.min_ring_len},
                          {"max_ring_len", s.max_ring_len},
                          {"max_pendants", s.max_pendants},
                          {"affinity", s.affinity},
                          {"random_class1", s.random_class1},
                          {"seed", s.seed}}}};
    }
    j["n_agents"] = c.n_agents;
    j["seeds"] = c.seeds;
    j["rounds"] = c.rounds;
    j["global_test_frac"] = c.global_test_frac;
    j["local_test_frac"] = c.local_test_frac;
    j["partition"] = c.partition_mode == PartitionMode::Iid ? "iid" : "label_skew";
    j["federation"] = config_to_json(c.federation);
    auto pert = nlohmann::json::array();
    for (const auto& b : c.perturbation) {
        pert.push_back({{"bucket", bucket_name(b.bucket)}, {"interval", {b.lo, b.hi}}, {"agents", b.agents}});
    }
    j["perturbation"] = std::move(pert);
    j["mode"] = mode_name(c.mode);
    j["self_train"] = c.self_train;
    if (c.exclude >= 0) {
        j["exclude"] = c.exclude;
    }
    return j;
}

/// Parses an experiment config. Relative dataset paths resolve against `base_dir`.
inline ExperimentConfig experiment_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
    ExperimentConfig c;
    try {
        if (j.contains("dataset")) {
            const auto& d = j["dataset"];
            if (d.contains("path")) {
                std::filesystem::path p = d["path"].get<std::string>();
                c.dataset_path = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
                c.dataset_format = parse_dataset_format(d.value("format", std::string("jsonl")));
            } else if (d.contains("synthetic")) {
                c.synthetic = synthetic_from_json(d["synthetic"]);
            }
        }
        c.n_agents = j.value("n_agents", c.n_agents);
        if (j.contains("seeds")) {
            c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
        }
        c.rounds = j.value("rounds", c.rounds);
        c.global_test_frac = j.value("global_test_frac", c.global_test_frac);
        c.local_test_frac = j.value("local_test_frac", c.local_test_frac);
        if (j.contains("partition")) {
            const auto p = j["partition"].get<std::string>();
            if (p == "iid") {
                c.partition_mode = PartitionMode::Iid;
            } else if (p == "label_skew") {
                c.partition_mode = PartitionMode::LabelSkew;
            } else {
                throw ConfigError("unknown partition mode '" + p + "'");
            }
        }
        if (j.contains("federation")) {
            c.federation = config_from_json(j["federation"]);
        }
        if (j.contains("perturbation")) {
            const auto& p = j["perturbation"];
            if (p.is_string() && p.get<std::string>() == "standard") {
                c.perturbation = standard_perturbation();
            } else {
                for (const auto& b : p) {
                    const auto iv = b.at("interval").get<std::vector<double>>();
                    if (iv.size() != 2) {
                        throw ConfigError("perturbation interval must be [lo, hi]");
                    }
                    c.perturbation.push_back(
                        {parse_bucket(b.at("bucket").get<std::string>()), iv[0], iv[1], b.at("agents").get<int>()});
                }
            }
        }
        if (j.contains("mode")) {
            c.mode = parse_mode(j["mode"].get<std::string>());
        }
        c.self_train = j.value("self_train", c.self_train);
        c.exclude = j.value("exclude", c.exclude);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid experiment config: ") + e.what());
    }
    validate(c);
    return c;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config " + path.string());
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return experiment_from_json(j, path.parent_path());
}

inline std::vector<Graph> load_graphs(const ExperimentConfig& c) {
    return c.dataset_path ? load_dataset(*c.dataset_path, c.dataset_format) : generate_corpus(c.synthetic);
}

struct SeedData {
    FederationData data;
    std::vector<Bucket> buckets;     // empty without a perturbation plan
    std::vector<double> flip_ratios; // per agent; 0 without a perturbation plan
};

/// Partition for one seed, then perturb each agent's graphs per the plan.
inline SeedData prepare_seed(const std::vector<Graph>& graphs, const ExperimentConfig& c, std::uint64_t seed) {
    SeedData out;
    out.data = partition(graphs, {c.n_agents, c.global_test_frac, c.local_test_frac, seed, c.partition_mode});
    out.flip_ratios.assign(static_cast<std::size_t>(c.n_agents), 0.0);
    if (c.perturbation.empty()) {
        return out;
    }
    Rng rng(derive_seed(seed, 100));
    std::size_t agent = 0;
    for (const auto& b : c.perturbation) {
        std::uniform_real_distribution<double> ratio(b.lo, b.hi);
        for (int k = 0; k < b.agents; ++k, ++agent) {
            out.buckets.push_back(b.bucket);
            // uniform_real_distribution may return hi when lo == hi
            double r = b.lo == b.hi ? b.lo : ratio(rng);
            out.flip_ratios[agent] = std::min(r, std::nextafter(1.0, 0.0));
        }
    }
    for (std::size_t a = 0; a < out.data.agents.size(); ++a) {
        auto& ds = out.data.agents[a];
        const double r = out.flip_ratios[a];
        std::uint64_t stream = 1000 + 1000000 * a;
        for (auto& g : ds.train) {
            g = perturb_edges(g, r, derive_seed(seed, stream++));
        }
        for (auto& g : ds.test) {
            g = perturb_edges(g, r, derive_seed(seed, stream++));
        }
    }
    return out;
}

/// Local-only training with the federated agents' model, init and step budget,
/// E epochs per round. Reports carry loss and accuracy only.
inline std::vector<RoundReport> run_self_train(const FederationData& data, const FederationConfig& cfg,
                                               std::uint64_t seed, int rounds) {
    FederationData sizing = data;
    ModelShape shape;
    shape.d_in = cfg.d_in ? cfg.d_in : input_dim(sizing);
    shape.d_hidden = cfg.d_hidden;
    shape.n_classes = static_cast<std::size_t>(std::max(2, num_classes(sizing)));
    const auto init = ParamVector::random(shape, derive_seed(seed, 1));
    std::vector<ParamVector> params(data.agents.size(), init);
    const MotifVocabulary no_vocab;
    const PrototypeMap no_protos;
    std::vector<RoundReport> reports;
    for (int t = 1; t <= rounds; ++t) {
        RoundReport r;
        r.round = t;
        for (std::size_t i = 0; i < data.agents.size(); ++i) {
            const auto& ds = data.agents[i];
            auto tr = local_train(params[i], ds.train, no_protos, no_vocab, static_cast<int>(i), 0.0, cfg.epochs,
                                  cfg.lr);
            params[i] = std::move(tr.params);
            AgentReport a;
            a.id = ds.agent_id;
            a.train_loss = tr.initial_loss;
            a.test_accuracy = evaluate(params[i], ds.test);
            r.agents.push_back(a);
        }
        reports.push_back(std::move(r));
    }
    return reports;
}

struct SeedSummary {
    std::optional<double> personalized_accuracy;
    std::optional<double> global_accuracy;
    std::optional<double> gradient_fairness;
    std::map<Bucket, double> bucket_payoff;
    std::optional<double> mean_contribution; // LEAVE_ONE_OUT only
};

struct SeedResult {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    std::vector<RoundReport> reports;
    std::vector<Bucket> buckets;
    std::vector<double> flip_ratios;
    std::vector<double> selftrain_accuracy;
    std::optional<LeaveOneOutResult> loo;
    SeedSummary summary;
};

struct ExperimentResult {
    std::vector<SeedResult> seeds;
    SeedSummary mean; // over successful seeds

    bool all_ok() const {
        return std::all_of(seeds.begin(), seeds.end(), [](const SeedResult& s) { return s.ok; });
    }
};

/// Summary statistics derived only from a seed's report stream and agent metadata.
inline SeedSummary summarize(const std::vector<RoundReport>& reports, const std::vector<Bucket>& buckets,
                             const std::vector<double>& selftrain_accuracy) {
    SeedSummary s;
    if (reports.empty()) {
        return s;
    }
    const auto& last = reports.back();
    std::vector<double> final_acc;
    for (const auto& a : last.agents) {
        final_acc.push_back(a.test_accuracy);
    }
    if (!final_acc.empty()) {
        s.personalized_accuracy = std::accumulate(final_acc.begin(), final_acc.end(), 0.0) /
                                  static_cast<double>(final_acc.size());
    }
    s.global_accuracy = last.global_accuracy;
    if (selftrain_accuracy.size() == final_acc.size() && final_acc.size() >= 3) {
        try {
            s.gradient_fairness = gradient_fairness(selftrain_accuracy, final_acc);
        } catch (const Error&) {
            // constant accuracies: correlation undefined, left empty
        }
    }
    const bool has_payoff = !last.agents.empty() && last.agents.front().payoff.has_value();
    if (!buckets.empty() && has_payoff) {
        s.bucket_payoff = payoff_fairness({reports}, buckets);
    }
    return s;
}

inline SeedSummary mean_summary(const std::vector<SeedResult>& seeds) {
    SeedSummary m;
    auto avg = [&](auto field) -> std::optional<double> {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& s : seeds) {
            if (s.ok) {
                if (auto v = field(s.summary)) {
                    sum += *v;
                    ++n;
                }
            }
        }
        return n ? std::optional<double>(sum / static_cast<double>(n)) : std::nullopt;
    };
    m.personalized_accuracy = avg([](const SeedSummary& s) { return s.personalized_accuracy; });
    m.global_accuracy = avg([](const SeedSummary& s) { return s.global_accuracy; });
    m.gradient_fairness = avg([](const SeedSummary& s) { return s.gradient_fairness; });
    m.mean_contribution = avg([](const SeedSummary& s) { return s.mean_contribution; });
    for (Bucket b : {Bucket::Low, Bucket::Med, Bucket::High}) {
        auto v = avg([b](const SeedSummary& s) -> std::optional<double> {
            auto it = s.bucket_payoff.find(b);
            return it == s.bucket_payoff.end() ? std::nullopt : std::optional<double>(it->second);
        });
        if (v) {
            m.bucket_payoff[b] = *v;
        }
    }
    return m;
}

namespace detail {

inline std::string fmt_double(std::optional<double> v) {
    if (!v) {
        return "";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", *v);
    return buf;
}

inline std::string summary_row(const std::string& label, const std::string& status, const SeedSummary& s) {
    auto bucket = [&](Bucket b) {
        auto it = s.bucket_payoff.find(b);
        return fmt_double(it == s.bucket_payoff.end() ? std::nullopt : std::optional<double>(it->second));
    };
    return label + "," + status + "," + fmt_double(s.personalized_accuracy) + "," + fmt_double(s.global_accuracy) +
           "," + fmt_double(s.gradient_fairness) + "," + bucket(Bucket::Low) + "," + bucket(Bucket::Med) + "," +
           bucket(Bucket::High) + "," + fmt_double(s.mean_contribution);
}

} // namespace detail

inline constexpr const char* kSummaryHeader =
    "seed,status,personalized_accuracy,global_accuracy,gradient_fairness,payoff_LOW,payoff_MED,payoff_HIGH,"
    "mean_contribution";

inline void write_seed_outputs(const std::filesystem::path& dir, const SeedResult& s) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "rounds.jsonl");
        for (const auto& r : s.reports) {
            out << report_to_json(r).dump() << '\n';
        }
    }
    {
        std::ofstream out(dir / "rounds.csv");
        out << "round,agent,value,zeta,components,aggregation_weight,payoff,compensation,train_loss,test_accuracy,"
               "global_accuracy\n";
        for (const auto& r : s.reports) {
            for (const auto& a : r.agents) {
                auto opt_size = [](std::optional<std::size_t> v) { return v ? std::to_string(*v) : std::string(); };
                out << r.round << ',' << a.id << ',' << detail::fmt_double(a.value) << ','
                    << detail::fmt_double(a.zeta) << ',' << opt_size(a.components) << ','
                    << detail::fmt_double(a.aggregation_weight) << ',' << detail::fmt_double(a.payoff) << ','
                    << detail::fmt_double(a.compensation) << ',' << detail::fmt_double(a.train_loss) << ','
                    << detail::fmt_double(a.test_accuracy) << ',' << detail::fmt_double(r.global_accuracy) << '\n';
            }
        }
    }
    nlohmann::json agents;
    auto names = nlohmann::json::array();
    for (auto b : s.buckets) {
        names.push_back(bucket_name(b));
    }
    agents["buckets"] = std::move(names);
    agents["flip_ratios"] = s.flip_ratios;
    agents["selftrain_accuracy"] = s.selftrain_accuracy;
    std::ofstream(dir / "agents.json") << agents.dump(2) << '\n';
    if (s.loo) {
        std::ofstream out(dir / "loo.csv");
        out << "round,contribution,absolute_difference\n";
        for (std::size_t r = 0; r < s.loo->contribution.size(); ++r) {
            out << r + 1 << ',' << detail::fmt_double(s.loo->contribution[r]) << ','
                << (s.loo->absolute_difference[r] ? 1 : 0) << '\n';
        }
    }
}

/// Runs every seed of an experiment. When `out_dir` is given, writes
/// config.json, seed_<s>/{rounds.jsonl, rounds.csv, agents.json} and summary.csv.
/// A failing seed is recorded and the remaining seeds still run.
inline ExperimentResult run_experiment(const ExperimentConfig& config,
                                       const std::optional<std::filesystem::path>& out_dir = std::nullopt) {
    validate(config);
    ExperimentResult result;
    const auto graphs = load_graphs(config);
    for (auto seed : config.seeds) {
        SeedResult s;
        s.seed = seed;
        try {
            auto prepared = prepare_seed(graphs, config, seed);
            s.buckets = prepared.buckets;
            s.flip_ratios = prepared.flip_ratios;
            FederationConfig fcfg = config.federation;
            if (fcfg.d_in == 0) {
                fcfg.d_in = input_dim(prepared.data);
            }
            switch (config.mode) {
            case ExperimentMode::SelfTrain:
                s.reports = run_self_train(prepared.data, fcfg, seed, config.rounds);
                break;
            case ExperimentMode::Federated: {
                if (config.self_train) {
                    auto st = run_self_train(prepared.data, fcfg, seed, config.rounds);
                    if (!st.empty()) {
                        for (const auto& a : st.back().agents) {
                            s.selftrain_accuracy.push_back(a.test_accuracy);
                        }
                    }
                }
                Federation fed(prepared.data, fcfg, seed);
                s.reports = fed.run(config.rounds);
                break;
            }
            case ExperimentMode::LeaveOneOut:
                s.loo = leave_one_out(prepared.data, fcfg, config.exclude, config.rounds, seed);
                break;
            }
            s.summary = summarize(s.reports, s.buckets, s.selftrain_accuracy);
            if (s.loo && !s.loo->contribution.empty()) {
                s.summary.mean_contribution =
                    std::accumulate(s.loo->contribution.begin(), s.loo->contribution.end(), 0.0) /
                    static_cast<double>(s.loo->contribution.size());
            }
            s.ok = true;
        } catch (const std::exception& e) {
            s.ok = false;
            s.error = e.what();
        }
        result.seeds.push_back(std::move(s));
    }
    result.mean = mean_summary(result.seeds);

    if (out_dir) {
        namespace fs = std::filesystem;
        fs::create_directories(*out_dir);
        std::ofstream(*out_dir / "config.json") << experiment_to_json(config).dump(2) << '\n';
        std::ofstream summary(*out_dir / "summary.csv");
        summary << kSummaryHeader << '\n';
        for (const auto& s : result.seeds) {
            write_seed_outputs(*out_dir / ("seed_" + std::to_string(s.seed)), s);
            summary << detail::summary_row(std::to_string(s.seed), s.ok ? "ok" : "failed", s.summary) << '\n';
            if (!s.ok) {
                std::ofstream(*out_dir / ("seed_" + std::to_string(s.seed)) / "error.txt") << s.error << '\n';
            }
        }
        summary << detail::summary_row("mean", result.all_ok() ? "ok" : "partial", result.mean) << '\n';
    }
    return result;
}

} // namespace fairgraph
