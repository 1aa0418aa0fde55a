// Command-line front end for the fair graph federated learning simulator.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "fairgraph/fairgraph.hpp"

namespace fs = std::filesystem;
using namespace fairgraph;

namespace {

int cmd_run(const fs::path& config_path, const fs::path& out) {
    const auto config = load_experiment_config(config_path);
    const auto result = run_experiment(config, out);
    for (const auto& s : result.seeds) {
        if (s.ok) {
            std::printf("seed %llu: personalized %.4f global %.4f\n", static_cast<unsigned long long>(s.seed),
                        s.summary.personalized_accuracy.value_or(0.0), s.summary.global_accuracy.value_or(0.0));
        } else {
            std::fprintf(stderr, "seed %llu failed: %s\n", static_cast<unsigned long long>(s.seed), s.error.c_str());
        }
    }
    std::printf("wrote %s\n", (out / "summary.csv").string().c_str());
    return result.all_ok() ? 0 : 1;
}

int cmd_loo(const fs::path& config_path, int exclude, const std::string& out) {
    auto config = load_experiment_config(config_path);
    config.mode = ExperimentMode::LeaveOneOut;
    config.exclude = exclude;
    validate(config);
    const auto result = run_experiment(config, out.empty() ? std::nullopt : std::optional<fs::path>(out));
    std::printf("seed,round,contribution,absolute_difference\n");
    for (const auto& s : result.seeds) {
        if (!s.ok) {
            std::fprintf(stderr, "seed %llu failed: %s\n", static_cast<unsigned long long>(s.seed), s.error.c_str());
            continue;
        }
        for (std::size_t r = 0; r < s.loo->contribution.size(); ++r) {
            std::printf("%llu,%zu,%.17g,%d\n", static_cast<unsigned long long>(s.seed), r + 1, s.loo->contribution[r],
                        s.loo->absolute_difference[r] ? 1 : 0);
        }
    }
    return result.all_ok() ? 0 : 1;
}

int cmd_vocab(const fs::path& dataset, const std::string& format, const fs::path& dump, int agents,
              std::uint64_t seed, int max_ring_len, double beta_s) {
    const auto graphs = load_dataset(dataset, parse_dataset_format(format));
    PartitionOptions opt;
    opt.n_agents = agents;
    opt.seed = seed;
    const auto fed = partition(graphs, opt);
    const auto vocab = build_vocabulary(fed, max_ring_len, beta_s);
    std::ofstream out(dump);
    if (!out) {
        throw Error("cannot write " + dump.string());
    }
    out << vocabulary_to_json(vocab).dump(2) << '\n';
    std::printf("%zu graphs, %zu candidate motifs, %zu retained -> %s\n", graphs.size(), vocab.candidates,
                vocab.size(), dump.string().c_str());
    for (int i = 0; i < agents; ++i) {
        std::printf("agent %d diversity %.4f\n", i, vocab.keys.empty() ? 0.0 : graph_diversity(vocab, i));
    }
    return 0;
}

int cmd_verify_shapley(int n, int trials, int dim, std::uint64_t seed) {
    const auto r = verify_shapley(static_cast<std::size_t>(n), trials, static_cast<std::size_t>(dim), seed);
    std::printf("trials %d  mean spearman %.4f  min spearman %.4f  max |sum phi - 1| %.3g\n", r.trials,
                r.mean_spearman, r.min_spearman, r.max_efficiency_error);
    return 0;
}

int cmd_generate(const fs::path& out, int graphs, std::uint64_t seed) {
    SyntheticOptions opt;
    opt.n_graphs = graphs;
    opt.seed = seed;
    write_jsonl_dataset(out, generate_corpus(opt));
    std::printf("wrote %d graphs to %s\n", graphs, out.string().c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fairgraph: fair graph federated learning simulator"};
    app.require_subcommand(1);

    std::string config, out, dataset, format = "jsonl", dump, loo_out;
    int exclude = 0, agents = 10, max_ring_len = 8, n = 5, trials = 100, dim = 20, graphs = 400;
    double beta_s = 0.9;
    std::uint64_t seed = 0;

    auto* run = app.add_subcommand("run", "run an experiment and write its report streams");
    run->add_option("--config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out, "output directory")->required();

    auto* loo = app.add_subcommand("loo", "leave-one-out contribution of one agent on the global test set");
    loo->add_option("--config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    loo->add_option("--exclude", exclude, "agent to exclude")->required();
    loo->add_option("--out", loo_out, "optional output directory");

    auto* vocab = app.add_subcommand("vocab", "build and dump the motif vocabulary of a dataset");
    vocab->add_option("--dataset", dataset, "dataset path (TU prefix/directory or JSONL file)")->required();
    vocab->add_option("--format", format, "tu or jsonl")->capture_default_str();
    vocab->add_option("--dump-vocab", dump, "output JSON file")->required();
    vocab->add_option("--agents", agents, "number of agents")->capture_default_str();
    vocab->add_option("--seed", seed, "partition seed")->capture_default_str();
    vocab->add_option("--max-ring-len", max_ring_len, "longest ring motif")->capture_default_str();
    vocab->add_option("--beta-s", beta_s, "fraction of motifs kept")->capture_default_str();

    auto* verify = app.add_subcommand("verify-shapley", "compare cosine valuation against exact Shapley values");
    verify->add_option("--n", n, "agents per instance (<= 10)")->capture_default_str();
    verify->add_option("--trials", trials, "random instances")->capture_default_str();
    verify->add_option("--dim", dim, "gradient length")->capture_default_str();
    verify->add_option("--seed", seed, "seed")->capture_default_str();

    auto* gen = app.add_subcommand("generate", "write a synthetic JSONL corpus");
    gen->add_option("--out", out, "output JSONL file")->required();
    gen->add_option("--graphs", graphs, "number of graphs")->capture_default_str();
    gen->add_option("--seed", seed, "generator seed")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(config, out);
        if (*loo) return cmd_loo(config, exclude, loo_out);
        if (*vocab) return cmd_vocab(dataset, format, dump, agents, seed, max_ring_len, beta_s);
        if (*verify) return cmd_verify_shapley(n, trials, dim, seed);
        if (*gen) return cmd_generate(out, graphs, seed);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
