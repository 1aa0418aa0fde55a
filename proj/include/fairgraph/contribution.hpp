#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "fairgraph/error.hpp"
#include "fairgraph/federation.hpp"

namespace fairgraph {

struct LeaveOneOutResult {
    std::vector<double> contribution;
    // true where the run without the agent scored 0 and `contribution` holds acc_all - acc_without
    std::vector<bool> absolute_difference;
};

/// Per-round contribution of `excluded` on the global test set:
/// (acc_all - acc_without) / acc_without, from two runs with the same seed.
inline LeaveOneOutResult leave_one_out(const FederationData& data, FederationConfig config, int excluded,
                                       int rounds, std::uint64_t seed) {
    if (excluded < 0 || static_cast<std::size_t>(excluded) >= data.agents.size()) {
        throw Error("excluded agent " + std::to_string(excluded) + " is not in the federation");
    }
    if (data.agents.size() < 2) {
        throw Error("leave-one-out needs at least two agents");
    }
    if (data.global_test.empty()) {
        throw Error("leave-one-out needs a global test set");
    }
    LeaveOneOutResult out;
    if (rounds <= 0) {
        return out;
    }
    // both runs must share the input width even if the excluded agent holds rare labels
    if (config.d_in == 0) {
        config.d_in = input_dim(data);
    }
    FederationData without = data;
    without.agents.erase(without.agents.begin() + excluded);
    for (std::size_t i = 0; i < without.agents.size(); ++i) {
        without.agents[i].agent_id = static_cast<int>(i);
    }
    Federation all(data, config, seed);
    Federation rest(std::move(without), config, seed);
    for (int r = 0; r < rounds; ++r) {
        const double acc_all = all.step().global_accuracy.value();
        const double acc_without = rest.step().global_accuracy.value();
        if (acc_without == 0.0) {
            out.contribution.push_back(acc_all - acc_without);
            out.absolute_difference.push_back(true);
        } else {
            out.contribution.push_back((acc_all - acc_without) / acc_without);
            out.absolute_difference.push_back(false);
        }
    }
    return out;
}

} // namespace fairgraph
