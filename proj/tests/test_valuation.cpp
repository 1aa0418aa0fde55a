#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "fairgraph/valuation.hpp"
#include "oracles.hpp"

using namespace fairgraph;

namespace {

std::vector<GradientVector> gaussian_grads(std::mt19937_64& rng, std::size_t n, std::size_t d) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<GradientVector> out;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> v(d);
        for (auto& x : v) {
            x = g(rng);
        }
        out.emplace_back(std::move(v));
    }
    return out;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

} // namespace

TEST(ExactShapley, SingleAgentIsOne) {
    const std::vector<GradientVector> g{GradientVector({1.0, -2.0, 0.5})};
    EXPECT_NEAR(exact_shapley(g, {7}).at(0), 1.0, 1e-15);
}

TEST(ExactShapley, IdenticalAgentsAreSymmetric) {
    const std::vector<GradientVector> g{GradientVector({1.0, 2.0}), GradientVector({1.0, 2.0})};
    const auto phi = exact_shapley(g, {3, 3});
    EXPECT_DOUBLE_EQ(phi[0], phi[1]);
    EXPECT_NEAR(phi[0], 0.5, 1e-15);
}

TEST(ExactShapley, MatchesSubsetFormulaOracle) {
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> size(1, 50);
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 2 + static_cast<std::size_t>(t % 4);
        const auto g = gaussian_grads(rng, n, 8);
        std::vector<std::size_t> sizes(n);
        std::vector<double> dsizes(n);
        std::vector<std::vector<double>> raw;
        for (std::size_t i = 0; i < n; ++i) {
            sizes[i] = static_cast<std::size_t>(size(rng));
            dsizes[i] = static_cast<double>(sizes[i]);
            raw.push_back(g[i].values);
        }
        const auto phi = exact_shapley(g, sizes);
        const auto expect = oracle::subset_shapley(raw, dsizes);
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_NEAR(phi[i], expect[i], 1e-12);
        }
        EXPECT_NEAR(sum(phi), 1.0, 1e-9);
    }
}

TEST(ExactShapley, ScaleInvariant) {
    std::mt19937_64 rng(5);
    const auto g = gaussian_grads(rng, 4, 10);
    auto scaled = g;
    for (auto& v : scaled) {
        for (auto& x : v.values) {
            x *= 3.7;
        }
    }
    const std::vector<std::size_t> sizes{4, 9, 2, 6};
    const auto a = exact_shapley(g, sizes), b = exact_shapley(scaled, sizes);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_NEAR(a[i], b[i], 1e-12);
    }
    GradientVector global(std::vector<double>(10, 0.0));
    for (const auto& v : g) {
        for (std::size_t j = 0; j < 10; ++j) {
            global[j] += v[j];
        }
    }
    GradientVector global_scaled = global;
    for (auto& x : global_scaled.values) {
        x *= 0.01;
    }
    const auto za = approx_shapley(g, global), zb = approx_shapley(scaled, global_scaled);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_NEAR(za[i], zb[i], 1e-12);
    }
}

TEST(ExactShapley, Errors) {
    std::mt19937_64 rng(1);
    const auto g = gaussian_grads(rng, 11, 3);
    EXPECT_THROW(exact_shapley(g, std::vector<std::size_t>(11, 1)), CapabilityError);
    const std::vector<GradientVector> zero{GradientVector({1.0, 0.0}), GradientVector({0.0, 0.0})};
    EXPECT_THROW(exact_shapley(zero, {1, 1}), DegenerateInputError);
    // opposite gradients with equal sizes cancel in the grand coalition
    const std::vector<GradientVector> opp{GradientVector({1.0, 0.0}), GradientVector({-1.0, 0.0})};
    EXPECT_THROW(exact_shapley(opp, {1, 1}), DegenerateInputError);
}

TEST(ApproxShapley, AlignedAndOpposed) {
    const GradientVector u({0.3, -1.0, 2.0});
    const GradientVector neg({-0.3, 1.0, -2.0});
    const GradientVector zero({0.0, 0.0, 0.0});
    const auto z = approx_shapley({u, neg, zero}, u);
    EXPECT_NEAR(z[0], 1.0, 1e-15);
    EXPECT_NEAR(z[1], -1.0, 1e-15);
    EXPECT_EQ(z[2], 0.0);
    EXPECT_THROW(approx_shapley({u}, zero), DegenerateInputError);
}

TEST(ApproxShapley, RanksAgreeWithExact) {
    std::mt19937_64 rng(77);
    double rho = 0.0;
    for (int t = 0; t < 100; ++t) {
        const auto g = gaussian_grads(rng, 5, 20);
        const std::vector<std::size_t> sizes(5, 1);
        const auto phi = exact_shapley(g, sizes);
        GradientVector global(coalition_gradient(g, sizes, 0x1f));
        const auto z = approx_shapley(g, global);
        // Spearman without ties: 1 - 6 sum d^2 / (n (n^2 - 1))
        auto ranks = [](const std::vector<double>& x) {
            std::vector<double> r(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) {
                for (std::size_t j = 0; j < x.size(); ++j) {
                    r[i] += x[j] < x[i] ? 1.0 : 0.0;
                }
            }
            return r;
        };
        const auto rz = ranks(z), rp = ranks(phi);
        double d2 = 0.0;
        for (std::size_t i = 0; i < 5; ++i) {
            d2 += (rz[i] - rp[i]) * (rz[i] - rp[i]);
        }
        rho += 1.0 - 6.0 * d2 / (5.0 * 24.0);
    }
    EXPECT_GE(rho / 100.0, 0.8);
}

TEST(UpdateValues, ZeroAlphaIsNoOp) {
    auto s = ValueState::initial(3);
    s.values = {0.2, 0.5, 0.3};
    const std::vector<double> z{0.9, -0.4, 0.1}, d{0.3, 0.6, 1.0};
    const auto u = update_values(s, z, d, 0.0, 1.0);
    EXPECT_EQ(u.state.values, s.values);
    EXPECT_FALSE(u.reset);
    EXPECT_EQ(u.state.round, 1);
    EXPECT_EQ(u.state.history[1], (std::vector<double>{0.5}));
}

TEST(UpdateValues, TwoAgentArithmetic) {
    const auto s = ValueState::initial(2);
    const std::vector<double> z{0.1, -0.1}, d{0.0, 0.0};
    const auto u = update_values(s, z, d, 0.05, 1.0);
    EXPECT_NEAR(u.state.values[0], 0.505, 1e-15);
    EXPECT_NEAR(u.state.values[1], 0.495, 1e-15);
}

TEST(UpdateValues, DiversityTerm) {
    const auto s = ValueState::initial(2);
    const std::vector<double> z{0.0, 0.0}, d{1.0, 0.0};
    const auto u = update_values(s, z, d, 0.1, 2.0);
    // raw = (0.5 + 0.2, 0.5) -> (0.7, 0.5) / 1.2
    EXPECT_NEAR(u.state.values[0], 0.7 / 1.2, 1e-15);
    EXPECT_NEAR(u.state.values[1], 0.5 / 1.2, 1e-15);
}

TEST(UpdateValues, DiversityDecay) {
    auto s = ValueState::initial(2);
    s.round = 2;
    const std::vector<double> z{0.0, 0.0}, d{1.0, 0.0};
    const auto u = update_values(s, z, d, 0.1, 1.0, 0.5);
    // decay^2 = 0.25: raw = (0.525, 0.5)
    EXPECT_NEAR(u.state.values[0], 0.525 / 1.025, 1e-15);
}

TEST(UpdateValues, NegativeSumResets) {
    const auto s = ValueState::initial(2);
    const std::vector<double> z{-1.0, -1.0}, d{0.0, 0.0};
    const auto u = update_values(s, z, d, 1.0, 1.0);
    EXPECT_TRUE(u.reset);
    EXPECT_EQ(u.state.values, (std::vector<double>{0.5, 0.5}));
}

TEST(UpdateValues, SumsToOneAndPermutationEquivariant) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> unif(-1.0, 1.0), frac(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
        auto s = ValueState::initial(5);
        std::vector<double> z(5), d(5);
        for (std::size_t i = 0; i < 5; ++i) {
            z[i] = unif(rng);
            d[i] = frac(rng);
        }
        const auto u = update_values(s, z, d, 0.05, 1.0);
        ASSERT_FALSE(u.reset);
        EXPECT_NEAR(sum(u.state.values), 1.0, 1e-12);

        std::vector<std::size_t> perm{3, 0, 4, 1, 2};
        std::vector<double> zp(5), dp(5);
        for (std::size_t i = 0; i < 5; ++i) {
            zp[i] = z[perm[i]];
            dp[i] = d[perm[i]];
        }
        const auto up = update_values(s, zp, dp, 0.05, 1.0);
        for (std::size_t i = 0; i < 5; ++i) {
            EXPECT_NEAR(up.state.values[i], u.state.values[perm[i]], 1e-15);
        }
    }
}

TEST(UpdateValues, RejectsBadInput) {
    const auto s = ValueState::initial(2);
    const std::vector<double> two{0.0, 0.0}, three{0.0, 0.0, 0.0};
    EXPECT_THROW(update_values(s, three, two, 0.05, 1.0), Error);
    EXPECT_THROW(update_values(s, two, two, -0.05, 1.0), Error);
}

TEST(CarryValues, AppendsHistoryOnly) {
    const auto s = ValueState::initial(4);
    const auto c = carry_values(s);
    EXPECT_EQ(c.values, s.values);
    EXPECT_EQ(c.round, 1);
    for (const auto& h : c.history) {
        EXPECT_EQ(h, (std::vector<double>{0.25}));
    }
}
