#include <gtest/gtest.h>

#include "ccmnet/graph.hpp"
#include "ccmnet/spectral.hpp"
#include "support/gen.hpp"
#include "support/oracles.hpp"

using namespace ccmnet;

namespace {

std::vector<std::size_t> permutation(SplitMix64& rng, std::size_t n) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng.below(i)]);
    return p;
}

}  // namespace

TEST(Property, SpectrumSumsToTraceAndTopAtLeastOne) {
    SplitMix64 rng(1001);
    for (int c = 0; c < 100; ++c) {
        const auto rp = gen::return_panel(rng, 2 + rng.below(15), 5 + rng.below(60), 4);
        const auto cm = correlation_matrix(rp);
        const auto ev = eigenvalues(cm);
        EXPECT_NEAR(ev.sum(), cm.values.trace(), 1e-9) << "case " << c;
        EXPECT_EQ(cm.values.trace(), static_cast<double>(cm.size()));
        EXPECT_GE(ev(ev.size() - 1), 1.0 - 1e-12) << "case " << c;
    }
}

TEST(Property, ThresholdEdgeSetsAreNested) {
    SplitMix64 rng(1002);
    for (int c = 0; c < 100; ++c) {
        const auto cm = correlation_matrix(gen::return_panel(rng, 2 + rng.below(12), 4 + rng.below(40)));
        std::vector<double> grid{0.0, 1.0};
        for (int k = 0; k < 8; ++k) grid.push_back(rng.uniform());
        std::sort(grid.begin(), grid.end());
        for (std::size_t k = 1; k < grid.size(); ++k) {
            const auto loose = threshold_graph(cm, grid[k - 1]);
            const auto tight = threshold_graph(cm, grid[k]);
            for (const auto& [i, j] : tight.edges()) EXPECT_GT(loose.weight(i, j), 0.0) << "case " << c;
        }
    }
}

TEST(Property, DegreeSumsToTwiceTotalWeight) {
    SplitMix64 rng(1003);
    for (int c = 0; c < 100; ++c) {
        const auto g = gen::graph(rng, 10, false);
        double total = 0;
        for (const auto& [i, j] : g.edges()) total += g.weight(i, j);
        const auto d = weighted_degree(g);
        EXPECT_NEAR(std::accumulate(d.begin(), d.end(), 0.0), 2 * total, 1e-12);
    }
}

TEST(Property, BetweennessInvariantUnderWeightScaling) {
    SplitMix64 rng(1004);
    for (int c = 0; c < 100; ++c) {
        auto g = gen::graph(rng, 8, c % 2 == 0);
        const auto before = betweenness(g);
        g.adjacency *= 0.25 + 0.75 * rng.uniform();
        const auto after = betweenness(g);
        for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(before[i], after[i], 1e-9) << "case " << c;
    }
}

TEST(Property, CentralityIsPermutationEquivariant) {
    SplitMix64 rng(1005);
    for (int c = 0; c < 100; ++c) {
        const auto g = gen::graph(rng, 8, false);
        const auto p = permutation(rng, g.size());
        WeightedGraph h = g;
        for (std::size_t i = 0; i < g.size(); ++i) {
            h.labels[i] = g.labels[p[i]];
            for (std::size_t j = 0; j < g.size(); ++j) {
                h.adjacency(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = g.weight(p[i], p[j]);
            }
        }
        const auto a = centrality(g), b = centrality(h);
        for (std::size_t i = 0; i < g.size(); ++i) {
            EXPECT_NEAR(b.degree[i], a.degree[p[i]], 1e-12);
            EXPECT_NEAR(b.betweenness[i], a.betweenness[p[i]], 1e-9);
            EXPECT_EQ(b.classes[i], a.classes[p[i]]);
        }
    }
}

TEST(Property, QuantileThresholdMatchesOracle) {
    SplitMix64 rng(1006);
    for (int c = 0; c < 100; ++c) {
        const auto cm = correlation_matrix(gen::return_panel(rng, 2 + rng.below(10), 5 + rng.below(30)));
        std::vector<double> upper;
        for (Eigen::Index i = 0; i < cm.values.rows(); ++i) {
            for (Eigen::Index j = i + 1; j < cm.values.cols(); ++j) upper.push_back(std::abs(cm.values(i, j)));
        }
        const double q = 0.01 + 0.98 * rng.uniform();
        EXPECT_NEAR(quantile_threshold(cm, q), oracle::quantile7(upper, q), 1e-12);
    }
}
