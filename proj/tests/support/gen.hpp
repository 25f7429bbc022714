#pragma once

// Small generators for property tests, driven by the library's SplitMix64 so
// that every case is reproducible from its index.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "ccmnet/graph.hpp"
#include "ccmnet/panel.hpp"
#include "ccmnet/random.hpp"

namespace gen {

inline ccmnet::Date day(int offset) {
    return ccmnet::Date{std::chrono::year{2022} / 1 / 1} + std::chrono::days{offset};
}

inline std::vector<ccmnet::Date> days(std::size_t n) {
    std::vector<ccmnet::Date> d(n);
    for (std::size_t t = 0; t < n; ++t) d[t] = day(static_cast<int>(t));
    return d;
}

inline std::vector<double> normals(ccmnet::SplitMix64& rng, std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal();
    return v;
}

/// Random return panel; roughly one series in `constant_every` is constant
/// when that argument is non-zero.
inline ccmnet::ReturnPanel return_panel(ccmnet::SplitMix64& rng, std::size_t series, std::size_t length,
                                        std::size_t constant_every = 0) {
    std::vector<ccmnet::SeriesKey> keys;
    std::vector<std::vector<double>> values;
    const double mix = rng.uniform();
    const auto common = normals(rng, length);
    for (std::size_t i = 0; i < series; ++i) {
        keys.push_back({fmt::format("c{}", i % 3), fmt::format("t{:02d}", i)});
        auto v = normals(rng, length);
        for (std::size_t t = 0; t < length; ++t) v[t] += mix * common[t];
        if (constant_every && rng.below(constant_every) == 0) v.assign(length, rng.normal());
        values.push_back(std::move(v));
    }
    return ccmnet::ReturnPanel(days(length), std::move(keys), std::move(values));
}

/// Random graph with up to `max_nodes` nodes. Weights come from a dyadic set
/// half of the time (forcing equal-length shortest paths) and are continuous
/// otherwise.
inline ccmnet::WeightedGraph graph(ccmnet::SplitMix64& rng, std::size_t max_nodes, bool directed) {
    const std::size_t n = 1 + rng.below(max_nodes);
    const double density = 0.2 + 0.7 * rng.uniform();
    const bool dyadic = rng.below(2) == 0;
    static constexpr double levels[] = {0.25, 0.5, 1.0};
    std::vector<ccmnet::SeriesKey> labels;
    for (std::size_t i = 0; i < n; ++i) labels.push_back({"g", fmt::format("n{}", i)});
    ccmnet::WeightedGraph g{labels, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)),
                            directed};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = directed ? 0 : i + 1; j < n; ++j) {
            if (i == j || rng.uniform() > density) continue;
            const double w = dyadic ? levels[rng.below(3)] : 0.05 + 0.95 * rng.uniform();
            g.adjacency(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = w;
            if (!directed) g.adjacency(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = w;
        }
    }
    return g;
}

inline std::vector<std::vector<double>> to_rows(const Eigen::MatrixXd& m) {
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) rows[static_cast<std::size_t>(i)].push_back(m(i, j));
    }
    return rows;
}

}  // namespace gen
