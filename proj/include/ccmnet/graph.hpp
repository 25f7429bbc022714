#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"
#include "panel.hpp"
#include "spectral.hpp"
#include "stats.hpp"

namespace ccmnet {

/// Weighted graph over series labels. Weights in [0, 1], zero diagonal.
struct WeightedGraph {
    std::vector<SeriesKey> labels;
    Eigen::MatrixXd adjacency;
    bool directed = false;

    [[nodiscard]] std::size_t size() const noexcept { return labels.size(); }

    [[nodiscard]] double weight(std::size_t i, std::size_t j) const {
        return adjacency(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }

    /// Edges as (i, j) pairs with positive weight; i < j for undirected graphs.
    [[nodiscard]] std::vector<std::pair<std::size_t, std::size_t>> edges() const {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        for (std::size_t i = 0; i < size(); ++i) {
            for (std::size_t j = directed ? 0 : i + 1; j < size(); ++j) {
                if (i != j && weight(i, j) > 0.0) out.emplace_back(i, j);
            }
        }
        return out;
    }
};

inline constexpr double kDefaultGraphQuantile = 0.90;
inline constexpr double kDefaultTopFraction = 0.25;

/// q-quantile (type 7) of |off-diagonal| entries of the upper triangle.
[[nodiscard]] inline double quantile_threshold(const CorrelationMatrix& cm, double q = kDefaultGraphQuantile) {
    if (cm.size() < 2) {
        throw ValidationError("quantile_threshold: need at least 2 labels");
    }
    if (!(q > 0.0 && q < 1.0)) {
        throw ValidationError("quantile_threshold: q must lie in (0, 1)");
    }
    std::vector<double> upper;
    upper.reserve(cm.size() * (cm.size() - 1) / 2);
    for (Eigen::Index i = 0; i < cm.values.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < cm.values.cols(); ++j) upper.push_back(std::abs(cm.values(i, j)));
    }
    return quantile(std::move(upper), q);
}

/// A_ij = |Corr_ij| when |Corr_ij| >= rho_c and i != j, else 0.
[[nodiscard]] inline WeightedGraph threshold_graph(const CorrelationMatrix& cm, double rho_c) {
    if (!(rho_c >= 0.0 && rho_c <= 1.0)) {
        throw ValidationError("threshold_graph: rho_c must lie in [0, 1]");
    }
    WeightedGraph g{cm.labels, Eigen::MatrixXd::Zero(cm.values.rows(), cm.values.cols()), false};
    for (Eigen::Index i = 0; i < cm.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < cm.values.cols(); ++j) {
            const double a = std::abs(cm.values(i, j));
            if (i != j && a >= rho_c) g.adjacency(i, j) = a;
        }
    }
    return g;
}

/// Row sums of the adjacency matrix.
[[nodiscard]] inline std::vector<double> weighted_degree(const WeightedGraph& g) {
    std::vector<double> out(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        for (std::size_t j = 0; j < g.size(); ++j) out[i] += g.weight(i, j);
    }
    return out;
}

/// Relative tolerance used when comparing shortest-path lengths.
inline constexpr double kPathLengthTolerance = 1e-9;

/**
 * Betweenness centrality with edge length 1 / weight (Brandes' algorithm on
 * Dijkstra shortest paths). Path lengths within a relative 1e-9 count as
 * equal, so sigma counts every tied shortest path. Undirected graphs count
 * each unordered pair once; unreachable pairs contribute nothing.
 */
[[nodiscard]] inline std::vector<double> betweenness(const WeightedGraph& g) {
    const std::size_t n = g.size();
    std::vector<std::vector<std::pair<std::size_t, double>>> out_edges(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double w = g.weight(i, j);
            if (i != j && w > 0.0) out_edges[i].emplace_back(j, 1.0 / w);
        }
    }

    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> centrality(n, 0.0);
    std::vector<double> dist(n), sigma(n), delta(n);
    std::vector<std::vector<std::size_t>> preds(n);
    std::vector<bool> settled(n);
    std::vector<std::size_t> order;

    for (std::size_t s = 0; s < n; ++s) {
        std::fill(dist.begin(), dist.end(), inf);
        std::fill(sigma.begin(), sigma.end(), 0.0);
        std::fill(delta.begin(), delta.end(), 0.0);
        std::fill(settled.begin(), settled.end(), false);
        for (auto& p : preds) p.clear();
        order.clear();

        using Item = std::pair<double, std::size_t>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
        dist[s] = 0.0;
        sigma[s] = 1.0;
        heap.emplace(0.0, s);
        while (!heap.empty()) {
            const auto [d, v] = heap.top();
            heap.pop();
            if (settled[v] || d > dist[v]) continue;
            settled[v] = true;
            order.push_back(v);
            for (const auto& [u, len] : out_edges[v]) {
                if (settled[u]) continue;
                const double candidate = dist[v] + len;
                const double tol = kPathLengthTolerance * std::max(candidate, dist[u] == inf ? 0.0 : dist[u]);
                if (candidate < dist[u] - tol) {
                    dist[u] = candidate;
                    sigma[u] = sigma[v];
                    preds[u].assign(1, v);
                    heap.emplace(candidate, u);
                } else if (std::abs(candidate - dist[u]) <= tol) {
                    sigma[u] += sigma[v];
                    preds[u].push_back(v);
                }
            }
        }
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            const std::size_t w = *it;
            for (std::size_t v : preds[w]) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            if (w != s) centrality[w] += delta[w];
        }
    }
    if (!g.directed) {
        for (double& c : centrality) c *= 0.5;
    }
    return centrality;
}

enum class CentralityClass { none, degree_top, betweenness_top, both };

[[nodiscard]] constexpr std::string_view to_string(CentralityClass c) noexcept {
    switch (c) {
        case CentralityClass::degree_top: return "degree-top";
        case CentralityClass::betweenness_top: return "betweenness-top";
        case CentralityClass::both: return "both";
        case CentralityClass::none: break;
    }
    return "none";
}

struct CentralityReport {
    std::vector<SeriesKey> labels;
    std::vector<double> degree;
    std::vector<double> betweenness;
    std::vector<CentralityClass> classes;
    double degree_cutoff = 0.0;
    double betweenness_cutoff = 0.0;
};

/// Flags labels at or above the (1 - top_fraction) quantile of each measure.
[[nodiscard]] inline CentralityReport classify_top(std::vector<SeriesKey> labels, std::vector<double> degree,
                                                   std::vector<double> between,
                                                   double top_fraction = kDefaultTopFraction) {
    if (!(top_fraction > 0.0 && top_fraction < 1.0)) {
        throw ValidationError("classify_top: fraction must lie in (0, 1)");
    }
    if (degree.size() != labels.size() || between.size() != labels.size() || labels.empty()) {
        throw ValidationError("classify_top: size mismatch");
    }
    CentralityReport r;
    r.degree_cutoff = quantile(degree, 1.0 - top_fraction);
    r.betweenness_cutoff = quantile(between, 1.0 - top_fraction);
    r.classes.reserve(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const bool d = degree[i] >= r.degree_cutoff;
        const bool b = between[i] >= r.betweenness_cutoff;
        r.classes.push_back(d && b ? CentralityClass::both
                            : d    ? CentralityClass::degree_top
                            : b    ? CentralityClass::betweenness_top
                                   : CentralityClass::none);
    }
    r.labels = std::move(labels);
    r.degree = std::move(degree);
    r.betweenness = std::move(between);
    return r;
}

/// Weighted degree, betweenness and classification in one pass.
[[nodiscard]] inline CentralityReport centrality(const WeightedGraph& g, double top_fraction = kDefaultTopFraction) {
    return classify_top(g.labels, weighted_degree(g), betweenness(g), top_fraction);
}

}  // namespace ccmnet
