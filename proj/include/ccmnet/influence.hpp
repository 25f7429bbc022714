#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "ccm.hpp"
#include "error.hpp"
#include "panel.hpp"
#include "stats.hpp"

namespace ccmnet {

/// Skill above which a cross-community edge is drawn fully opaque.
inline constexpr double kStrongEdgeSkill = 0.5;

inline constexpr double kMatrixRho = 0.5;
inline constexpr double kTopicRho = 0.4;
inline constexpr double kRelativeRho = 0.25;
inline constexpr std::size_t kDefaultTopK = 3;

struct InfluenceEdge {
    SeriesKey source;
    SeriesKey target;
    double skill = 0.0;
    std::size_t lag = 0;
    bool converged = true;
    bool same_community = false;
    bool strong = false;  ///< skill > kStrongEdgeSkill
};

/// Directed causal network; only converged best-lag edges are stored.
struct CausalNetwork {
    std::vector<SeriesKey> nodes;
    std::vector<InfluenceEdge> edges;
};

/// Every lag scan of an all-pairs sweep. scans[target * N + source]; the
/// diagonal is left empty.
struct CcmSweep {
    std::vector<SeriesKey> keys;
    std::vector<std::size_t> dimensions;  ///< selected E per target
    std::vector<std::optional<LagScan>> scans;

    [[nodiscard]] const std::optional<LagScan>& scan(std::size_t source, std::size_t target) const {
        return scans[target * keys.size() + source];
    }
};

/**
 * Lag scans for every ordered pair of distinct series. Work is split by
 * target across `threads` workers; results do not depend on the worker
 * count.
 */
[[nodiscard]] inline CcmSweep ccm_sweep(const ReturnPanel& rp, const CcmSettings& settings, std::size_t threads = 1) {
    const std::size_t n = rp.series_count();
    CcmSweep sweep{rp.keys(), std::vector<std::size_t>(n, 0), std::vector<std::optional<LagScan>>(n * n)};
    if (rp.length() <= settings.max_lag + 2) {
        throw ValidationError("ccm_sweep: panel too short for the maximal lag");
    }
    const std::size_t len = rp.length() - settings.max_lag;

    auto run_target = [&](std::size_t j) {
        const CrossMapper mapper = make_cross_mapper(rp.series(j).subspan(settings.max_lag), settings);
        sweep.dimensions[j] = mapper.manifold().dimension();
        for (std::size_t i = 0; i < n; ++i) {
            if (i == j) continue;
            const auto source = rp.series(i);
            LagScan scan;
            scan.dimension = sweep.dimensions[j];
            for (std::size_t lag = 0; lag <= settings.max_lag; ++lag) {
                scan.per_lag.push_back(
                    make_result(mapper.skill_curve(source.subspan(settings.max_lag - lag, len)), lag, settings.rule));
            }
            scan.best_lag = pick_best_lag(scan.per_lag);
            sweep.scans[j * n + i] = std::move(scan);
        }
    };

    threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
    if (threads == 1) {
        for (std::size_t j = 0; j < n; ++j) run_target(j);
        return sweep;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < threads; ++w) {
        workers.emplace_back([&] {
            for (std::size_t j = next++; j < n; j = next++) {
                try {
                    run_target(j);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : workers) t.join();
    if (failure) std::rethrow_exception(failure);
    return sweep;
}

/// Converged best-lag edges of a sweep.
[[nodiscard]] inline CausalNetwork build_network(const CcmSweep& sweep) {
    CausalNetwork net{sweep.keys, {}};
    const std::size_t n = sweep.keys.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j || !sweep.scan(i, j)) continue;
            const CausalResult* best = sweep.scan(i, j)->best();
            if (!best) continue;
            const SeriesKey& s = sweep.keys[i];
            const SeriesKey& t = sweep.keys[j];
            net.edges.push_back({s, t, best->skill, best->lag, true, s.community == t.community,
                                 best->skill > kStrongEdgeSkill});
        }
    }
    return net;
}

[[nodiscard]] inline CausalNetwork build_network(const ReturnPanel& rp, const CcmSettings& settings,
                                                 std::size_t threads = 1) {
    return build_network(ccm_sweep(rp, settings, threads));
}

/**
 * Community-by-community aggregation of a causal network; rows are sources,
 * columns targets.
 */
struct InfluenceMatrix {
    std::vector<std::string> communities;
    Eigen::MatrixXd values;             ///< masked-zero mean over evaluated pairs
    Eigen::MatrixXd qualifying_mean;    ///< mean over qualifying edges only
    std::vector<std::optional<std::size_t>> lags;  ///< row-major, present iff value > 0
    double rho_min = 0.0;

    [[nodiscard]] std::size_t size() const noexcept { return communities.size(); }

    [[nodiscard]] double value(std::size_t i, std::size_t j) const {
        return values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    [[nodiscard]] const std::optional<std::size_t>& lag(std::size_t i, std::size_t j) const {
        return lags[i * communities.size() + j];
    }
};

namespace detail {

inline std::vector<std::string> communities_of(const std::vector<SeriesKey>& nodes) {
    std::vector<std::string> out;
    for (const auto& k : nodes) out.push_back(k.community);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

/// Edges in (source, target, lag) order, so sums do not depend on insertion order.
inline std::vector<const InfluenceEdge*> ordered_edges(const CausalNetwork& net) {
    std::vector<const InfluenceEdge*> out;
    out.reserve(net.edges.size());
    for (const auto& e : net.edges) out.push_back(&e);
    std::sort(out.begin(), out.end(), [](const InfluenceEdge* a, const InfluenceEdge* b) {
        return std::tie(a->source, a->target, a->lag, a->skill) < std::tie(b->source, b->target, b->lag, b->skill);
    });
    return out;
}

inline std::size_t position(const std::vector<std::string>& sorted, const std::string& s) {
    return static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), s) - sorted.begin());
}

}  // namespace detail

/**
 * Entry (a, b) is the sum of skills of edges a -> b with skill > rho_min,
 * divided by the number of ordered node pairs evaluated between a and b
 * (non-qualifying pairs count as zero). The lag is that of the strongest
 * qualifying edge.
 */
[[nodiscard]] inline InfluenceMatrix community_matrix(const CausalNetwork& net, double rho_min = kMatrixRho) {
    InfluenceMatrix m;
    m.communities = detail::communities_of(net.nodes);
    m.rho_min = rho_min;
    const std::size_t c = m.communities.size();
    const auto ci = static_cast<Eigen::Index>(c);
    m.values = Eigen::MatrixXd::Zero(ci, ci);
    m.qualifying_mean = Eigen::MatrixXd::Zero(ci, ci);
    m.lags.assign(c * c, std::nullopt);

    std::vector<std::size_t> members(c, 0);
    for (const auto& k : net.nodes) ++members[detail::position(m.communities, k.community)];

    std::vector<double> sum(c * c, 0.0);
    std::vector<std::size_t> count(c * c, 0);
    std::vector<const InfluenceEdge*> strongest(c * c, nullptr);
    for (const InfluenceEdge* ep : detail::ordered_edges(net)) {
        const InfluenceEdge& e = *ep;
        if (!(e.skill > rho_min)) continue;
        const std::size_t a = detail::position(m.communities, e.source.community);
        const std::size_t b = detail::position(m.communities, e.target.community);
        const std::size_t idx = a * c + b;
        sum[idx] += e.skill;
        ++count[idx];
        const InfluenceEdge* s = strongest[idx];
        if (!s || std::tie(s->skill, e.lag, e.source, e.target) < std::tie(e.skill, s->lag, s->source, s->target)) {
            strongest[idx] = &e;
        }
    }
    for (std::size_t a = 0; a < c; ++a) {
        for (std::size_t b = 0; b < c; ++b) {
            const std::size_t idx = a * c + b;
            if (count[idx] == 0) continue;
            const std::size_t evaluated = a == b ? members[a] * (members[a] - 1) : members[a] * members[b];
            const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
            m.values(ia, ib) = sum[idx] / static_cast<double>(evaluated);
            m.qualifying_mean(ia, ib) = sum[idx] / static_cast<double>(count[idx]);
            m.lags[idx] = strongest[idx]->lag;
        }
    }
    return m;
}

/// Out (row) and in (column) strengths relative to their medians.
struct RelativeInfluence {
    std::vector<std::string> communities;
    std::vector<double> out_strength;
    std::vector<double> in_strength;
    std::vector<double> out_relative;  ///< strength / median - 1, or the strength when degenerate
    std::vector<double> in_relative;
    bool out_degenerate = false;  ///< median out-strength is 0
    bool in_degenerate = false;
};

/// Diagonal (same-community) entries are excluded from both strengths.
[[nodiscard]] inline RelativeInfluence relative_influence(const InfluenceMatrix& m) {
    const std::size_t c = m.size();
    RelativeInfluence r;
    r.communities = m.communities;
    r.out_strength.assign(c, 0.0);
    r.in_strength.assign(c, 0.0);
    if (c > 1) {
        for (std::size_t a = 0; a < c; ++a) {
            for (std::size_t b = 0; b < c; ++b) {
                if (a == b) continue;
                r.out_strength[a] += m.value(a, b);
                r.in_strength[b] += m.value(a, b);
            }
        }
        for (std::size_t a = 0; a < c; ++a) {
            r.out_strength[a] /= static_cast<double>(c - 1);
            r.in_strength[a] /= static_cast<double>(c - 1);
        }
    }
    auto relate = [](const std::vector<double>& s, std::vector<double>& rel, bool& degenerate) {
        if (s.empty()) return;
        const double med = median(s);
        degenerate = med == 0.0;
        rel.resize(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) rel[i] = degenerate ? s[i] : s[i] / med - 1.0;
    };
    relate(r.out_strength, r.out_relative, r.out_degenerate);
    relate(r.in_strength, r.in_relative, r.in_degenerate);
    return r;
}

struct TopicScore {
    std::string topic;
    double score = 0.0;
};

/**
 * For each source community, topics ranked by the mean skill of their
 * outgoing edges with skill > rho_min. At most `k` topics per community;
 * ties ordered by topic label. Communities without qualifying edges map to
 * an empty list.
 */
[[nodiscard]] inline std::map<std::string, std::vector<TopicScore>> top_topics(const CausalNetwork& net,
                                                                              double rho_min = kTopicRho,
                                                                              std::size_t k = kDefaultTopK) {
    if (k < 1) {
        throw ValidationError("top_topics: k must be at least 1");
    }
    std::map<std::string, std::map<std::string, std::pair<double, std::size_t>>> acc;
    std::map<std::string, std::vector<TopicScore>> out;
    for (const auto& node : net.nodes) out[node.community];
    for (const InfluenceEdge* ep : detail::ordered_edges(net)) {
        const InfluenceEdge& e = *ep;
        if (!(e.skill > rho_min)) continue;
        auto& [sum, count] = acc[e.source.community][e.source.topic];
        sum += e.skill;
        ++count;
    }
    for (const auto& [community, topics] : acc) {
        std::vector<TopicScore> ranked;
        for (const auto& [topic, sc] : topics) ranked.push_back({topic, sc.first / static_cast<double>(sc.second)});
        std::stable_sort(ranked.begin(), ranked.end(),
                         [](const TopicScore& a, const TopicScore& b) { return a.score > b.score; });
        if (ranked.size() > k) ranked.resize(k);
        out[community] = std::move(ranked);
    }
    return out;
}

}  // namespace ccmnet
