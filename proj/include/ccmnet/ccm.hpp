#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "error.hpp"
#include "random.hpp"
#include "stats.hpp"

namespace ccmnet {

/// Delay-embedding parameters: dimension E >= 2, delay tau >= 1 (days),
/// Theiler exclusion radius >= 0 (days).
struct EmbeddingParams {
    std::size_t dimension = 2;
    std::size_t delay = 1;
    std::size_t theiler = 0;

    void validate() const {
        if (dimension < 2) throw ValidationError("embedding dimension must be at least 2");
        if (delay < 1) throw ValidationError("embedding delay must be at least 1");
    }

    /// Span in days covered by one delay vector, (E - 1) * tau.
    [[nodiscard]] std::size_t span() const noexcept { return (dimension - 1) * delay; }

    /// Neighbors used per estimate, E + 1.
    [[nodiscard]] std::size_t neighbors() const noexcept { return dimension + 1; }
};

/**
 * Delay-embedded point cloud of one series.
 *
 * Point p holds (x(t), x(t - tau), ..., x(t - (E - 1) tau)) with
 * t = times[p] = (E - 1) tau + p.
 */
class ShadowManifold {
public:
    ShadowManifold(std::string source, EmbeddingParams params, std::vector<double> coords)
        : source_(std::move(source)), params_(params), coords_(std::move(coords)) {}

    [[nodiscard]] const std::string& source() const noexcept { return source_; }
    [[nodiscard]] const EmbeddingParams& params() const noexcept { return params_; }
    [[nodiscard]] std::size_t size() const noexcept { return coords_.size() / params_.dimension; }
    [[nodiscard]] std::size_t dimension() const noexcept { return params_.dimension; }

    [[nodiscard]] std::span<const double> point(std::size_t p) const {
        return std::span<const double>(coords_).subspan(p * params_.dimension, params_.dimension);
    }

    [[nodiscard]] std::size_t time(std::size_t p) const noexcept { return params_.span() + p; }

    [[nodiscard]] double squared_distance(std::size_t a, std::size_t b) const noexcept {
        const double* pa = coords_.data() + a * params_.dimension;
        const double* pb = coords_.data() + b * params_.dimension;
        double s = 0.0;
        for (std::size_t k = 0; k < params_.dimension; ++k) {
            const double d = pa[k] - pb[k];
            s += d * d;
        }
        return s;
    }

private:
    std::string source_;
    EmbeddingParams params_;
    std::vector<double> coords_;
};

[[nodiscard]] inline ShadowManifold delay_embed(std::span<const double> x, EmbeddingParams params,
                                                std::string source = {}) {
    params.validate();
    if (x.size() < params.span() + 2) {
        throw ValidationError(fmt::format("delay_embed: series of length {} too short for E={}, tau={}", x.size(),
                                          params.dimension, params.delay));
    }
    const std::size_t n = x.size() - params.span();
    std::vector<double> coords;
    coords.reserve(n * params.dimension);
    for (std::size_t p = 0; p < n; ++p) {
        const std::size_t t = params.span() + p;
        for (std::size_t k = 0; k < params.dimension; ++k) coords.push_back(x[t - k * params.delay]);
    }
    return ShadowManifold(std::move(source), params, std::move(coords));
}

struct Neighbor {
    std::size_t index = 0;  ///< manifold point index
    std::size_t time = 0;
    double distance = 0.0;
};

/**
 * The k nearest library points to point `query`, by Euclidean distance.
 *
 * Points whose time lies within the Theiler radius of the query (the query
 * itself included) are not eligible. Equal distances rank the earlier time
 * first.
 */
[[nodiscard]] inline std::vector<Neighbor> knn(const ShadowManifold& m, std::size_t query, std::size_t k,
                                               std::span<const std::size_t> library) {
    if (query >= m.size()) {
        throw ValidationError("knn: query index out of range");
    }
    const std::size_t theiler = m.params().theiler;
    const std::size_t tq = m.time(query);
    std::vector<std::pair<double, std::size_t>> candidates;
    candidates.reserve(library.size());
    for (std::size_t p : library) {
        const std::size_t tp = m.time(p);
        const std::size_t gap = tp > tq ? tp - tq : tq - tp;
        if (gap <= theiler) continue;
        candidates.emplace_back(m.squared_distance(query, p), p);
    }
    if (candidates.size() < k) {
        throw ValidationError(fmt::format("knn: {} eligible neighbors, {} requested", candidates.size(), k));
    }
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k), candidates.end());
    std::vector<Neighbor> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        out.push_back({candidates[i].second, m.time(candidates[i].second), std::sqrt(candidates[i].first)});
    }
    return out;
}

/// knn over the whole manifold.
[[nodiscard]] inline std::vector<Neighbor> knn(const ShadowManifold& m, std::size_t query, std::size_t k) {
    std::vector<std::size_t> all(m.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return knn(m, query, k, all);
}

/**
 * Normalized weights exp(-d_i / d_min) over a neighbor set.
 * When d_min is 0, zero-distance neighbors share the weight equally and the
 * rest get none.
 */
[[nodiscard]] inline std::vector<double> cross_map_weights(std::span<const Neighbor> neighbors) {
    if (neighbors.empty()) {
        throw ValidationError("cross_map_weights: no neighbors");
    }
    double d_min = neighbors.front().distance;
    for (const Neighbor& n : neighbors) d_min = std::min(d_min, n.distance);
    std::vector<double> w(neighbors.size());
    for (std::size_t i = 0; i < neighbors.size(); ++i) {
        w[i] = d_min == 0.0 ? (neighbors[i].distance == 0.0 ? 1.0 : 0.0) : std::exp(-neighbors[i].distance / d_min);
    }
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& v : w) v /= total;
    return w;
}

/**
 * Estimate of the value paired with point `query`, as the weighted mean of
 * the values paired with its E + 1 nearest library points.
 *
 * `aligned[p]` is the value paired with manifold point p.
 */
[[nodiscard]] inline double cross_map_estimate(const ShadowManifold& m, std::span<const double> aligned,
                                               std::size_t query, std::span<const std::size_t> library) {
    if (aligned.size() != m.size()) {
        throw ValidationError("cross_map_estimate: aligned values do not match manifold size");
    }
    const auto nb = knn(m, query, m.params().neighbors(), library);
    const auto w = cross_map_weights(nb);
    double est = 0.0;
    for (std::size_t i = 0; i < nb.size(); ++i) est += w[i] * aligned[nb[i].index];
    return est;
}

[[nodiscard]] inline double cross_map_estimate(const ShadowManifold& m, std::span<const double> aligned,
                                               std::size_t query) {
    std::vector<std::size_t> all(m.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return cross_map_estimate(m, aligned, query, all);
}

/// Cross-map skill: Pearson correlation of actual against estimated values.
[[nodiscard]] inline Correlation skill(std::span<const double> actual, std::span<const double> estimated) {
    if (actual.size() != estimated.size()) {
        throw ValidationError("skill: length mismatch");
    }
    if (actual.size() < 3) {
        throw ValidationError("skill: need at least 3 estimates");
    }
    return pearson(actual, estimated);
}

struct SkillCurve {
    std::vector<std::size_t> library_sizes;
    std::vector<double> skills;
    std::vector<std::size_t> estimates;  ///< number of estimated points per size
};

enum class LibrarySampling { prefix, random };

/**
 * `count` logarithmically spaced library sizes from E + 2 to `usable`,
 * rounded and deduplicated.
 */
[[nodiscard]] inline std::vector<std::size_t> default_library_sizes(std::size_t dimension, std::size_t usable,
                                                                    std::size_t count = 10) {
    const std::size_t lo = dimension + 2;
    if (usable < lo) {
        throw ValidationError(fmt::format("library grid: {} usable points, need at least {}", usable, lo));
    }
    if (usable == lo || count < 2) {
        return {usable};
    }
    std::vector<std::size_t> sizes;
    const double a = std::log(static_cast<double>(lo));
    const double b = std::log(static_cast<double>(usable));
    for (std::size_t i = 0; i < count; ++i) {
        const double f = static_cast<double>(i) / static_cast<double>(count - 1);
        auto v = static_cast<std::size_t>(std::llround(std::exp(a + f * (b - a))));
        v = std::clamp(v, lo, usable);
        if (sizes.empty() || v > sizes.back()) sizes.push_back(v);
    }
    if (sizes.back() != usable) sizes.push_back(usable);
    return sizes;
}

/**
 * Cross-mapping engine for one target series.
 *
 * Builds the target's shadow manifold and, for every library size, the
 * neighbor sets and weights of each estimable point. Skill curves for any
 * number of source series then reduce to weighted sums.
 *
 * The source value paired with delay vector M(t) is the one observed at the
 * vector's oldest coordinate, t - (E - 1) tau; for manifold point p this is
 * source[p].
 */
class CrossMapper {
public:
    CrossMapper(std::span<const double> target, EmbeddingParams params, std::vector<std::size_t> library_sizes,
                LibrarySampling sampling = LibrarySampling::prefix, std::uint64_t seed = 0)
        : manifold_(delay_embed(target, params)), series_length_(target.size()), sizes_(std::move(library_sizes)) {
        const std::size_t n = manifold_.size();
        const std::size_t k = params.neighbors();
        if (sizes_.empty()) {
            throw ValidationError("ccm: empty library size list");
        }
        for (std::size_t i = 0; i < sizes_.size(); ++i) {
            if (i > 0 && sizes_[i] <= sizes_[i - 1]) {
                throw ValidationError("ccm: library sizes must be strictly increasing");
            }
            if (sizes_[i] < k || sizes_[i] > n) {
                throw ValidationError(
                    fmt::format("ccm: library size {} outside [{}, {}] usable points", sizes_[i], k, n));
            }
        }

        std::vector<std::size_t> pool(n);
        std::iota(pool.begin(), pool.end(), std::size_t{0});
        if (sampling == LibrarySampling::random) {
            SplitMix64 rng(seed);
            for (std::size_t i = n; i > 1; --i) std::swap(pool[i - 1], pool[rng.below(i)]);
        }

        tables_.reserve(sizes_.size());
        for (std::size_t size : sizes_) {
            const std::span<const std::size_t> library(pool.data(), size);
            Table table;
            for (std::size_t q = 0; q < n; ++q) {
                if (eligible(library, q) < k) continue;
                const auto nb = knn(manifold_, q, k, library);
                const auto w = cross_map_weights(nb);
                table.queries.push_back(q);
                for (std::size_t i = 0; i < k; ++i) {
                    table.neighbors.push_back(nb[i].index);
                    table.weights.push_back(w[i]);
                }
            }
            if (table.queries.size() < 3) {
                throw ValidationError(fmt::format("ccm: library size {} leaves fewer than 3 estimable points", size));
            }
            tables_.push_back(std::move(table));
        }
    }

    [[nodiscard]] const ShadowManifold& manifold() const noexcept { return manifold_; }
    [[nodiscard]] const std::vector<std::size_t>& library_sizes() const noexcept { return sizes_; }

    /// Cross-map skill of `source` (same length as the target) per library size.
    [[nodiscard]] SkillCurve skill_curve(std::span<const double> source) const {
        if (source.size() != series_length_) {
            throw ValidationError("ccm: source and target lengths differ");
        }
        const std::size_t k = manifold_.params().neighbors();
        SkillCurve curve{sizes_, {}, {}};
        curve.skills.reserve(tables_.size());
        std::vector<double> actual, estimated;
        for (const Table& t : tables_) {
            actual.resize(t.queries.size());
            estimated.resize(t.queries.size());
            for (std::size_t i = 0; i < t.queries.size(); ++i) {
                double est = 0.0;
                for (std::size_t j = 0; j < k; ++j) est += t.weights[i * k + j] * source[t.neighbors[i * k + j]];
                estimated[i] = est;
                actual[i] = source[t.queries[i]];
            }
            curve.skills.push_back(skill(actual, estimated).value);
            curve.estimates.push_back(t.queries.size());
        }
        return curve;
    }

private:
    struct Table {
        std::vector<std::size_t> queries;
        std::vector<std::size_t> neighbors;  // queries x (E + 1)
        std::vector<double> weights;
    };

    [[nodiscard]] std::size_t eligible(std::span<const std::size_t> library, std::size_t q) const {
        const std::size_t theiler = manifold_.params().theiler;
        std::size_t excluded = 0;
        for (std::size_t p : library) {
            const std::size_t gap = p > q ? p - q : q - p;
            if (gap <= theiler) ++excluded;
        }
        return library.size() - excluded;
    }

    ShadowManifold manifold_;
    std::size_t series_length_;
    std::vector<std::size_t> sizes_;
    std::vector<Table> tables_;
};

/// Skill of estimating `source` from the target's manifold, per library size.
[[nodiscard]] inline SkillCurve ccm_skill_curve(std::span<const double> source, std::span<const double> target,
                                                EmbeddingParams params, std::vector<std::size_t> library_sizes) {
    return CrossMapper(target, params, std::move(library_sizes)).skill_curve(source);
}

inline constexpr double kDefaultMinImprovement = 0.1;
inline constexpr std::size_t kDefaultMaxLag = 7;
inline constexpr std::size_t kDefaultMaxDimension = 8;
inline constexpr std::size_t kDefaultLibraryCount = 10;

/// Thresholds applied to a skill curve.
struct ConvergenceRule {
    double rho_threshold = 0.5;
    double min_improvement = kDefaultMinImprovement;

    [[nodiscard]] bool converged(const SkillCurve& c) const {
        return c.skills.back() - c.skills.front() >= min_improvement && c.skills.back() >= rho_threshold;
    }
};

struct CausalResult {
    std::size_t lag = 0;
    double skill = 0.0;  ///< skill at the largest library
    bool converged = false;
    SkillCurve curve;
};

[[nodiscard]] inline CausalResult make_result(SkillCurve curve, std::size_t lag, const ConvergenceRule& rule) {
    CausalResult r;
    r.lag = lag;
    r.skill = curve.skills.back();
    r.converged = rule.converged(curve);
    r.curve = std::move(curve);
    return r;
}

/// Tests "source causally influences target": does the target's manifold
/// recover the source, with skill growing over the library grid?
[[nodiscard]] inline CausalResult ccm_test(std::span<const double> source, std::span<const double> target,
                                          EmbeddingParams params, std::vector<std::size_t> library_sizes,
                                          const ConvergenceRule& rule) {
    return make_result(ccm_skill_curve(source, target, params, std::move(library_sizes)), 0, rule);
}

/**
 * E maximizing one-step-ahead self-prediction of `series` from its own
 * manifold, with leave-one-out (Theiler-excluded) neighbors. All candidate
 * dimensions predict the same set of days. Ties keep the smaller E.
 */
[[nodiscard]] inline std::size_t select_embedding_dimension(std::span<const double> series, std::size_t delay = 1,
                                                            std::size_t theiler = 0,
                                                            std::size_t max_dimension = kDefaultMaxDimension) {
    if (max_dimension < 2) {
        throw ValidationError("select_embedding_dimension: max dimension below 2");
    }
    const std::size_t first_time = (max_dimension - 1) * delay;
    if (series.size() < first_time + 8) {
        throw ValidationError("select_embedding_dimension: series too short for the dimension range");
    }
    std::size_t best = 2;
    double best_rho = -2.0;
    for (std::size_t e = 2; e <= max_dimension; ++e) {
        const EmbeddingParams params{e, delay, theiler};
        const ShadowManifold m = delay_embed(series, params);
        // points whose time lies in [first_time, size - 2] predict the next day
        const std::size_t p0 = first_time - params.span();
        const std::size_t p1 = series.size() - 1 - params.span();
        std::vector<std::size_t> library(p1 - p0);
        std::iota(library.begin(), library.end(), p0);
        std::vector<double> actual, estimated;
        for (std::size_t q : library) {
            const auto nb = knn(m, q, params.neighbors(), library);
            const auto w = cross_map_weights(nb);
            double est = 0.0;
            for (std::size_t i = 0; i < nb.size(); ++i) est += w[i] * series[nb[i].time + 1];
            estimated.push_back(est);
            actual.push_back(series[m.time(q) + 1]);
        }
        const double rho = pearson(actual, estimated).value;
        if (rho > best_rho) {
            best_rho = rho;
            best = e;
        }
    }
    return best;
}

/// Settings shared by lag scans and network sweeps.
struct CcmSettings {
    std::optional<std::size_t> dimension;  ///< forced E; selected per target when empty
    std::size_t max_dimension = kDefaultMaxDimension;
    std::size_t delay = 1;
    std::size_t theiler = 0;
    std::vector<std::size_t> library_sizes;  ///< empty: default logarithmic grid
    std::size_t library_count = kDefaultLibraryCount;
    LibrarySampling sampling = LibrarySampling::prefix;
    std::uint64_t seed = 0;
    ConvergenceRule rule;
    std::size_t max_lag = kDefaultMaxLag;
};

/// Cross-mapper for a target prepared according to `settings`.
[[nodiscard]] inline CrossMapper make_cross_mapper(std::span<const double> target, const CcmSettings& settings) {
    const std::size_t e = settings.dimension
                              ? *settings.dimension
                              : select_embedding_dimension(target, settings.delay, settings.theiler,
                                                           settings.max_dimension);
    const EmbeddingParams params{e, settings.delay, settings.theiler};
    params.validate();
    if (target.size() < params.span() + 2) {
        throw ValidationError("ccm: target too short for the embedding");
    }
    auto sizes = settings.library_sizes.empty()
                     ? default_library_sizes(e, target.size() - params.span(), settings.library_count)
                     : settings.library_sizes;
    return CrossMapper(target, params, std::move(sizes), settings.sampling, settings.seed);
}

struct LagScan {
    std::optional<std::size_t> best_lag;
    std::size_t dimension = 0;
    std::vector<CausalResult> per_lag;  ///< index = lag

    [[nodiscard]] const CausalResult* best() const { return best_lag ? &per_lag[*best_lag] : nullptr; }
};

/// Converged lag with the highest skill, ties to the smaller lag.
[[nodiscard]] inline std::optional<std::size_t> pick_best_lag(const std::vector<CausalResult>& per_lag) {
    std::optional<std::size_t> best;
    for (std::size_t k = 0; k < per_lag.size(); ++k) {
        if (per_lag[k].converged && (!best || per_lag[k].skill > per_lag[*best].skill)) best = k;
    }
    return best;
}

/**
 * Runs ccm_test for lags 0..max_lag, pairing source(t - lag) with
 * target(t). All lags share the same target days (the first max_lag days are
 * dropped), so their skills are directly comparable.
 */
[[nodiscard]] inline LagScan lag_scan(std::span<const double> source, std::span<const double> target,
                                      const CcmSettings& settings) {
    if (source.size() != target.size()) {
        throw ValidationError("lag_scan: source and target lengths differ");
    }
    const std::size_t max_lag = settings.max_lag;
    if (target.size() <= max_lag + 2) {
        throw ValidationError("lag_scan: series too short for the maximal lag");
    }
    const std::size_t len = target.size() - max_lag;
    const CrossMapper mapper = make_cross_mapper(target.subspan(max_lag), settings);
    LagScan scan;
    scan.dimension = mapper.manifold().dimension();
    for (std::size_t lag = 0; lag <= max_lag; ++lag) {
        scan.per_lag.push_back(make_result(mapper.skill_curve(source.subspan(max_lag - lag, len)), lag, settings.rule));
    }
    scan.best_lag = pick_best_lag(scan.per_lag);
    return scan;
}

}  // namespace ccmnet
