#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string_view>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "error.hpp"
#include "panel.hpp"
#include "random.hpp"

namespace ccmnet::synth {

/// First day of generated panels unless stated otherwise.
inline const Date kDefaultStart = Date{std::chrono::year{2021} / 9 / 1};

struct SeriesPair {
    std::vector<double> x;
    std::vector<double> y;
};

/**
 * Two coupled logistic maps:
 *   x(t+1) = x(t) (r_x - r_x x(t) - beta_xy y(t))
 *   y(t+1) = y(t) (r_y - r_y y(t) - beta_yx x(t))
 * beta_yx > 0 means X drives Y. Initial values are uniform in (0, 1); the
 * first `burn_in` steps are discarded. A trajectory leaving (0, 1) is
 * restarted from a perturbed seed, at most 10 attempts.
 */
[[nodiscard]] inline SeriesPair coupled_logistic(double r_x, double r_y, double beta_xy, double beta_yx,
                                                 std::size_t length, std::uint64_t seed, std::size_t burn_in = 100) {
    if (!(r_x >= 3.5 && r_x <= 4.0 && r_y >= 3.5 && r_y <= 4.0)) {
        throw ValidationError("coupled_logistic: r must lie in [3.5, 4.0]");
    }
    if (!(beta_xy >= 0.0 && beta_yx >= 0.0)) {
        throw ValidationError("coupled_logistic: coupling must be non-negative");
    }
    if (length < 50) {
        throw ValidationError("coupled_logistic: length must be at least 50");
    }
    constexpr int kAttempts = 10;
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
        SplitMix64 rng(seed + static_cast<std::uint64_t>(attempt) * 0xD1B54A32D192ED03ULL);
        double x = rng.uniform_open();
        double y = rng.uniform_open();
        SeriesPair out;
        out.x.reserve(length);
        out.y.reserve(length);
        bool diverged = false;
        for (std::size_t t = 0; t < burn_in + length; ++t) {
            const double nx = x * (r_x - r_x * x - beta_xy * y);
            const double ny = y * (r_y - r_y * y - beta_yx * x);
            x = nx;
            y = ny;
            if (!(x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0)) {
                diverged = true;
                break;
            }
            if (t >= burn_in) {
                out.x.push_back(x);
                out.y.push_back(y);
            }
        }
        if (!diverged) return out;
    }
    throw Error("coupled_logistic: trajectory left (0, 1) in every attempt");
}

/// AR(1) noise x(t) = phi x(t-1) + sigma e(t), x(0) = sigma e(0).
[[nodiscard]] inline std::vector<double> ar_noise(std::size_t length, double phi, double sigma, std::uint64_t seed) {
    if (!(std::abs(phi) < 1.0)) {
        throw ValidationError("ar_noise: |phi| must be below 1");
    }
    SplitMix64 rng(seed);
    std::vector<double> x(length);
    double prev = 0.0;
    for (std::size_t t = 0; t < length; ++t) {
        prev = phi * prev + sigma * rng.normal();
        x[t] = prev;
    }
    return x;
}

/// y(t) = x(t - lag) + noise e(t); the first `lag` values are noise only.
[[nodiscard]] inline std::vector<double> shifted_copy(std::span<const double> x, std::size_t lag, double noise,
                                                      std::uint64_t seed) {
    if (lag >= x.size()) {
        throw ValidationError("shifted_copy: lag must be shorter than the series");
    }
    SplitMix64 rng(seed);
    std::vector<double> y(x.size());
    for (std::size_t t = 0; t < x.size(); ++t) {
        const double base = t >= lag ? x[t - lag] : 0.0;
        y[t] = noise == 0.0 ? base : base + noise * rng.normal();
    }
    return y;
}

/**
 * `series` i.i.d. standard-normal return series of `length` days. Days
 * `window_first`..`window_last` (1-based, inclusive) additionally carry a
 * shared standard-normal factor times `amplitude`.
 */
[[nodiscard]] inline ReturnPanel common_factor_panel(std::size_t series, std::size_t length, std::size_t window_first,
                                                     std::size_t window_last, double amplitude, std::uint64_t seed,
                                                     Date start = kDefaultStart) {
    if (series < 3) {
        throw ValidationError("common_factor_panel: need at least 3 series");
    }
    if (window_first < 1 || window_first > window_last || window_last > length) {
        throw ValidationError("common_factor_panel: window outside [1, length]");
    }
    SplitMix64 rng(seed);
    std::vector<double> factor(length);
    for (double& f : factor) f = rng.normal();
    std::vector<SeriesKey> keys;
    std::vector<std::vector<double>> values;
    for (std::size_t i = 0; i < series; ++i) {
        std::vector<double> s(length);
        for (std::size_t t = 0; t < length; ++t) {
            s[t] = rng.normal();
            if (t + 1 >= window_first && t + 1 <= window_last) s[t] += amplitude * factor[t];
        }
        keys.push_back({fmt::format("c{:02d}", i), "noise"});
        values.push_back(std::move(s));
    }
    std::vector<Date> dates(length);
    for (std::size_t t = 0; t < length; ++t) dates[t] = start + std::chrono::days{static_cast<int>(t)};
    return ReturnPanel(std::move(dates), std::move(keys), std::move(values));
}

/**
 * Synthetic activity counts for communities x topics.
 *
 * Each topic has a chaotic driver (logistic map). The first community's
 * log-activity on a topic follows the driver; every other community follows
 * it with a delay of `follow_lag` days plus AR(1) noise. Counts are
 * floor(exp(level)) with a per-series base level between 2 and 6.
 */
[[nodiscard]] inline Panel activity_panel(std::size_t communities, std::size_t topics, std::size_t days,
                                          std::uint64_t seed, Date start = kDefaultStart,
                                          std::size_t follow_lag = 2) {
    if (communities < 1 || topics < 1 || days < 2) {
        throw ValidationError("activity_panel: need at least 1 community, 1 topic and 2 days");
    }
    SplitMix64 rng(seed);
    std::vector<SeriesKey> keys;
    std::vector<std::vector<std::int64_t>> values;
    for (std::size_t k = 0; k < topics; ++k) {
        const auto driver = coupled_logistic(3.6 + 0.35 * rng.uniform(), 3.6, 0.0, 0.0, days + follow_lag,
                                             rng(), 50)
                                .x;
        for (std::size_t c = 0; c < communities; ++c) {
            const double base = 2.0 + 4.0 * rng.uniform();
            const double gain = c == 0 ? 1.5 : 0.5 + rng.uniform();
            const std::size_t shift = c == 0 ? 0 : follow_lag;
            const auto noise = ar_noise(days, 0.5, c == 0 ? 0.05 : 0.25, rng());
            std::vector<std::int64_t> counts(days);
            for (std::size_t t = 0; t < days; ++t) {
                const double level = base + gain * driver[t + follow_lag - shift] + noise[t];
                counts[t] = static_cast<std::int64_t>(std::floor(std::exp(level)));
            }
            keys.push_back({fmt::format("C{}", c + 1), fmt::format("topic{:02d}", k + 1)});
            values.push_back(std::move(counts));
        }
    }
    std::vector<Date> dates(days);
    for (std::size_t t = 0; t < days; ++t) dates[t] = start + std::chrono::days{static_cast<int>(t)};
    return Panel(std::move(dates), std::move(keys), std::move(values));
}

/**
 * Count panel whose log-returns approximate `rp`: level(0) = ln(base + 1),
 * level(t) = level(t-1) + r(t), count = round(exp(level) - 1), clamped at 0.
 * The panel starts one day before rp.
 */
[[nodiscard]] inline Panel integrate_returns(const ReturnPanel& rp, double base = 1000.0) {
    std::vector<std::vector<std::int64_t>> values;
    for (std::size_t i = 0; i < rp.series_count(); ++i) {
        const auto r = rp.series(i);
        std::vector<std::int64_t> counts(r.size() + 1);
        double level = std::log(base + 1.0);
        counts[0] = static_cast<std::int64_t>(std::llround(base));
        for (std::size_t t = 0; t < r.size(); ++t) {
            level += r[t];
            counts[t + 1] = std::max<std::int64_t>(0, std::llround(std::exp(level) - 1.0));
        }
        values.push_back(std::move(counts));
    }
    std::vector<Date> dates;
    dates.push_back(rp.dates().front() - std::chrono::days{1});
    dates.insert(dates.end(), rp.dates().begin(), rp.dates().end());
    return Panel(std::move(dates), rp.keys(), std::move(values));
}

/// Wraps named real series into a ReturnPanel with community `group`.
[[nodiscard]] inline ReturnPanel series_panel(std::string group, std::vector<std::pair<std::string, std::vector<double>>> named,
                                              Date start = kDefaultStart) {
    std::vector<SeriesKey> keys;
    std::vector<std::vector<double>> values;
    for (auto& [name, v] : named) {
        keys.push_back({group, name});
        values.push_back(std::move(v));
    }
    const std::size_t length = values.empty() ? 0 : values.front().size();
    std::vector<Date> dates(length);
    for (std::size_t t = 0; t < length; ++t) dates[t] = start + std::chrono::days{static_cast<int>(t)};
    return ReturnPanel(std::move(dates), std::move(keys), std::move(values));
}

enum class GeneratorKind { activity, coupled_logistic, common_factor_panel, ar_noise, shifted_copy };

[[nodiscard]] inline std::optional<GeneratorKind> parse_generator_kind(std::string_view name) {
    if (name == "activity") return GeneratorKind::activity;
    if (name == "coupled-logistic") return GeneratorKind::coupled_logistic;
    if (name == "common-factor-panel") return GeneratorKind::common_factor_panel;
    if (name == "ar-noise") return GeneratorKind::ar_noise;
    if (name == "shifted-copy") return GeneratorKind::shifted_copy;
    return std::nullopt;
}

/// A generator with named numeric parameters; unset parameters take defaults.
struct GeneratorSpec {
    GeneratorKind kind = GeneratorKind::activity;
    std::map<std::string, double> parameters;
    std::uint64_t seed = 0;

    [[nodiscard]] double get(const std::string& name, double fallback) const {
        auto it = parameters.find(name);
        return it == parameters.end() ? fallback : it->second;
    }
    [[nodiscard]] std::size_t count(const std::string& name, std::size_t fallback) const {
        const double v = get(name, static_cast<double>(fallback));
        if (!(v >= 0.0) || v != std::floor(v)) {
            throw ValidationError("generator parameter '" + name + "' must be a non-negative integer");
        }
        return static_cast<std::size_t>(v);
    }
};

/**
 * Runs a generator and returns a count panel in ingestion form. Real-valued
 * generators are treated as daily log-returns and integrated with
 * integrate_returns (parameter `base`, default 1000).
 */
[[nodiscard]] inline Panel generate(const GeneratorSpec& spec) {
    static const std::map<GeneratorKind, std::vector<std::string>> known{
        {GeneratorKind::activity, {"days", "communities", "topics", "follow_lag"}},
        {GeneratorKind::coupled_logistic, {"days", "base", "r_x", "r_y", "beta_xy", "beta_yx", "burn_in"}},
        {GeneratorKind::common_factor_panel,
         {"days", "base", "series", "window_first", "window_last", "amplitude"}},
        {GeneratorKind::ar_noise, {"days", "base", "series", "phi", "sigma"}},
        {GeneratorKind::shifted_copy, {"days", "base", "r_x", "lag", "noise"}},
    };
    const auto& names = known.at(spec.kind);
    for (const auto& [name, value] : spec.parameters) {
        if (std::find(names.begin(), names.end(), name) == names.end()) {
            throw ValidationError("unknown generator parameter '" + name + "'");
        }
    }
    const std::size_t days = spec.count("days", 419);
    const double base = spec.get("base", 1000.0);
    switch (spec.kind) {
        case GeneratorKind::activity:
            return activity_panel(spec.count("communities", 8), spec.count("topics", 11), days, spec.seed,
                                  kDefaultStart, spec.count("follow_lag", 2));
        case GeneratorKind::coupled_logistic: {
            auto p = coupled_logistic(spec.get("r_x", 3.8), spec.get("r_y", 3.5), spec.get("beta_xy", 0.0),
                                      spec.get("beta_yx", 0.32), days, spec.seed, spec.count("burn_in", 100));
            return integrate_returns(series_panel("logistic", {{"x", std::move(p.x)}, {"y", std::move(p.y)}}), base);
        }
        case GeneratorKind::common_factor_panel:
            return integrate_returns(common_factor_panel(spec.count("series", 20), days,
                                                         spec.count("window_first", 100),
                                                         spec.count("window_last", 130), spec.get("amplitude", 2.0),
                                                         spec.seed),
                                     base);
        case GeneratorKind::ar_noise: {
            std::vector<std::pair<std::string, std::vector<double>>> named;
            SplitMix64 seeds(spec.seed);
            for (std::size_t i = 0; i < spec.count("series", 3); ++i) {
                named.emplace_back(fmt::format("ar{:02d}", i),
                                   ar_noise(days, spec.get("phi", 0.5), spec.get("sigma", 0.1), seeds()));
            }
            return integrate_returns(series_panel("noise", std::move(named)), base);
        }
        case GeneratorKind::shifted_copy: {
            auto p = coupled_logistic(spec.get("r_x", 3.8), 3.5, 0.0, 0.0, days, spec.seed);
            auto y = shifted_copy(p.x, spec.count("lag", 3), spec.get("noise", 0.01), spec.seed + 1);
            return integrate_returns(series_panel("shift", {{"source", std::move(p.x)}, {"copy", std::move(y)}}),
                                     base);
        }
    }
    throw ValidationError("unknown generator kind");
}

}  // namespace ccmnet::synth
