#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "ccm.hpp"
#include "csv.hpp"
#include "error.hpp"
#include "graph.hpp"
#include "influence.hpp"
#include "panel.hpp"
#include "spectral.hpp"

namespace ccmnet {

/**
 * Parameters of a full pipeline run. Defaults follow the published analysis
 * where it states a value (14-day window, ratio threshold 1, 90th-quantile
 * graph threshold, lags up to 7, skill thresholds 0.25/0.4/0.5, top 3
 * topics) and documented choices otherwise.
 */
struct RunConfig {
    std::filesystem::path input;
    std::filesystem::path output;
    std::optional<Date> split_date;  ///< first day of the "post" period

    std::size_t window_days = kDefaultWindowDays;
    double detector_threshold = kDefaultCollectiveThreshold;
    double graph_quantile = kDefaultGraphQuantile;
    double top_fraction = kDefaultTopFraction;

    std::optional<std::size_t> dimension;
    std::size_t max_dimension = kDefaultMaxDimension;
    std::size_t delay = 1;
    std::size_t theiler = 0;
    std::size_t max_lag = kDefaultMaxLag;
    std::vector<std::size_t> libraries;  ///< empty: default grid
    std::size_t library_count = kDefaultLibraryCount;
    LibrarySampling sampling = LibrarySampling::prefix;
    double min_improvement = kDefaultMinImprovement;

    double rho_network = kRelativeRho;  ///< convergence threshold for stored edges
    double rho_matrix = kMatrixRho;
    double rho_topics = kTopicRho;
    double rho_relative = kRelativeRho;
    std::size_t top_k = kDefaultTopK;

    std::uint64_t seed = 0;
    std::size_t threads = 1;

    /// CCM settings for the network sweep.
    [[nodiscard]] CcmSettings ccm_settings() const {
        CcmSettings s;
        s.dimension = dimension;
        s.max_dimension = max_dimension;
        s.delay = delay;
        s.theiler = theiler;
        s.library_sizes = libraries;
        s.library_count = library_count;
        s.sampling = sampling;
        s.seed = seed;
        s.rule = {rho_network, min_improvement};
        s.max_lag = max_lag;
        return s;
    }

    void validate() const {
        auto unit = [](std::string_view name, double v) {
            if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(fmt::format("{} must lie in [0, 1], got {}", name, v));
        };
        auto open_unit = [](std::string_view name, double v) {
            if (!(v > 0.0 && v < 1.0)) throw ConfigError(fmt::format("{} must lie in (0, 1), got {}", name, v));
        };
        if (input.empty()) throw ConfigError("input is required");
        if (output.empty()) throw ConfigError("output is required");
        if (window_days < 2) throw ConfigError("window_days must be at least 2");
        if (!(detector_threshold >= 0.0)) throw ConfigError("detector_threshold must be non-negative");
        open_unit("graph_quantile", graph_quantile);
        open_unit("top_fraction", top_fraction);
        if (dimension && *dimension < 2) throw ConfigError("ccm.dimension must be at least 2");
        if (max_dimension < 2) throw ConfigError("ccm.max_dimension must be at least 2");
        if (delay < 1) throw ConfigError("ccm.delay must be at least 1");
        if (library_count < 2) throw ConfigError("ccm.library_count must be at least 2");
        for (std::size_t i = 1; i < libraries.size(); ++i) {
            if (libraries[i] <= libraries[i - 1]) throw ConfigError("ccm.libraries must be strictly increasing");
        }
        unit("ccm.min_improvement", min_improvement);
        unit("rho.network", rho_network);
        unit("rho.matrix", rho_matrix);
        unit("rho.topics", rho_topics);
        unit("rho.relative", rho_relative);
        if (rho_network > std::min({rho_matrix, rho_topics, rho_relative})) {
            throw ConfigError("rho.network must not exceed the analysis thresholds");
        }
        if (top_k < 1) throw ConfigError("top_k must be at least 1");
        if (threads < 1) throw ConfigError("threads must be at least 1");
    }
};

namespace detail {

template <class T>
T parse_integer(std::string_view key, std::string_view v) {
    T out{};
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) {
        throw ConfigError(fmt::format("{}: expected a non-negative integer, got '{}'", key, v));
    }
    return out;
}

inline double parse_real(std::string_view key, std::string_view v) {
    try {
        std::size_t used = 0;
        const std::string s(v);
        const double d = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument("trailing");
        return d;
    } catch (const std::logic_error&) {
        throw ConfigError(fmt::format("{}: expected a number, got '{}'", key, v));
    }
}

}  // namespace detail

/// Applies one `key = value` setting.
inline void apply_setting(RunConfig& c, std::string_view key, std::string_view value) {
    using detail::parse_integer;
    using detail::parse_real;
    const bool is_auto = value == "auto";
    if (key == "input") c.input = std::string(value);
    else if (key == "output") c.output = std::string(value);
    else if (key == "split_date") {
        if (value.empty() || value == "none") c.split_date.reset();
        else {
            try {
                c.split_date = parse_date(value);
            } catch (const ParseError& e) {
                throw ConfigError(fmt::format("split_date: {}", e.what()));
            }
        }
    }
    else if (key == "window_days") c.window_days = parse_integer<std::size_t>(key, value);
    else if (key == "detector_threshold") c.detector_threshold = parse_real(key, value);
    else if (key == "graph_quantile") c.graph_quantile = parse_real(key, value);
    else if (key == "top_fraction") c.top_fraction = parse_real(key, value);
    else if (key == "ccm.dimension") c.dimension = is_auto ? std::nullopt : std::optional(parse_integer<std::size_t>(key, value));
    else if (key == "ccm.max_dimension") c.max_dimension = parse_integer<std::size_t>(key, value);
    else if (key == "ccm.delay") c.delay = parse_integer<std::size_t>(key, value);
    else if (key == "ccm.theiler") c.theiler = parse_integer<std::size_t>(key, value);
    else if (key == "ccm.max_lag") c.max_lag = parse_integer<std::size_t>(key, value);
    else if (key == "ccm.libraries") {
        c.libraries.clear();
        if (!is_auto) {
            for (const auto& f : csv::split(value)) c.libraries.push_back(parse_integer<std::size_t>(key, csv::trim(f)));
        }
    }
    else if (key == "ccm.library_count") c.library_count = parse_integer<std::size_t>(key, value);
    else if (key == "ccm.sampling") {
        if (value == "prefix") c.sampling = LibrarySampling::prefix;
        else if (value == "random") c.sampling = LibrarySampling::random;
        else throw ConfigError(fmt::format("ccm.sampling: expected prefix or random, got '{}'", value));
    }
    else if (key == "ccm.min_improvement") c.min_improvement = parse_real(key, value);
    else if (key == "rho.network") c.rho_network = parse_real(key, value);
    else if (key == "rho.matrix") c.rho_matrix = parse_real(key, value);
    else if (key == "rho.topics") c.rho_topics = parse_real(key, value);
    else if (key == "rho.relative") c.rho_relative = parse_real(key, value);
    else if (key == "top_k") c.top_k = parse_integer<std::size_t>(key, value);
    else if (key == "seed") c.seed = parse_integer<std::uint64_t>(key, value);
    else if (key == "threads") c.threads = parse_integer<std::size_t>(key, value);
    else throw ConfigError(fmt::format("unknown setting '{}'", key));
}

/**
 * Reads a key-value document: one `key = value` per line, `#` starts a
 * comment, blank lines ignored. Keys may appear once.
 */
[[nodiscard]] inline RunConfig parse_config(std::istream& in) {
    RunConfig c;
    std::set<std::string, std::less<>> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view s = line;
        if (auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
        s = csv::trim(s);
        if (s.empty()) continue;
        const auto eq = s.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(fmt::format("line {}: expected key = value", line_no));
        }
        const auto key = csv::trim(s.substr(0, eq));
        const auto value = csv::trim(s.substr(eq + 1));
        if (!seen.emplace(key).second) {
            throw ConfigError(fmt::format("line {}: duplicate key '{}'", line_no, key));
        }
        apply_setting(c, key, value);
    }
    return c;
}

[[nodiscard]] inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    return parse_config(in);
}

}  // namespace ccmnet
