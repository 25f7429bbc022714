#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "ccm.hpp"
#include "config.hpp"
#include "error.hpp"
#include "graph.hpp"
#include "graph_io.hpp"
#include "influence.hpp"
#include "panel.hpp"
#include "spectral.hpp"
#include "svg.hpp"
#include "version.hpp"

namespace ccmnet {

/// Lower-case hex SHA-256 of a byte string.
[[nodiscard]] inline std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256 failed");
    }
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
    return hex;
}

[[nodiscard]] inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !out.write(content.data(), static_cast<std::streamsize>(content.size()))) {
        throw IoError("cannot write " + path.string());
    }
}

// ---- CSV renderers shared by the CLI subcommands and the pipeline ----

[[nodiscard]] inline std::string ratios_csv(const std::vector<WindowRatio>& ratios) {
    std::string out = "window_end,ratio\n";
    for (const auto& w : ratios) out += fmt::format("{},{}\n", format_date(w.window_end), w.ratio);
    return out;
}

[[nodiscard]] inline std::string events_csv(const std::vector<CollectiveEvent>& events) {
    std::string out = "window_end,ratio\n";
    for (const auto& e : events) out += fmt::format("{},{}\n", format_date(e.window_end), e.ratio);
    return out;
}

[[nodiscard]] inline std::string detector_svg(const std::vector<WindowRatio>& ratios, double threshold) {
    std::vector<std::string> labels;
    std::vector<double> values;
    for (const auto& w : ratios) {
        labels.push_back(format_date(w.window_end));
        values.push_back(w.ratio);
    }
    return svg::line_chart(labels, values, threshold, "Largest-eigenvalue ratio", "ratio");
}

/// One row per (source, target, lag): `source,target,lag,skill,converged`.
[[nodiscard]] inline std::string sweep_csv(const CcmSweep& sweep) {
    std::string out = "source,target,lag,skill,converged\n";
    const std::size_t n = sweep.keys.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const auto& scan = sweep.scan(i, j);
            if (!scan) continue;
            for (const CausalResult& r : scan->per_lag) {
                out += fmt::format("{},{},{},{},{}\n", csv::escape(sweep.keys[i].label()),
                                   csv::escape(sweep.keys[j].label()), r.lag, r.skill, r.converged ? 1 : 0);
            }
        }
    }
    return out;
}

/// Skill curve of one lag result: `library_size,skill,estimates`.
[[nodiscard]] inline std::string curve_csv(const SkillCurve& c) {
    std::string out = "library_size,skill,estimates\n";
    for (std::size_t i = 0; i < c.library_sizes.size(); ++i) {
        out += fmt::format("{},{},{}\n", c.library_sizes[i], c.skills[i], c.estimates[i]);
    }
    return out;
}

[[nodiscard]] inline std::string network_csv(const CausalNetwork& net) {
    std::string out = "source_community,source_topic,target_community,target_topic,skill,lag,same_community,strong\n";
    for (const auto& e : net.edges) {
        out += fmt::format("{},{},{},{},{},{},{},{}\n", csv::escape(e.source.community), csv::escape(e.source.topic),
                           csv::escape(e.target.community), csv::escape(e.target.topic), e.skill, e.lag,
                           e.same_community ? 1 : 0, e.strong ? 1 : 0);
    }
    return out;
}

/// Directed graph of a causal network weighted by skill.
[[nodiscard]] inline WeightedGraph network_graph(const CausalNetwork& net) {
    const auto n = static_cast<Eigen::Index>(net.nodes.size());
    WeightedGraph g{net.nodes, Eigen::MatrixXd::Zero(n, n), true};
    for (const auto& e : net.edges) {
        auto pos = [&](const SeriesKey& k) {
            return std::lower_bound(net.nodes.begin(), net.nodes.end(), k) - net.nodes.begin();
        };
        g.adjacency(pos(e.source), pos(e.target)) = std::max(0.0, e.skill);
    }
    return g;
}

enum class MatrixField { value, qualifying_mean, lag };

[[nodiscard]] inline std::string matrix_csv(const InfluenceMatrix& m, MatrixField field) {
    std::string out = "source";
    for (const auto& c : m.communities) out += "," + csv::escape(c);
    out += '\n';
    for (std::size_t a = 0; a < m.size(); ++a) {
        out += csv::escape(m.communities[a]);
        for (std::size_t b = 0; b < m.size(); ++b) {
            const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
            switch (field) {
                case MatrixField::value: out += fmt::format(",{}", m.values(ia, ib)); break;
                case MatrixField::qualifying_mean: out += fmt::format(",{}", m.qualifying_mean(ia, ib)); break;
                case MatrixField::lag: out += m.lag(a, b) ? fmt::format(",{}", *m.lag(a, b)) : ","; break;
            }
        }
        out += '\n';
    }
    return out;
}

[[nodiscard]] inline std::string heatmap_svg(const InfluenceMatrix& m) {
    std::vector<double> values;
    std::vector<std::optional<long>> lags;
    for (std::size_t a = 0; a < m.size(); ++a) {
        for (std::size_t b = 0; b < m.size(); ++b) {
            values.push_back(m.value(a, b));
            lags.push_back(m.lag(a, b) ? std::optional<long>(static_cast<long>(*m.lag(a, b))) : std::nullopt);
        }
    }
    return svg::heatmap(m.communities, m.communities, values, lags, "Influence (rows: source, columns: target)");
}

[[nodiscard]] inline std::string relative_csv(const RelativeInfluence& r) {
    std::string out = "community,out_strength,in_strength,out_relative,in_relative\n";
    for (std::size_t i = 0; i < r.communities.size(); ++i) {
        out += fmt::format("{},{},{},{},{}\n", csv::escape(r.communities[i]), r.out_strength[i], r.in_strength[i],
                           r.out_relative[i], r.in_relative[i]);
    }
    return out;
}

[[nodiscard]] inline std::string top_topics_csv(const std::map<std::string, std::vector<TopicScore>>& tops) {
    std::string out = "community,rank,topic,score\n";
    for (const auto& [community, list] : tops) {
        for (std::size_t r = 0; r < list.size(); ++r) {
            out += fmt::format("{},{},{},{}\n", csv::escape(community), r + 1, csv::escape(list[r].topic),
                               list[r].score);
        }
    }
    return out;
}

[[nodiscard]] inline std::string centrality_csv(const CentralityReport& r) {
    std::ostringstream ss;
    write_centrality_csv(ss, r);
    return ss.str();
}

/// GraphML, DOT and CSV renderings of a graph.
struct GraphFiles {
    std::string graphml, dot, edges;
};

[[nodiscard]] inline GraphFiles render_graph(const WeightedGraph& g, const CentralityReport& r) {
    std::ostringstream gm, dot, edges;
    write_graphml(gm, g, r);
    write_dot(dot, g, r);
    write_edge_csv(edges, g);
    return {gm.str(), dot.str(), edges.str()};
}

/// What a pipeline run produced.
struct RunSummary {
    std::filesystem::path output;
    std::vector<std::string> files;  ///< relative names, sorted
    std::size_t events = 0;
    std::size_t causal_edges = 0;
};

namespace detail {

/// Runs one stage, tagging any failure with the stage name.
template <class F>
void stage(std::string_view name, F&& body) {
    try {
        body();
    } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("stage '{}': {}", name, e.what()));
    } catch (const ValidationError& e) {
        throw ValidationError(fmt::format("stage '{}': {}", name, e.what()));
    } catch (const std::exception& e) {
        throw Error(fmt::format("stage '{}': {}", name, e.what()));
    }
}

inline nlohmann::json settings_json(const RunConfig& c) {
    nlohmann::json j;
    j["input"] = c.input.generic_string();
    j["split_date"] = c.split_date ? nlohmann::json(format_date(*c.split_date)) : nlohmann::json(nullptr);
    j["window_days"] = c.window_days;
    j["detector_threshold"] = c.detector_threshold;
    j["graph_quantile"] = c.graph_quantile;
    j["top_fraction"] = c.top_fraction;
    j["ccm"] = {
        {"dimension", c.dimension ? nlohmann::json(*c.dimension) : nlohmann::json("auto")},
        {"max_dimension", c.max_dimension},
        {"delay", c.delay},
        {"theiler", c.theiler},
        {"max_lag", c.max_lag},
        {"libraries", c.libraries.empty() ? nlohmann::json("auto") : nlohmann::json(c.libraries)},
        {"library_count", c.library_count},
        {"sampling", c.sampling == LibrarySampling::prefix ? "prefix" : "random"},
        {"min_improvement", c.min_improvement},
    };
    j["rho"] = {{"network", c.rho_network}, {"matrix", c.rho_matrix}, {"topics", c.rho_topics},
                {"relative", c.rho_relative}};
    j["top_k"] = c.top_k;
    j["seed"] = c.seed;
    return j;
}

}  // namespace detail

/**
 * Full analysis: ingest, log-returns, collective detector on all series,
 * topic-aggregated correlation graphs (whole range, plus pre/post when a
 * split date is set), all-pairs CCM network and influence reports.
 *
 * Files are written to `<output>.partial` and moved into place only when
 * every stage succeeds. A manifest.json records every parameter, the code
 * version, the input digest and the digest of each output.
 */
inline RunSummary run_pipeline(const RunConfig& config, std::ostream& log = std::cerr) {
    config.validate();
    const std::filesystem::path out_dir = config.output;
    const std::filesystem::path tmp = out_dir.string() + ".partial";
    if (std::filesystem::exists(out_dir) && !std::filesystem::is_empty(out_dir) &&
        !std::filesystem::exists(out_dir / "manifest.json")) {
        throw ConfigError("output directory " + out_dir.string() + " exists and is not a previous run");
    }

    std::map<std::string, std::string> files;
    nlohmann::json manifest;
    manifest["tool"] = "ccmnet";
    manifest["version"] = std::string(kVersion);
    manifest["settings"] = detail::settings_json(config);
    manifest["definitions"] = {
        {"log_return", "ln((n(t)+1)/(n(t-1)+1)), attributed to the later day"},
        {"collective_ratio", "lambda_max(window)/lambda_max(full range) - 1, window labeled by its end date, stride 1"},
        {"graph_threshold", "type-7 quantile of |off-diagonal correlations|, recomputed per period"},
        {"betweenness", "shortest paths on distance 1/weight, unordered pairs, ties within relative 1e-9"},
        {"ccm_alignment", "source value paired with the oldest coordinate of the target delay vector"},
        {"ccm_lag", "source(t - lag) paired with target(t); all lags share the target days after max_lag"},
        {"ccm_convergence", "skill(L_max) - skill(L_min) >= min_improvement and skill(L_max) >= rho.network"},
        {"embedding_dimension", "E in [2, max_dimension] maximizing leave-one-out one-step self-prediction of the target"},
        {"influence_matrix", "sum of skills > rho over evaluated node pairs between communities (masked-zero mean)"},
        {"relative_influence", "row/column mean excluding diagonal, divided by the median over communities, minus 1"},
    };

    std::optional<Panel> panel;
    std::optional<ReturnPanel> returns;
    std::string input_bytes;
    detail::stage("ingest", [&] {
        input_bytes = read_file(config.input);
        std::istringstream in(input_bytes);
        std::ostringstream warnings;
        panel = read_panel(in, warnings);
        log << warnings.str();
        manifest["input"] = {{"sha256", sha256_hex(input_bytes)},
                             {"series", panel->series_count()},
                             {"days", panel->length()},
                             {"first_date", format_date(panel->dates().front())},
                             {"last_date", format_date(panel->dates().back())},
                             {"fill_warnings", warnings.str()}};
        returns = log_returns(*panel);
        if (config.split_date) {
            const Date split = *config.split_date;
            if (split <= returns->dates().front() + std::chrono::days{1} || split > returns->dates().back() - std::chrono::days{1}) {
                throw ConfigError("split_date must leave at least 2 return days on each side");
            }
        }
        std::string med = "date,median\n";
        const auto m = median_series(*panel);
        for (std::size_t t = 0; t < m.size(); ++t) med += fmt::format("{},{}\n", format_date(panel->dates()[t]), m[t]);
        files["median_activity.csv"] = std::move(med);
    });

    std::size_t event_count = 0;
    detail::stage("detect", [&] {
        log << fmt::format("detect: {} series, window {} days\n", returns->series_count(), config.window_days);
        const auto ratios = collective_ratios(*returns, config.window_days);
        std::vector<CollectiveEvent> events;
        for (const auto& w : ratios) {
            if (w.ratio >= config.detector_threshold) events.push_back({w.window_end, w.ratio});
        }
        event_count = events.size();
        files["detector_ratios.csv"] = ratios_csv(ratios);
        files["detector_events.csv"] = events_csv(events);
        files["detector.svg"] = detector_svg(ratios, config.detector_threshold);
        manifest["results"]["collective_events"] = events.size();
    });

    detail::stage("graph", [&] {
        const ReturnPanel topics = aggregate_over_communities(*returns);
        std::vector<std::pair<std::string, ReturnPanel>> periods;
        periods.emplace_back("full", topics);
        if (config.split_date) {
            const Date split = *config.split_date;
            periods.emplace_back("pre", slice_range(topics, topics.dates().front(), split - std::chrono::days{1}));
            periods.emplace_back("post", slice_range(topics, split, topics.dates().back()));
        }
        for (const auto& [name, rp] : periods) {
            const auto cm = correlation_matrix(rp);
            const double rho_c = quantile_threshold(cm, config.graph_quantile);
            const auto g = threshold_graph(cm, rho_c);
            const auto report = centrality(g, config.top_fraction);
            auto rendered = render_graph(g, report);
            files["graph_" + name + ".graphml"] = std::move(rendered.graphml);
            files["graph_" + name + ".dot"] = std::move(rendered.dot);
            files["graph_" + name + "_edges.csv"] = std::move(rendered.edges);
            files["graph_" + name + "_centrality.csv"] = centrality_csv(report);
            manifest["results"]["graphs"][name] = {{"rho_c", rho_c},
                                                   {"first_date", format_date(rp.dates().front())},
                                                   {"last_date", format_date(rp.dates().back())},
                                                   {"edges", g.edges().size()}};
        }
    });

    std::optional<CausalNetwork> network;
    detail::stage("ccm", [&] {
        const auto t0 = std::chrono::steady_clock::now();
        const CcmSweep sweep = ccm_sweep(*returns, config.ccm_settings(), config.threads);
        network = build_network(sweep);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        log << fmt::format("ccm: {} ordered pairs x {} lags in {:.1f} s, {} converged edges\n",
                           sweep.keys.size() * (sweep.keys.size() - 1), config.max_lag + 1, secs, network->edges.size());
        files["ccm_results.csv"] = sweep_csv(sweep);
        files["causal_network.csv"] = network_csv(*network);
        const auto g = network_graph(*network);
        auto rendered = render_graph(g, classify_top(g.labels, weighted_degree(g), betweenness(g), config.top_fraction));
        files["causal_network.graphml"] = std::move(rendered.graphml);
        nlohmann::json dims;
        for (std::size_t j = 0; j < sweep.keys.size(); ++j) dims[sweep.keys[j].label()] = sweep.dimensions[j];
        manifest["results"]["embedding_dimension"] = dims;
        manifest["results"]["causal_edges"] = network->edges.size();
    });

    detail::stage("influence", [&] {
        const auto matrix = community_matrix(*network, config.rho_matrix);
        files["influence_matrix.csv"] = matrix_csv(matrix, MatrixField::value);
        files["influence_matrix_qualifying.csv"] = matrix_csv(matrix, MatrixField::qualifying_mean);
        files["influence_lags.csv"] = matrix_csv(matrix, MatrixField::lag);
        files["influence_heatmap.svg"] = heatmap_svg(matrix);
        const auto rel = relative_influence(community_matrix(*network, config.rho_relative));
        files["relative_influence.csv"] = relative_csv(rel);
        files["relative_influence.svg"] =
            svg::bars(rel.communities, rel.out_relative, rel.in_relative, "Influence vs median", "Swayed vs median");
        files["top_topics.csv"] = top_topics_csv(top_topics(*network, config.rho_topics, config.top_k));
        manifest["results"]["relative_influence"] = {{"out_degenerate", rel.out_degenerate},
                                                     {"in_degenerate", rel.in_degenerate}};
    });

    RunSummary summary{out_dir, {}, event_count, network->edges.size()};
    detail::stage("write", [&] {
        std::filesystem::remove_all(tmp);
        std::filesystem::create_directories(tmp);
        try {
            for (const auto& [name, content] : files) {
                write_file(tmp / name, content);
                manifest["outputs"][name] = sha256_hex(content);
                summary.files.push_back(name);
            }
            write_file(tmp / "manifest.json", manifest.dump(2) + "\n");
            summary.files.push_back("manifest.json");
            std::sort(summary.files.begin(), summary.files.end());
            std::filesystem::remove_all(out_dir);
            std::filesystem::rename(tmp, out_dir);
        } catch (...) {
            std::error_code ec;
            std::filesystem::remove_all(tmp, ec);
            throw;
        }
    });
    return summary;
}

}  // namespace ccmnet
