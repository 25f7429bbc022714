// ccmnet command-line front end.
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration or validation
// failure. CCMNET_LOG=quiet|info|debug controls stderr verbosity.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "ccmnet/ccmnet.hpp"

namespace fs = std::filesystem;
using namespace ccmnet;

namespace {

struct NullBuffer : std::streambuf {
    int overflow(int c) override { return c; }
};

std::ostream& log_stream() {
    static NullBuffer null_buffer;
    static std::ostream null_stream(&null_buffer);
    const char* level = std::getenv("CCMNET_LOG");
    if (level && std::string_view(level) == "quiet") return null_stream;
    return std::cerr;
}

bool debug_enabled() {
    const char* level = std::getenv("CCMNET_LOG");
    return level && std::string_view(level) == "debug";
}

SeriesKey parse_key(const std::string& label) {
    const auto slash = label.find('/');
    if (slash == std::string::npos || slash == 0 || slash + 1 == label.size()) {
        throw ValidationError("expected a series label community/topic, got '" + label + "'");
    }
    return {label.substr(0, slash), label.substr(slash + 1)};
}

std::pair<std::string, std::string> split_assignment(const std::string& s) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + s + "'");
    return {std::string(csv::trim(s.substr(0, eq))), std::string(csv::trim(s.substr(eq + 1)))};
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

ReturnPanel load_returns(const std::string& input, bool aggregate) {
    std::ostringstream warnings;
    const Panel panel = load_panel(input, warnings);
    log_stream() << warnings.str();
    ReturnPanel rp = log_returns(panel);
    return aggregate ? aggregate_over_communities(rp) : rp;
}

/// Rebuilds a network from `source,target,lag,skill,converged` rows.
CausalNetwork network_from_csv(const fs::path& path) {
    const svg::Table t = svg::read_table(path);
    const std::vector<std::string> expected{"source", "target", "lag", "skill", "converged"};
    if (t.header != expected) throw ValidationError("ccm results must have columns source,target,lag,skill,converged");
    std::map<std::pair<SeriesKey, SeriesKey>, std::vector<CausalResult>> pairs;
    std::vector<SeriesKey> nodes;
    for (const auto& row : t.rows) {
        const SeriesKey s = parse_key(row[0]);
        const SeriesKey d = parse_key(row[1]);
        CausalResult r;
        r.lag = static_cast<std::size_t>(svg::to_number(row[2]));
        r.skill = svg::to_number(row[3]);
        r.converged = row[4] == "1" || row[4] == "true";
        auto& list = pairs[{s, d}];
        if (list.size() != r.lag) throw ValidationError("ccm results: lags of " + s.label() + " -> " + d.label() + " are not 0..max in order");
        list.push_back(r);
        nodes.push_back(s);
        nodes.push_back(d);
    }
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    CausalNetwork net{nodes, {}};
    for (const auto& [pair, list] : pairs) {
        const auto best = pick_best_lag(list);
        if (!best) continue;
        const auto& [s, d] = pair;
        const double sk = list[*best].skill;
        net.edges.push_back({s, d, sk, *best, true, s.community == d.community, sk > kStrongEdgeSkill});
    }
    return net;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Collective behavior, correlation networks and cross-mapping influence for labeled count panels"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Validate a long-format panel and derive returns");
    std::string ingest_in, ingest_returns, ingest_median, ingest_topics;
    ingest->add_option("-i,--input", ingest_in, "Panel CSV (date,community,topic,count)")->required();
    ingest->add_option("--returns", ingest_returns, "Write log-returns in long format");
    ingest->add_option("--median", ingest_median, "Write the per-date median count");
    ingest->add_option("--topics", ingest_topics, "Write topic-aggregated log-returns");

    // synth
    auto* synth = app.add_subcommand("synth", "Write a seeded synthetic panel in ingestion format");
    std::string synth_kind = "activity", synth_out;
    std::uint64_t synth_seed = 0;
    std::vector<std::string> synth_params;
    synth->add_option("--kind", synth_kind, "activity|coupled-logistic|common-factor-panel|ar-noise|shifted-copy")
        ->capture_default_str();
    synth->add_option("--seed", synth_seed)->capture_default_str();
    synth->add_option("-p,--param", synth_params, "Generator parameter name=value (repeatable)");
    synth->add_option("-o,--output", synth_out, "Output CSV")->required();

    // detect
    auto* detect = app.add_subcommand("detect", "Sliding-window largest-eigenvalue detector");
    std::string detect_in, detect_out;
    std::size_t detect_window = kDefaultWindowDays;
    double detect_threshold = kDefaultCollectiveThreshold;
    bool detect_topics = false;
    detect->add_option("-i,--input", detect_in)->required();
    detect->add_option("-o,--output", detect_out, "Output directory")->required();
    detect->add_option("--window", detect_window, "Window length in days")->capture_default_str();
    detect->add_option("--threshold", detect_threshold, "Ratio threshold")->capture_default_str();
    detect->add_flag("--topics", detect_topics, "Run on topic-aggregated series");

    // graph
    auto* graph = app.add_subcommand("graph", "Thresholded correlation graph with centralities");
    std::string graph_in, graph_out, graph_start, graph_end, graph_name = "graph";
    double graph_q = kDefaultGraphQuantile, graph_top = kDefaultTopFraction;
    bool graph_all_series = false;
    graph->add_option("-i,--input", graph_in)->required();
    graph->add_option("-o,--output", graph_out, "Output directory")->required();
    graph->add_option("--start", graph_start, "First return date (YYYY-MM-DD)");
    graph->add_option("--end", graph_end, "Last return date (YYYY-MM-DD)");
    graph->add_option("--quantile", graph_q, "Threshold quantile of |correlation|")->capture_default_str();
    graph->add_option("--top", graph_top, "Top fraction flagged as central")->capture_default_str();
    graph->add_option("--name", graph_name, "Output file stem")->capture_default_str();
    graph->add_flag("--all-series", graph_all_series, "Use every series instead of topic aggregates");

    // ccm
    auto* ccm = app.add_subcommand("ccm", "Convergent cross mapping with lag scan over series pairs");
    std::string ccm_in, ccm_out, ccm_curves, ccm_libraries, ccm_sampling = "prefix";
    std::vector<std::string> ccm_sources, ccm_targets;
    std::optional<std::size_t> ccm_e;
    CcmSettings cs;
    cs.rule.rho_threshold = kRelativeRho;
    std::size_t ccm_threads = 1;
    ccm->add_option("-i,--input", ccm_in)->required();
    ccm->add_option("-o,--output", ccm_out, "Results CSV (source,target,lag,skill,converged)")->required();
    ccm->add_option("-E,--dimension", ccm_e, "Embedding dimension (default: selected per target)");
    ccm->add_option("--max-dimension", cs.max_dimension)->capture_default_str();
    ccm->add_option("--tau", cs.delay, "Embedding delay")->capture_default_str();
    ccm->add_option("--theiler", cs.theiler, "Theiler exclusion radius")->capture_default_str();
    ccm->add_option("--max-lag", cs.max_lag)->capture_default_str();
    ccm->add_option("--libraries", ccm_libraries, "Comma-separated library sizes (default: log grid)");
    ccm->add_option("--library-count", cs.library_count)->capture_default_str();
    ccm->add_option("--sampling", ccm_sampling, "prefix|random")->capture_default_str();
    ccm->add_option("--seed", cs.seed, "Seed for random library sampling")->capture_default_str();
    ccm->add_option("--rho", cs.rule.rho_threshold, "Skill threshold for convergence")->capture_default_str();
    ccm->add_option("--min-improvement", cs.rule.min_improvement)->capture_default_str();
    ccm->add_option("--source", ccm_sources, "Restrict sources (community/topic, repeatable)");
    ccm->add_option("--target", ccm_targets, "Restrict targets (community/topic, repeatable)");
    ccm->add_option("--curves", ccm_curves, "Directory for per-pair skill-curve CSVs");
    ccm->add_option("--threads", ccm_threads)->capture_default_str();

    // influence
    auto* influence = app.add_subcommand("influence", "Community influence reports from CCM results");
    std::string infl_in, infl_out;
    double rho_matrix = kMatrixRho, rho_topics = kTopicRho, rho_relative = kRelativeRho;
    std::size_t top_k = kDefaultTopK;
    influence->add_option("--ccm", infl_in, "Results CSV from the ccm subcommand")->required();
    influence->add_option("-o,--output", infl_out, "Output directory")->required();
    influence->add_option("--rho-matrix", rho_matrix)->capture_default_str();
    influence->add_option("--rho-topics", rho_topics)->capture_default_str();
    influence->add_option("--rho-relative", rho_relative)->capture_default_str();
    influence->add_option("--top-k", top_k)->capture_default_str();

    // plot
    auto* plot = app.add_subcommand("plot", "Render a stage CSV as SVG");
    std::string plot_kind, plot_in, plot_out, plot_lags;
    std::optional<double> plot_threshold;
    plot->add_option("--kind", plot_kind, "line|heatmap|bars")->required();
    plot->add_option("-i,--input", plot_in)->required();
    plot->add_option("-o,--output", plot_out)->required();
    plot->add_option("--threshold", plot_threshold, "Horizontal rule for line charts");
    plot->add_option("--lags", plot_lags, "Lag matrix CSV annotating a heatmap");

    // run
    auto* run = app.add_subcommand("run", "Full pipeline from a key-value config");
    std::string run_config;
    std::vector<std::string> run_overrides;
    run->add_option("-c,--config", run_config, "Config file")->required();
    run->add_option("--set", run_overrides, "Override a setting key=value (repeatable)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    std::ostream& log = log_stream();
    try {
        if (*ingest) {
            std::ostringstream warnings;
            const Panel panel = load_panel(ingest_in, warnings);
            log << warnings.str();
            std::cout << fmt::format("series={} days={} first={} last={}\n", panel.series_count(), panel.length(),
                                     format_date(panel.dates().front()), format_date(panel.dates().back()));
            const ReturnPanel rp = log_returns(panel);
            if (!ingest_returns.empty()) {
                std::ostringstream ss;
                write_long_csv(ss, rp, "return");
                write_file(ingest_returns, ss.str());
            }
            if (!ingest_topics.empty()) {
                std::ostringstream ss;
                write_long_csv(ss, aggregate_over_communities(rp), "return");
                write_file(ingest_topics, ss.str());
            }
            if (!ingest_median.empty()) {
                std::string out = "date,median\n";
                const auto m = median_series(panel);
                for (std::size_t t = 0; t < m.size(); ++t) out += fmt::format("{},{}\n", format_date(panel.dates()[t]), m[t]);
                write_file(ingest_median, out);
            }
        } else if (*synth) {
            const auto kind = synth::parse_generator_kind(synth_kind);
            if (!kind) throw ConfigError("unknown generator kind '" + synth_kind + "'");
            synth::GeneratorSpec spec{*kind, {}, synth_seed};
            for (const auto& p : synth_params) {
                const auto [k, v] = split_assignment(p);
                spec.parameters[k] = detail::parse_real(k, v);
            }
            std::ostringstream ss;
            write_long_csv(ss, synth::generate(spec));
            write_file(synth_out, ss.str());
        } else if (*detect) {
            const ReturnPanel rp = load_returns(detect_in, detect_topics);
            const auto ratios = collective_ratios(rp, detect_window);
            std::vector<CollectiveEvent> events;
            for (const auto& w : ratios) {
                if (w.ratio >= detect_threshold) events.push_back({w.window_end, w.ratio});
            }
            ensure_dir(detect_out);
            write_file(fs::path(detect_out) / "detector_ratios.csv", ratios_csv(ratios));
            write_file(fs::path(detect_out) / "detector_events.csv", events_csv(events));
            write_file(fs::path(detect_out) / "detector.svg", detector_svg(ratios, detect_threshold));
            std::cout << fmt::format("windows={} events={}\n", ratios.size(), events.size());
        } else if (*graph) {
            ReturnPanel rp = load_returns(graph_in, !graph_all_series);
            if (!graph_start.empty() || !graph_end.empty()) {
                const Date s = graph_start.empty() ? rp.dates().front() : parse_date(graph_start);
                const Date e = graph_end.empty() ? rp.dates().back() : parse_date(graph_end);
                rp = slice_range(rp, s, e);
            }
            const auto cm = correlation_matrix(rp);
            const double rho_c = quantile_threshold(cm, graph_q);
            const auto g = threshold_graph(cm, rho_c);
            const auto report = centrality(g, graph_top);
            ensure_dir(graph_out);
            const auto files = render_graph(g, report);
            const fs::path base = fs::path(graph_out) / graph_name;
            write_file(base.string() + ".graphml", files.graphml);
            write_file(base.string() + ".dot", files.dot);
            write_file(base.string() + "_edges.csv", files.edges);
            write_file(base.string() + "_centrality.csv", centrality_csv(report));
            std::cout << fmt::format("nodes={} edges={} rho_c={}\n", g.size(), g.edges().size(), rho_c);
        } else if (*ccm) {
            ReturnPanel rp = load_returns(ccm_in, false);
            cs.dimension = ccm_e;
            if (!ccm_libraries.empty()) {
                for (const auto& f : csv::split(ccm_libraries)) {
                    cs.library_sizes.push_back(detail::parse_integer<std::size_t>("--libraries", csv::trim(f)));
                }
            }
            if (ccm_sampling == "random") cs.sampling = LibrarySampling::random;
            else if (ccm_sampling != "prefix") throw ConfigError("--sampling must be prefix or random");
            std::vector<SeriesKey> sources, targets;
            for (const auto& s : ccm_sources) sources.push_back(parse_key(s));
            for (const auto& t : ccm_targets) targets.push_back(parse_key(t));
            for (const auto& k : sources) (void)rp.series(k);
            for (const auto& k : targets) (void)rp.series(k);
            auto selected = [](const std::vector<SeriesKey>& list, const SeriesKey& k) {
                return list.empty() || std::find(list.begin(), list.end(), k) != list.end();
            };

            CcmSweep sweep;
            if (sources.empty() && targets.empty()) {
                sweep = ccm_sweep(rp, cs, ccm_threads);
            } else {
                const std::size_t n = rp.series_count();
                sweep = CcmSweep{rp.keys(), std::vector<std::size_t>(n, 0), std::vector<std::optional<LagScan>>(n * n)};
                for (std::size_t j = 0; j < n; ++j) {
                    if (!selected(targets, rp.keys()[j])) continue;
                    for (std::size_t i = 0; i < n; ++i) {
                        if (i == j || !selected(sources, rp.keys()[i])) continue;
                        sweep.scans[j * n + i] = lag_scan(rp.series(i), rp.series(j), cs);
                        sweep.dimensions[j] = sweep.scans[j * n + i]->dimension;
                    }
                }
            }
            write_file(ccm_out, sweep_csv(sweep));
            if (!ccm_curves.empty()) {
                ensure_dir(ccm_curves);
                const std::size_t n = sweep.keys.size();
                for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t j = 0; j < n; ++j) {
                        const auto& scan = sweep.scan(i, j);
                        if (!scan) continue;
                        for (const auto& r : scan->per_lag) {
                            auto name = fmt::format("{}__{}__lag{}.csv", sweep.keys[i].label(), sweep.keys[j].label(), r.lag);
                            std::replace(name.begin(), name.end(), '/', '_');
                            write_file(fs::path(ccm_curves) / name, curve_csv(r.curve));
                        }
                    }
                }
            }
            if (debug_enabled()) {
                for (std::size_t j = 0; j < sweep.keys.size(); ++j) {
                    log << fmt::format("E[{}]={}\n", sweep.keys[j].label(), sweep.dimensions[j]);
                }
            }
        } else if (*influence) {
            for (double r : {rho_matrix, rho_topics, rho_relative}) {
                if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("skill thresholds must lie in [0, 1]");
            }
            const CausalNetwork net = network_from_csv(infl_in);
            const auto matrix = community_matrix(net, rho_matrix);
            const auto rel = relative_influence(community_matrix(net, rho_relative));
            ensure_dir(infl_out);
            const fs::path o = infl_out;
            write_file(o / "influence_matrix.csv", matrix_csv(matrix, MatrixField::value));
            write_file(o / "influence_matrix_qualifying.csv", matrix_csv(matrix, MatrixField::qualifying_mean));
            write_file(o / "influence_lags.csv", matrix_csv(matrix, MatrixField::lag));
            write_file(o / "influence_heatmap.svg", heatmap_svg(matrix));
            write_file(o / "relative_influence.csv", relative_csv(rel));
            write_file(o / "relative_influence.svg",
                       svg::bars(rel.communities, rel.out_relative, rel.in_relative, "Influence vs median",
                                 "Swayed vs median"));
            write_file(o / "top_topics.csv", top_topics_csv(top_topics(net, rho_topics, top_k)));
            std::cout << fmt::format("edges={} communities={}\n", net.edges.size(), matrix.size());
        } else if (*plot) {
            svg::PlotKind kind;
            if (plot_kind == "line") kind = svg::PlotKind::line;
            else if (plot_kind == "heatmap") kind = svg::PlotKind::heatmap;
            else if (plot_kind == "bars") kind = svg::PlotKind::bars;
            else throw ConfigError("--kind must be line, heatmap or bars");
            const auto lags = plot_lags.empty() ? std::nullopt : std::optional<fs::path>(plot_lags);
            write_file(plot_out, svg::plot_csv(kind, plot_in, plot_threshold, lags));
        } else if (*run) {
            RunConfig config = load_config(run_config);
            for (const auto& s : run_overrides) {
                const auto [k, v] = split_assignment(s);
                apply_setting(config, k, v);
            }
            const auto summary = run_pipeline(config, log);
            std::cout << fmt::format("output={} files={} events={} causal_edges={}\n", summary.output.string(),
                                     summary.files.size(), summary.events, summary.causal_edges);
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
