#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "csv.hpp"
#include "error.hpp"
#include "graph.hpp"

namespace ccmnet {

enum class GraphFormat { graphml, dot, csv };

namespace detail {

inline std::string xml_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string dot_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

/// Node indices sorted by label.
inline std::vector<std::size_t> label_order(const WeightedGraph& g) {
    std::vector<std::size_t> order(g.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return g.labels[a] < g.labels[b]; });
    return order;
}

/// Edges in output order: by source label, then target label.
inline std::vector<std::pair<std::size_t, std::size_t>> sorted_edges(const WeightedGraph& g,
                                                                     const std::vector<std::size_t>& order) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t a = 0; a < order.size(); ++a) {
        for (std::size_t b = g.directed ? 0 : a + 1; b < order.size(); ++b) {
            const std::size_t i = order[a], j = order[b];
            if (i != j && g.weight(i, j) > 0.0) out.emplace_back(i, j);
        }
    }
    return out;
}

inline void check_report(const WeightedGraph& g, const CentralityReport& r) {
    if (r.labels != g.labels || r.classes.size() != g.size()) {
        throw ValidationError("export_graph: centrality report does not match graph labels");
    }
}

}  // namespace detail

/// GraphML with typed attribute keys. Node ids are "community/topic".
inline void write_graphml(std::ostream& out, const WeightedGraph& g, const CentralityReport& r) {
    detail::check_report(g, r);
    const auto order = detail::label_order(g);
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
           "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\"\n"
           "         xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\"\n"
           "         xsi:schemaLocation=\"http://graphml.graphdrawing.org/xmlns "
           "http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd\">\n"
           "  <key id=\"community\" for=\"node\" attr.name=\"community\" attr.type=\"string\"/>\n"
           "  <key id=\"topic\" for=\"node\" attr.name=\"topic\" attr.type=\"string\"/>\n"
           "  <key id=\"degree\" for=\"node\" attr.name=\"degree\" attr.type=\"double\"/>\n"
           "  <key id=\"betweenness\" for=\"node\" attr.name=\"betweenness\" attr.type=\"double\"/>\n"
           "  <key id=\"class\" for=\"node\" attr.name=\"class\" attr.type=\"string\"/>\n"
           "  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n";
    out << "  <graph id=\"G\" edgedefault=\"" << (g.directed ? "directed" : "undirected") << "\">\n";
    for (std::size_t i : order) {
        const SeriesKey& k = g.labels[i];
        out << "    <node id=\"" << detail::xml_escape(k.label()) << "\">\n"
            << "      <data key=\"community\">" << detail::xml_escape(k.community) << "</data>\n"
            << "      <data key=\"topic\">" << detail::xml_escape(k.topic) << "</data>\n"
            << fmt::format("      <data key=\"degree\">{}</data>\n", r.degree[i])
            << fmt::format("      <data key=\"betweenness\">{}</data>\n", r.betweenness[i])
            << "      <data key=\"class\">" << to_string(r.classes[i]) << "</data>\n"
            << "    </node>\n";
    }
    std::size_t edge_id = 0;
    for (const auto& [i, j] : detail::sorted_edges(g, order)) {
        out << "    <edge id=\"e" << edge_id++ << "\" source=\"" << detail::xml_escape(g.labels[i].label())
            << "\" target=\"" << detail::xml_escape(g.labels[j].label()) << "\">\n"
            << fmt::format("      <data key=\"weight\">{}</data>\n", g.weight(i, j)) << "    </edge>\n";
    }
    out << "  </graph>\n</graphml>\n";
}

/// Graphviz DOT; edge weight is written both as `weight` and `penwidth`.
inline void write_dot(std::ostream& out, const WeightedGraph& g, const CentralityReport& r) {
    detail::check_report(g, r);
    const auto order = detail::label_order(g);
    const std::string_view arrow = g.directed ? " -> " : " -- ";
    out << (g.directed ? "digraph" : "graph") << " G {\n";
    for (std::size_t i : order) {
        const SeriesKey& k = g.labels[i];
        out << "  \"" << detail::dot_escape(k.label()) << "\" [community=\"" << detail::dot_escape(k.community)
            << "\", topic=\"" << detail::dot_escape(k.topic) << "\", "
            << fmt::format("degree={}, betweenness={}", r.degree[i], r.betweenness[i]) << ", class=\""
            << to_string(r.classes[i]) << "\"];\n";
    }
    for (const auto& [i, j] : detail::sorted_edges(g, order)) {
        out << "  \"" << detail::dot_escape(g.labels[i].label()) << '"' << arrow << '"'
            << detail::dot_escape(g.labels[j].label()) << '"'
            << fmt::format(" [weight={0}, penwidth={0}];\n", g.weight(i, j));
    }
    out << "}\n";
}

/// Edge list `src_community,src_topic,dst_community,dst_topic,weight`.
inline void write_edge_csv(std::ostream& out, const WeightedGraph& g) {
    const auto order = detail::label_order(g);
    out << "src_community,src_topic,dst_community,dst_topic,weight\n";
    for (const auto& [i, j] : detail::sorted_edges(g, order)) {
        const SeriesKey& a = g.labels[i];
        const SeriesKey& b = g.labels[j];
        out << csv::escape(a.community) << ',' << csv::escape(a.topic) << ',' << csv::escape(b.community) << ','
            << csv::escape(b.topic) << fmt::format(",{}\n", g.weight(i, j));
    }
}

/// Node table `community,topic,degree,betweenness,class`.
inline void write_centrality_csv(std::ostream& out, const CentralityReport& r) {
    std::vector<std::size_t> order(r.labels.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return r.labels[a] < r.labels[b]; });
    out << "community,topic,degree,betweenness,class\n";
    for (std::size_t i : order) {
        out << csv::escape(r.labels[i].community) << ',' << csv::escape(r.labels[i].topic)
            << fmt::format(",{},{},", r.degree[i], r.betweenness[i]) << to_string(r.classes[i]) << '\n';
    }
}

inline void export_graph(const std::filesystem::path& path, const WeightedGraph& g, const CentralityReport& r,
                         GraphFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    switch (format) {
        case GraphFormat::graphml: write_graphml(out, g, r); break;
        case GraphFormat::dot: write_dot(out, g, r); break;
        case GraphFormat::csv: write_edge_csv(out, g); break;
    }
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

}  // namespace ccmnet
