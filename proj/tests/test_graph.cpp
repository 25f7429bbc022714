#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "ccmnet/graph.hpp"
#include "ccmnet/graph_io.hpp"
#include "support/gen.hpp"
#include "support/oracles.hpp"

using namespace ccmnet;
namespace fs = std::filesystem;

namespace {

WeightedGraph from_rows(const std::vector<std::vector<double>>& rows, bool directed = false) {
    const auto n = static_cast<Eigen::Index>(rows.size());
    WeightedGraph g{{}, Eigen::MatrixXd::Zero(n, n), directed};
    for (Eigen::Index i = 0; i < n; ++i) {
        g.labels.push_back({"c", std::string(1, static_cast<char>('a' + i))});
        for (Eigen::Index j = 0; j < n; ++j) g.adjacency(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    return g;
}

CorrelationMatrix corr(const Eigen::MatrixXd& m) {
    std::vector<SeriesKey> labels;
    for (Eigen::Index i = 0; i < m.rows(); ++i) labels.push_back({"c", std::to_string(i)});
    return {labels, m, std::vector<bool>(static_cast<std::size_t>(m.rows()), false)};
}

WeightedGraph triangle() { return from_rows({{0, 0.5, 0.5}, {0.5, 0, 0.5}, {0.5, 0.5, 0}}); }

fs::path temp_file(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "ccmnet_graph_tests";
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST(QuantileThreshold, Examples) {
    Eigen::MatrixXd two(2, 2);
    two << 1, 0.4, 0.4, 1;
    for (double q : {0.1, 0.5, 0.9}) EXPECT_DOUBLE_EQ(quantile_threshold(corr(two), q), 0.4);

    Eigen::MatrixXd five = Eigen::MatrixXd::Identity(5, 5);
    int k = 0;
    for (int i = 0; i < 5; ++i) {
        for (int j = i + 1; j < 5; ++j, ++k) five(i, j) = five(j, i) = (k % 2 ? -1 : 1) * 0.1 * (k + 1);
    }
    EXPECT_NEAR(quantile_threshold(corr(five), 0.5), 0.55, 1e-12);
}

TEST(QuantileThreshold, Validation) {
    EXPECT_THROW((void)quantile_threshold(corr(Eigen::MatrixXd::Identity(1, 1)), 0.5), ValidationError);
    EXPECT_THROW((void)quantile_threshold(corr(Eigen::MatrixXd::Identity(3, 3)), 1.0), ValidationError);
    EXPECT_THROW((void)quantile_threshold(corr(Eigen::MatrixXd::Identity(3, 3)), 0.0), ValidationError);
    EXPECT_EQ(kDefaultGraphQuantile, 0.90);
}

TEST(ThresholdGraph, ZeroThresholdIsComplete) {
    Eigen::MatrixXd m(3, 3);
    m << 1, -0.3, 0.2, -0.3, 1, 0.7, 0.2, 0.7, 1;
    const auto g = threshold_graph(corr(m), 0.0);
    EXPECT_EQ(g.edges().size(), 3u);
    EXPECT_EQ(g.weight(0, 1), 0.3);
    EXPECT_EQ(g.weight(2, 2), 0.0);
    EXPECT_FALSE(g.directed);
}

TEST(ThresholdGraph, SingleEdge) {
    Eigen::MatrixXd m(3, 3);
    m << 1, 0.9, 0.5, 0.9, 1, 0.2, 0.5, 0.2, 1;
    const auto g = threshold_graph(corr(m), 0.6);
    ASSERT_EQ(g.edges().size(), 1u);
    EXPECT_EQ(g.edges()[0], std::make_pair(std::size_t{0}, std::size_t{1}));
    EXPECT_EQ(g.weight(0, 1), 0.9);
    EXPECT_THROW((void)threshold_graph(corr(m), 1.1), ValidationError);
}

TEST(Degree, Examples) {
    const auto empty = weighted_degree(from_rows({{0, 0}, {0, 0}}));
    EXPECT_EQ(empty, std::vector<double>({0, 0}));
    EXPECT_EQ(weighted_degree(triangle()), std::vector<double>({1, 1, 1}));
}

TEST(Betweenness, PathAndComplete) {
    const auto path = betweenness(from_rows({{0, 1, 0}, {1, 0, 1}, {0, 1, 0}}));
    EXPECT_EQ(path, std::vector<double>({0, 1, 0}));
    EXPECT_EQ(betweenness(triangle()), std::vector<double>({0, 0, 0}));
    std::vector<std::vector<double>> k5(5, std::vector<double>(5, 0.7));
    for (int i = 0; i < 5; ++i) k5[i][i] = 0;
    for (double b : betweenness(from_rows(k5))) EXPECT_EQ(b, 0.0);
}

TEST(Betweenness, WeightsActAsStrength) {
    // a-c is weak (distance 10), a-b-c costs 2: all a-c traffic goes via b.
    const auto b = betweenness(from_rows({{0, 1, 0.1}, {1, 0, 1}, {0.1, 1, 0}}));
    EXPECT_NEAR(b[1], 1.0, 1e-12);
    // Two equal routes a-b-d and a-c-d share the pair.
    const auto sq = betweenness(from_rows({{0, 1, 1, 0}, {1, 0, 0, 1}, {1, 0, 0, 1}, {0, 1, 1, 0}}));
    EXPECT_NEAR(sq[0], 0.5, 1e-12);
    EXPECT_NEAR(sq[1], 0.5, 1e-12);
}

TEST(Betweenness, MatchesBruteForce) {
    SplitMix64 rng(99);
    for (int c = 0; c < 100; ++c) {
        const bool directed = c % 4 == 3;
        const auto g = gen::graph(rng, 8, directed);
        const auto rows = gen::to_rows(g.adjacency);
        const auto expected = oracle::betweenness(rows, directed);
        const auto got = betweenness(g);
        for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(got[i], expected[i], 1e-9) << "case " << c;
        EXPECT_EQ(weighted_degree(g), oracle::degree(rows)) << "case " << c;
    }
}

TEST(Classify, TiesIncluded) {
    std::vector<SeriesKey> labels{{"a", "1"}, {"a", "2"}, {"a", "3"}, {"a", "4"}};
    const auto r = classify_top(labels, {2, 2, 2, 2}, {0, 0, 0, 0}, 0.25);
    for (auto c : r.classes) EXPECT_EQ(c, CentralityClass::both);
}

TEST(Classify, DominantNode) {
    std::vector<SeriesKey> labels;
    for (int i = 0; i < 8; ++i) labels.push_back({"a", std::to_string(i)});
    const auto r = classify_top(labels, {10, 5, 1, 1, 1, 1, 1, 1}, {10, 1, 4, 0, 0, 0, 0, 0}, 0.25);
    int degree_flags = 0, between_flags = 0, both = 0;
    for (auto c : r.classes) {
        degree_flags += c == CentralityClass::degree_top || c == CentralityClass::both;
        between_flags += c == CentralityClass::betweenness_top || c == CentralityClass::both;
        both += c == CentralityClass::both;
    }
    EXPECT_EQ(r.classes[0], CentralityClass::both);
    EXPECT_EQ(both, 1);
    EXPECT_EQ(degree_flags, 2);
    EXPECT_EQ(between_flags, 2);
    EXPECT_EQ(to_string(r.classes[1]), "degree-top");
    EXPECT_EQ(to_string(r.classes[2]), "betweenness-top");
    EXPECT_EQ(to_string(r.classes[3]), "none");
}

TEST(GraphIo, TriangleGraphml) {
    const auto g = triangle();
    std::ostringstream out;
    write_graphml(out, g, centrality(g));
    const std::string s = out.str();
    auto count = [&](const std::string& needle) {
        std::size_t n = 0;
        for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
        return n;
    };
    EXPECT_EQ(count("<node "), 3u);
    EXPECT_EQ(count("<edge "), 3u);
    EXPECT_NE(s.find("edgedefault=\"undirected\""), std::string::npos);
    EXPECT_NE(s.find("attr.type=\"double\""), std::string::npos);
}

TEST(GraphIo, GraphmlIsWellFormedXml) {
    if (std::system("python3 -c 'import xml.etree.ElementTree' > /dev/null 2>&1") != 0) {
        GTEST_SKIP() << "python3 not available";
    }
    auto g = triangle();
    g.labels[0] = {"A&B", "<t>"};
    const fs::path p = temp_file("triangle.graphml");
    export_graph(p, g, centrality(g), GraphFormat::graphml);
    const std::string cmd =
        "python3 -c \"import sys, xml.etree.ElementTree as E; r = E.parse(sys.argv[1]).getroot(); "
        "ns = '{http://graphml.graphdrawing.org/xmlns}'; g = r.find(ns + 'graph'); "
        "assert len(g.findall(ns + 'node')) == 3 and len(g.findall(ns + 'edge')) == 3\" " + p.string();
    EXPECT_EQ(std::system(cmd.c_str()), 0);
}

TEST(GraphIo, ExportIsDeterministic) {
    const auto g = triangle();
    const auto r = centrality(g);
    for (auto f : {GraphFormat::graphml, GraphFormat::dot, GraphFormat::csv}) {
        export_graph(temp_file("a.out"), g, r, f);
        export_graph(temp_file("b.out"), g, r, f);
        EXPECT_EQ(slurp(temp_file("a.out")), slurp(temp_file("b.out")));
    }
}

TEST(GraphIo, DotAndCsvContent) {
    const auto g = from_rows({{0, 0.9, 0}, {0.9, 0, 0}, {0, 0, 0}});
    std::ostringstream dot, edges, nodes;
    const auto r = centrality(g);
    write_dot(dot, g, r);
    write_edge_csv(edges, g);
    write_centrality_csv(nodes, r);
    EXPECT_NE(dot.str().find("\"c/a\" -- \"c/b\" [weight=0.9, penwidth=0.9];"), std::string::npos);
    EXPECT_EQ(edges.str(), "src_community,src_topic,dst_community,dst_topic,weight\nc,a,c,b,0.9\n");
    EXPECT_EQ(nodes.str().substr(0, nodes.str().find('\n')), "community,topic,degree,betweenness,class");
}

TEST(GraphIo, DotRendersWithGraphviz) {
    if (std::system("command -v dot > /dev/null 2>&1") != 0) {
        GTEST_SKIP() << "graphviz dot not installed";
    }
    const auto g = triangle();
    const fs::path p = temp_file("triangle.dot");
    export_graph(p, g, centrality(g), GraphFormat::dot);
    const fs::path err = temp_file("dot.err");
    const std::string cmd = "dot -Tsvg " + p.string() + " -o /dev/null 2> " + err.string();
    EXPECT_EQ(std::system(cmd.c_str()), 0);
    EXPECT_TRUE(slurp(err).empty()) << slurp(err);
}

TEST(GraphIo, UnwritablePath) {
    const auto g = triangle();
    EXPECT_THROW(export_graph("/nonexistent/dir/x.graphml", g, centrality(g), GraphFormat::graphml), IoError);
}
