#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "csv.hpp"
#include "error.hpp"
#include "graph_io.hpp"

// Deterministic SVG charts: fixed canvas size, coordinates rounded to 0.01,
// no timestamps or random ids.
namespace ccmnet::svg {

namespace detail {

inline std::string esc(std::string_view s) { return ccmnet::detail::xml_escape(s); }

inline std::string header(int width, int height) {
    return fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
        "font-family=\"sans-serif\" font-size=\"11\">\n"
        "<rect x=\"0\" y=\"0\" width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n",
        width, height);
}

struct Range {
    double lo, hi;
    [[nodiscard]] double map(double v, double a, double b) const { return hi == lo ? (a + b) / 2 : a + (v - lo) / (hi - lo) * (b - a); }
};

inline Range range_of(const std::vector<double>& v, std::optional<double> extra = std::nullopt) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double x : v) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    if (extra) {
        lo = std::min(lo, *extra);
        hi = std::max(hi, *extra);
    }
    if (!std::isfinite(lo)) return {0.0, 1.0};
    if (lo == hi) return {lo - 1.0, hi + 1.0};
    const double pad = 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
}

}  // namespace detail

/// Line chart of `values` against categorical x labels, with an optional
/// dashed horizontal rule at `threshold`.
[[nodiscard]] inline std::string line_chart(const std::vector<std::string>& x_labels, const std::vector<double>& values,
                                            std::optional<double> threshold, std::string_view title,
                                            std::string_view y_label) {
    constexpr int W = 900, H = 400, L = 60, R = 20, T = 40, B = 60;
    const auto yr = detail::range_of(values, threshold);
    const std::size_t n = values.size();
    auto px = [&](std::size_t i) { return n <= 1 ? (L + W - R) / 2.0 : L + static_cast<double>(i) / static_cast<double>(n - 1) * (W - L - R); };
    auto py = [&](double v) { return yr.map(v, H - B, T); };

    std::string out = detail::header(W, H);
    out += fmt::format("<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n", W / 2, detail::esc(title));
    out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", L, T, H - B);
    out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", L, H - B, W - R);
    for (int k = 0; k <= 4; ++k) {
        const double v = yr.lo + (yr.hi - yr.lo) * k / 4.0;
        out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{:.3g}</text>\n", L - 4.0, py(v) + 4.0, v);
    }
    out += fmt::format("<text x=\"15\" y=\"{}\" transform=\"rotate(-90 15 {})\" text-anchor=\"middle\">{}</text>\n",
                       (T + H - B) / 2, (T + H - B) / 2, detail::esc(y_label));
    const std::size_t step = std::max<std::size_t>(1, n / 8);
    for (std::size_t i = 0; i < n; i += step) {
        out += fmt::format("<text x=\"{:.2f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", px(i), H - B + 16,
                           detail::esc(x_labels[i]));
    }
    if (threshold) {
        out += fmt::format(
            "<line x1=\"{0}\" y1=\"{1:.2f}\" x2=\"{2}\" y2=\"{1:.2f}\" stroke=\"red\" stroke-dasharray=\"6,4\"/>\n", L,
            py(*threshold), W - R);
    }
    if (n > 0) {
        out += "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < n; ++i) out += fmt::format("{}{:.2f},{:.2f}", i ? " " : "", px(i), py(values[i]));
        out += "\"/>\n";
    }
    out += "</svg>\n";
    return out;
}

/**
 * Heatmap of a row-major matrix. Cells with a lag carry the integer lag as
 * a centred annotation.
 */
[[nodiscard]] inline std::string heatmap(const std::vector<std::string>& rows, const std::vector<std::string>& cols,
                                         const std::vector<double>& values,
                                         const std::vector<std::optional<long>>& lags, std::string_view title) {
    constexpr int cell = 48, L = 140, T = 60, R = 20, B = 40;
    const int W = L + cell * static_cast<int>(cols.size()) + R;
    const int H = T + cell * static_cast<int>(rows.size()) + B;
    double vmax = 0.0;
    for (double v : values) vmax = std::max(vmax, std::abs(v));
    std::string out = detail::header(W, H);
    out += fmt::format("<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n", W / 2, detail::esc(title));
    for (std::size_t j = 0; j < cols.size(); ++j) {
        out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", L + cell * static_cast<int>(j) + cell / 2,
                           T - 8, detail::esc(cols[j]));
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const int y = T + cell * static_cast<int>(i);
        out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", L - 6, y + cell / 2 + 4, detail::esc(rows[i]));
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const std::size_t idx = i * cols.size() + j;
            const double f = vmax > 0.0 ? std::abs(values[idx]) / vmax : 0.0;
            const int shade = static_cast<int>(std::lround(255.0 * (1.0 - f)));
            const int x = L + cell * static_cast<int>(j);
            out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"rgb({},{},255)\" stroke=\"#ccc\"/>\n", x, y,
                               cell, cell, shade, shade);
            if (idx < lags.size() && lags[idx]) {
                out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" fill=\"{}\">{}</text>\n", x + cell / 2,
                                   y + cell / 2 + 4, f > 0.5 ? "white" : "black", *lags[idx]);
            }
        }
    }
    out += "</svg>\n";
    return out;
}

/// Two side-by-side horizontal bar panels sharing category labels.
[[nodiscard]] inline std::string bars(const std::vector<std::string>& labels, const std::vector<double>& left,
                                      const std::vector<double>& right, std::string_view left_title,
                                      std::string_view right_title) {
    constexpr int panel = 360, bar = 22, L = 140, T = 50, gap = 60, B = 30;
    const int W = L + panel + gap + L + panel + 20;
    const int H = T + bar * static_cast<int>(labels.size()) + B;
    std::string out = detail::header(W, H);
    auto draw = [&](int x0, const std::vector<double>& v, std::string_view title, std::string_view color) {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::abs(x));
        if (m == 0.0) m = 1.0;
        const double zero = x0 + panel / 2.0;
        out += fmt::format("<text x=\"{:.2f}\" y=\"30\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n", zero, detail::esc(title));
        out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1}\" x2=\"{0:.2f}\" y2=\"{2}\" stroke=\"black\"/>\n", zero, T - 5,
                           H - B + 5);
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const int y = T + bar * static_cast<int>(i);
            const double len = v[i] / m * (panel / 2.0 - 10.0);
            out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", x0 - 6, y + bar / 2 + 4,
                               detail::esc(labels[i]));
            out += fmt::format("<rect x=\"{:.2f}\" y=\"{}\" width=\"{:.2f}\" height=\"{}\" fill=\"{}\"/>\n",
                               len >= 0 ? zero : zero + len, y + 3, std::abs(len), bar - 6, color);
            out += fmt::format("<text x=\"{:.2f}\" y=\"{}\" font-size=\"9\">{:.3g}</text>\n", zero + (len >= 0 ? len + 3 : 3.0),
                               y + bar / 2 + 4, v[i]);
        }
    };
    draw(L, left, left_title, "seagreen");
    draw(L + panel + gap + L, right, right_title, "darkorange");
    out += "</svg>\n";
    return out;
}

/// A CSV file read as header plus string rows.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    [[nodiscard]] std::optional<std::size_t> column(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        return std::nullopt;
    }
};

[[nodiscard]] inline Table read_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    Table t;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto row = csv::trim(line);
        if (row.empty()) continue;
        auto fields = csv::split(row, line_no);
        if (t.header.empty()) {
            t.header = std::move(fields);
        } else {
            if (fields.size() != t.header.size()) {
                throw ParseError(fmt::format("expected {} fields, got {}", t.header.size(), fields.size()), line_no);
            }
            t.rows.push_back(std::move(fields));
        }
    }
    if (t.header.empty()) throw ParseError("empty CSV " + path.string(), 0);
    return t;
}

[[nodiscard]] inline double to_number(const std::string& s) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw ParseError("invalid number '" + s + "'", 0);
        return v;
    } catch (const std::logic_error&) {
        throw ParseError("invalid number '" + s + "'", 0);
    }
}

enum class PlotKind { line, heatmap, bars };

/**
 * Renders a stage CSV:
 *  - line: columns `window_end,ratio` (a threshold rule is drawn when given)
 *  - heatmap: first column `source`, one column per target community; an
 *    optional lag matrix of the same shape annotates cells
 *  - bars: columns `community,out_relative,in_relative`
 */
[[nodiscard]] inline std::string plot_csv(PlotKind kind, const std::filesystem::path& input,
                                          std::optional<double> threshold = std::nullopt,
                                          const std::optional<std::filesystem::path>& lags = std::nullopt) {
    const Table t = read_table(input);
    switch (kind) {
        case PlotKind::line: {
            const auto x = t.column("window_end");
            const auto y = t.column("ratio");
            if (!x || !y) throw ValidationError("line plot expects columns window_end,ratio");
            std::vector<std::string> labels;
            std::vector<double> values;
            for (const auto& r : t.rows) {
                labels.push_back(r[*x]);
                values.push_back(to_number(r[*y]));
            }
            return line_chart(labels, values, threshold, "Largest-eigenvalue ratio", "ratio");
        }
        case PlotKind::heatmap: {
            if (t.header.size() < 2 || t.header[0] != "source") {
                throw ValidationError("heatmap expects columns source,<target>...");
            }
            std::vector<std::string> cols(t.header.begin() + 1, t.header.end());
            std::vector<std::string> rows;
            std::vector<double> values;
            for (const auto& r : t.rows) {
                rows.push_back(r[0]);
                for (std::size_t j = 1; j < r.size(); ++j) values.push_back(to_number(r[j]));
            }
            std::vector<std::optional<long>> lag_cells;
            if (lags) {
                const Table lt = read_table(*lags);
                if (lt.header != t.header || lt.rows.size() != t.rows.size()) {
                    throw ValidationError("lag matrix does not match the skill matrix layout");
                }
                for (const auto& r : lt.rows) {
                    for (std::size_t j = 1; j < r.size(); ++j) {
                        lag_cells.push_back(r[j].empty() ? std::nullopt
                                                         : std::optional<long>(std::lround(to_number(r[j]))));
                    }
                }
            }
            return heatmap(rows, cols, values, lag_cells, "Influence (rows: source, columns: target)");
        }
        case PlotKind::bars: {
            const auto c = t.column("community");
            const auto o = t.column("out_relative");
            const auto i = t.column("in_relative");
            if (!c || !o || !i) throw ValidationError("bar plot expects columns community,out_relative,in_relative");
            std::vector<std::string> labels;
            std::vector<double> left, right;
            for (const auto& r : t.rows) {
                labels.push_back(r[*c]);
                left.push_back(to_number(r[*o]));
                right.push_back(to_number(r[*i]));
            }
            return bars(labels, left, right, "Influence vs median", "Swayed vs median");
        }
    }
    throw ValidationError("unknown plot kind");
}

}  // namespace ccmnet::svg
