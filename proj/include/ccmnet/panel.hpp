#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "csv.hpp"
#include "error.hpp"
#include "stats.hpp"

namespace ccmnet {

using Date = std::chrono::sys_days;

/// Parses an ISO-8601 calendar date (YYYY-MM-DD).
[[nodiscard]] inline Date parse_date(std::string_view text, std::size_t line = 0) {
    auto bad = [&] { return ParseError(fmt::format("invalid date '{}'", text), line); };
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw bad();
    int y = 0;
    unsigned m = 0, d = 0;
    auto num = [&](std::size_t pos, std::size_t len, auto& out) {
        auto [p, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
        if (ec != std::errc{} || p != text.data() + pos + len) throw bad();
    };
    num(0, 4, y);
    num(5, 2, m);
    num(8, 2, d);
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) throw bad();
    return Date{ymd};
}

[[nodiscard]] inline std::string format_date(Date date) {
    const std::chrono::year_month_day ymd{date};
    return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()),
                       static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
}

/// Identity of one series: (community, topic).
struct SeriesKey {
    std::string community;
    std::string topic;

    auto operator<=>(const SeriesKey&) const = default;
    bool operator==(const SeriesKey&) const = default;

    [[nodiscard]] std::string label() const { return community + "/" + topic; }
};

/**
 * Labeled collection of equal-length daily series over contiguous dates.
 *
 * Keys are kept sorted, so two panels holding the same data compare equal
 * regardless of construction order. Count panels (integral T) require
 * non-negative values; real panels require finite values.
 */
template <class T>
class TimePanel {
public:
    using value_type = T;

    TimePanel(std::vector<Date> dates, std::vector<SeriesKey> keys, std::vector<std::vector<T>> values)
        : dates_(std::move(dates)) {
        if (keys.size() != values.size()) {
            throw ValidationError("panel: key count does not match series count");
        }
        if (keys.empty()) {
            throw ValidationError("panel: no series");
        }
        if (dates_.empty()) {
            throw ValidationError("panel: no dates");
        }
        for (std::size_t i = 1; i < dates_.size(); ++i) {
            if (dates_[i] - dates_[i - 1] != std::chrono::days{1}) {
                throw ValidationError(fmt::format("panel: dates not contiguous at {}", format_date(dates_[i])));
            }
        }
        std::vector<std::size_t> order(keys.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
        keys_.reserve(keys.size());
        values_.reserve(values.size());
        for (std::size_t i : order) {
            const SeriesKey& k = keys[i];
            if (k.community.empty() || k.topic.empty()) {
                throw ValidationError("panel: empty community or topic label");
            }
            if (!keys_.empty() && keys_.back() == k) {
                throw ValidationError("panel: duplicate key " + k.label());
            }
            if (values[i].size() != dates_.size()) {
                throw ValidationError("panel: series " + k.label() + " has wrong length");
            }
            for (const T& v : values[i]) {
                if constexpr (std::is_integral_v<T>) {
                    if (v < 0) throw ValidationError("panel: negative count in " + k.label());
                } else {
                    if (!std::isfinite(v)) throw ValidationError("panel: non-finite value in " + k.label());
                }
            }
            keys_.push_back(k);
            values_.push_back(std::move(values[i]));
        }
    }

    [[nodiscard]] const std::vector<Date>& dates() const noexcept { return dates_; }
    [[nodiscard]] const std::vector<SeriesKey>& keys() const noexcept { return keys_; }
    [[nodiscard]] std::size_t series_count() const noexcept { return keys_.size(); }
    [[nodiscard]] std::size_t length() const noexcept { return dates_.size(); }

    [[nodiscard]] std::span<const T> series(std::size_t i) const { return values_.at(i); }

    [[nodiscard]] std::optional<std::size_t> index_of(const SeriesKey& key) const {
        auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
        if (it == keys_.end() || *it != key) return std::nullopt;
        return static_cast<std::size_t>(it - keys_.begin());
    }

    [[nodiscard]] std::span<const T> series(const SeriesKey& key) const {
        auto i = index_of(key);
        if (!i) throw ValidationError("panel: unknown key " + key.label());
        return values_[*i];
    }

    /// Index of `date` within dates(), if covered.
    [[nodiscard]] std::optional<std::size_t> date_index(Date date) const {
        if (date < dates_.front() || date > dates_.back()) return std::nullopt;
        return static_cast<std::size_t>((date - dates_.front()).count());
    }

    bool operator==(const TimePanel&) const = default;

private:
    std::vector<Date> dates_;
    std::vector<SeriesKey> keys_;
    std::vector<std::vector<T>> values_;
};

using Panel = TimePanel<std::int64_t>;
using ReturnPanel = TimePanel<double>;

/**
 * Reads a long-format panel (`date,community,topic,count`).
 *
 * Cells missing for a (key, date) pair are filled with 0 and reported to
 * `warnings` as `WARN fill key=<community>/<topic> n=<count>`. Duplicate
 * cells are rejected. Dates absent for every key leave a gap and are
 * rejected as non-contiguous.
 */
[[nodiscard]] inline Panel read_panel(std::istream& in, std::ostream& warnings) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) {
        throw ParseError("empty input", 1);
    }
    ++line_no;
    std::string_view header = csv::trim(line);
    if (header.starts_with("\xEF\xBB\xBF")) header.remove_prefix(3);
    if (header != "date,community,topic,count") {
        throw ParseError("expected header 'date,community,topic,count'", line_no);
    }

    std::map<SeriesKey, std::map<Date, std::int64_t>> cells;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view row = csv::trim(line);
        if (row.empty()) continue;
        auto fields = csv::split(row, line_no);
        if (fields.size() != 4) {
            throw ParseError(fmt::format("expected 4 fields, got {}", fields.size()), line_no);
        }
        const Date date = parse_date(csv::trim(fields[0]), line_no);
        SeriesKey key{std::string(csv::trim(fields[1])), std::string(csv::trim(fields[2]))};
        if (key.community.empty() || key.topic.empty()) {
            throw ParseError("empty community or topic", line_no);
        }
        const std::string_view count_text = csv::trim(fields[3]);
        std::int64_t count = 0;
        auto [p, ec] = std::from_chars(count_text.data(), count_text.data() + count_text.size(), count);
        if (ec != std::errc{} || p != count_text.data() + count_text.size() || count < 0) {
            throw ParseError(fmt::format("invalid count '{}'", count_text), line_no);
        }
        if (!cells[key].emplace(date, count).second) {
            throw ParseError(fmt::format("duplicate cell for {} on {}", key.label(), format_date(date)), line_no);
        }
    }
    if (cells.empty()) {
        throw ParseError("no data rows", line_no);
    }

    std::map<Date, bool> all_dates;
    for (const auto& [key, row] : cells) {
        for (const auto& [date, count] : row) all_dates.emplace(date, true);
    }
    std::vector<Date> dates;
    for (const auto& [date, unused] : all_dates) dates.push_back(date);
    for (std::size_t i = 1; i < dates.size(); ++i) {
        if (dates[i] - dates[i - 1] != std::chrono::days{1}) {
            throw ValidationError(fmt::format("non-contiguous dates: gap between {} and {}",
                                              format_date(dates[i - 1]), format_date(dates[i])));
        }
    }

    std::vector<SeriesKey> keys;
    std::vector<std::vector<std::int64_t>> values;
    for (const auto& [key, row] : cells) {
        std::vector<std::int64_t> series(dates.size(), 0);
        for (const auto& [date, count] : row) {
            series[static_cast<std::size_t>((date - dates.front()).count())] = count;
        }
        const std::size_t filled = dates.size() - row.size();
        if (filled > 0) {
            warnings << "WARN fill key=" << key.label() << " n=" << filled << '\n';
        }
        keys.push_back(key);
        values.push_back(std::move(series));
    }
    return Panel(std::move(dates), std::move(keys), std::move(values));
}

[[nodiscard]] inline Panel load_panel(const std::filesystem::path& path, std::ostream& warnings = std::cerr) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return read_panel(in, warnings);
}

/// Writes a panel in the long ingestion format, ordered by date then key.
template <class T>
void write_long_csv(std::ostream& out, const TimePanel<T>& panel, std::string_view value_column = "count") {
    out << "date,community,topic," << value_column << '\n';
    for (std::size_t t = 0; t < panel.length(); ++t) {
        const std::string date = format_date(panel.dates()[t]);
        for (std::size_t i = 0; i < panel.series_count(); ++i) {
            const SeriesKey& k = panel.keys()[i];
            out << date << ',' << csv::escape(k.community) << ',' << csv::escape(k.topic) << ','
                << fmt::format("{}", panel.series(i)[t]) << '\n';
        }
    }
}

/**
 * Daily log-returns with a +1 pseudo-count:
 *   r(t) = ln((n(t) + 1) / (n(t-1) + 1)),
 * attributed to the later day.
 */
[[nodiscard]] inline ReturnPanel log_returns(const Panel& panel) {
    if (panel.length() < 2) {
        throw ValidationError("log_returns: panel needs at least 2 days");
    }
    std::vector<std::vector<double>> values;
    values.reserve(panel.series_count());
    for (std::size_t i = 0; i < panel.series_count(); ++i) {
        const auto n = panel.series(i);
        std::vector<double> r(n.size() - 1);
        for (std::size_t t = 1; t < n.size(); ++t) {
            r[t - 1] = std::log((static_cast<double>(n[t]) + 1.0) / (static_cast<double>(n[t - 1]) + 1.0));
        }
        values.push_back(std::move(r));
    }
    std::vector<Date> dates(panel.dates().begin() + 1, panel.dates().end());
    return ReturnPanel(std::move(dates), panel.keys(), std::move(values));
}

inline constexpr std::string_view kAllCommunities = "ALL";

/// Per-topic mean over communities; output keys are ("ALL", topic).
[[nodiscard]] inline ReturnPanel aggregate_over_communities(const ReturnPanel& rp) {
    std::map<std::string, std::pair<std::vector<double>, std::size_t>> sums;
    for (std::size_t i = 0; i < rp.series_count(); ++i) {
        auto& [acc, count] = sums[rp.keys()[i].topic];
        if (acc.empty()) acc.assign(rp.length(), 0.0);
        const auto s = rp.series(i);
        for (std::size_t t = 0; t < s.size(); ++t) acc[t] += s[t];
        ++count;
    }
    std::vector<SeriesKey> keys;
    std::vector<std::vector<double>> values;
    for (auto& [topic, entry] : sums) {
        auto& [acc, count] = entry;
        for (double& v : acc) v /= static_cast<double>(count);
        keys.push_back({std::string(kAllCommunities), topic});
        values.push_back(std::move(acc));
    }
    return ReturnPanel(rp.dates(), std::move(keys), std::move(values));
}

/// Per-date median of counts across all series.
[[nodiscard]] inline std::vector<double> median_series(const Panel& panel) {
    std::vector<double> out(panel.length());
    std::vector<double> column(panel.series_count());
    for (std::size_t t = 0; t < panel.length(); ++t) {
        for (std::size_t i = 0; i < panel.series_count(); ++i) {
            column[i] = static_cast<double>(panel.series(i)[t]);
        }
        out[t] = median(column);
    }
    return out;
}

/// Sub-panel over the inclusive date range [start, end].
template <class T>
[[nodiscard]] TimePanel<T> slice_range(const TimePanel<T>& panel, Date start, Date end) {
    if (start > end) {
        throw ValidationError("slice_range: start after end");
    }
    const auto first = panel.date_index(start);
    const auto last = panel.date_index(end);
    if (!first || !last) {
        throw ValidationError(fmt::format("slice_range: [{}, {}] outside panel range [{}, {}]", format_date(start),
                                          format_date(end), format_date(panel.dates().front()),
                                          format_date(panel.dates().back())));
    }
    const auto b = static_cast<std::ptrdiff_t>(*first);
    const auto e = static_cast<std::ptrdiff_t>(*last) + 1;
    std::vector<std::vector<T>> values;
    values.reserve(panel.series_count());
    for (std::size_t i = 0; i < panel.series_count(); ++i) {
        const auto s = panel.series(i);
        values.emplace_back(s.begin() + b, s.begin() + e);
    }
    return TimePanel<T>(std::vector<Date>(panel.dates().begin() + b, panel.dates().begin() + e), panel.keys(),
                        std::move(values));
}

}  // namespace ccmnet
