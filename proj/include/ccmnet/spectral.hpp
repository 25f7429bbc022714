#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"
#include "panel.hpp"
#include "stats.hpp"

namespace ccmnet {

/**
 * Pairwise Pearson correlations over a set of series.
 *
 * Zero-variance series keep their row and column (all zeros) with a unit
 * diagonal so that labels stay aligned with the source panel.
 */
struct CorrelationMatrix {
    std::vector<SeriesKey> labels;
    Eigen::MatrixXd values;
    std::vector<bool> degenerate;

    [[nodiscard]] std::size_t size() const noexcept { return labels.size(); }
};

/// Correlations over `count` consecutive days starting at index `first`.
[[nodiscard]] inline CorrelationMatrix correlation_matrix(const ReturnPanel& rp, std::size_t first, std::size_t count) {
    if (count < 2) {
        throw ValidationError("correlation_matrix: window shorter than 2 days");
    }
    if (first + count > rp.length()) {
        throw ValidationError("correlation_matrix: window exceeds panel");
    }
    const std::size_t n = rp.series_count();
    CorrelationMatrix cm{rp.keys(), Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)),
                         std::vector<bool>(n, false)};
    std::vector<std::span<const double>> windows;
    windows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        windows.push_back(rp.series(i).subspan(first, count));
        cm.degenerate[i] = detail::is_constant(windows.back());
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double r = pearson(windows[i], windows[j]).value;
            cm.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r;
            cm.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = r;
        }
    }
    return cm;
}

/// Correlations over the whole panel.
[[nodiscard]] inline CorrelationMatrix correlation_matrix(const ReturnPanel& rp) {
    return correlation_matrix(rp, 0, rp.length());
}

/// Correlations over the inclusive date range [start, end].
[[nodiscard]] inline CorrelationMatrix correlation_matrix(const ReturnPanel& rp, Date start, Date end) {
    const auto first = rp.date_index(start);
    const auto last = rp.date_index(end);
    if (!first || !last || *last < *first) {
        throw ValidationError("correlation_matrix: window outside panel");
    }
    return correlation_matrix(rp, *first, *last - *first + 1);
}

namespace detail {

inline void require_symmetric(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) {
        throw ValidationError("correlation matrix is not square");
    }
    if (((m - m.transpose()).cwiseAbs().maxCoeff()) > 1e-12) {
        throw ValidationError("correlation matrix is not symmetric");
    }
}

}  // namespace detail

/// All eigenvalues in ascending order.
[[nodiscard]] inline Eigen::VectorXd eigenvalues(const CorrelationMatrix& cm) {
    detail::require_symmetric(cm.values);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cm.values, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw Error("eigenvalue decomposition failed");
    }
    return solver.eigenvalues();
}

[[nodiscard]] inline double max_eigenvalue(const CorrelationMatrix& cm) {
    const Eigen::VectorXd ev = eigenvalues(cm);
    return ev(ev.size() - 1);
}

/// Largest-eigenvalue ratio for one window, labeled by its end date.
struct WindowRatio {
    Date window_end;
    double lambda_max = 0.0;
    double ratio = 0.0;
};

/// A window whose top eigenvalue meets the collective-behavior threshold.
struct CollectiveEvent {
    Date window_end;
    double ratio = 0.0;
};

inline constexpr std::size_t kDefaultWindowDays = 14;
inline constexpr double kDefaultCollectiveThreshold = 1.0;

/**
 * Slides a `window`-day window with stride 1 and reports
 * lambda_max(window) / lambda_max(full panel) - 1 for every window end.
 */
[[nodiscard]] inline std::vector<WindowRatio> collective_ratios(const ReturnPanel& rp,
                                                                std::size_t window = kDefaultWindowDays) {
    if (window < 2) {
        throw ValidationError("detect_collective: window must be at least 2 days");
    }
    if (window > rp.length()) {
        throw ValidationError("detect_collective: window longer than panel");
    }
    const double full = max_eigenvalue(correlation_matrix(rp));
    std::vector<WindowRatio> out;
    out.reserve(rp.length() - window + 1);
    for (std::size_t first = 0; first + window <= rp.length(); ++first) {
        const double lambda = max_eigenvalue(correlation_matrix(rp, first, window));
        out.push_back({rp.dates()[first + window - 1], lambda, lambda / full - 1.0});
    }
    return out;
}

/// Windows whose ratio reaches `threshold`.
[[nodiscard]] inline std::vector<CollectiveEvent> detect_collective(const ReturnPanel& rp,
                                                                    std::size_t window = kDefaultWindowDays,
                                                                    double threshold = kDefaultCollectiveThreshold) {
    std::vector<CollectiveEvent> events;
    for (const WindowRatio& w : collective_ratios(rp, window)) {
        if (w.ratio >= threshold) events.push_back({w.window_end, w.ratio});
    }
    return events;
}

}  // namespace ccmnet
