#ifndef GTNMF_EVAL_HPP
#define GTNMF_EVAL_HPP

// External clustering metrics: accuracy under the best one-to-one label
// mapping (Kuhn-Munkres), normalized mutual information, confusion matrices.

#include "gtnmf/error.hpp"
#include "gtnmf/matrix_io.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace gtnmf {

// counts[t][p] = number of points with true label t and predicted label p.
using CountMatrix = std::vector<std::vector<std::size_t>>;

struct Assignment {
    std::vector<std::size_t> column_of_row;
    double total_cost = 0.0;
};

struct AccuracyResult {
    double ac = 0.0;
    std::size_t matched = 0;
    // mapping[p] = true label assigned to predicted label p.
    std::vector<Label> mapping;
};

struct ConfusionMatrix {
    // rows: true clusters, columns: predicted clusters after mapping
    CountMatrix counts;

    std::size_t total() const {
        std::size_t sum = 0;
        for (const auto& row : counts)
            for (auto c : row) sum += c;
        return sum;
    }
    std::size_t diagonal() const {
        std::size_t sum = 0;
        for (std::size_t i = 0; i < counts.size() && i < (counts.empty() ? 0 : counts[0].size()); ++i)
            sum += counts[i][i];
        return sum;
    }
};

struct MetricsReport {
    double ac = 0.0;
    double nmi = 0.0;
    std::size_t n = 0;
    std::vector<Label> mapping;
};

namespace detail {

// Searches for an alternating path from `row` to `target` through tight
// edges, touching only rows and columns not yet fixed. On success the
// matching is rotated along the path.
inline bool reroute(std::size_t row, std::size_t target, const std::vector<std::vector<bool>>& tight,
                    const std::vector<bool>& fixed_col, std::vector<bool>& visited,
                    std::vector<std::size_t>& col_of_row, std::vector<std::size_t>& row_of_col) {
    const std::size_t n = tight.size();
    for (std::size_t c = 0; c < n; ++c) {
        if (!tight[row][c] || fixed_col[c] || visited[c]) continue;
        visited[c] = true;
        if (c == target || reroute(row_of_col[c], target, tight, fixed_col, visited, col_of_row, row_of_col)) {
            col_of_row[row] = c;
            row_of_col[c] = row;
            return true;
        }
    }
    return false;
}

} // namespace detail

// Minimum-cost perfect assignment on a square matrix (O(n^3) shortest
// augmenting path with potentials). Among optimal assignments the
// lexicographically smallest one is returned: every optimal assignment lives
// in the equality subgraph of the optimal duals, so the smallest one is found
// by fixing rows in order, each to its lowest tight column that still admits
// a perfect matching of the rest.
inline Assignment hungarian(const DenseMatrix& cost) {
    if (cost.rows() != cost.cols())
        throw ConfigError("hungarian: cost matrix must be square, got " + std::to_string(cost.rows()) + "x" +
                          std::to_string(cost.cols()));
    if (!cost.allFinite()) throw ConfigError("hungarian: cost matrix has non-finite entries");
    const auto n = std::size_t(cost.rows());
    Assignment result;
    if (n == 0) return result;

    constexpr double inf = std::numeric_limits<double>::infinity();
    auto a = [&](std::size_t i, std::size_t j) { return cost(Eigen::Index(i - 1), Eigen::Index(j - 1)); };
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = a(i0, j) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }

    std::vector<std::size_t> col_of_row(n), row_of_col(n);
    for (std::size_t j = 1; j <= n; ++j) {
        col_of_row[p[j] - 1] = j - 1;
        row_of_col[j - 1] = p[j] - 1;
    }

    const double scale = std::max(1.0, cost.cwiseAbs().maxCoeff());
    const double tolerance = 1e-9 * scale;
    std::vector<std::vector<bool>> tight(n, std::vector<bool>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            tight[i][j] = std::abs(a(i + 1, j + 1) - u[i + 1] - v[j + 1]) <= tolerance;

    std::vector<bool> fixed_col(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < n; ++c) {
            if (c == col_of_row[i]) break;
            if (!tight[i][c] || fixed_col[c]) continue;
            // Try to hand i's current column to c's current owner.
            const std::size_t target = col_of_row[i];
            const std::size_t owner = row_of_col[c];
            std::vector<bool> visited(n, false);
            visited[c] = true;
            auto trial_cols = col_of_row;
            auto trial_rows = row_of_col;
            std::vector<bool> blocked = fixed_col;
            blocked[c] = true;
            if (detail::reroute(owner, target, tight, blocked, visited, trial_cols, trial_rows)) {
                trial_cols[i] = c;
                trial_rows[c] = i;
                col_of_row = std::move(trial_cols);
                row_of_col = std::move(trial_rows);
                break;
            }
        }
        fixed_col[col_of_row[i]] = true;
    }

    result.column_of_row = std::move(col_of_row);
    for (std::size_t i = 0; i < n; ++i) result.total_cost += cost(Eigen::Index(i), Eigen::Index(result.column_of_row[i]));
    return result;
}

namespace detail {

inline void require_pair(const LabelVector& truth, const LabelVector& pred) {
    if (truth.size() != pred.size())
        throw ConfigError("label vectors differ in length: " + std::to_string(truth.size()) + " vs " +
                          std::to_string(pred.size()));
    if (truth.empty()) throw ConfigError("label vectors are empty");
}

} // namespace detail

inline CountMatrix contingency_table(const LabelVector& truth, const LabelVector& pred) {
    detail::require_pair(truth, pred);
    CountMatrix counts(label_count(truth), std::vector<std::size_t>(label_count(pred), 0));
    for (std::size_t i = 0; i < truth.size(); ++i) ++counts[truth[i]][pred[i]];
    return counts;
}

// Fraction of points whose predicted cluster maps to their true class under
// the best one-to-one mapping. The table is zero-padded to square when the
// cluster counts differ.
inline AccuracyResult accuracy(const LabelVector& truth, const LabelVector& pred) {
    const CountMatrix counts = contingency_table(truth, pred);
    const std::size_t size = std::max(label_count(truth), label_count(pred));
    std::size_t largest = 0;
    for (const auto& row : counts)
        for (auto c : row) largest = std::max(largest, c);
    // rows: predicted clusters, columns: true clusters
    DenseMatrix cost = DenseMatrix::Constant(Eigen::Index(size), Eigen::Index(size), double(largest));
    for (std::size_t t = 0; t < counts.size(); ++t)
        for (std::size_t p = 0; p < counts[t].size(); ++p)
            cost(Eigen::Index(p), Eigen::Index(t)) = double(largest - counts[t][p]);
    const Assignment assignment = hungarian(cost);

    AccuracyResult result;
    result.mapping.assign(assignment.column_of_row.begin(), assignment.column_of_row.end());
    for (std::size_t p = 0; p < size; ++p) {
        const std::size_t t = result.mapping[p];
        if (t < counts.size() && p < counts[t].size()) result.matched += counts[t][p];
    }
    result.ac = double(result.matched) / double(truth.size());
    return result;
}

// Mutual information (bits) over the larger of the two entropies. Two
// single-cluster partitions are the same partition and score 1.
inline double nmi(const LabelVector& truth, const LabelVector& pred) {
    const CountMatrix counts = contingency_table(truth, pred);
    const double n = double(truth.size());
    std::vector<double> truth_sizes(counts.size(), 0.0);
    std::vector<double> pred_sizes(counts.empty() ? 0 : counts[0].size(), 0.0);
    for (std::size_t t = 0; t < counts.size(); ++t)
        for (std::size_t p = 0; p < counts[t].size(); ++p) {
            truth_sizes[t] += double(counts[t][p]);
            pred_sizes[p] += double(counts[t][p]);
        }
    auto entropy = [n](const std::vector<double>& sizes) {
        double h = 0.0;
        for (double c : sizes)
            if (c > 0) h += c / n * std::log2(n / c);
        return h;
    };
    const double h_truth = entropy(truth_sizes);
    const double h_pred = entropy(pred_sizes);
    if (h_truth == 0.0 && h_pred == 0.0) return 1.0;

    double mi = 0.0;
    for (std::size_t t = 0; t < counts.size(); ++t)
        for (std::size_t p = 0; p < counts[t].size(); ++p) {
            const double c = double(counts[t][p]);
            if (c > 0) mi += c / n * std::log2(c * n / (truth_sizes[t] * pred_sizes[p]));
        }
    return std::clamp(mi / std::max(h_truth, h_pred), 0.0, 1.0);
}

// counts[t][mapping[p]] per point; mapping as returned by accuracy().
inline ConfusionMatrix confusion_matrix(const LabelVector& truth, const LabelVector& pred,
                                        const std::vector<Label>& mapping) {
    detail::require_pair(truth, pred);
    std::size_t size = label_count(truth);
    for (auto p : pred) {
        if (p >= mapping.size())
            throw ConfigError("confusion_matrix: no mapping for predicted label " + std::to_string(p));
        size = std::max(size, mapping[p] + 1);
    }
    ConfusionMatrix cm;
    cm.counts.assign(size, std::vector<std::size_t>(size, 0));
    for (std::size_t i = 0; i < truth.size(); ++i) ++cm.counts[truth[i]][mapping[pred[i]]];
    return cm;
}

inline MetricsReport evaluate(const LabelVector& truth, const LabelVector& pred) {
    MetricsReport report;
    auto acc = accuracy(truth, pred);
    report.ac = acc.ac;
    report.mapping = std::move(acc.mapping);
    report.nmi = nmi(truth, pred);
    report.n = truth.size();
    return report;
}

inline void write_confusion_csv(const std::filesystem::path& path, const ConfusionMatrix& cm) {
    auto out = detail::open_for_writing(path);
    for (const auto& row : cm.counts) {
        for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << row[j];
        out << '\n';
    }
    detail::finish_writing(out, path);
}

} // namespace gtnmf

#endif
