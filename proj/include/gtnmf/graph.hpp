#ifndef GTNMF_GRAPH_HPP
#define GTNMF_GRAPH_HPP

// Similarity kernels, kNN sparsification and normalized-cut rescaling, i.e.
// everything that turns a data or similarity matrix into the payoff graph the
// replicator dynamics run on.

#include "gtnmf/error.hpp"
#include "gtnmf/matrix_io.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gtnmf {

enum class Kernel { cosine, gaussian_local };
enum class NeighborRule { global, adaptive };
enum class InputKind { features, similarity };
// divide: A_ij / (sqrt(d_i) sqrt(d_j)), the D^-1/2 S D^-1/2 normalization.
// multiply: A_ij * sqrt(d_i) sqrt(d_j), kept for comparison runs.
enum class NcutMode { divide, multiply };

inline std::string to_string(Kernel k) { return k == Kernel::cosine ? "cosine" : "gaussian"; }
inline std::string to_string(NeighborRule r) { return r == NeighborRule::global ? "global" : "adaptive"; }
inline std::string to_string(InputKind k) { return k == InputKind::features ? "features" : "similarity"; }
inline std::string to_string(NcutMode m) { return m == NcutMode::divide ? "divide" : "multiply"; }

struct GraphConfig {
    Kernel kernel = Kernel::gaussian_local;
    std::size_t sigma_neighbor_rank = 7;
    int distance_exponent = 1;
    NeighborRule neighbor_rule = NeighborRule::adaptive;
    bool normalize = true;
    NcutMode ncut = NcutMode::divide;
    double sigma_floor = 1e-12;
};

// Sparse, symmetric, nonnegative weights with an empty diagonal. The
// constructor rejects anything else, so every instance satisfies those
// invariants exactly.
class PayoffGraph {
public:
    using Weights = Eigen::SparseMatrix<double, Eigen::RowMajor>;

    PayoffGraph() = default;

    explicit PayoffGraph(const SparseMatrix& m) {
        if (m.rows() != m.cols())
            throw ConfigError("payoff graph must be square, got " + std::to_string(m.rows()) + "x" +
                              std::to_string(m.cols()));
        for (const auto& e : m.entries()) {
            if (e.row == e.col && e.value != 0.0)
                throw ConfigError("payoff graph has nonzero diagonal at node " + std::to_string(e.row));
            if (!(e.value >= 0.0))
                throw ConfigError("payoff graph has a negative weight at (" + std::to_string(e.row) + ", " +
                                  std::to_string(e.col) + ")");
        }
        if (!m.is_symmetric()) throw ConfigError("payoff graph is not exactly symmetric");
        weights_ = m.to_eigen();
        weights_.prune(0.0, 0.0);
        weights_.makeCompressed();
        degree_ = Eigen::VectorXd::Zero(weights_.rows());
        for (Eigen::Index i = 0; i < weights_.outerSize(); ++i)
            for (Weights::InnerIterator it(weights_, i); it; ++it) degree_(i) += it.value();
    }

    static PayoffGraph empty(std::size_t n) { return PayoffGraph(SparseMatrix::from_entries(n, n, {})); }

    std::size_t size() const { return std::size_t(weights_.rows()); }
    const Weights& weights() const { return weights_; }
    const Eigen::VectorXd& degree() const { return degree_; }
    std::size_t edge_count() const { return std::size_t(weights_.nonZeros()); }

    double weight(std::size_t i, std::size_t j) const {
        return weights_.coeff(Eigen::Index(i), Eigen::Index(j));
    }

    SparseMatrix to_sparse() const {
        std::vector<SparseEntry> entries;
        entries.reserve(std::size_t(weights_.nonZeros()));
        for (Eigen::Index i = 0; i < weights_.outerSize(); ++i)
            for (Weights::InnerIterator it(weights_, i); it; ++it)
                entries.push_back({std::size_t(it.row()), std::size_t(it.col()), it.value()});
        return SparseMatrix::from_entries(size(), size(), std::move(entries));
    }

private:
    Weights weights_;
    Eigen::VectorXd degree_;
};

// Unit-normalized rows, inner products clamped to [0, 1], zero diagonal.
inline DenseMatrix cosine_similarity(const DenseMatrix& X) {
    DenseMatrix normalized = X;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const double norm = X.row(i).norm();
        if (norm == 0.0)
            throw ConfigError("cosine similarity: row " + std::to_string(i) + " is all zeros");
        normalized.row(i) /= norm;
    }
    DenseMatrix S = normalized * normalized.transpose();
    S = S.cwiseMax(0.0).cwiseMin(1.0);
    // Symmetrize exactly; the GEMM kernel does not guarantee it.
    for (Eigen::Index i = 0; i < S.rows(); ++i) {
        S(i, i) = 0.0;
        for (Eigen::Index j = 0; j < i; ++j) S(j, i) = S(i, j);
    }
    return S;
}

// Each column scaled to [0, 1]; a constant column becomes all zeros.
inline DenseMatrix min_max_normalize_columns(const DenseMatrix& X) {
    DenseMatrix out(X.rows(), X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const double lo = X.col(j).minCoeff();
        const double hi = X.col(j).maxCoeff();
        if (hi > lo)
            out.col(j) = (X.col(j).array() - lo) / (hi - lo);
        else
            out.col(j).setZero();
    }
    return out;
}

inline DenseMatrix pairwise_distances(const DenseMatrix& X) {
    const Eigen::Index n = X.rows();
    DenseMatrix D = DenseMatrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < i; ++j) {
            const double d = (X.row(i) - X.row(j)).norm();
            D(i, j) = d;
            D(j, i) = d;
        }
    return D;
}

// Distance from each point to its rank-th nearest other point, floored.
inline Eigen::VectorXd local_scales(const DenseMatrix& distances, std::size_t rank, double floor) {
    const Eigen::Index n = distances.rows();
    Eigen::VectorXd sigma(n);
    std::vector<double> others;
    for (Eigen::Index i = 0; i < n; ++i) {
        others.clear();
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i) others.push_back(distances(i, j));
        std::nth_element(others.begin(), others.begin() + std::ptrdiff_t(rank - 1), others.end());
        sigma(i) = std::max(others[rank - 1], floor);
    }
    return sigma;
}

// Self-tuning Gaussian kernel exp(-d_ij^e / (sigma_i sigma_j)) on min-max
// normalized features.
inline DenseMatrix gaussian_local_similarity(const DenseMatrix& X, const GraphConfig& config) {
    const auto n = std::size_t(X.rows());
    if (config.sigma_neighbor_rank < 1 || n <= config.sigma_neighbor_rank)
        throw ConfigError("gaussian kernel needs more than sigma_neighbor_rank=" +
                          std::to_string(config.sigma_neighbor_rank) + " points, got " + std::to_string(n));
    if (config.distance_exponent != 1 && config.distance_exponent != 2)
        throw ConfigError("distance exponent must be 1 or 2");
    const DenseMatrix D = pairwise_distances(min_max_normalize_columns(X));
    const Eigen::VectorXd sigma = local_scales(D, config.sigma_neighbor_rank, config.sigma_floor);
    DenseMatrix S = DenseMatrix::Zero(X.rows(), X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        for (Eigen::Index j = 0; j < i; ++j) {
            const double d = config.distance_exponent == 2 ? D(i, j) * D(i, j) : D(i, j);
            const double s = std::exp(-d / (sigma(i) * sigma(j)));
            S(i, j) = s;
            S(j, i) = s;
        }
    return S;
}

// floor(log2 n) + 1, i.e. the bit length of n.
inline std::size_t global_q(std::size_t n) {
    if (n == 0) throw ConfigError("global_q: n must be >= 1");
    return std::size_t(std::bit_width(n));
}

// q_i = floor(log2 |C_i|) + 1 where C_i is point i's cluster.
inline std::vector<std::size_t> adaptive_q(std::span<const Label> labels) {
    if (labels.empty()) throw ConfigError("adaptive_q: empty label vector");
    std::vector<std::size_t> sizes(*std::max_element(labels.begin(), labels.end()) + 1, 0);
    for (auto l : labels) ++sizes[l];
    std::vector<std::size_t> q(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) q[i] = global_q(sizes[labels[i]]);
    return q;
}

// Indices of the q most similar other points, similarity descending, ties to
// the lower index.
inline std::vector<std::size_t> nearest_neighbors(const DenseMatrix& S, std::size_t i, std::size_t q) {
    std::vector<std::size_t> order;
    order.reserve(std::size_t(S.cols()));
    for (std::size_t j = 0; j < std::size_t(S.cols()); ++j)
        if (j != i) order.push_back(j);
    const auto row = Eigen::Index(i);
    std::partial_sort(order.begin(), order.begin() + std::ptrdiff_t(q), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          const double sa = S(row, Eigen::Index(a)), sb = S(row, Eigen::Index(b));
                          return sa != sb ? sa > sb : a < b;
                      });
    order.resize(q);
    return order;
}

// Keeps S_ij iff j is among i's q_i nearest or i among j's q_j nearest.
// Zero similarities are not stored.
inline SparseMatrix sparsify_knn(const DenseMatrix& S, std::span<const std::size_t> q) {
    const auto n = std::size_t(S.rows());
    if (S.cols() != S.rows()) throw ConfigError("sparsify_knn: similarity matrix must be square");
    if (q.size() != n)
        throw ConfigError("sparsify_knn: " + std::to_string(q.size()) + " neighbor counts for " +
                          std::to_string(n) + " points");
    std::vector<std::vector<bool>> keep(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i) {
        if (q[i] < 1 || q[i] >= n)
            throw ConfigError("sparsify_knn: q[" + std::to_string(i) + "]=" + std::to_string(q[i]) +
                              " outside [1, n-1=" + std::to_string(n - 1) + "]");
        for (auto j : nearest_neighbors(S, i, q[i])) {
            keep[i][j] = true;
            keep[j][i] = true;
        }
    }
    std::vector<SparseEntry> entries;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double v = S(Eigen::Index(i), Eigen::Index(j));
            if (keep[i][j] && v != 0.0) entries.push_back({i, j, v});
        }
    return SparseMatrix::from_entries(n, n, std::move(entries));
}

// Normalized-cut rescaling with d = row sums of S. Isolated nodes stay
// isolated.
inline PayoffGraph normalize_ncut(const SparseMatrix& S, NcutMode mode = NcutMode::divide) {
    std::vector<double> root_degree(S.rows(), 0.0);
    for (const auto& e : S.entries()) root_degree[e.row] += e.value;
    for (auto& d : root_degree) d = std::sqrt(d);
    std::vector<SparseEntry> entries;
    entries.reserve(S.nnz());
    for (const auto& e : S.entries()) {
        // The product commutes exactly, so A_ij == A_ji bit for bit.
        const double scale = root_degree[e.row] * root_degree[e.col];
        if (scale == 0.0) continue;
        const double v = mode == NcutMode::divide ? e.value / scale : e.value * scale;
        entries.push_back({e.row, e.col, v});
    }
    return PayoffGraph(SparseMatrix::from_entries(S.rows(), S.cols(), std::move(entries)));
}

// Kernel output for feature input; for similarity input, the matrix itself
// (validated, diagonal cleared).
inline DenseMatrix similarity_matrix(const DenseMatrix& input, InputKind kind, const GraphConfig& config) {
    if (kind == InputKind::features)
        return config.kernel == Kernel::cosine ? cosine_similarity(input)
                                               : gaussian_local_similarity(input, config);
    if (input.rows() != input.cols())
        throw ConfigError("similarity input must be square, got " + std::to_string(input.rows()) + "x" +
                          std::to_string(input.cols()));
    DenseMatrix S = input;
    for (Eigen::Index i = 0; i < S.rows(); ++i) {
        S(i, i) = 0.0;
        for (Eigen::Index j = 0; j < i; ++j) {
            if (!(S(i, j) >= 0.0)) throw ConfigError("similarity input has a negative or non-finite entry");
            if (S(i, j) != S(j, i))
                throw ConfigError("similarity input is not symmetric at (" + std::to_string(i) + ", " +
                                  std::to_string(j) + ")");
        }
    }
    return S;
}

// Per-point neighbor counts for the configured rule, capped at n - 1 so tiny
// inputs stay valid.
inline std::vector<std::size_t> neighbor_counts(std::size_t n, NeighborRule rule,
                                                std::span<const Label> nmf_labels) {
    std::vector<std::size_t> q;
    if (rule == NeighborRule::adaptive) {
        if (nmf_labels.empty()) throw ConfigError("adaptive neighbor rule requires NMF labels");
        if (nmf_labels.size() != n)
            throw ConfigError("adaptive neighbor rule: " + std::to_string(nmf_labels.size()) +
                              " labels for " + std::to_string(n) + " points");
        q = adaptive_q(nmf_labels);
    } else {
        q.assign(n, global_q(n));
    }
    for (auto& qi : q) qi = std::min(qi, n - 1);
    return q;
}

// Sparsify + normalize an already computed similarity matrix.
inline PayoffGraph payoff_graph_from_similarity(const DenseMatrix& S, const GraphConfig& config,
                                                std::span<const Label> nmf_labels = {}) {
    const auto n = std::size_t(S.rows());
    if (n < 2) throw ConfigError("payoff graph needs at least 2 points");
    const SparseMatrix sparse = sparsify_knn(S, neighbor_counts(n, config.neighbor_rule, nmf_labels));
    return config.normalize ? normalize_ncut(sparse, config.ncut) : PayoffGraph(sparse);
}

// kernel -> kNN sparsification (global or adaptive q) -> normalized cut.
inline PayoffGraph build_payoff_graph(const DenseMatrix& input, InputKind kind, const GraphConfig& config,
                                      std::span<const Label> nmf_labels = {}) {
    if (config.neighbor_rule == NeighborRule::adaptive && nmf_labels.empty())
        throw ConfigError("adaptive neighbor rule requires NMF labels");
    return payoff_graph_from_similarity(similarity_matrix(input, kind, config), config, nmf_labels);
}

} // namespace gtnmf

#endif
