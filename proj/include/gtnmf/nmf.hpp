#ifndef GTNMF_NMF_HPP
#define GTNMF_NMF_HPP

// Nonnegative matrix factorization X ~ W H^T (W: n x k, H: m x k) with
// Lee-Seung multiplicative updates for the Frobenius and generalized KL
// objectives, NNDSVD initialization, a damped multiplicative SymNMF solver
// (A ~ W W^T), and the argmax hard assignment of W's rows.

#include "gtnmf/error.hpp"
#include "gtnmf/matrix_io.hpp"
#include "gtnmf/random.hpp"

#include <Eigen/Core>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace gtnmf {

enum class Objective { frobenius, kl };
enum class InitKind { random, nndsvd };
enum class NmfMethod { nmf, nmf_s, symnmf, nndsvd };

inline std::string to_string(Objective o) { return o == Objective::frobenius ? "frobenius" : "kl"; }
inline std::string to_string(InitKind i) { return i == InitKind::random ? "random" : "nndsvd"; }
inline std::string to_string(NmfMethod m) {
    switch (m) {
    case NmfMethod::nmf: return "nmf";
    case NmfMethod::nmf_s: return "nmf-s";
    case NmfMethod::symnmf: return "symnmf";
    case NmfMethod::nndsvd: return "nndsvd";
    }
    return "?";
}

struct NmfConfig {
    std::size_t k = 2;
    Objective objective = Objective::frobenius;
    InitKind init = InitKind::random;
    std::uint64_t seed = 0;
    std::size_t max_iterations = 200;
    double rel_tolerance = 1e-5;
    double epsilon_guard = 1e-12;

    void validate(std::size_t n, std::size_t m) const {
        if (k < 1 || k > std::min(n, m))
            throw ConfigError("rank k=" + std::to_string(k) + " outside [1, min(n, m)=" +
                              std::to_string(std::min(n, m)) + "]");
        if (max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
        if (!(rel_tolerance > 0)) throw ConfigError("rel_tolerance must be > 0");
        if (!(epsilon_guard >= 0)) throw ConfigError("epsilon_guard must be >= 0");
    }
};

struct Factorization {
    DenseMatrix W; // n x k
    DenseMatrix H; // m x k
    // objective_trace[0] is the value at the initial factors, then one value
    // per update.
    std::vector<double> objective_trace;
    std::size_t iterations_run = 0;
};

namespace detail {

inline void require_nonnegative(const DenseMatrix& m, std::string_view what) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            if (!(m(i, j) >= 0.0))
                throw ConfigError(std::string(what) + " has a negative or non-finite entry at (" +
                                  std::to_string(i) + ", " + std::to_string(j) + ")");
}

inline void require_factor_shapes(const DenseMatrix& X, const DenseMatrix& W, const DenseMatrix& H) {
    if (W.rows() != X.rows() || H.rows() != X.cols() || W.cols() != H.cols() || W.cols() == 0)
        throw ConfigError("factor shapes W " + std::to_string(W.rows()) + "x" + std::to_string(W.cols()) +
                          ", H " + std::to_string(H.rows()) + "x" + std::to_string(H.cols()) +
                          " do not match X " + std::to_string(X.rows()) + "x" + std::to_string(X.cols()));
}

inline bool converged(double previous, double current, double rel_tolerance) {
    if (previous == 0.0) return true;
    return std::abs(previous - current) / std::abs(previous) < rel_tolerance;
}

inline DenseMatrix random_factor(Eigen::Index rows, Eigen::Index cols, double guard, Rng& rng) {
    DenseMatrix out(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = rng.uniform_open_closed(guard, 1.0);
    return out;
}

} // namespace detail

inline Factorization random_init(std::size_t n, std::size_t m, std::size_t k, std::uint64_t seed,
                                 double epsilon_guard = 1e-12) {
    if (k < 1 || k > std::min(n, m))
        throw ConfigError("rank k=" + std::to_string(k) + " outside [1, min(n, m)=" +
                          std::to_string(std::min(n, m)) + "]");
    Rng rng(seed);
    Factorization f;
    f.W = detail::random_factor(Eigen::Index(n), Eigen::Index(k), epsilon_guard, rng);
    f.H = detail::random_factor(Eigen::Index(m), Eigen::Index(k), epsilon_guard, rng);
    return f;
}

// Plain NNDSVD: every zero produced by the positive/negative split stays an
// exact zero. Each singular pair is oriented so the largest-magnitude entry
// of u is positive, which makes the result independent of the SVD backend's
// sign choices.
inline Factorization nndsvd_init(const DenseMatrix& X, std::size_t k) {
    detail::require_nonnegative(X, "NNDSVD input");
    const auto n = std::size_t(X.rows());
    const auto m = std::size_t(X.cols());
    if (k < 1 || k > std::min(n, m))
        throw ConfigError("rank k=" + std::to_string(k) + " outside [1, min(n, m)=" +
                          std::to_string(std::min(n, m)) + "]");

    Eigen::BDCSVD<DenseMatrix> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw NumericalError("NNDSVD: SVD did not converge");
    const DenseMatrix& U = svd.matrixU();
    const DenseMatrix& V = svd.matrixV();
    const auto& sigma = svd.singularValues();
    if (!U.allFinite() || !V.allFinite() || !sigma.allFinite())
        throw NumericalError("NNDSVD: SVD produced non-finite values");

    Factorization f;
    f.W = DenseMatrix::Zero(X.rows(), Eigen::Index(k));
    f.H = DenseMatrix::Zero(X.cols(), Eigen::Index(k));

    for (Eigen::Index j = 0; j < Eigen::Index(k); ++j) {
        Eigen::VectorXd u = U.col(j);
        Eigen::VectorXd v = V.col(j);
        Eigen::Index pivot = 0;
        u.cwiseAbs().maxCoeff(&pivot);
        if (u(pivot) < 0) {
            u = -u;
            v = -v;
        }
        const double s = sigma(j);
        if (j == 0) {
            // Perron vectors of a nonnegative matrix; clear rounding-level negatives.
            f.W.col(0) = std::sqrt(s) * u.cwiseAbs();
            f.H.col(0) = std::sqrt(s) * v.cwiseAbs();
            continue;
        }
        const Eigen::VectorXd up = u.cwiseMax(0.0), un = (-u).cwiseMax(0.0);
        const Eigen::VectorXd vp = v.cwiseMax(0.0), vn = (-v).cwiseMax(0.0);
        const double up_norm = up.norm(), un_norm = un.norm();
        const double vp_norm = vp.norm(), vn_norm = vn.norm();
        const double positive = up_norm * vp_norm;
        const double negative = un_norm * vn_norm;
        if (positive >= negative) {
            if (positive == 0.0) continue;
            const double scale = std::sqrt(s * positive);
            f.W.col(j) = scale / up_norm * up;
            f.H.col(j) = scale / vp_norm * vp;
        } else {
            const double scale = std::sqrt(s * negative);
            f.W.col(j) = scale / un_norm * un;
            f.H.col(j) = scale / vn_norm * vn;
        }
    }
    return f;
}

// Frobenius: ||X - W H^T||_F.
// KL: sum X log(X / (W H^T + guard)) - X + W H^T, with 0 log 0 = 0.
inline double objective_value(const DenseMatrix& X, const DenseMatrix& W, const DenseMatrix& H,
                              Objective objective, double epsilon_guard = 1e-12) {
    detail::require_factor_shapes(X, W, H);
    const DenseMatrix approx = W * H.transpose();
    if (objective == Objective::frobenius) return (X - approx).norm();

    double total = 0.0;
    for (Eigen::Index j = 0; j < X.cols(); ++j)
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            const double x = X(i, j);
            const double y = approx(i, j);
            if (x < 0) throw ConfigError("KL objective requires a nonnegative X");
            if (x > 0) total += x * std::log(x / (y + epsilon_guard));
            total += y - x;
        }
    return total;
}

// One multiplicative update of H, then of W (using the new H).
inline void mu_step(const DenseMatrix& X, DenseMatrix& W, DenseMatrix& H, Objective objective,
                    double epsilon_guard = 1e-12) {
    detail::require_factor_shapes(X, W, H);
    if (objective == Objective::frobenius) {
        const DenseMatrix WtW = W.transpose() * W;
        H.array() *= (X.transpose() * W).array() / ((H * WtW).array() + epsilon_guard);
        const DenseMatrix HtH = H.transpose() * H;
        W.array() *= (X * H).array() / ((W * HtH).array() + epsilon_guard);
        return;
    }
    DenseMatrix ratio = X.array() / ((W * H.transpose()).array() + epsilon_guard);
    const Eigen::RowVectorXd w_sums = W.colwise().sum();
    H.array() *= (ratio.transpose() * W).array().rowwise() / (w_sums.array() + epsilon_guard);
    ratio = X.array() / ((W * H.transpose()).array() + epsilon_guard);
    const Eigen::RowVectorXd h_sums = H.colwise().sum();
    W.array() *= (ratio * H).array().rowwise() / (h_sums.array() + epsilon_guard);
}

// Runs mu_step from the given starting factors until the relative objective
// change drops below rel_tolerance or max_iterations updates have run. A step
// that raises the objective can only come from rounding at a numerical fixed
// point; it is discarded and the loop stops.
inline Factorization run_multiplicative(const DenseMatrix& X, Factorization start, const NmfConfig& config) {
    Factorization f = std::move(start);
    f.objective_trace.clear();
    f.objective_trace.push_back(objective_value(X, f.W, f.H, config.objective, config.epsilon_guard));
    f.iterations_run = 0;
    DenseMatrix W, H;
    while (f.iterations_run < config.max_iterations) {
        W = f.W;
        H = f.H;
        mu_step(X, W, H, config.objective, config.epsilon_guard);
        const double value = objective_value(X, W, H, config.objective, config.epsilon_guard);
        if (!std::isfinite(value)) throw NumericalError("NMF objective became non-finite");
        const double previous = f.objective_trace.back();
        if (value > previous) break;
        f.W.swap(W);
        f.H.swap(H);
        ++f.iterations_run;
        f.objective_trace.push_back(value);
        if (detail::converged(previous, value, config.rel_tolerance)) break;
    }
    return f;
}

inline void require_similarity(const DenseMatrix& A, std::string_view who) {
    if (A.rows() != A.cols())
        throw ConfigError(std::string(who) + " requires a square similarity matrix, got " +
                          std::to_string(A.rows()) + "x" + std::to_string(A.cols()));
    detail::require_nonnegative(A, who);
}

// Damped multiplicative SymNMF: W <- W o (1/2 + 1/2 (A W) / (W W^T W + guard)).
// The returned Factorization has H == W.
inline Factorization symnmf(const DenseMatrix& A, const NmfConfig& config) {
    require_similarity(A, "SymNMF");
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < i; ++j)
            if (std::abs(A(i, j) - A(j, i)) > 1e-9)
                throw ConfigError("SymNMF requires a symmetric matrix; A(" + std::to_string(i) + ", " +
                                  std::to_string(j) + ") != A(" + std::to_string(j) + ", " +
                                  std::to_string(i) + ")");
    const auto n = std::size_t(A.rows());
    config.validate(n, n);

    Rng rng(config.seed);
    const double mean = A.mean();
    const double scale = mean > 0 ? 2.0 * std::sqrt(mean / double(config.k)) : 1.0;
    DenseMatrix W = scale * detail::random_factor(A.rows(), Eigen::Index(config.k), config.epsilon_guard, rng);

    auto objective = [&](const DenseMatrix& w) { return (A - w * w.transpose()).norm(); };
    Factorization f;
    f.objective_trace.push_back(objective(W));
    while (f.iterations_run < config.max_iterations) {
        const DenseMatrix AW = A * W;
        const DenseMatrix WWtW = W * (W.transpose() * W);
        W.array() *= 0.5 + 0.5 * AW.array() / (WWtW.array() + config.epsilon_guard);
        ++f.iterations_run;
        const double value = objective(W);
        if (!std::isfinite(value)) throw NumericalError("SymNMF objective became non-finite");
        const double previous = f.objective_trace.back();
        f.objective_trace.push_back(value);
        if (detail::converged(previous, value, config.rel_tolerance)) break;
    }
    f.W = W;
    f.H = std::move(W);
    return f;
}

// nmf     - X (n x m), initialized per config.init
// nmf_s   - square similarity matrix, otherwise as nmf
// symnmf  - square symmetric similarity matrix, A ~ W W^T
// nndsvd  - NNDSVD start on any nonnegative input, then multiplicative updates
inline Factorization factorize(const DenseMatrix& input, const NmfConfig& config, NmfMethod method) {
    switch (method) {
    case NmfMethod::symnmf:
        return symnmf(input, config);
    case NmfMethod::nmf_s:
        require_similarity(input, "NMF-S");
        break;
    case NmfMethod::nmf:
    case NmfMethod::nndsvd:
        detail::require_nonnegative(input, "NMF input");
        break;
    }
    const auto n = std::size_t(input.rows());
    const auto m = std::size_t(input.cols());
    config.validate(n, m);
    const bool deterministic = method == NmfMethod::nndsvd || config.init == InitKind::nndsvd;
    Factorization start = deterministic ? nndsvd_init(input, config.k)
                                        : random_init(n, m, config.k, config.seed, config.epsilon_guard);
    return run_multiplicative(input, std::move(start), config);
}

// Row-wise argmax; ties go to the lowest column.
inline LabelVector hard_assign(const DenseMatrix& W) {
    if (W.rows() == 0 || W.cols() == 0) throw ConfigError("hard_assign: empty matrix");
    LabelVector labels(std::size_t(W.rows()));
    for (Eigen::Index i = 0; i < W.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index j = 1; j < W.cols(); ++j)
            if (W(i, j) > W(i, best)) best = j;
        labels[std::size_t(i)] = Label(best);
    }
    return labels;
}

} // namespace gtnmf

#endif
