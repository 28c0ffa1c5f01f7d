#ifndef GTNMF_DYNAMICS_HPP
#define GTNMF_DYNAMICS_HPP

// Game-theoretic refinement of an NMF clustering. Every object is a player
// whose pure strategies are the k clusters; its mixed strategy starts at its
// normalized row of W. Players repeatedly play against their neighbors in the
// payoff graph, and the discrete replicator dynamics
//
//     s_i[h] <- s_i[h] * u_i(e_h) / u_i(s_i),    u_i(e_h) = sum_j a_ij s_j[h]
//
// move each player toward the clusters its similar neighbors prefer. The
// update is synchronous: step t+1 reads only the state at step t.
//
// With A symmetric and nonnegative the update is a growth transformation for
// F(S) = sum_ij a_ij <s_i, s_j>, so consistency_score never decreases.

#include "gtnmf/error.hpp"
#include "gtnmf/graph.hpp"
#include "gtnmf/matrix_io.hpp"
#include "gtnmf/nmf.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace gtnmf {

// n x k row-stochastic matrix, one mixed strategy per player.
class StrategySpace {
public:
    static constexpr double row_sum_tolerance = 1e-9;

    StrategySpace() = default;

    explicit StrategySpace(DenseMatrix strategies) : strategies_(std::move(strategies)) {
        if (strategies_.rows() == 0 || strategies_.cols() == 0)
            throw ConfigError("strategy space must have at least one player and one strategy");
        for (Eigen::Index i = 0; i < strategies_.rows(); ++i) {
            if (!(strategies_.row(i).minCoeff() >= 0.0))
                throw ConfigError("strategy of player " + std::to_string(i) + " has a negative entry");
            if (std::abs(strategies_.row(i).sum() - 1.0) > row_sum_tolerance)
                throw ConfigError("strategy of player " + std::to_string(i) + " does not sum to 1");
        }
    }

    std::size_t players() const { return std::size_t(strategies_.rows()); }
    std::size_t strategies() const { return std::size_t(strategies_.cols()); }
    const DenseMatrix& matrix() const { return strategies_; }
    double operator()(std::size_t i, std::size_t h) const {
        return strategies_(Eigen::Index(i), Eigen::Index(h));
    }

    friend bool operator==(const StrategySpace& a, const StrategySpace& b) {
        return a.strategies_.rows() == b.strategies_.rows() && a.strategies_.cols() == b.strategies_.cols() &&
               a.strategies_ == b.strategies_;
    }

private:
    DenseMatrix strategies_;
};

struct DynamicsConfig {
    std::size_t max_iterations = 100;
    double delta_tolerance = 1e-4;
    double interior_epsilon = 1e-6;

    void validate(std::size_t k) const {
        if (max_iterations < 1) throw ConfigError("dynamics max_iterations must be >= 1");
        if (!(delta_tolerance > 0)) throw ConfigError("dynamics delta_tolerance must be > 0");
        if (!(interior_epsilon > 0) || !(interior_epsilon < 1.0 / double(k)))
            throw ConfigError("interior_epsilon must lie in (0, 1/k)");
    }
};

struct RefinementResult {
    StrategySpace final_strategies;
    LabelVector labels;
    std::size_t iterations = 0;
    bool converged = false;
    // consistency_score of the initial state, then one entry per step.
    std::vector<double> consistency_trace;
};

// Rows of W normalized onto the simplex (an all-zero row becomes uniform),
// then every entry below interior_epsilon is raised to it and the row
// renormalized. Zeros are absorbing under the replicator update, so the start
// must be interior.
inline StrategySpace init_strategies(const DenseMatrix& W, double interior_epsilon = 1e-6) {
    if (W.rows() == 0 || W.cols() == 0) throw ConfigError("init_strategies: empty W");
    const auto k = double(W.cols());
    if (!(interior_epsilon >= 0) || !(interior_epsilon < 1.0 / k))
        throw ConfigError("interior_epsilon must lie in [0, 1/k)");
    DenseMatrix S(W.rows(), W.cols());
    for (Eigen::Index i = 0; i < W.rows(); ++i) {
        if (!(W.row(i).minCoeff() >= 0.0))
            throw ConfigError("init_strategies: W row " + std::to_string(i) + " has a negative entry");
        const double total = W.row(i).sum();
        if (total > 0.0)
            S.row(i) = W.row(i) / total;
        else
            S.row(i).setConstant(1.0 / k);
        if (S.row(i).minCoeff() < interior_epsilon) {
            S.row(i) = S.row(i).cwiseMax(interior_epsilon);
            S.row(i) /= S.row(i).sum();
        }
    }
    return StrategySpace(std::move(S));
}

namespace detail {

inline void require_compatible(const StrategySpace& S, const PayoffGraph& A) {
    if (S.players() != A.size())
        throw ConfigError("strategy space has " + std::to_string(S.players()) + " players, payoff graph has " +
                          std::to_string(A.size()) + " nodes");
}

inline void require_player(const StrategySpace& S, std::size_t i) {
    if (i >= S.players())
        throw ConfigError("player " + std::to_string(i) + " out of range (n=" + std::to_string(S.players()) + ")");
}

} // namespace detail

// u_i(e_h) = sum over neighbors j of a_ij * s_j[h].
inline double payoff_pure(std::size_t i, std::size_t h, const StrategySpace& S, const PayoffGraph& A) {
    detail::require_compatible(S, A);
    detail::require_player(S, i);
    if (h >= S.strategies())
        throw ConfigError("strategy " + std::to_string(h) + " out of range (k=" + std::to_string(S.strategies()) +
                          ")");
    double total = 0.0;
    for (PayoffGraph::Weights::InnerIterator it(A.weights(), Eigen::Index(i)); it; ++it)
        total += it.value() * S(std::size_t(it.col()), h);
    return total;
}

// u_i(s_i) = sum_h s_i[h] * u_i(e_h).
inline double payoff_mixed(std::size_t i, const StrategySpace& S, const PayoffGraph& A) {
    detail::require_compatible(S, A);
    detail::require_player(S, i);
    double total = 0.0;
    for (std::size_t h = 0; h < S.strategies(); ++h) total += S(i, h) * payoff_pure(i, h, S, A);
    return total;
}

// One synchronous replicator update. Players whose mixed payoff is zero have
// nothing to learn from and keep their strategy.
inline StrategySpace replicator_step(const StrategySpace& S, const PayoffGraph& A) {
    detail::require_compatible(S, A);
    const DenseMatrix pure = A.weights() * S.matrix();
    DenseMatrix next = S.matrix();
    for (Eigen::Index i = 0; i < next.rows(); ++i) {
        const Eigen::RowVectorXd grown = S.matrix().row(i).cwiseProduct(pure.row(i));
        const double mixed = grown.sum();
        if (mixed > 0.0) next.row(i) = grown / mixed;
    }
    return StrategySpace(std::move(next));
}

// F(S) = sum_ij a_ij <s_i, s_j>, the total mixed payoff over all players.
inline double consistency_score(const StrategySpace& S, const PayoffGraph& A) {
    detail::require_compatible(S, A);
    const DenseMatrix pure = A.weights() * S.matrix();
    return S.matrix().cwiseProduct(pure).sum();
}

inline RefinementResult refine(const DenseMatrix& W, const PayoffGraph& A, const DynamicsConfig& config = {}) {
    if (std::size_t(W.rows()) != A.size())
        throw ConfigError("W has " + std::to_string(W.rows()) + " rows, payoff graph has " +
                          std::to_string(A.size()) + " nodes");
    if (W.cols() == 0) throw ConfigError("refine: W has no columns");
    config.validate(std::size_t(W.cols()));

    RefinementResult result;
    StrategySpace S = init_strategies(W, config.interior_epsilon);
    result.consistency_trace.push_back(consistency_score(S, A));
    while (result.iterations < config.max_iterations) {
        StrategySpace next = replicator_step(S, A);
        const double delta = (next.matrix() - S.matrix()).norm();
        S = std::move(next);
        ++result.iterations;
        result.consistency_trace.push_back(consistency_score(S, A));
        if (delta < config.delta_tolerance) {
            result.converged = true;
            break;
        }
    }
    result.labels = hard_assign(S.matrix());
    result.final_strategies = std::move(S);
    return result;
}

} // namespace gtnmf

#endif
