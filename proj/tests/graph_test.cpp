#include "gtnmf/graph.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace gtnmf;
using gtnmf::testing::random_nonnegative;
using gtnmf::testing::uniform_index;

namespace {

DenseMatrix line_points() {
    DenseMatrix X{10, 1};
    for (Eigen::Index i = 0; i < 10; ++i) X(i, 0) = double(i);
    return X;
}

// Brute-force kNN: j is among i's q nearest iff fewer than q other points
// beat it (higher similarity, or equal similarity and lower index).
bool in_knn(const DenseMatrix& S, std::size_t i, std::size_t j, std::size_t q) {
    std::size_t better = 0;
    for (std::size_t l = 0; l < std::size_t(S.rows()); ++l) {
        if (l == i || l == j) continue;
        const double sl = S(Eigen::Index(i), Eigen::Index(l)), sj = S(Eigen::Index(i), Eigen::Index(j));
        if (sl > sj || (sl == sj && l < j)) ++better;
    }
    return better < q;
}

DenseMatrix random_similarity(Rng& rng, std::size_t n) {
    DenseMatrix S = DenseMatrix::Zero(Eigen::Index(n), Eigen::Index(n));
    for (Eigen::Index i = 0; i < S.rows(); ++i)
        for (Eigen::Index j = 0; j < i; ++j) {
            // Coarse grid so ties actually occur.
            const double v = std::floor(rng.uniform01() * 5.0) / 4.0;
            S(i, j) = v;
            S(j, i) = v;
        }
    return S;
}

} // namespace

TEST(Cosine, DirectValues) {
    DenseMatrix X(3, 2);
    X << 1, 0, 1, 1, 0, 2;
    const auto S = cosine_similarity(X);
    EXPECT_EQ(S(0, 0), 0.0);
    EXPECT_NEAR(S(0, 1), 1 / std::sqrt(2.0), 1e-15);
    EXPECT_EQ(S(0, 2), 0.0);
    EXPECT_NEAR(S(1, 2), 1 / std::sqrt(2.0), 1e-15);
    EXPECT_TRUE(S == S.transpose());
}

TEST(Cosine, ParallelRowsAreMaximallySimilarAndClamped) {
    DenseMatrix X(2, 3);
    X << 1, 2, 3, 2, 4, 6;
    const auto S = cosine_similarity(X);
    EXPECT_NEAR(S(0, 1), 1.0, 1e-15);
    EXPECT_LE(S(0, 1), 1.0);

    DenseMatrix Y(2, 2);
    Y << 1, 0, -1, 0;
    EXPECT_EQ(cosine_similarity(Y)(0, 1), 0.0);
}

TEST(Cosine, RejectsZeroRow) {
    DenseMatrix X = DenseMatrix::Ones(3, 2);
    X.row(1).setZero();
    EXPECT_THROW(cosine_similarity(X), ConfigError);
}

TEST(GaussianLocal, LinePointsMatchClosedForm) {
    // Positions scale to i/9; the 7th nearest neighbor of point i sits at
    // distance max(i, 9-i) - 2 for the middle points, 7/9 at the ends.
    const std::vector<double> sigma{7, 6, 5, 4, 4, 4, 4, 5, 6, 7};
    const auto D = pairwise_distances(min_max_normalize_columns(line_points()));
    const auto scales = local_scales(D, 7, 1e-12);
    for (Eigen::Index i = 0; i < 10; ++i) EXPECT_NEAR(scales(i), sigma[std::size_t(i)] / 9, 1e-15) << i;

    GraphConfig config;
    const auto S = gaussian_local_similarity(line_points(), config);
    EXPECT_NEAR(S(0, 1), 0.8071177470053893, 1e-12);
    EXPECT_NEAR(S(0, 9), 0.19146289967870544, 1e-12);
    EXPECT_NEAR(S(4, 5), 0.5697828247309228, 1e-12);
    EXPECT_NEAR(S(2, 7), 0.16529888822158656, 1e-12);
    EXPECT_NEAR(S(3, 8), 0.15335496684492844, 1e-12);
    EXPECT_EQ(S(3, 3), 0.0);

    config.distance_exponent = 2;
    const auto S2 = gaussian_local_similarity(line_points(), config);
    EXPECT_NEAR(S2(0, 9), 0.19146289967870544, 1e-12);
    EXPECT_NEAR(S2(2, 7), 0.36787944117144233, 1e-12);
}

TEST(GaussianLocal, MatchesDirectDoubleLoop) {
    Rng rng(41);
    DenseMatrix X = random_nonnegative(rng, 15, 3) * 10.0;
    GraphConfig config;
    const auto S = gaussian_local_similarity(X, config);

    DenseMatrix Z = X;
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
        double lo = X(0, c), hi = X(0, c);
        for (Eigen::Index r = 0; r < X.rows(); ++r) lo = std::min(lo, X(r, c)), hi = std::max(hi, X(r, c));
        for (Eigen::Index r = 0; r < X.rows(); ++r) Z(r, c) = (X(r, c) - lo) / (hi - lo);
    }
    auto dist = [&](Eigen::Index a, Eigen::Index b) {
        double s = 0;
        for (Eigen::Index c = 0; c < Z.cols(); ++c) s += (Z(a, c) - Z(b, c)) * (Z(a, c) - Z(b, c));
        return std::sqrt(s);
    };
    std::vector<double> sigma;
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
        std::vector<double> d;
        for (Eigen::Index j = 0; j < Z.rows(); ++j)
            if (j != i) d.push_back(dist(i, j));
        std::sort(d.begin(), d.end());
        sigma.push_back(d[6]);
    }
    for (Eigen::Index i = 0; i < Z.rows(); ++i)
        for (Eigen::Index j = 0; j < Z.rows(); ++j) {
            const double expected =
                i == j ? 0.0 : std::exp(-dist(i, j) / (sigma[std::size_t(i)] * sigma[std::size_t(j)]));
            EXPECT_NEAR(S(i, j), expected, 1e-12);
        }
    EXPECT_TRUE(S == S.transpose());
}

TEST(GaussianLocal, ValuesInUnitIntervalAndInvariantToAffineRescaling) {
    Rng rng(43);
    const DenseMatrix X = random_nonnegative(rng, 20, 4);
    GraphConfig config;
    const auto S = gaussian_local_similarity(X, config);
    EXPECT_GE(S.minCoeff(), 0.0);
    EXPECT_LE(S.maxCoeff(), 1.0);
    const auto T = gaussian_local_similarity((X.array() * 3.0 + 7.0).matrix(), config);
    EXPECT_LT((S - T).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GaussianLocal, RejectsTooFewPointsAndBadExponent) {
    GraphConfig config;
    EXPECT_THROW(gaussian_local_similarity(DenseMatrix::Ones(7, 2), config), ConfigError);
    config.distance_exponent = 3;
    EXPECT_THROW(gaussian_local_similarity(line_points(), config), ConfigError);
}

TEST(NeighborCounts, GlobalIsBitLength) {
    EXPECT_EQ(global_q(100), 7u);
    EXPECT_EQ(global_q(1), 1u);
    EXPECT_EQ(global_q(2), 2u);
    EXPECT_EQ(global_q(1024), 11u);
    EXPECT_EQ(global_q(1023), 10u);
    EXPECT_THROW(global_q(0), ConfigError);
    for (std::size_t n = 1; n < 5000; ++n) {
        const auto q = global_q(n);
        EXPECT_LE(std::size_t(1) << (q - 1), n);
        EXPECT_GT(std::size_t(1) << q, n);
    }
}

TEST(NeighborCounts, AdaptiveUsesOwnClusterSize) {
    const LabelVector labels{0, 0, 0, 0, 1, 2, 2};
    EXPECT_EQ(adaptive_q(labels), (std::vector<std::size_t>{3, 3, 3, 3, 1, 2, 2}));
    EXPECT_THROW(adaptive_q(LabelVector{}), ConfigError);
}

TEST(NeighborCounts, AdaptiveNeverExceedsGlobal) {
    Rng rng(47);
    for (int trial = 0; trial < 100; ++trial) {
        const auto n = uniform_index(rng, 1, 300);
        const auto labels = gtnmf::testing::random_labels(rng, n, uniform_index(rng, 1, 10));
        for (auto q : adaptive_q(labels)) {
            EXPECT_GE(q, 1u);
            EXPECT_LE(q, global_q(n));
        }
    }
}

TEST(NeighborCounts, CappedForTinyInputs) {
    EXPECT_EQ(neighbor_counts(3, NeighborRule::global, {}), (std::vector<std::size_t>{2, 2, 2}));
    EXPECT_THROW(neighbor_counts(3, NeighborRule::adaptive, {}), ConfigError);
    EXPECT_THROW(neighbor_counts(3, NeighborRule::adaptive, LabelVector{0, 1}), ConfigError);
}

TEST(Sparsify, ThreePointExample) {
    DenseMatrix S(3, 3);
    S << 0, .9, .5, .9, 0, .8, .5, .8, 0;
    const std::vector<std::size_t> q{1, 1, 1};
    const auto sparse = sparsify_knn(S, q);
    const DenseMatrix kept = sparse.to_dense();
    DenseMatrix expected(3, 3);
    expected << 0, .9, 0, .9, 0, .8, 0, .8, 0;
    EXPECT_TRUE(kept == expected);
}

TEST(Sparsify, KeepsEverythingWhenQIsMaximal) {
    Rng rng(53);
    const auto S = random_similarity(rng, 6);
    const std::vector<std::size_t> q(6, 5);
    EXPECT_TRUE(sparsify_knn(S, q).to_dense() == S);
}

TEST(Sparsify, RejectsOutOfRangeCounts) {
    const DenseMatrix S = DenseMatrix::Ones(3, 3);
    EXPECT_THROW(sparsify_knn(S, std::vector<std::size_t>{1, 3, 1}), ConfigError);
    EXPECT_THROW(sparsify_knn(S, std::vector<std::size_t>{1, 0, 1}), ConfigError);
    EXPECT_THROW(sparsify_knn(S, std::vector<std::size_t>{1, 1}), ConfigError);
}

TEST(Sparsify, MatchesBruteForceOrRule) {
    Rng rng(59);
    for (int trial = 0; trial < 50; ++trial) {
        const auto n = uniform_index(rng, 2, 14);
        const auto S = random_similarity(rng, n);
        std::vector<std::size_t> q(n);
        for (auto& qi : q) qi = uniform_index(rng, 1, n - 1);
        const DenseMatrix kept = sparsify_knn(S, q).to_dense();
        EXPECT_TRUE(kept == kept.transpose());
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const auto a = Eigen::Index(i), b = Eigen::Index(j);
                const bool keep = i != j && (in_knn(S, i, j, q[i]) || in_knn(S, j, i, q[j]));
                EXPECT_EQ(kept(a, b), keep ? S(a, b) : 0.0) << i << "," << j;
            }
    }
}

TEST(Ncut, DirectExamples) {
    // Two nodes with weight w: d = w each, A = w / w = 1.
    const auto two = normalize_ncut(SparseMatrix::from_entries(2, 2, {{0, 1, 3.0}, {1, 0, 3.0}}));
    EXPECT_DOUBLE_EQ(two.weight(0, 1), 1.0);

    // Star with center 0 and unit spokes to 1..4: d_0 = 4, d_leaf = 1.
    std::vector<SparseEntry> star;
    for (std::size_t l = 1; l <= 4; ++l) star.push_back({0, l, 1.0}), star.push_back({l, 0, 1.0});
    const auto a = normalize_ncut(SparseMatrix::from_entries(5, 5, star));
    for (std::size_t l = 1; l <= 4; ++l) EXPECT_DOUBLE_EQ(a.weight(0, l), 0.5);
    const auto m = normalize_ncut(SparseMatrix::from_entries(5, 5, star), NcutMode::multiply);
    for (std::size_t l = 1; l <= 4; ++l) EXPECT_DOUBLE_EQ(m.weight(0, l), 2.0);
}

TEST(Ncut, IsolatedNodeStaysIsolated) {
    const auto g = normalize_ncut(SparseMatrix::from_entries(3, 3, {{0, 1, 2.0}, {1, 0, 2.0}}));
    EXPECT_EQ(g.degree()(2), 0.0);
    EXPECT_EQ(g.edge_count(), 2u);
}

TEST(Ncut, RegularGraphRowsSumToOne) {
    // 6-cycle with unit weights.
    std::vector<SparseEntry> cycle;
    for (std::size_t i = 0; i < 6; ++i) {
        const auto j = (i + 1) % 6;
        cycle.push_back({i, j, 1.0});
        cycle.push_back({j, i, 1.0});
    }
    const auto g = normalize_ncut(SparseMatrix::from_entries(6, 6, cycle));
    for (Eigen::Index i = 0; i < 6; ++i) EXPECT_DOUBLE_EQ(g.degree()(i), 1.0);
}

TEST(Ncut, OutputIsExactlySymmetricNonnegative) {
    Rng rng(61);
    for (int trial = 0; trial < 30; ++trial) {
        const auto S = random_similarity(rng, uniform_index(rng, 2, 12));
        const std::vector<std::size_t> q(std::size_t(S.rows()), std::size_t(S.rows()) - 1);
        const auto g = normalize_ncut(sparsify_knn(S, q));
        const auto sparse = g.to_sparse();
        EXPECT_TRUE(sparse.is_symmetric());
        for (const auto& e : sparse.entries()) {
            EXPECT_GT(e.value, 0.0);
            EXPECT_NE(e.row, e.col);
        }
    }
}

TEST(Build, ComposesKernelSparsifyAndNormalize) {
    Rng rng(67);
    const DenseMatrix X = random_nonnegative(rng, 20, 3);
    GraphConfig config;
    config.neighbor_rule = NeighborRule::global;
    const auto g = build_payoff_graph(X, InputKind::features, config);
    const auto S = gaussian_local_similarity(X, config);
    const auto expected = normalize_ncut(sparsify_knn(S, std::vector<std::size_t>(20, global_q(20))));
    EXPECT_EQ(g.to_sparse(), expected.to_sparse());

    config.normalize = false;
    EXPECT_EQ(build_payoff_graph(X, InputKind::features, config).to_sparse(),
              sparsify_knn(S, std::vector<std::size_t>(20, global_q(20))));
}

TEST(Build, AdaptiveWithOneClusterEqualsGlobal) {
    Rng rng(71);
    const DenseMatrix X = random_nonnegative(rng, 25, 2);
    GraphConfig config;
    config.neighbor_rule = NeighborRule::global;
    const auto global = build_payoff_graph(X, InputKind::features, config);
    config.neighbor_rule = NeighborRule::adaptive;
    const LabelVector one(25, 0);
    EXPECT_EQ(build_payoff_graph(X, InputKind::features, config, one).to_sparse(), global.to_sparse());
    EXPECT_THROW(build_payoff_graph(X, InputKind::features, config), ConfigError);
}

TEST(Build, TwoSeparatedBlobsHaveNoCrossEdges) {
    DenseMatrix X{12, 2};
    for (Eigen::Index i = 0; i < 6; ++i) {
        X(i, 0) = 0.1 * double(i);
        X(i, 1) = 0.05 * double(i % 3);
        X(i + 6, 0) = 50.0 + 0.1 * double(i);
        X(i + 6, 1) = 50.0 + 0.05 * double(i % 3);
    }
    GraphConfig config;
    const LabelVector labels{0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1};
    const auto g = build_payoff_graph(X, InputKind::features, config, labels);
    const auto sparse = g.to_sparse();
    for (const auto& e : sparse.entries()) EXPECT_EQ(labels[e.row], labels[e.col]) << e.row << "-" << e.col;
    // q = bit_length(6) = 3; every node keeps at least its 3 nearest.
    for (Eigen::Index i = 0; i < 12; ++i) EXPECT_GT(g.degree()(i), 0.0);
}

TEST(Build, SimilarityInputIsValidated) {
    GraphConfig config;
    config.neighbor_rule = NeighborRule::global;
    DenseMatrix S(3, 3);
    S << 5, 1, 2, 1, 5, 3, 2, 3, 5;
    const auto cleared = similarity_matrix(S, InputKind::similarity, config);
    EXPECT_EQ(cleared.diagonal().norm(), 0.0);
    EXPECT_NO_THROW(build_payoff_graph(S, InputKind::similarity, config));
    S(0, 1) = 4;
    EXPECT_THROW(similarity_matrix(S, InputKind::similarity, config), ConfigError);
    S(1, 0) = -4;
    S(0, 1) = -4;
    EXPECT_THROW(similarity_matrix(S, InputKind::similarity, config), ConfigError);
    EXPECT_THROW(similarity_matrix(DenseMatrix::Ones(2, 3), InputKind::similarity, config), ConfigError);
}

TEST(PayoffGraph, RejectsInvalidWeights) {
    EXPECT_THROW(PayoffGraph(SparseMatrix::from_entries(2, 3, {})), ConfigError);
    EXPECT_THROW(PayoffGraph(SparseMatrix::from_entries(2, 2, {{0, 0, 1.0}})), ConfigError);
    EXPECT_THROW(PayoffGraph(SparseMatrix::from_entries(2, 2, {{0, 1, -1.0}, {1, 0, -1.0}})), ConfigError);
    EXPECT_THROW(PayoffGraph(SparseMatrix::from_entries(2, 2, {{0, 1, 1.0}})), ConfigError);
    EXPECT_THROW(PayoffGraph(SparseMatrix::from_entries(2, 2, {{0, 1, 1.0}, {1, 0, 1.0 + 1e-15}})), ConfigError);
}

TEST(PayoffGraph, PrunesExplicitZeros) {
    const PayoffGraph g(SparseMatrix::from_entries(3, 3, {{0, 1, 0.0}, {1, 0, 0.0}, {1, 2, 2.0}, {2, 1, 2.0}}));
    EXPECT_EQ(g.edge_count(), 2u);
    EXPECT_EQ(g.weight(1, 2), 2.0);
    EXPECT_EQ(g.degree()(1), 2.0);
    EXPECT_EQ(PayoffGraph::empty(4).edge_count(), 0u);
}
