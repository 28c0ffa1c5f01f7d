#include "gtnmf/pipeline.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

using namespace gtnmf;
using gtnmf::testing::TempDir;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ExperimentConfig small_config(NmfMethod method = NmfMethod::nmf) {
    ExperimentConfig c;
    c.method = method;
    c.k = 3;
    c.runs = 3;
    c.base_seed = 10;
    return c;
}

const SyntheticData& blobs() {
    static const SyntheticData data = generate_synthetic_blobs(15, 3, 4, 10.0, 1.0, 3);
    return data;
}

} // namespace

TEST(Blobs, NoiselessPointsSitOnTheirCenters) {
    const auto d = generate_synthetic_blobs(4, 3, 2, 5.0, 0.0, 1);
    ASSERT_EQ(d.X.rows(), 12);
    EXPECT_EQ(d.labels, (LabelVector{0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2}));
    for (Eigen::Index i = 0; i < 12; ++i)
        EXPECT_EQ(d.X.row(i), d.centers.row(Eigen::Index(d.labels[std::size_t(i)])));
    for (Eigen::Index a = 0; a < 3; ++a)
        for (Eigen::Index b = 0; b < a; ++b) EXPECT_GE((d.centers.row(a) - d.centers.row(b)).norm(), 5.0);
}

TEST(Blobs, NonnegativeDeterministicAndSeparated) {
    const auto a = generate_synthetic_blobs(20, 4, 3, 10.0, 1.0, 8);
    const auto b = generate_synthetic_blobs(20, 4, 3, 10.0, 1.0, 8);
    EXPECT_TRUE(a.X == b.X);
    EXPECT_GE(a.X.minCoeff(), 0.0);
    // Noise of 1 per axis cannot carry a point past the midpoint between
    // centers 10 apart in 3 dimensions.
    for (Eigen::Index i = 0; i < a.X.rows(); ++i) {
        Eigen::Index nearest = 0;
        (a.centers.rowwise() - a.X.row(i)).rowwise().squaredNorm().minCoeff(&nearest);
        EXPECT_EQ(std::size_t(nearest), a.labels[std::size_t(i)]);
    }
    EXPECT_THROW(generate_synthetic_blobs(0, 2, 2, 1, 0, 0), ConfigError);
    EXPECT_THROW(generate_synthetic_blobs(2, 2, 2, 0, 0, 0), ConfigError);
}

TEST(Summary, PopulationStatistics) {
    const auto s = summarize({0.5, 1.0}, {0.0, 0.0});
    EXPECT_DOUBLE_EQ(s.ac_mean, 0.75);
    EXPECT_DOUBLE_EQ(s.ac_std, 0.25);
    EXPECT_EQ(s.nmi_std, 0.0);
}

TEST(Experiment, ProducesOneRecordPerSeed) {
    const auto report = run_experiment(blobs().X, blobs().labels, small_config());
    ASSERT_EQ(report.runs.size(), 3u);
    for (std::size_t r = 0; r < 3; ++r) {
        EXPECT_EQ(report.runs[r].seed, 10 + r);
        ASSERT_TRUE(report.runs[r].refined.has_value());
        EXPECT_GE(report.runs[r].refined->iterations, 1u);
    }
    ASSERT_TRUE(report.refined.has_value());
    EXPECT_GT(report.baseline.ac_mean, 0.8);
}

TEST(Experiment, AggregatesMatchRecomputation) {
    const auto report = run_experiment(blobs().X, blobs().labels, small_config());
    std::vector<double> ac, nmi, rac, rnmi;
    for (const auto& r : report.runs) {
        ac.push_back(r.baseline.ac);
        nmi.push_back(r.baseline.nmi);
        rac.push_back(r.refined->ac);
        rnmi.push_back(r.refined->nmi);
    }
    const auto base = summarize(ac, nmi), ref = summarize(rac, rnmi);
    EXPECT_EQ(report.baseline.ac_mean, base.ac_mean);
    EXPECT_EQ(report.baseline.nmi_std, base.nmi_std);
    EXPECT_EQ(report.refined->ac_mean, ref.ac_mean);
    EXPECT_EQ(report.refined->nmi_mean, ref.nmi_mean);
}

TEST(Experiment, IsDeterministic) {
    const auto a = run_experiment(blobs().X, blobs().labels, small_config());
    const auto b = run_experiment(blobs().X, blobs().labels, small_config());
    EXPECT_EQ(report_to_json(a).dump(), report_to_json(b).dump());
}

TEST(Experiment, WithoutRefinementHasNoRefinedFields) {
    auto config = small_config();
    config.refine = false;
    const auto report = run_experiment(blobs().X, blobs().labels, config);
    EXPECT_FALSE(report.refined.has_value());
    for (const auto& r : report.runs) EXPECT_FALSE(r.refined.has_value());
    const auto j = report_to_json(report);
    EXPECT_FALSE(j["aggregate"].contains("refined"));
    EXPECT_FALSE(j["runs"][0].contains("refined"));
}

TEST(Experiment, NndsvdRunsOnce) {
    auto config = small_config(NmfMethod::nndsvd);
    config.runs = 5;
    const auto report = run_experiment(blobs().X, blobs().labels, config);
    EXPECT_EQ(report.runs.size(), 1u);
    EXPECT_EQ(report.baseline.ac_std, 0.0);
    EXPECT_EQ(report.refined->ac_std, 0.0);
}

TEST(Experiment, SingleRunHasZeroSpread) {
    auto config = small_config();
    config.runs = 1;
    const auto report = run_experiment(blobs().X, blobs().labels, config);
    EXPECT_EQ(report.baseline.ac_std, 0.0);
    EXPECT_EQ(report.baseline.nmi_std, 0.0);
}

TEST(Experiment, AdaptiveGraphIsBuiltFromEachRunsBaseline) {
    const auto config = small_config();
    const auto report = run_experiment(blobs().X, blobs().labels, config);
    for (const auto& r : report.runs) {
        NmfConfig nmf = config.nmf;
        nmf.k = config.k;
        nmf.seed = r.seed;
        const auto f = factorize(blobs().X, nmf, NmfMethod::nmf);
        ASSERT_EQ(hard_assign(f.W), r.baseline_labels);
        const auto graph = build_payoff_graph(blobs().X, InputKind::features, config.graph, r.baseline_labels);
        const auto expected = refine(f.W, graph, config.dynamics);
        EXPECT_EQ(expected.labels, r.refined_labels);
        EXPECT_EQ(expected.iterations, r.refined->iterations);
    }
}

TEST(Experiment, SimilarityMethodsAcceptSimilarityInput) {
    GraphConfig kernel;
    const DenseMatrix S = similarity_matrix(blobs().X, InputKind::features, kernel);
    for (auto method : {NmfMethod::nmf_s, NmfMethod::symnmf, NmfMethod::nndsvd}) {
        auto config = small_config(method);
        config.input_kind = InputKind::similarity;
        config.runs = 2;
        const auto from_s = run_experiment(S, blobs().labels, config);
        config.input_kind = InputKind::features;
        const auto from_x = run_experiment(blobs().X, blobs().labels, config);
        ASSERT_EQ(from_s.runs.size(), from_x.runs.size());
        for (std::size_t r = 0; r < from_s.runs.size(); ++r)
            EXPECT_EQ(from_s.runs[r].baseline_labels, from_x.runs[r].baseline_labels) << to_string(method);
    }
}

TEST(Experiment, RejectsInconsistentConfig) {
    auto config = small_config();
    config.input_kind = InputKind::similarity;
    EXPECT_THROW(run_experiment(blobs().X, blobs().labels, config), ConfigError);
    config = small_config();
    config.runs = 0;
    EXPECT_THROW(run_experiment(blobs().X, blobs().labels, config), ConfigError);
    config = small_config();
    EXPECT_THROW(run_experiment(blobs().X, LabelVector{0, 1}, config), ConfigError);
    config.k = 100;
    EXPECT_THROW(run_experiment(blobs().X, blobs().labels, config), ConfigError);
}

TEST(Report, EmitAndLoadRoundTrip) {
    TempDir dir;
    const auto report = run_experiment(blobs().X, blobs().labels, small_config());
    emit_report(report, dir / "report.json");
    const auto back = load_report(dir / "report.json");
    EXPECT_EQ(report_to_json(back), report_to_json(report));

    const auto j = nlohmann::json::parse(slurp(dir / "report.json"));
    for (const char* key : {"config", "runs", "aggregate"}) EXPECT_TRUE(j.contains(key)) << key;
    for (const char* key : {"ac_mean", "ac_std", "nmi_mean", "nmi_std"}) {
        EXPECT_TRUE(j["aggregate"]["baseline"].contains(key));
        EXPECT_TRUE(j["aggregate"]["refined"].contains(key));
    }
    for (const char* key : {"ac", "nmi", "iterations", "converged"}) EXPECT_TRUE(j["runs"][0]["refined"].contains(key));
}

TEST(Report, MissingDirectoryIsAnIoErrorNamingThePath) {
    const auto report = run_experiment(blobs().X, blobs().labels, small_config());
    try {
        emit_report(report, "/nonexistent/dir/report.json");
        FAIL() << "expected IoError";
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find("/nonexistent/dir"), std::string::npos);
    }
}

TEST(Report, MalformedFilesAreIoErrors) {
    TempDir dir;
    EXPECT_THROW(load_report(dir.file("bad.json", "{not json")), IoError);
    EXPECT_THROW(load_report(dir.file("partial.json", R"({"config": {}})")), IoError);
}

TEST(Report, ConfusionMatricesWrittenBesideReport) {
    TempDir dir;
    auto config = small_config();
    config.confusion = true;
    config.runs = 2;
    const auto report = run_experiment(blobs().X, blobs().labels, config);
    emit_report(report, dir / "out.json");
    for (std::size_t r = 0; r < 2; ++r)
        for (const char* which : {"baseline", "refined"}) {
            const auto path = confusion_path(dir / "out.json", r, which);
            ASSERT_TRUE(std::filesystem::exists(path)) << path;
            auto text = slurp(path);
            std::replace(text.begin(), text.end(), ',', '\n');
            std::stringstream cells(text);
            std::size_t total = 0, cell = 0;
            while (cells >> cell) total += cell;
            EXPECT_EQ(total, blobs().labels.size());
        }
    EXPECT_EQ(confusion_path("/a/b/out.json", 3, "refined"), "/a/b/out.run3.refined.confusion.csv");
}

TEST(Experiment, LoadsFromFiles) {
    TempDir dir;
    write_dense_csv(dir / "x.csv", blobs().X);
    write_labels(dir / "y.txt", blobs().labels);
    auto config = small_config();
    config.data_path = dir / "x.csv";
    config.labels_path = dir / "y.txt";
    const auto from_files = run_experiment(config);
    const auto in_memory = run_experiment(blobs().X, blobs().labels, small_config());
    EXPECT_EQ(report_to_json(from_files)["runs"], report_to_json(in_memory)["runs"]);

    config.data_path = dir / "missing.csv";
    EXPECT_THROW(run_experiment(config), IoError);
}
