#ifndef GTNMF_PIPELINE_HPP
#define GTNMF_PIPELINE_HPP

// End-to-end experiment: factorize, hard-assign (baseline), build the payoff
// graph, refine with the replicator dynamics, score both labelings, repeat
// over seeded runs and aggregate. Reports are JSON.

#include "gtnmf/dynamics.hpp"
#include "gtnmf/error.hpp"
#include "gtnmf/eval.hpp"
#include "gtnmf/graph.hpp"
#include "gtnmf/matrix_io.hpp"
#include "gtnmf/nmf.hpp"
#include "gtnmf/random.hpp"

#include "json.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace gtnmf {

// Which matrix NMF-S, SymNMF and NNDSVD factorize: the sparsified and
// normalized graph (global q), or the dense kernel matrix.
enum class SimilaritySource { processed, kernel };

inline std::string to_string(SimilaritySource s) {
    return s == SimilaritySource::processed ? "processed" : "kernel";
}

struct ExperimentConfig {
    std::filesystem::path data_path;
    std::filesystem::path labels_path;
    InputKind input_kind = InputKind::features;
    GraphConfig graph;
    NmfMethod method = NmfMethod::nmf;
    std::size_t k = 2;
    std::size_t runs = 20;
    std::uint64_t base_seed = 0;
    NmfConfig nmf;
    DynamicsConfig dynamics;
    SimilaritySource similarity_source = SimilaritySource::processed;
    bool refine = true;
    std::filesystem::path out_path;
    bool confusion = false;

    void validate() const {
        if (runs < 1) throw ConfigError("runs must be >= 1");
        if (k < 1) throw ConfigError("k must be >= 1");
        if (method == NmfMethod::nmf && input_kind != InputKind::features)
            throw ConfigError("method nmf factorizes the feature matrix; it needs --input-kind features");
    }
};

struct ScoreRecord {
    double ac = 0.0;
    double nmi = 0.0;
    friend bool operator==(const ScoreRecord&, const ScoreRecord&) = default;
};

struct RefinedRecord {
    double ac = 0.0;
    double nmi = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    friend bool operator==(const RefinedRecord&, const RefinedRecord&) = default;
};

struct RunRecord {
    std::uint64_t seed = 0;
    ScoreRecord baseline;
    std::optional<RefinedRecord> refined;
    // Not serialized.
    LabelVector baseline_labels;
    LabelVector refined_labels;
    std::optional<ConfusionMatrix> baseline_confusion;
    std::optional<ConfusionMatrix> refined_confusion;
};

struct MetricSummary {
    double ac_mean = 0.0;
    double ac_std = 0.0;
    double nmi_mean = 0.0;
    double nmi_std = 0.0;
    friend bool operator==(const MetricSummary&, const MetricSummary&) = default;
};

struct RunReport {
    nlohmann::json config;
    std::vector<RunRecord> runs;
    MetricSummary baseline;
    std::optional<MetricSummary> refined;
};

struct SyntheticData {
    DenseMatrix X;
    LabelVector labels;
    DenseMatrix centers; // k x dim, in the same (shifted) coordinates as X
};

// k centers at pairwise distance >= separation, n_per_cluster points each,
// uniform noise in [-noise, noise]^dim, then every coordinate with a negative
// minimum is shifted up to 0. Points are grouped by cluster.
inline SyntheticData generate_synthetic_blobs(std::size_t n_per_cluster, std::size_t k, std::size_t dim,
                                              double separation, double noise, std::uint64_t seed) {
    if (n_per_cluster < 1 || k < 1 || dim < 1) throw ConfigError("blob counts must all be >= 1");
    if (!(separation > 0)) throw ConfigError("blob separation must be > 0");
    if (!(noise >= 0)) throw ConfigError("blob noise must be >= 0");

    Rng rng(seed);
    const double box = separation * double(k + 1);
    DenseMatrix centers{Eigen::Index(k), Eigen::Index(dim)};
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
        for (Eigen::Index c = 0; c < centers.rows(); ++c)
            for (Eigen::Index d = 0; d < centers.cols(); ++d) centers(c, d) = rng.uniform(0.0, box);
        placed = true;
        for (Eigen::Index a = 0; a < centers.rows() && placed; ++a)
            for (Eigen::Index b = 0; b < a && placed; ++b)
                placed = (centers.row(a) - centers.row(b)).norm() >= separation;
    }
    if (!placed) {
        centers.setZero();
        for (Eigen::Index c = 0; c < centers.rows(); ++c) centers(c, 0) = double(c) * separation;
    }

    SyntheticData data;
    data.X.resize(Eigen::Index(n_per_cluster * k), Eigen::Index(dim));
    data.labels.reserve(n_per_cluster * k);
    Eigen::Index row = 0;
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t p = 0; p < n_per_cluster; ++p, ++row) {
            for (Eigen::Index d = 0; d < Eigen::Index(dim); ++d)
                data.X(row, d) = centers(Eigen::Index(c), d) + (noise > 0 ? rng.uniform(-noise, noise) : 0.0);
            data.labels.push_back(c);
        }
    for (Eigen::Index d = 0; d < data.X.cols(); ++d) {
        const double lo = data.X.col(d).minCoeff();
        if (lo < 0) {
            data.X.col(d).array() -= lo;
            centers.col(d).array() -= lo;
        }
    }
    data.centers = std::move(centers);
    return data;
}

inline MetricSummary summarize(const std::vector<double>& ac, const std::vector<double>& nmi) {
    auto mean_std = [](const std::vector<double>& v) {
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= double(v.size());
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        return std::pair(mean, std::sqrt(var / double(v.size())));
    };
    MetricSummary s;
    std::tie(s.ac_mean, s.ac_std) = mean_std(ac);
    std::tie(s.nmi_mean, s.nmi_std) = mean_std(nmi);
    return s;
}

// Population (not sample) standard deviation, so a single run reports 0.
inline void aggregate(RunReport& report) {
    std::vector<double> base_ac, base_nmi, ref_ac, ref_nmi;
    for (const auto& r : report.runs) {
        base_ac.push_back(r.baseline.ac);
        base_nmi.push_back(r.baseline.nmi);
        if (r.refined) {
            ref_ac.push_back(r.refined->ac);
            ref_nmi.push_back(r.refined->nmi);
        }
    }
    if (base_ac.empty()) throw ConfigError("report has no runs");
    report.baseline = summarize(base_ac, base_nmi);
    report.refined.reset();
    if (!ref_ac.empty()) report.refined = summarize(ref_ac, ref_nmi);
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
    using nlohmann::json;
    return json{
        {"data_path", c.data_path.string()},
        {"labels_path", c.labels_path.string()},
        {"input_kind", to_string(c.input_kind)},
        {"method", to_string(c.method)},
        {"k", c.k},
        {"runs", c.runs},
        {"base_seed", c.base_seed},
        {"refine", c.refine},
        {"similarity_source", to_string(c.similarity_source)},
        {"graph",
         {{"kernel", to_string(c.graph.kernel)},
          {"sigma_neighbor_rank", c.graph.sigma_neighbor_rank},
          {"distance_exponent", c.graph.distance_exponent},
          {"neighbor_rule", to_string(c.graph.neighbor_rule)},
          {"normalize", c.graph.normalize},
          {"ncut", to_string(c.graph.ncut)},
          {"sigma_floor", c.graph.sigma_floor}}},
        {"nmf",
         {{"objective", to_string(c.nmf.objective)},
          {"init", to_string(c.nmf.init)},
          {"max_iterations", c.nmf.max_iterations},
          {"rel_tolerance", c.nmf.rel_tolerance},
          {"epsilon_guard", c.nmf.epsilon_guard}}},
        {"dynamics",
         {{"max_iterations", c.dynamics.max_iterations},
          {"delta_tolerance", c.dynamics.delta_tolerance},
          {"interior_epsilon", c.dynamics.interior_epsilon}}},
    };
}

inline nlohmann::json summary_to_json(const MetricSummary& s) {
    return {{"ac_mean", s.ac_mean}, {"ac_std", s.ac_std}, {"nmi_mean", s.nmi_mean}, {"nmi_std", s.nmi_std}};
}

inline MetricSummary summary_from_json(const nlohmann::json& j) {
    return {j.at("ac_mean").get<double>(), j.at("ac_std").get<double>(), j.at("nmi_mean").get<double>(),
            j.at("nmi_std").get<double>()};
}

inline nlohmann::json report_to_json(const RunReport& report) {
    using nlohmann::json;
    json runs = json::array();
    for (const auto& r : report.runs) {
        json run{{"seed", r.seed}, {"baseline", {{"ac", r.baseline.ac}, {"nmi", r.baseline.nmi}}}};
        if (r.refined)
            run["refined"] = {{"ac", r.refined->ac},
                              {"nmi", r.refined->nmi},
                              {"iterations", r.refined->iterations},
                              {"converged", r.refined->converged}};
        runs.push_back(std::move(run));
    }
    json aggregate_json{{"baseline", summary_to_json(report.baseline)}};
    if (report.refined) aggregate_json["refined"] = summary_to_json(*report.refined);
    return json{{"config", report.config}, {"runs", std::move(runs)}, {"aggregate", std::move(aggregate_json)}};
}

inline RunReport report_from_json(const nlohmann::json& j) {
    RunReport report;
    try {
        report.config = j.at("config");
        for (const auto& run : j.at("runs")) {
            RunRecord r;
            r.seed = run.at("seed").get<std::uint64_t>();
            r.baseline = {run.at("baseline").at("ac").get<double>(), run.at("baseline").at("nmi").get<double>()};
            if (run.contains("refined")) {
                const auto& ref = run.at("refined");
                r.refined = RefinedRecord{ref.at("ac").get<double>(), ref.at("nmi").get<double>(),
                                          ref.at("iterations").get<std::size_t>(), ref.at("converged").get<bool>()};
            }
            report.runs.push_back(std::move(r));
        }
        const auto& agg = j.at("aggregate");
        report.baseline = summary_from_json(agg.at("baseline"));
        if (agg.contains("refined")) report.refined = summary_from_json(agg.at("refined"));
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("malformed report: ") + e.what());
    }
    return report;
}

inline std::filesystem::path confusion_path(const std::filesystem::path& out_path, std::size_t run,
                                            std::string_view which) {
    auto p = out_path;
    p.replace_extension();
    p += ".run" + std::to_string(run) + "." + std::string(which) + ".confusion.csv";
    return p;
}

// JSON report to out_path; confusion matrices, when the runs carry them, as
// CSV files beside it.
inline void emit_report(const RunReport& report, const std::filesystem::path& out_path) {
    const auto parent = out_path.parent_path();
    if (!parent.empty() && !std::filesystem::is_directory(parent))
        throw IoError("output directory '" + parent.string() + "' for '" + out_path.string() + "' does not exist");
    auto out = detail::open_for_writing(out_path);
    out << report_to_json(report).dump(2) << '\n';
    detail::finish_writing(out, out_path);
    for (std::size_t r = 0; r < report.runs.size(); ++r) {
        if (report.runs[r].baseline_confusion)
            write_confusion_csv(confusion_path(out_path, r, "baseline"), *report.runs[r].baseline_confusion);
        if (report.runs[r].refined_confusion)
            write_confusion_csv(confusion_path(out_path, r, "refined"), *report.runs[r].refined_confusion);
    }
}

inline RunReport load_report(const std::filesystem::path& path) {
    auto in = detail::open_for_reading(path);
    try {
        return report_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

// Runs the experiment on in-memory data. `data` is the feature matrix or the
// similarity matrix according to config.input_kind.
inline RunReport run_experiment(const DenseMatrix& data, const LabelVector& truth, const ExperimentConfig& config) {
    config.validate();
    if (std::size_t(data.rows()) != truth.size())
        throw ConfigError("data has " + std::to_string(data.rows()) + " rows but there are " +
                          std::to_string(truth.size()) + " labels");

    const DenseMatrix similarity = similarity_matrix(data, config.input_kind, config.graph);

    DenseMatrix nmf_input;
    if (config.method == NmfMethod::nmf) {
        nmf_input = data;
    } else if (config.similarity_source == SimilaritySource::kernel) {
        nmf_input = similarity;
    } else {
        GraphConfig global = config.graph;
        global.neighbor_rule = NeighborRule::global;
        nmf_input = payoff_graph_from_similarity(similarity, global).to_sparse().to_dense();
    }

    std::optional<PayoffGraph> global_graph;
    if (config.refine && config.graph.neighbor_rule == NeighborRule::global)
        global_graph = payoff_graph_from_similarity(similarity, config.graph);

    RunReport report;
    report.config = config_to_json(config);
    const std::size_t runs = config.method == NmfMethod::nndsvd ? 1 : config.runs;
    for (std::size_t r = 0; r < runs; ++r) {
        RunRecord record;
        record.seed = config.base_seed + r;

        NmfConfig nmf = config.nmf;
        nmf.k = config.k;
        nmf.seed = record.seed;
        const Factorization factors = factorize(nmf_input, nmf, config.method);

        record.baseline_labels = hard_assign(factors.W);
        const MetricsReport base = evaluate(truth, record.baseline_labels);
        record.baseline = {base.ac, base.nmi};
        if (config.confusion) record.baseline_confusion = confusion_matrix(truth, record.baseline_labels, base.mapping);

        if (config.refine) {
            const PayoffGraph graph = global_graph ? *global_graph
                                                   : payoff_graph_from_similarity(similarity, config.graph,
                                                                                  record.baseline_labels);
            const RefinementResult refined = refine(factors.W, graph, config.dynamics);
            if (refined.labels != hard_assign(refined.final_strategies.matrix()))
                throw NumericalError("refined labels disagree with the final strategies");
            record.refined_labels = refined.labels;
            const MetricsReport ref = evaluate(truth, record.refined_labels);
            record.refined = RefinedRecord{ref.ac, ref.nmi, refined.iterations, refined.converged};
            if (config.confusion)
                record.refined_confusion = confusion_matrix(truth, record.refined_labels, ref.mapping);
        }
        report.runs.push_back(std::move(record));
    }
    aggregate(report);
    return report;
}

// Loads data (CSV, or MatrixMarket when the path ends in .mtx) and labels
// from the configured paths.
inline RunReport run_experiment(const ExperimentConfig& config) {
    const DenseMatrix data = config.data_path.extension() == ".mtx"
                                 ? load_matrix_market(config.data_path).to_dense()
                                 : load_dense_csv(config.data_path);
    const LabelVector truth = load_labels(config.labels_path);
    return run_experiment(data, truth, config);
}

} // namespace gtnmf

#endif
