// gtnmf: factorize a dataset, refine the NMF clustering with replicator
// dynamics on a similarity graph, and report AC/NMI for both labelings.
//
// Exit codes: 0 success, 1 usage/config error, 2 I/O error, 3 numerical failure.

#include "gtnmf/gtnmf.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <iostream>
#include <map>
#include <string>

namespace {

enum ExitCode { ok = 0, usage_error = 1, io_error = 2, numerical_error = 3 };

void print_summary(const gtnmf::RunReport& report) {
    auto line = [](const char* name, const gtnmf::MetricSummary& s) {
        std::printf("%-9s AC %.4f +- %.4f   NMI %.4f +- %.4f\n", name, s.ac_mean, s.ac_std, s.nmi_mean, s.nmi_std);
    };
    std::printf("runs: %zu\n", report.runs.size());
    line("baseline", report.baseline);
    if (report.refined) line("refined", *report.refined);
}

} // namespace

int main(int argc, char** argv) {
    using namespace gtnmf;

    CLI::App app{"NMF clustering with game-theoretic refinement"};
    ExperimentConfig config;
    std::size_t k = 0;
    bool adaptive = true;
    int distance_exponent = 1;

    app.add_option("--data", config.data_path, "feature or similarity matrix (CSV, or MatrixMarket .mtx)")
        ->required();
    app.add_option("--labels", config.labels_path, "ground-truth labels, one integer per line")->required();
    app.add_option("--input-kind", config.input_kind, "what --data holds")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, InputKind>{{"features", InputKind::features}, {"similarity", InputKind::similarity}}));
    app.add_option("--kernel", config.graph.kernel, "similarity kernel for feature input")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, Kernel>{{"cosine", Kernel::cosine}, {"gaussian", Kernel::gaussian_local}}));
    app.add_option("--method", config.method, "factorization method")
        ->transform(CLI::CheckedTransformer(std::map<std::string, NmfMethod>{{"nmf", NmfMethod::nmf},
                                                                             {"nmf-s", NmfMethod::nmf_s},
                                                                             {"symnmf", NmfMethod::symnmf},
                                                                             {"nndsvd", NmfMethod::nndsvd}}));
    app.add_option("--k", k, "number of clusters (default: number of distinct ground-truth labels)")
        ->check(CLI::PositiveNumber);
    app.add_option("--runs", config.runs, "independent seeded runs")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--seed", config.base_seed, "seed of run 0; run r uses seed + r")->capture_default_str();
    app.add_flag("--adaptive-q,!--global-q", adaptive,
                 "neighbor count per point from its NMF cluster size, or one global count")
        ->capture_default_str();
    app.add_flag("--refine,!--no-refine", config.refine, "run the replicator refinement")->capture_default_str();
    app.add_option("--max-iter", config.dynamics.max_iterations, "replicator iteration budget")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app.add_option("--tol", config.dynamics.delta_tolerance, "stop when ||S(t+1) - S(t)||_F falls below this")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app.add_option("--distance-exponent", distance_exponent, "power of the distance in the gaussian kernel")
        ->capture_default_str()
        ->check(CLI::IsMember({1, 2}));
    app.add_option("--ncut", config.graph.ncut, "normalized-cut scaling of the sparsified graph")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, NcutMode>{{"divide", NcutMode::divide}, {"multiply", NcutMode::multiply}}));
    app.add_option("--objective", config.nmf.objective, "NMF objective")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, Objective>{{"frobenius", Objective::frobenius}, {"kl", Objective::kl}}));
    app.add_option("--nmf-max-iter", config.nmf.max_iterations, "NMF update budget")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app.add_option("--nmf-tol", config.nmf.rel_tolerance, "NMF relative objective change to stop at")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app.add_option("--similarity-source", config.similarity_source,
                   "matrix given to nmf-s/symnmf/nndsvd: processed graph or dense kernel")
        ->transform(CLI::CheckedTransformer(std::map<std::string, SimilaritySource>{
            {"processed", SimilaritySource::processed}, {"kernel", SimilaritySource::kernel}}));
    app.add_option("--out", config.out_path, "JSON report path");
    app.add_flag("--confusion", config.confusion, "write per-run confusion matrices as CSV next to --out");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : usage_error;
    }

    config.graph.neighbor_rule = adaptive ? NeighborRule::adaptive : NeighborRule::global;
    config.graph.distance_exponent = distance_exponent;

    try {
        if (config.confusion && config.out_path.empty())
            throw ConfigError("--confusion needs --out to place the CSV files");
        const DenseMatrix data = config.data_path.extension() == ".mtx"
                                     ? load_matrix_market(config.data_path).to_dense()
                                     : load_dense_csv(config.data_path);
        const LabelVector truth = load_labels(config.labels_path);
        config.k = k ? k : label_count(truth);
        const RunReport report = run_experiment(data, truth, config);
        if (!config.out_path.empty()) emit_report(report, config.out_path);
        print_summary(report);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return usage_error;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return io_error;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return numerical_error;
    }
    return ok;
}
