// gtnmf-blobs: write a synthetic nonnegative blob dataset as features CSV
// plus a label file.

#include "gtnmf/pipeline.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Generate a synthetic blob dataset"};
    std::size_t per_cluster = 30, k = 3, dim = 5;
    double separation = 10.0, noise = 1.0;
    std::uint64_t seed = 0;
    std::string data_out, labels_out;
    app.add_option("--per-cluster", per_cluster)->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--k", k)->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--dim", dim)->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--separation", separation)->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--noise", noise)->capture_default_str()->check(CLI::NonNegativeNumber);
    app.add_option("--seed", seed)->capture_default_str();
    app.add_option("--data-out", data_out, "features CSV")->required();
    app.add_option("--labels-out", labels_out, "labels file")->required();
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        const auto blobs = gtnmf::generate_synthetic_blobs(per_cluster, k, dim, separation, noise, seed);
        gtnmf::write_dense_csv(data_out, blobs.X);
        gtnmf::write_labels(labels_out, blobs.labels);
    } catch (const gtnmf::IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return 2;
    } catch (const gtnmf::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
