#ifndef GTNMF_MATRIX_IO_HPP
#define GTNMF_MATRIX_IO_HPP

// Text formats for the three data types every other module consumes:
//   dense matrices   - CSV, comma separated, optional single header row
//   sparse matrices  - MatrixMarket coordinate (real|integer, general|symmetric)
//   label vectors    - one nonnegative integer per line

#include "gtnmf/error.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gtnmf {

using DenseMatrix = Eigen::MatrixXd;
using Label = std::size_t;
using LabelVector = std::vector<Label>;

struct SparseEntry {
    std::size_t row;
    std::size_t col;
    double value;

    friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

// Coordinate-list sparse matrix. Entries are kept sorted by (row, col) and
// unique; construct through from_entries() to have that checked.
class SparseMatrix {
public:
    SparseMatrix() = default;

    static SparseMatrix from_entries(std::size_t rows, std::size_t cols,
                                     std::vector<SparseEntry> entries) {
        std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
            return std::pair(a.row, a.col) < std::pair(b.row, b.col);
        });
        for (std::size_t e = 0; e < entries.size(); ++e) {
            const auto& entry = entries[e];
            if (entry.row >= rows || entry.col >= cols)
                throw ConfigError("sparse entry (" + std::to_string(entry.row) + ", " +
                                  std::to_string(entry.col) + ") out of bounds");
            if (!std::isfinite(entry.value))
                throw ConfigError("sparse entry (" + std::to_string(entry.row) + ", " +
                                  std::to_string(entry.col) + ") is not finite");
            if (e > 0 && entries[e - 1].row == entry.row && entries[e - 1].col == entry.col)
                throw ConfigError("duplicate sparse entry (" + std::to_string(entry.row) +
                                  ", " + std::to_string(entry.col) + ")");
        }
        SparseMatrix m;
        m.rows_ = rows;
        m.cols_ = cols;
        m.entries_ = std::move(entries);
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t nnz() const { return entries_.size(); }
    const std::vector<SparseEntry>& entries() const { return entries_; }

    DenseMatrix to_dense() const {
        DenseMatrix out = DenseMatrix::Zero(Eigen::Index(rows_), Eigen::Index(cols_));
        for (const auto& e : entries_) out(Eigen::Index(e.row), Eigen::Index(e.col)) = e.value;
        return out;
    }

    Eigen::SparseMatrix<double, Eigen::RowMajor> to_eigen() const {
        std::vector<Eigen::Triplet<double>> triplets;
        triplets.reserve(entries_.size());
        for (const auto& e : entries_)
            triplets.emplace_back(Eigen::Index(e.row), Eigen::Index(e.col), e.value);
        Eigen::SparseMatrix<double, Eigen::RowMajor> out{Eigen::Index(rows_), Eigen::Index(cols_)};
        out.setFromTriplets(triplets.begin(), triplets.end());
        return out;
    }

    bool is_symmetric() const {
        if (rows_ != cols_) return false;
        for (const auto& e : entries_) {
            auto it = std::lower_bound(entries_.begin(), entries_.end(), std::pair(e.col, e.row),
                                       [](const SparseEntry& a, const std::pair<std::size_t, std::size_t>& key) {
                                           return std::pair(a.row, a.col) < key;
                                       });
            if (it == entries_.end() || it->row != e.col || it->col != e.row || it->value != e.value)
                return false;
        }
        return true;
    }

    friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<SparseEntry> entries_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline bool parse_double(std::string_view field, double& out) {
    field = trim(field);
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    if (field.empty()) return false;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
    return ec == std::errc() && ptr == field.data() + field.size() && std::isfinite(out);
}

template <class Int>
bool parse_unsigned(std::string_view field, Int& out) {
    field = trim(field);
    if (field.empty()) return false;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
    return ec == std::errc() && ptr == field.data() + field.size();
}

inline std::ifstream open_for_reading(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    return in;
}

inline std::ofstream open_for_writing(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    return out;
}

inline void finish_writing(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

inline std::string where(const std::filesystem::path& path, std::size_t line) {
    return path.string() + ":" + std::to_string(line) + ": ";
}

} // namespace detail

inline DenseMatrix load_dense_csv(const std::filesystem::path& path, bool has_header = false) {
    auto in = detail::open_for_reading(path);
    std::vector<double> values;
    std::size_t cols = 0;
    std::size_t rows = 0;
    std::size_t line_no = 0;
    std::string line;
    bool header_pending = has_header;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        if (header_pending) {
            header_pending = false;
            continue;
        }
        std::size_t fields = 0;
        std::string_view rest(line);
        while (true) {
            const auto comma = rest.find(',');
            const auto field = rest.substr(0, comma);
            double v = 0.0;
            if (!detail::parse_double(field, v))
                throw IoError(detail::where(path, line_no) + "unparsable field '" +
                              std::string(detail::trim(field)) + "' at line " +
                              std::to_string(line_no));
            values.push_back(v);
            ++fields;
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (rows == 0)
            cols = fields;
        else if (fields != cols)
            throw IoError(detail::where(path, line_no) + "ragged row at line " +
                          std::to_string(line_no));
        ++rows;
    }
    if (rows == 0) throw IoError(path.string() + ": no data rows");
    return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        values.data(), Eigen::Index(rows), Eigen::Index(cols));
}

inline void write_dense_csv(const std::filesystem::path& path, const DenseMatrix& m) {
    auto out = detail::open_for_writing(path);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << detail::format_double(m(i, j));
        }
        out << '\n';
    }
    detail::finish_writing(out, path);
}

inline SparseMatrix load_matrix_market(const std::filesystem::path& path) {
    auto in = detail::open_for_reading(path);
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(in, line)) throw IoError(path.string() + ": empty file, missing banner");
    ++line_no;
    std::string lowered = line;
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return char(std::tolower(c)); });
    std::istringstream banner(lowered);
    std::string tag, object, format, field, symmetry;
    banner >> tag >> object >> format >> field >> symmetry;
    if (tag != "%%matrixmarket" || object != "matrix" || format != "coordinate" ||
        (field != "real" && field != "integer") ||
        (symmetry != "general" && symmetry != "symmetric"))
        throw IoError(detail::where(path, 1) + "bad banner '" + line +
                      "' (expected coordinate real|integer general|symmetric)");
    const bool symmetric = symmetry == "symmetric";

    std::size_t rows = 0, cols = 0, declared = 0;
    bool have_size = false;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = detail::trim(line);
        if (t.empty() || t.front() == '%') continue;
        std::istringstream size_line{std::string(t)};
        std::string a, b, c, extra;
        size_line >> a >> b >> c >> extra;
        if (!detail::parse_unsigned(a, rows) || !detail::parse_unsigned(b, cols) ||
            !detail::parse_unsigned(c, declared) || !extra.empty() || rows == 0 || cols == 0)
            throw IoError(detail::where(path, line_no) + "bad size line");
        have_size = true;
        break;
    }
    if (!have_size) throw IoError(path.string() + ": missing size line");
    if (symmetric && rows != cols)
        throw IoError(path.string() + ": symmetric matrix must be square");

    std::vector<SparseEntry> entries;
    std::set<std::pair<std::size_t, std::size_t>> seen;
    std::size_t read = 0;
    auto add = [&](std::size_t r, std::size_t c, double v) {
        if (!seen.emplace(r, c).second)
            throw IoError(detail::where(path, line_no) + "duplicate entry (" + std::to_string(r + 1) +
                          ", " + std::to_string(c + 1) + ")");
        entries.push_back({r, c, v});
    };
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = detail::trim(line);
        if (t.empty() || t.front() == '%') continue;
        std::istringstream entry_line{std::string(t)};
        std::string a, b, c, extra;
        entry_line >> a >> b >> c >> extra;
        std::size_t r = 0, col = 0;
        double v = 0.0;
        if (!detail::parse_unsigned(a, r) || !detail::parse_unsigned(b, col) ||
            !detail::parse_double(c, v) || !extra.empty())
            throw IoError(detail::where(path, line_no) + "malformed entry");
        if (r == 0 || col == 0 || r > rows || col > cols)
            throw IoError(detail::where(path, line_no) + "index out of range (" + std::to_string(r) +
                          ", " + std::to_string(col) + ") for " + std::to_string(rows) + "x" +
                          std::to_string(cols));
        ++read;
        add(r - 1, col - 1, v);
        if (symmetric && r != col) add(col - 1, r - 1, v);
    }
    if (read != declared)
        throw IoError(path.string() + ": declared " + std::to_string(declared) + " entries, found " +
                      std::to_string(read));
    return SparseMatrix::from_entries(rows, cols, std::move(entries));
}

// Symmetric output stores the lower triangle only and requires an exactly
// symmetric matrix.
inline void write_matrix_market(const std::filesystem::path& path, const SparseMatrix& m,
                                bool symmetric = false) {
    if (symmetric && !m.is_symmetric())
        throw ConfigError("write_matrix_market: matrix is not symmetric");
    std::vector<SparseEntry> kept;
    for (const auto& e : m.entries())
        if (!symmetric || e.row >= e.col) kept.push_back(e);
    auto out = detail::open_for_writing(path);
    out << "%%MatrixMarket matrix coordinate real " << (symmetric ? "symmetric" : "general") << '\n';
    out << m.rows() << ' ' << m.cols() << ' ' << kept.size() << '\n';
    for (const auto& e : kept)
        out << e.row + 1 << ' ' << e.col + 1 << ' ' << detail::format_double(e.value) << '\n';
    detail::finish_writing(out, path);
}

inline LabelVector load_labels(const std::filesystem::path& path) {
    auto in = detail::open_for_reading(path);
    LabelVector labels;
    std::string line;
    std::size_t line_no = 0;
    std::size_t blank_run_start = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = detail::trim(line);
        if (t.empty()) {
            if (!blank_run_start) blank_run_start = line_no;
            continue;
        }
        if (blank_run_start)
            throw IoError(detail::where(path, blank_run_start) + "blank line at line " +
                          std::to_string(blank_run_start));
        Label v = 0;
        if (!detail::parse_unsigned(t, v))
            throw IoError(detail::where(path, line_no) + "parse error at line " + std::to_string(line_no) +
                          ": '" + std::string(t) + "' is not a nonnegative integer");
        labels.push_back(v);
    }
    if (labels.empty()) throw IoError(path.string() + ": empty label file");
    return labels;
}

inline void write_labels(const std::filesystem::path& path, const LabelVector& labels) {
    auto out = detail::open_for_writing(path);
    for (auto l : labels) out << l << '\n';
    detail::finish_writing(out, path);
}

// Number of distinct cluster ids implied by the largest label.
inline std::size_t label_count(const LabelVector& labels) {
    return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
}

} // namespace gtnmf

#endif
