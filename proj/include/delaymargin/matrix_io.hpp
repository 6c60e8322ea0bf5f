#pragma once
// Dense real matrix file I/O.
//
// Two text formats are supported and auto-detected on load:
//   * plain text: one matrix row per line, whitespace-delimited entries,
//     '#' starts a comment;
//   * Matrix Market "array" format (column-major dense), detected by the
//     %%MatrixMarket banner.
// Writers emit 17 significant digits so that load(save(M)) reproduces M
// bit-exactly.

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace delaymargin {

namespace detail {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw InputError("cannot read file: " + path);
    return buf.str();
}

inline bool parse_double(const std::string& tok, double& out) {
    std::size_t pos = 0;
    try {
        out = std::stod(tok, &pos);
    } catch (const std::exception&) {
        return false;
    }
    return pos == tok.size();
}

inline std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

inline Eigen::MatrixXd parse_plain(const std::string& text, const std::string& path) {
    std::istringstream in(text);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash); // trailing comment
        std::istringstream ls(line);
        std::vector<double> row;
        std::string tok;
        while (ls >> tok) {
            double v = 0;
            if (!parse_double(tok, v))
                throw InputError(path + ": row " + std::to_string(rows.size() + 1) +
                                 ", column " + std::to_string(row.size() + 1) +
                                 " (line " + std::to_string(lineno) + "): cannot parse '" +
                                 tok + "' as a number");
            row.push_back(v);
        }
        if (row.empty()) continue; // blank line
        if (!rows.empty() && row.size() != rows.front().size())
            throw InputError(path + ": row " + std::to_string(rows.size() + 1) + " has " +
                             std::to_string(row.size()) + " entries but row 1 has " +
                             std::to_string(rows.front().size()));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw InputError(path + ": no numeric data found");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(rows.front().size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return m;
}

inline Eigen::MatrixXd parse_matrix_market(const std::string& text, const std::string& path) {
    std::istringstream in(text);
    std::string banner;
    std::getline(in, banner);
    std::istringstream bs(banner);
    std::string tag, object, format, field, symmetry;
    bs >> tag >> object >> format >> field >> symmetry;
    if (lower(object) != "matrix" || lower(format) != "array" ||
        (lower(field) != "real" && lower(field) != "integer" && lower(field) != "double") ||
        lower(symmetry) != "general")
        throw InputError(path + ": unsupported Matrix Market header '" + banner +
                         "' (need: matrix array real general)");
    std::string line;
    long rows = -1, cols = -1;
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] == '%') continue;
        std::istringstream ls(line);
        if (ls >> rows >> cols) break;
        // skip blank lines before the size line
        std::istringstream probe(line);
        std::string any;
        if (probe >> any)
            throw InputError(path + ": malformed Matrix Market size line '" + line + "'");
    }
    if (rows <= 0 || cols <= 0)
        throw InputError(path + ": missing or invalid Matrix Market dimensions");
    Eigen::MatrixXd m(rows, cols);
    long count = 0;
    std::string tok;
    while (in >> tok) {
        if (tok[0] == '%') { std::getline(in, line); continue; }
        if (count >= rows * cols)
            throw InputError(path + ": more entries than the declared " +
                             std::to_string(rows * cols));
        double v = 0;
        if (!parse_double(tok, v))
            throw InputError(path + ": entry " + std::to_string(count + 1) +
                             ": cannot parse '" + tok + "' as a number");
        // array format is column-major
        m(count % rows, count / rows) = v;
        ++count;
    }
    if (count != rows * cols)
        throw InputError(path + ": expected " + std::to_string(rows * cols) +
                         " entries, found " + std::to_string(count));
    return m;
}

inline void write_value(std::ostream& os, double v) {
    os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
}

} // namespace detail

// Load a dense real matrix, auto-detecting the format by the MM banner.
inline Eigen::MatrixXd load_matrix(const std::string& path) {
    const std::string text = detail::read_file(path);
    std::size_t i = text.find_first_not_of(" \t\r\n");
    if (i != std::string::npos && text.compare(i, 15, "%%MatrixMarket ") == 0)
        return detail::parse_matrix_market(text.substr(i), path);
    if (i != std::string::npos && text.compare(i, 14, "%%MatrixMarket") == 0)
        return detail::parse_matrix_market(text.substr(i), path);
    return detail::parse_plain(text, path);
}

inline void save_matrix_plain(const std::string& path, const Eigen::MatrixXd& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open file for writing: " + path);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ' ';
            detail::write_value(out, m(i, j));
        }
        out << '\n';
    }
    if (!out) throw InputError("failed writing file: " + path);
}

inline void save_matrix_market(const std::string& path, const Eigen::MatrixXd& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open file for writing: " + path);
    out << "%%MatrixMarket matrix array real general\n";
    out << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            detail::write_value(out, m(i, j));
            out << '\n';
        }
    if (!out) throw InputError("failed writing file: " + path);
}

// Dispatch on extension: .mtx / .mm go to Matrix Market, anything else plain.
inline void save_matrix(const std::string& path, const Eigen::MatrixXd& m) {
    auto dot = path.rfind('.');
    const std::string ext = dot == std::string::npos ? "" : detail::lower(path.substr(dot));
    if (ext == ".mtx" || ext == ".mm") save_matrix_market(path, m);
    else save_matrix_plain(path, m);
}

// 64-bit FNV-1a over a byte buffer; used to fingerprint input files in reports.
inline std::uint64_t fnv1a64(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a64_file(const std::string& path) {
    const std::string text = detail::read_file(path);
    return fnv1a64(text.data(), text.size());
}

inline std::string to_hex64(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace delaymargin
