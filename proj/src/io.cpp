#include "spotvol/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace spotvol {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little,
              "binary matrix blobs assume a little-endian host");

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_ticks_csv(const std::string& path, const TickSeries& ticks) {
    if (ticks.times.size() != ticks.prices.size())
        throw ShapeMismatch("tick times/prices length mismatch");
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "asset_id,time,log_price\n";
    for (std::size_t j = 0; j < ticks.times.size(); ++j)
        out << ticks.asset_id << ',' << format_double(ticks.times[j]) << ','
            << format_double(ticks.prices[j]) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

TickSeries read_ticks_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty file: " + path);
    if (line != "asset_id,time,log_price")
        throw IoError("unexpected tick header in " + path + ": " + line);
    TickSeries ts;
    bool first = true;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        int id;
        double t, y;
        if (std::sscanf(line.c_str(), "%d,%lf,%lf", &id, &t, &y) != 3)
            throw IoError(path + ":" + std::to_string(lineno) + ": malformed tick row");
        if (first) {
            ts.asset_id = id;
            first = false;
        } else if (id != ts.asset_id) {
            throw IoError(path + ":" + std::to_string(lineno) + ": mixed asset ids in one file");
        }
        ts.times.push_back(t);
        ts.prices.push_back(y);
    }
    if (ts.times.empty()) throw EmptySeries("no ticks in " + path);
    return ts;
}

std::vector<TickSeries> read_ticks_dir(const std::string& dir) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (name.rfind("ticks_", 0) == 0 && name.size() > 4 &&
            name.substr(name.size() - 4) == ".csv")
            files.push_back(entry.path().string());
    }
    if (files.empty()) throw IoError("no ticks_*.csv files under " + dir);
    std::vector<TickSeries> out;
    out.reserve(files.size());
    for (const auto& f : files) out.push_back(read_ticks_csv(f));
    std::sort(out.begin(), out.end(),
              [](const TickSeries& a, const TickSeries& b) { return a.asset_id < b.asset_id; });
    for (std::size_t i = 0; i + 1 < out.size(); ++i)
        if (out[i].asset_id == out[i + 1].asset_id)
            throw IoError("duplicate asset id " + std::to_string(out[i].asset_id) + " under " + dir);
    return out;
}

void write_matrix_csv(const std::string& path, const Matrix& A) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        for (Eigen::Index j = 0; j < A.cols(); ++j) {
            if (j) out << ',';
            out << format_double(A(i, j));
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

Matrix read_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            // strtod instead of std::stod: subnormal values must parse, not
            // raise out_of_range. Overflow and trailing garbage still reject.
            const char* begin = cell.c_str();
            char* end = nullptr;
            errno = 0;
            double v = std::strtod(begin, &end);
            while (*end != '\0' && std::isspace(static_cast<unsigned char>(*end))) ++end;
            const bool overflow = errno == ERANGE && std::abs(v) == HUGE_VAL;
            if (end == begin || *end != '\0' || overflow)
                throw IoError(path + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
            row.push_back(v);
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw IoError(path + ":" + std::to_string(lineno) + ": ragged matrix row");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw IoError("empty matrix file: " + path);
    Matrix A(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return A;
}

void write_matrix_binary(const std::string& path, const Matrix& A, const std::string& what) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "spotvol-bin v1 rows=" << A.rows() << " cols=" << A.cols()
        << " dtype=float64-le order=row-major what=" << what << '\n';
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j) {
            double v = A(i, j);
            out.write(reinterpret_cast<const char*>(&v), sizeof v);
        }
    if (!out) throw IoError("write failed: " + path);
}

Matrix read_matrix_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::string header;
    if (!std::getline(in, header)) throw IoError("missing header in " + path);
    long rows = 0, cols = 0;
    if (std::sscanf(header.c_str(), "spotvol-bin v1 rows=%ld cols=%ld", &rows, &cols) != 2 ||
        rows <= 0 || cols <= 0)
        throw IoError("unrecognized binary header in " + path + ": " + header);
    Matrix A(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) {
            double v;
            in.read(reinterpret_cast<char*>(&v), sizeof v);
            if (!in) throw IoError("truncated binary matrix: " + path);
            A(i, j) = v;
        }
    return A;
}

}  // namespace spotvol
