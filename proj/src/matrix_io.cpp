#include "scopt/matrix_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace scopt::io {

namespace {

double parse_double(const std::string& field, std::size_t line)
{
    std::size_t begin = field.find_first_not_of(" \t\r");
    std::size_t end = field.find_last_not_of(" \t\r");
    if (begin == std::string::npos) {
        throw MalformedCsv(line, "empty field");
    }
    const std::string token = field.substr(begin, end - begin + 1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
        throw MalformedCsv(line, "not a number: '" + token + "'");
    }
    return value;
}

template <class T>
T from_little_endian(std::array<unsigned char, sizeof(T)> bytes)
{
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(bytes.begin(), bytes.end());
    }
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
}

template <class T>
void write_little_endian(std::ostream& out, T value)
{
    std::array<unsigned char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(bytes.begin(), bytes.end());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <class T>
T read_little_endian(std::istream& in)
{
    std::array<unsigned char, sizeof(T)> bytes;
    in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T));
    if (!in) {
        throw IoError("truncated binary matrix");
    }
    return from_little_endian<T>(bytes);
}

} // namespace

SymMatrix read_matrix_csv(std::istream& in, SymmetryPolicy policy)
{
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        std::vector<double> row;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) {
            row.push_back(parse_double(field, line_no));
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw MalformedCsv(line_no, "row length differs from first row");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw MalformedCsv(line_no, "no rows");
    }
    const std::size_t n = rows.size();
    if (rows.front().size() != n) {
        throw MalformedCsv(line_no, "matrix is not square");
    }
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return SymMatrix(m, policy);
}

void write_matrix_csv(std::ostream& out, const SymMatrix& m)
{
    const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
    const Matrix& d = m.data();
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        for (Eigen::Index j = 0; j < d.cols(); ++j) {
            if (j > 0) {
                out << ',';
            }
            out << d(i, j);
        }
        out << '\n';
    }
    out.precision(old_precision);
}

SymMatrix read_matrix_binary(std::istream& in, SymmetryPolicy policy)
{
    const auto n64 = read_little_endian<std::uint64_t>(in);
    if (n64 > (1u << 20)) {
        throw IoError("binary matrix dimension " + std::to_string(n64) + " is implausible");
    }
    const auto n = static_cast<Eigen::Index>(n64);
    Matrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            m(i, j) = read_little_endian<double>(in);
        }
    }
    return SymMatrix(m, policy);
}

void write_matrix_binary(std::ostream& out, const SymMatrix& m)
{
    const Matrix& d = m.data();
    write_little_endian<std::uint64_t>(out, static_cast<std::uint64_t>(d.rows()));
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        for (Eigen::Index j = 0; j < d.cols(); ++j) {
            write_little_endian<double>(out, d(i, j));
        }
    }
}

SymMatrix load_matrix(const std::filesystem::path& path, SymmetryPolicy policy)
{
    const bool binary = path.extension() == ".bin";
    std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return binary ? read_matrix_binary(in, policy) : read_matrix_csv(in, policy);
}

void save_matrix(const std::filesystem::path& path, const SymMatrix& m)
{
    const bool binary = path.extension() == ".bin";
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    if (binary) {
        write_matrix_binary(out, m);
    } else {
        write_matrix_csv(out, m);
    }
}

} // namespace scopt::io
