#pragma once

#include <filesystem>
#include <iosfwd>

#include "scopt/linalg.hpp"

namespace scopt::io {

// CSV: n lines, each with n comma-separated decimals.
SymMatrix read_matrix_csv(std::istream& in, SymmetryPolicy policy = SymmetryPolicy::Reject);
void write_matrix_csv(std::ostream& out, const SymMatrix& m);

// Binary: little-endian uint64 dimension n, then n*n little-endian float64
// entries in row-major order.
SymMatrix read_matrix_binary(std::istream& in, SymmetryPolicy policy = SymmetryPolicy::Reject);
void write_matrix_binary(std::ostream& out, const SymMatrix& m);

/// Dispatches on extension: ".bin" is binary, anything else CSV.
SymMatrix load_matrix(const std::filesystem::path& path, SymmetryPolicy policy = SymmetryPolicy::Reject);
void save_matrix(const std::filesystem::path& path, const SymMatrix& m);

} // namespace scopt::io
