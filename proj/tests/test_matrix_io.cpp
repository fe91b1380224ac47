#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "scopt/errors.hpp"
#include "scopt/matrix_io.hpp"

using namespace scopt;

namespace {

std::filesystem::path temp_path(const std::string& name)
{
    return std::filesystem::temp_directory_path() / ("scopt_io_" + name);
}

SymMatrix sample()
{
    Matrix a(3, 3);
    a << 1.0, 0.1, -1.0 / 3.0, 0.1, 2.0, 1e-300, -1.0 / 3.0, 1e-300, 3.0;
    return SymMatrix(a);
}

} // namespace

TEST(MatrixIo, CsvRoundTripIsExact)
{
    const auto path = temp_path("a.csv");
    io::save_matrix(path, sample());
    EXPECT_EQ(io::load_matrix(path).data(), sample().data());
    std::filesystem::remove(path);
}

TEST(MatrixIo, BinaryRoundTripIsExact)
{
    const auto path = temp_path("a.bin");
    io::save_matrix(path, sample());
    EXPECT_EQ(std::filesystem::file_size(path), 8u + 9u * 8u);
    EXPECT_EQ(io::load_matrix(path).data(), sample().data());
    std::filesystem::remove(path);
}

TEST(MatrixIo, RaggedCsvIsRejected)
{
    const auto path = temp_path("ragged.csv");
    {
        std::ofstream out(path);
        out << "1,2\n3\n";
    }
    EXPECT_THROW(io::load_matrix(path), Error);
    std::filesystem::remove(path);
}

TEST(MatrixIo, MissingFileIsIoError)
{
    EXPECT_THROW(io::load_matrix(temp_path("does_not_exist.csv")), IoError);
}
