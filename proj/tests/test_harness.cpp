#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "scopt/harness.hpp"

using namespace scopt;

namespace {

std::filesystem::path temp_dir(const std::string& name)
{
    const auto p = std::filesystem::temp_directory_path() / ("scopt_harness_" + name);
    std::filesystem::remove_all(p);
    return p;
}

RunConfig small_bench()
{
    RunConfig cfg;
    cfg.mode = Mode::SyntheticBench;
    cfg.n = 12;
    cfg.sparsity = 0.2;
    cfg.lambda = 0.5;
    cfg.seeds = 2;
    return cfg;
}

} // namespace

TEST(Mode, ParseRoundTrip)
{
    for (const Mode m : {Mode::SyntheticBench, Mode::Recovery, Mode::Portfolio, Mode::Estimate}) {
        EXPECT_EQ(parse_mode(to_string(m)), m);
    }
    EXPECT_THROW(parse_mode("nope"), InvalidArgument);
}

TEST(RunConfig, JsonRoundTrip)
{
    RunConfig cfg = small_bench();
    cfg.solver.eps_inner = 1e-9;
    cfg.solver.fls_enabled = true;
    const RunConfig back = run_config_from_json(to_json(cfg));
    EXPECT_EQ(to_json(back), to_json(cfg));
}

TEST(RunConfig, ValidationRejectsMissingLambda)
{
    RunConfig cfg = small_bench();
    cfg.lambda.reset();
    EXPECT_THROW(cfg.validate(), InvalidArgument);
    cfg = small_bench();
    cfg.rho = -1.0;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
    cfg = {};
    cfg.mode = Mode::Estimate;
    cfg.lambda = 0.1;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
}

TEST(SampleSizes, Defaults)
{
    EXPECT_EQ(recovery_sample_sizes(100), (std::vector<std::size_t>{50, 100, 1000}));
    EXPECT_EQ(portfolio_sample_sizes(200), (std::vector<std::size_t>{18, 36}));
}

TEST(DeriveSeed, DistinctPerPurpose)
{
    EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
    EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
    EXPECT_EQ(derive_seed(5, 3), derive_seed(5, 3));
}

TEST(SyntheticBench, DeterministicAndFinite)
{
    const RunConfig cfg = small_bench();
    const auto a = run_synthetic_bench(cfg);
    const auto b = run_synthetic_bench(cfg);
    EXPECT_TRUE(all_finite(a));
    EXPECT_EQ(strip_timing(a), strip_timing(b));
}

TEST(SyntheticBench, VariantsAgreeOnObjective)
{
    RunConfig cfg = small_bench();
    cfg.n = 50;
    cfg.sparsity = 0.05;
    cfg.seeds = 1;
    const BenchCell cell = bench_cell(cfg, 1);
    EXPECT_NEAR(cell.plain.final_F, cell.fls.final_F, 1e-4 * std::abs(cell.plain.final_F));
}

TEST(Recovery, WritesTableAndReport)
{
    RunConfig cfg;
    cfg.mode = Mode::Recovery;
    cfg.n = 10;
    cfg.sparsity = 0.2;
    cfg.lambda = 0.5;
    cfg.output = temp_dir("recovery");
    const auto report = run(cfg);
    EXPECT_TRUE(std::filesystem::exists(cfg.output / "report.json"));
    EXPECT_TRUE(std::filesystem::exists(cfg.output / "recovery.csv"));
    EXPECT_EQ(report["summary"].size(), 3u);
    std::filesystem::remove_all(cfg.output);
}

TEST(Estimate, ReadsReturnsCsvAndExportsGraph)
{
    const auto dir = temp_dir("estimate");
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "prices.csv");
        out << "date,ticker,close\n";
        const double a[] = {100, 101, 99, 102, 104, 103};
        const double b[] = {50, 51, 49.5, 51.2, 52, 51.7};
        const double c[] = {20, 19.8, 20.4, 20.1, 19.9, 20.5};
        for (int t = 0; t < 6; ++t) {
            out << "2024-01-0" << t + 1 << ",A," << a[t] << '\n';
            out << "2024-01-0" << t + 1 << ",B," << b[t] << '\n';
            out << "2024-01-0" << t + 1 << ",C," << c[t] << '\n';
        }
    }
    RunConfig cfg;
    cfg.mode = Mode::Estimate;
    cfg.lambda = 1e-5;
    cfg.rho = 1e-3;
    cfg.input = dir / "prices.csv";
    cfg.output = dir / "out";
    const auto report = run(cfg);
    EXPECT_TRUE(all_finite(report));
    EXPECT_TRUE(std::filesystem::exists(cfg.output / "theta.csv"));
    EXPECT_TRUE(std::filesystem::exists(cfg.output / "graph.json"));
    EXPECT_TRUE(std::filesystem::exists(cfg.output / "graph.dot"));
    std::filesystem::remove_all(dir);
}

TEST(AllFinite, DetectsNaN)
{
    nlohmann::json j = {{"a", 1.0}, {"b", {1.0, 2.0}}};
    EXPECT_TRUE(all_finite(j));
    j["b"][1] = std::nan("");
    EXPECT_FALSE(all_finite(j));
}

TEST(StripTiming, RemovesNestedTimingKeys)
{
    const nlohmann::json j = {{"elapsed", 1.0}, {"rows", {{{"wall_seconds", 2.0}, {"F", 3.0}}}}};
    EXPECT_EQ(strip_timing(j), (nlohmann::json{{"rows", {{{"F", 3.0}}}}}));
}
