#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "scopt/iscopt.hpp"
#include "scopt/portfolio.hpp"

namespace scopt {

enum class Mode
{
    SyntheticBench,
    Recovery,
    Portfolio,
    Estimate,
};

std::string to_string(Mode mode);
Mode parse_mode(const std::string& text);

struct RunConfig
{
    Mode mode = Mode::SyntheticBench;
    std::size_t n = 100;
    std::optional<std::size_t> samples;   ///< N; each mode has its own default
    std::optional<double> sparsity;       ///< k / n^2
    std::uint64_t seed = 1;
    std::size_t seeds = 1;                ///< seeds seed, seed + 1, ...
    double rho = 0.1;
    std::optional<double> lambda;
    SolverConfig solver;
    double diagonal_scale = 6.5;          ///< diagonal of the synthetic ground truth
    double volatility_dispersion = 0.4;   ///< sd of log-volatilities in portfolio mode
    std::filesystem::path input;
    std::filesystem::path output;         ///< directory for report.json and tables
    std::size_t top_k = 50;
    bool center = true;
    bool write_traces = false;

    /// Throws InvalidArgument / IoError; run before any computation.
    void validate() const;
};

nlohmann::json to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);

/// Sample counts of the recovery sweep: n/2, n, 10n.
std::vector<std::size_t> recovery_sample_sizes(std::size_t n);

/// Deterministic per-purpose seed derived from the run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose);

struct RecoveryCell
{
    std::uint64_t seed;
    std::size_t samples;
    double relative_error;   ///< ||Theta* - Sigma||_F / ||Sigma||_F
    double precision;        ///< support recovery, entries above 1e-6
    double recall;
    OuterTrace trace;
};

/// Ground truth, sample covariance and estimate for one recovery cell.
RecoveryCell recovery_cell(const RunConfig& cfg, std::uint64_t seed, std::size_t samples);

struct BenchCell
{
    std::uint64_t seed;
    OuterTrace plain;
    OuterTrace fls;
};

BenchCell bench_cell(const RunConfig& cfg, std::uint64_t seed);

struct PortfolioCell
{
    std::uint64_t seed;
    std::size_t samples;
    double sparsity;
    double lambda;
    double risk_sample;   ///< out-of-sample risk of w(Sigma_hat)
    double risk_equal;
    double risk_theta;    ///< out-of-sample risk of w(Theta*)
    double max_constraint_violation;
    double max_kkt_residual;
    OuterTrace trace;
};

/// Ground-truth covariance of the portfolio experiment: a sparse correlation
/// pattern scaled by log-normal asset volatilities.
SymMatrix portfolio_ground_truth(std::size_t n, double sparsity, std::uint64_t seed, double diagonal_scale,
                                 double volatility_dispersion);

/// Asset mean returns of the portfolio experiment.
Vector portfolio_returns(std::size_t n, std::uint64_t seed);

PortfolioCell portfolio_cell(const RunConfig& cfg, std::uint64_t seed, std::size_t samples, double sparsity,
                             double lambda);

/// Default (sparsity, lambda) grid of the portfolio mode.
std::vector<std::pair<double, double>> portfolio_grid();

/// Sample counts of the portfolio mode: 0.09 n and 0.18 n.
std::vector<std::size_t> portfolio_sample_sizes(std::size_t n);

/// Each runner returns the JSON report; when cfg.output is set it also writes
/// report.json and the mode's CSV table there.
nlohmann::json run_synthetic_bench(const RunConfig& cfg);
nlohmann::json run_recovery(const RunConfig& cfg);
nlohmann::json run_portfolio(const RunConfig& cfg);
nlohmann::json run_estimate(const RunConfig& cfg);
nlohmann::json run(const RunConfig& cfg);

/// Worker count from SCOPT_THREADS (default 1).
std::size_t harness_threads();

/// True when every number in the document is finite.
bool all_finite(const nlohmann::json& j);

/// Copy of the report without timing fields (elapsed, wall_seconds).
nlohmann::json strip_timing(const nlohmann::json& j);

} // namespace scopt
