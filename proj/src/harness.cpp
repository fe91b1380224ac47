#include "scopt/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <random>
#include <thread>

#include "scopt/correlation_graph.hpp"
#include "scopt/covariance_model.hpp"
#include "scopt/errors.hpp"
#include "scopt/matrix_io.hpp"
#include "scopt/returns.hpp"
#include "scopt/trace.hpp"

namespace scopt {

namespace {

using nlohmann::json;

constexpr double kSupportThreshold = 1e-6;

enum SeedPurpose : std::uint64_t
{
    kGroundTruth = 1,
    kSamples = 2,
    kReturns = 3,
    kVolatility = 4,
};

// Runs fn(i) for i in [0, count) on up to harness_threads() workers; the
// first exception is rethrown after all workers stop.
template <typename Fn>
void parallel_for(std::size_t count, Fn fn)
{
    const std::size_t workers = std::min(harness_threads(), std::max<std::size_t>(count, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    const std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) {
                        failure = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

template <typename Fn>
auto with_metadata(const json& meta, Fn fn) -> decltype(fn())
{
    try {
        return fn();
    } catch (const WallClockExceeded&) {
        throw;
    } catch (const std::exception& e) {
        throw Error(std::string(e.what()) + " [instance " + meta.dump() + "]");
    }
}

double sparsity_or_default(const RunConfig& cfg)
{
    return cfg.sparsity.value_or(0.05);
}

double lambda_required(const RunConfig& cfg)
{
    if (!cfg.lambda) {
        throw InvalidArgument("--lambda is required in " + to_string(cfg.mode) + " mode");
    }
    return *cfg.lambda;
}

std::vector<std::uint64_t> seed_list(const RunConfig& cfg)
{
    std::vector<std::uint64_t> seeds;
    for (std::size_t s = 0; s < cfg.seeds; ++s) {
        seeds.push_back(cfg.seed + s);
    }
    return seeds;
}

json solver_to_json(const SolverConfig& s)
{
    return {
        {"eps_inner", s.eps_inner},   {"gamma", s.gamma},
        {"i_max", s.i_max},           {"sigma", s.sigma},
        {"power_iters", s.power_iters}, {"fls_enabled", s.fls_enabled},
        {"wall_clock_limit", s.wall_clock_limit}, {"max_inner", s.max_inner},
        {"restart", s.restart},       {"adaptive_inner", s.adaptive_inner},
        {"eps_inner_floor", s.eps_inner_floor}, {"max_halvings", s.max_halvings},
        {"fls_probes", s.fls_probes},
    };
}

SolverConfig solver_from_json(const json& j)
{
    SolverConfig s;
    s.eps_inner = j.at("eps_inner").get<double>();
    s.gamma = j.at("gamma").get<double>();
    s.i_max = j.at("i_max").get<std::size_t>();
    s.sigma = j.at("sigma").get<double>();
    s.power_iters = j.at("power_iters").get<std::size_t>();
    s.fls_enabled = j.at("fls_enabled").get<bool>();
    s.wall_clock_limit = j.at("wall_clock_limit").get<double>();
    s.max_inner = j.at("max_inner").get<std::size_t>();
    s.restart = j.at("restart").get<bool>();
    s.adaptive_inner = j.at("adaptive_inner").get<bool>();
    s.eps_inner_floor = j.at("eps_inner_floor").get<double>();
    s.max_halvings = j.at("max_halvings").get<std::size_t>();
    s.fls_probes = j.at("fls_probes").get<std::size_t>();
    return s;
}

void add_audits(AuditCounters& total, const AuditCounters& a)
{
    total.descent_checks += a.descent_checks;
    total.descent_failures += a.descent_failures;
    total.xi_checks += a.xi_checks;
    total.xi_failures += a.xi_failures;
    total.xi_not_applicable += a.xi_not_applicable;
    total.contraction_checks += a.contraction_checks;
    total.contraction_failures += a.contraction_failures;
    total.contraction_not_applicable += a.contraction_not_applicable;
    total.quadratic_checks += a.quadratic_checks;
    total.quadratic_failures += a.quadratic_failures;
    total.domain_guard_activations += a.domain_guard_activations;
    total.noise_floor_retries += a.noise_floor_retries;
    total.inner_caps += a.inner_caps;
}

std::optional<std::ofstream> open_trace(const RunConfig& cfg, const std::string& name)
{
    if (!cfg.write_traces || cfg.output.empty()) {
        return std::nullopt;
    }
    std::ofstream out(cfg.output / name);
    if (!out) {
        throw IoError("cannot write " + (cfg.output / name).string());
    }
    return out;
}

SolveResult solve_with_trace(const ProblemSpec& spec, const SolverConfig& solver, const RunConfig& cfg,
                             const std::string& trace_name)
{
    auto trace_file = open_trace(cfg, trace_name);
    if (trace_file) {
        JsonlTraceSink sink(*trace_file);
        return solve(spec, solver, std::nullopt, &sink);
    }
    return solve(spec, solver);
}

void write_report(const RunConfig& cfg, const json& report)
{
    if (cfg.output.empty()) {
        return;
    }
    std::ofstream out(cfg.output / "report.json");
    if (!out) {
        throw IoError("cannot write " + (cfg.output / "report.json").string());
    }
    out << report.dump(2) << '\n';
}

std::ofstream open_table(const RunConfig& cfg, const std::string& name)
{
    std::ofstream out(cfg.output / name);
    if (!out) {
        throw IoError("cannot write " + (cfg.output / name).string());
    }
    out.precision(17);
    return out;
}

json base_report(const RunConfig& cfg)
{
    return {{"mode", to_string(cfg.mode)}, {"config", to_json(cfg)}, {"seeds", seed_list(cfg)}};
}

double mean_of(const std::vector<double>& v)
{
    double s = 0.0;
    for (const double x : v) {
        s += x;
    }
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

} // namespace

std::string to_string(Mode mode)
{
    switch (mode) {
    case Mode::SyntheticBench: return "synthetic-bench";
    case Mode::Recovery: return "recovery";
    case Mode::Portfolio: return "portfolio";
    case Mode::Estimate: return "estimate";
    }
    return "unknown";
}

Mode parse_mode(const std::string& text)
{
    for (const Mode m : {Mode::SyntheticBench, Mode::Recovery, Mode::Portfolio, Mode::Estimate}) {
        if (to_string(m) == text) {
            return m;
        }
    }
    throw InvalidArgument("unknown mode '" + text + "'");
}

void RunConfig::validate() const
{
    solver.validate();
    if (!(rho > 0.0) || !std::isfinite(rho)) {
        throw InvalidArgument("rho must be positive");
    }
    if (lambda && (!(*lambda >= 0.0) || !std::isfinite(*lambda))) {
        throw InvalidArgument("lambda must be nonnegative");
    }
    if (sparsity && !(*sparsity > 0.0 && *sparsity <= 1.0)) {
        throw InvalidArgument("sparsity must lie in (0, 1]");
    }
    if (!(diagonal_scale > 0.0) || !std::isfinite(diagonal_scale)) {
        throw InvalidArgument("diagonal scale must be positive");
    }
    if (!(volatility_dispersion >= 0.0) || !std::isfinite(volatility_dispersion)) {
        throw InvalidArgument("volatility dispersion must be nonnegative");
    }
    if (seeds == 0) {
        throw InvalidArgument("seeds must be at least 1");
    }
    if (top_k == 0) {
        throw InvalidArgument("top_k must be at least 1");
    }
    if (samples && *samples == 0) {
        throw InvalidArgument("samples must be at least 1");
    }
    if (mode != Mode::Estimate) {
        if (n < 2) {
            throw InvalidArgument("n must be at least 2");
        }
        const double s = mode == Mode::Portfolio ? sparsity.value_or(0.005) : sparsity_or_default(*this);
        const auto k = static_cast<std::size_t>(std::llround(s * static_cast<double>(n * n)));
        if (k < n) {
            throw SparsityTooLowForPD(k, n);
        }
    }
    if ((mode == Mode::SyntheticBench || mode == Mode::Recovery || mode == Mode::Estimate) && !lambda) {
        throw InvalidArgument("--lambda is required in " + to_string(mode) + " mode");
    }
    if (mode == Mode::Portfolio && lambda.has_value() != sparsity.has_value()) {
        throw InvalidArgument("portfolio mode takes --lambda and --sparsity together or neither");
    }
    if (mode == Mode::Estimate) {
        if (input.empty()) {
            throw InvalidArgument("--input is required in estimate mode");
        }
        if (!std::filesystem::is_regular_file(input)) {
            throw IoError("input " + input.string() + " is not a readable file");
        }
        if (output.empty()) {
            throw InvalidArgument("--output is required in estimate mode");
        }
    }
    if (!output.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(output, ec);
        if (ec || !std::filesystem::is_directory(output)) {
            throw IoError("cannot create output directory " + output.string());
        }
    }
}

json to_json(const RunConfig& cfg)
{
    return {
        {"mode", to_string(cfg.mode)},
        {"n", cfg.n},
        {"samples", cfg.samples ? json(*cfg.samples) : json(nullptr)},
        {"sparsity", cfg.sparsity ? json(*cfg.sparsity) : json(nullptr)},
        {"seed", cfg.seed},
        {"seeds", cfg.seeds},
        {"rho", cfg.rho},
        {"lambda", cfg.lambda ? json(*cfg.lambda) : json(nullptr)},
        {"solver", solver_to_json(cfg.solver)},
        {"diagonal_scale", cfg.diagonal_scale},
        {"volatility_dispersion", cfg.volatility_dispersion},
        {"input", cfg.input.string()},
        {"output", cfg.output.string()},
        {"top_k", cfg.top_k},
        {"center", cfg.center},
        {"write_traces", cfg.write_traces},
    };
}

RunConfig run_config_from_json(const json& j)
{
    RunConfig cfg;
    cfg.mode = parse_mode(j.at("mode").get<std::string>());
    cfg.n = j.at("n").get<std::size_t>();
    if (!j.at("samples").is_null()) {
        cfg.samples = j.at("samples").get<std::size_t>();
    }
    if (!j.at("sparsity").is_null()) {
        cfg.sparsity = j.at("sparsity").get<double>();
    }
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.seeds = j.at("seeds").get<std::size_t>();
    cfg.rho = j.at("rho").get<double>();
    if (!j.at("lambda").is_null()) {
        cfg.lambda = j.at("lambda").get<double>();
    }
    cfg.solver = solver_from_json(j.at("solver"));
    cfg.diagonal_scale = j.at("diagonal_scale").get<double>();
    cfg.volatility_dispersion = j.at("volatility_dispersion").get<double>();
    cfg.input = j.at("input").get<std::string>();
    cfg.output = j.at("output").get<std::string>();
    cfg.top_k = j.at("top_k").get<std::size_t>();
    cfg.center = j.at("center").get<bool>();
    cfg.write_traces = j.at("write_traces").get<bool>();
    return cfg;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose)
{
    // splitmix64 finalizer over the pair
    std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + purpose * 0xBF58476D1CE4E5B9ULL + 0x94D049BB133111EBULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::vector<std::size_t> recovery_sample_sizes(std::size_t n)
{
    return {std::max<std::size_t>(1, n / 2), n, 10 * n};
}

std::vector<std::size_t> portfolio_sample_sizes(std::size_t n)
{
    return {std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.09 * static_cast<double>(n)))),
            std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.18 * static_cast<double>(n))))};
}

std::vector<std::pair<double, double>> portfolio_grid()
{
    return {{0.005, 1.4}, {0.01, 1.7}};
}

std::size_t harness_threads()
{
    if (const char* env = std::getenv("SCOPT_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1) {
            return static_cast<std::size_t>(v);
        }
    }
    return 1;
}

RecoveryCell recovery_cell(const RunConfig& cfg, std::uint64_t seed, std::size_t samples)
{
    const json meta = {{"mode", "recovery"}, {"seed", seed}, {"samples", samples}, {"n", cfg.n}};
    return with_metadata(meta, [&] {
        const double lambda = lambda_required(cfg);
        const SymMatrix sigma =
            synth_sparse_cov(cfg.n, sparsity_or_default(cfg), derive_seed(seed, kGroundTruth), cfg.diagonal_scale);
        const auto xs = gaussian_samples(sigma, samples, derive_seed(seed, kSamples));
        const ProblemSpec spec(sample_covariance(xs), cfg.rho, lambda);
        SolveResult result = solve_with_trace(spec, cfg.solver, cfg,
                                              "trace_recovery_s" + std::to_string(seed) + "_N"
                                                  + std::to_string(samples) + ".jsonl");

        const Matrix& truth = sigma.data();
        const Matrix& est = result.solution.data();
        RecoveryCell cell{seed, samples, (est - truth).norm() / truth.norm(), 1.0, 1.0, std::move(result.trace)};
        std::size_t tp = 0, predicted = 0, actual = 0;
        for (Eigen::Index j = 0; j < truth.cols(); ++j) {
            for (Eigen::Index i = 0; i < j; ++i) {
                const bool p = std::abs(est(i, j)) > kSupportThreshold;
                const bool a = std::abs(truth(i, j)) > kSupportThreshold;
                predicted += p ? 1 : 0;
                actual += a ? 1 : 0;
                tp += (p && a) ? 1 : 0;
            }
        }
        if (predicted > 0) {
            cell.precision = static_cast<double>(tp) / static_cast<double>(predicted);
        }
        if (actual > 0) {
            cell.recall = static_cast<double>(tp) / static_cast<double>(actual);
        }
        return cell;
    });
}

BenchCell bench_cell(const RunConfig& cfg, std::uint64_t seed)
{
    const std::size_t samples = cfg.samples.value_or(std::max<std::size_t>(1, cfg.n / 2));
    const json meta = {{"mode", "synthetic-bench"}, {"seed", seed}, {"samples", samples}, {"n", cfg.n}};
    return with_metadata(meta, [&] {
        const SymMatrix sigma =
            synth_sparse_cov(cfg.n, sparsity_or_default(cfg), derive_seed(seed, kGroundTruth), cfg.diagonal_scale);
        const auto xs = gaussian_samples(sigma, samples, derive_seed(seed, kSamples));
        const ProblemSpec spec(sample_covariance(xs), cfg.rho, lambda_required(cfg));
        SolverConfig plain = cfg.solver;
        plain.fls_enabled = false;
        SolverConfig fls = cfg.solver;
        fls.fls_enabled = true;
        BenchCell cell{seed, {}, {}};
        cell.plain = solve_with_trace(spec, plain, cfg, "trace_bench_s" + std::to_string(seed) + "_plain.jsonl").trace;
        cell.fls = solve_with_trace(spec, fls, cfg, "trace_bench_s" + std::to_string(seed) + "_fls.jsonl").trace;
        return cell;
    });
}

SymMatrix portfolio_ground_truth(std::size_t n, double sparsity, std::uint64_t seed, double diagonal_scale,
                                 double volatility_dispersion)
{
    const SymMatrix pattern = synth_sparse_cov(n, sparsity, seed, 1.0);
    std::mt19937_64 rng(derive_seed(seed, kVolatility));
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector vol(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < vol.size(); ++i) {
        vol(i) = std::exp(volatility_dispersion * normal(rng));
    }
    const Matrix scaled = diagonal_scale * (vol.asDiagonal() * pattern.data() * vol.asDiagonal());
    return SymMatrix(scaled, SymmetryPolicy::Symmetrize);
}

Vector portfolio_returns(std::size_t n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(5e-4, 1e-3);
    Vector r(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        r(i) = normal(rng);
    }
    return r;
}

PortfolioCell portfolio_cell(const RunConfig& cfg, std::uint64_t seed, std::size_t samples, double sparsity,
                             double lambda)
{
    const json meta = {{"mode", "portfolio"}, {"seed", seed},       {"samples", samples},
                       {"n", cfg.n},          {"sparsity", sparsity}, {"lambda", lambda}};
    return with_metadata(meta, [&] {
        const SymMatrix sigma = portfolio_ground_truth(cfg.n, sparsity, derive_seed(seed, kGroundTruth),
                                                       cfg.diagonal_scale, cfg.volatility_dispersion);
        const Vector r = portfolio_returns(cfg.n, derive_seed(seed, kReturns));
        const double mu = r.mean();
        const auto xs = gaussian_samples(sigma, samples, derive_seed(seed, kSamples));
        const SymMatrix sigma_hat = sample_covariance(xs);
        const ProblemSpec spec(sigma_hat, cfg.rho, lambda);
        SolveResult est = solve_with_trace(spec, cfg.solver, cfg,
                                           "trace_portfolio_s" + std::to_string(seed) + "_N"
                                               + std::to_string(samples) + "_k" + std::to_string(sparsity)
                                               + ".jsonl");

        const MvoInstance from_sample{sigma_hat, r, mu, 1.0};
        const MvoInstance from_theta{est.solution, r, mu, 1.0};
        const Portfolio w_sample = solve_mvo(from_sample);
        const Portfolio w_theta = solve_mvo(from_theta);
        const Portfolio w_equal = equal_weight(cfg.n);

        PortfolioCell cell{};
        cell.seed = seed;
        cell.samples = samples;
        cell.sparsity = sparsity;
        cell.lambda = lambda;
        cell.risk_sample = oos_risk(w_sample, sigma);
        cell.risk_equal = oos_risk(w_equal, sigma);
        cell.risk_theta = oos_risk(w_theta, sigma);
        cell.max_constraint_violation =
            std::max({constraint_violation(from_sample, w_sample.weights),
                      constraint_violation(from_theta, w_theta.weights),
                      constraint_violation(from_theta, w_equal.weights)});
        cell.max_kkt_residual =
            std::max(kkt_residual(from_sample, w_sample.weights), kkt_residual(from_theta, w_theta.weights));
        cell.trace = std::move(est.trace);
        return cell;
    });
}

json run_synthetic_bench(const RunConfig& cfg)
{
    cfg.validate();
    const auto seeds = seed_list(cfg);
    std::vector<BenchCell> cells(seeds.size());
    parallel_for(seeds.size(), [&](std::size_t i) { cells[i] = bench_cell(cfg, seeds[i]); });

    json report = base_report(cfg);
    report["samples"] = cfg.samples.value_or(std::max<std::size_t>(1, cfg.n / 2));
    report["sparsity"] = sparsity_or_default(cfg);
    report["lambda"] = *cfg.lambda;
    json rows = json::array();
    AuditCounters total;
    for (const BenchCell& c : cells) {
        for (const auto& [variant, trace] : {std::pair<std::string, const OuterTrace*>{"iscopt", &c.plain},
                                             std::pair<std::string, const OuterTrace*>{"iscopt_fls", &c.fls}}) {
            json row = summary_json(*trace);
            row["seed"] = c.seed;
            row["variant"] = variant;
            row["F_hundreds"] = trace->final_F / 100.0;
            row["wall_seconds"] = trace->elapsed;
            rows.push_back(row);
            add_audits(total, trace->audits);
        }
    }
    report["rows"] = rows;
    report["audits"] = to_json(total);

    if (!cfg.output.empty()) {
        auto out = open_table(cfg, "bench.csv");
        out << "n,sparsity,lambda,seed,variant,F_hundreds,wall_seconds,iterations,termination,audit_failures\n";
        for (const json& row : rows) {
            out << cfg.n << ',' << sparsity_or_default(cfg) << ',' << *cfg.lambda << ','
                << row["seed"].get<std::uint64_t>() << ',' << row["variant"].get<std::string>() << ','
                << row["F_hundreds"].get<double>() << ',' << row["wall_seconds"].get<double>() << ','
                << row["iterations"].get<std::size_t>() << ',' << row["termination"].get<std::string>() << ','
                << row["audits"]["total_failures"].get<std::size_t>() << '\n';
        }
    }
    write_report(cfg, report);
    return report;
}

json run_recovery(const RunConfig& cfg)
{
    cfg.validate();
    const auto seeds = seed_list(cfg);
    const auto sizes = cfg.samples ? std::vector<std::size_t>{*cfg.samples} : recovery_sample_sizes(cfg.n);
    std::vector<RecoveryCell> cells(seeds.size() * sizes.size());
    parallel_for(cells.size(), [&](std::size_t i) {
        cells[i] = recovery_cell(cfg, seeds[i / sizes.size()], sizes[i % sizes.size()]);
    });

    json report = base_report(cfg);
    report["sparsity"] = sparsity_or_default(cfg);
    report["lambda"] = *cfg.lambda;
    json rows = json::array();
    AuditCounters total;
    for (const RecoveryCell& c : cells) {
        rows.push_back({{"seed", c.seed},
                        {"samples", c.samples},
                        {"relative_error", c.relative_error},
                        {"precision", c.precision},
                        {"recall", c.recall},
                        {"solver", summary_json(c.trace)}});
        add_audits(total, c.trace.audits);
    }
    json summary = json::array();
    for (const std::size_t size : sizes) {
        std::vector<double> err, prec, rec;
        for (const RecoveryCell& c : cells) {
            if (c.samples == size) {
                err.push_back(c.relative_error);
                prec.push_back(c.precision);
                rec.push_back(c.recall);
            }
        }
        summary.push_back({{"samples", size},
                           {"mean_relative_error", mean_of(err)},
                           {"mean_precision", mean_of(prec)},
                           {"mean_recall", mean_of(rec)}});
    }
    report["rows"] = rows;
    report["summary"] = summary;
    report["audits"] = to_json(total);

    if (!cfg.output.empty()) {
        auto out = open_table(cfg, "recovery.csv");
        out << "seed,samples,relative_error,precision,recall\n";
        for (const RecoveryCell& c : cells) {
            out << c.seed << ',' << c.samples << ',' << c.relative_error << ',' << c.precision << ',' << c.recall
                << '\n';
        }
    }
    write_report(cfg, report);
    return report;
}

json run_portfolio(const RunConfig& cfg)
{
    cfg.validate();
    const auto seeds = seed_list(cfg);
    const auto sizes = cfg.samples ? std::vector<std::size_t>{*cfg.samples} : portfolio_sample_sizes(cfg.n);
    const auto grid = cfg.lambda ? std::vector<std::pair<double, double>>{{*cfg.sparsity, *cfg.lambda}}
                                 : portfolio_grid();

    struct Task
    {
        std::uint64_t seed;
        std::size_t samples;
        double sparsity;
        double lambda;
    };
    std::vector<Task> tasks;
    for (const std::size_t size : sizes) {
        for (const auto& [sparsity, lambda] : grid) {
            for (const std::uint64_t seed : seeds) {
                tasks.push_back({seed, size, sparsity, lambda});
            }
        }
    }
    std::vector<PortfolioCell> cells(tasks.size());
    parallel_for(tasks.size(), [&](std::size_t i) {
        cells[i] = portfolio_cell(cfg, tasks[i].seed, tasks[i].samples, tasks[i].sparsity, tasks[i].lambda);
    });

    json report = base_report(cfg);
    json rows = json::array();
    AuditCounters total;
    for (const PortfolioCell& c : cells) {
        rows.push_back({{"seed", c.seed},
                        {"samples", c.samples},
                        {"sparsity", c.sparsity},
                        {"lambda", c.lambda},
                        {"risk_sample", c.risk_sample},
                        {"risk_equal", c.risk_equal},
                        {"risk_theta", c.risk_theta},
                        {"max_constraint_violation", c.max_constraint_violation},
                        {"max_kkt_residual", c.max_kkt_residual},
                        {"solver", summary_json(c.trace)}});
        add_audits(total, c.trace.audits);
    }
    json tables = json::array();
    for (const std::size_t size : sizes) {
        json table_rows = json::array();
        for (const auto& [sparsity, lambda] : grid) {
            std::vector<double> rs, re, rt;
            std::size_t theta_beats_sample = 0, theta_beats_equal = 0;
            for (const PortfolioCell& c : cells) {
                if (c.samples == size && c.sparsity == sparsity && c.lambda == lambda) {
                    rs.push_back(c.risk_sample);
                    re.push_back(c.risk_equal);
                    rt.push_back(c.risk_theta);
                    theta_beats_sample += c.risk_theta < c.risk_sample ? 1 : 0;
                    theta_beats_equal += c.risk_theta <= c.risk_equal ? 1 : 0;
                }
            }
            table_rows.push_back({{"lambda", lambda},
                                  {"sparsity", sparsity},
                                  {"risk_sample", mean_of(rs)},
                                  {"risk_equal", mean_of(re)},
                                  {"risk_theta", mean_of(rt)},
                                  {"theta_below_sample", theta_beats_sample},
                                  {"theta_at_most_equal", theta_beats_equal},
                                  {"seeds", rs.size()}});
        }
        tables.push_back({{"samples", size}, {"rows", table_rows}});

        if (!cfg.output.empty()) {
            auto out = open_table(cfg, "portfolio_N" + std::to_string(size) + ".csv");
            out << "lambda,sparsity,risk_sample,risk_equal,risk_theta\n";
            for (const json& row : table_rows) {
                out << row["lambda"].get<double>() << ',' << row["sparsity"].get<double>() << ','
                    << row["risk_sample"].get<double>() << ',' << row["risk_equal"].get<double>() << ','
                    << row["risk_theta"].get<double>() << '\n';
            }
        }
    }
    report["rows"] = rows;
    report["tables"] = tables;
    report["audits"] = to_json(total);
    write_report(cfg, report);
    return report;
}

json run_estimate(const RunConfig& cfg)
{
    cfg.validate();
    std::vector<std::string> labels;
    json input_info;
    SymMatrix sigma_hat = SymMatrix::identity(1);

    std::string first_line;
    {
        std::ifstream probe(cfg.input);
        std::getline(probe, first_line);
    }
    if (first_line.rfind("date,ticker,close", 0) == 0) {
        const ReturnSeries series = ingest_returns(cfg.input);
        sigma_hat = sample_covariance(return_samples(series, cfg.center), false);
        labels = series.tickers;
        input_info = {{"kind", "returns"},
                      {"assets", series.tickers.size()},
                      {"periods", series.dates.size()},
                      {"dropped", series.dropped}};
    } else {
        sigma_hat = io::load_matrix(cfg.input, SymmetryPolicy::Symmetrize);
        input_info = {{"kind", "covariance"}, {"assets", sigma_hat.dim()}};
    }

    const ProblemSpec spec(sigma_hat, cfg.rho, *cfg.lambda);
    const SolveResult result = solve_with_trace(spec, cfg.solver, cfg, "trace_estimate.jsonl");
    io::save_matrix(cfg.output / "theta.csv", result.solution);
    const std::size_t top_k = std::min<std::size_t>(cfg.top_k, std::max<std::size_t>(1, spec.dim() * spec.dim()));
    export_correlation_graph(result.solution, top_k, cfg.output / "graph.json", labels);

    json report = base_report(cfg);
    report["input"] = input_info;
    report["solver"] = summary_json(result.trace);
    report["audits"] = to_json(result.trace.audits);
    report["nonzeros"] = count_nonzeros(result.solution.data(), kSupportThreshold);
    write_report(cfg, report);
    return report;
}

json run(const RunConfig& cfg)
{
    switch (cfg.mode) {
    case Mode::SyntheticBench: return run_synthetic_bench(cfg);
    case Mode::Recovery: return run_recovery(cfg);
    case Mode::Portfolio: return run_portfolio(cfg);
    case Mode::Estimate: return run_estimate(cfg);
    }
    throw InvalidArgument("unknown mode");
}

bool all_finite(const json& j)
{
    if (j.is_number_float()) {
        return std::isfinite(j.get<double>());
    }
    if (j.is_structured()) {
        for (const auto& item : j) {
            if (!all_finite(item)) {
                return false;
            }
        }
    }
    return true;
}

json strip_timing(const json& j)
{
    if (j.is_object()) {
        json out = json::object();
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (it.key() != "elapsed" && it.key() != "wall_seconds") {
                out[it.key()] = strip_timing(it.value());
            }
        }
        return out;
    }
    if (j.is_array()) {
        json out = json::array();
        for (const auto& item : j) {
            out.push_back(strip_timing(item));
        }
        return out;
    }
    return j;
}

} // namespace scopt
