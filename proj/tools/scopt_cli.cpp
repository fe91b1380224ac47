#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "scopt/errors.hpp"
#include "scopt/harness.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"Sparse covariance estimation with an inexact proximal-Newton solver"};

    scopt::RunConfig cfg;
    std::string mode = "synthetic-bench";
    std::optional<std::size_t> samples;
    std::optional<double> sparsity;
    std::optional<double> lambda;
    std::string input;
    std::string output;
    bool fls = false;
    bool center = true;
    bool no_restart = false;

    app.add_option("--mode", mode, "synthetic-bench | recovery | portfolio | estimate")
        ->check(CLI::IsMember({"synthetic-bench", "recovery", "portfolio", "estimate"}));
    app.add_option("--n", cfg.n, "dimension of the synthetic ground truth")->check(CLI::PositiveNumber);
    app.add_option("--samples", samples, "number of samples N (mode default when omitted)");
    app.add_option("--sparsity", sparsity, "k / n^2 of the synthetic ground truth");
    app.add_option("--seed", cfg.seed, "first seed");
    app.add_option("--seeds", cfg.seeds, "number of consecutive seeds")->check(CLI::PositiveNumber);
    app.add_option("--rho", cfg.rho, "quadratic fit weight rho");
    app.add_option("--lambda", lambda, "l1 weight lambda");
    app.add_option("--eps-inner", cfg.solver.eps_inner, "certified subproblem accuracy");
    app.add_option("--gamma", cfg.solver.gamma, "outer tolerance on the Newton decrement");
    app.add_option("--i-max", cfg.solver.i_max, "maximum outer iterations");
    app.add_flag("--fls,!--no-fls", fls, "forward line search on damped steps");
    app.add_option("--power-iters", cfg.solver.power_iters, "power iterations for lambda_min");
    app.add_option("--wall-clock", cfg.solver.wall_clock_limit, "wall-clock limit per solve in seconds");
    app.add_option("--max-inner", cfg.solver.max_inner, "FISTA iteration cap per subproblem");
    app.add_flag("--no-restart", no_restart, "textbook FISTA without momentum restart");
    app.add_option("--input", input, "returns CSV (date,ticker,close) or covariance matrix (.csv/.bin)");
    app.add_option("--output", output, "output directory");
    app.add_option("--top-k", cfg.top_k, "edges kept in the correlation graph");
    app.add_flag("--center,!--no-center", center, "center returns before the sample covariance");
    app.add_option("--diag-scale", cfg.diagonal_scale, "diagonal of the synthetic ground truth");
    app.add_option("--vol-dispersion", cfg.volatility_dispersion, "sd of log-volatilities in portfolio mode");
    app.add_flag("--traces", cfg.write_traces, "write JSONL traces into the output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        cfg.mode = scopt::parse_mode(mode);
        cfg.samples = samples;
        cfg.sparsity = sparsity;
        cfg.lambda = lambda;
        cfg.input = input;
        cfg.output = output;
        cfg.solver.fls_enabled = fls;
        cfg.solver.restart = !no_restart;
        cfg.center = center;
        const auto report = scopt::run(cfg);
        if (output.empty()) {
            std::cout << report.dump(2) << '\n';
        } else {
            std::cout << "wrote " << output << "/report.json\n";
        }
    } catch (const scopt::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
