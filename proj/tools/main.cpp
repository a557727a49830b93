#include "harness.hpp"

#include "cgdiag/errors.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

int main(int argc, char** argv) {
    using namespace cgdiag;
    using namespace cgdiag::harness;

    CLI::App app{"CG with online error bounds, Ritz value estimates and backward errors"};
    app.require_subcommand(1);

    RunConfig config;
    std::string rhs = "ones", precond = "none", mu = "auto", stop = "none";
    std::optional<double> tol;
    bool parallel = false;

    auto* solve_cmd = app.add_subcommand("solve", "Run CG/PCG on a Matrix Market system");
    solve_cmd->add_option("--matrix", config.matrix_path, "Matrix Market file (symmetric positive definite)")
        ->required();
    solve_cmd->add_option("--rhs", rhs, "file:<path> | ones | random:<seed> | e_last | eigen_equal");
    solve_cmd->add_option("--precond", precond, "none | jacobi | ic0");
    solve_cmd->add_option("--mu", mu, "Gauss-Radau node: fixed:<value> | auto | oracle");
    solve_cmd->add_option("--delay", config.delay, "Delay d of the bounds");
    solve_cmd->add_option("--max-iters", config.max_iters, "Iteration limit (default 2n)");
    solve_cmd->add_option("--tol", tol, "Tolerance for the stopping rule");
    solve_cmd->add_option("--stop", stop, "none | residual | backward | anorm (residual when only --tol is given)");
    solve_cmd->add_flag("--refine", config.refine, "Refine Ritz estimates by shifted inverse iteration");
    solve_cmd->add_flag("--verify", config.verify, "Compare with dense reference computations");
    solve_cmd->add_flag("--parallel", parallel, "Multithreaded matrix-vector products");
    solve_cmd->add_option("--log", config.log_path, "CSV output (default stdout)");
    solve_cmd->add_option("--plot", config.plot_path, "SVG output");

    std::size_t grid = 60;
    std::string out_path;
    auto* fd_cmd = app.add_subcommand("gen-fd", "Write the variable-coefficient finite-difference test matrix");
    fd_cmd->add_option("--grid", grid, "Interior grid points per direction");
    fd_cmd->add_option("--out", out_path, "Output Matrix Market file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 3;
    }

    if (*fd_cmd) {
        try {
            const SparseSymMatrix A = diffusion_fd_matrix(grid);
            std::ofstream out(out_path);
            if (!out) {
                std::cerr << "input error: cannot write " << out_path << '\n';
                return 3;
            }
            write_matrix_market(out, A, "five-point diffusion, grid " + std::to_string(grid));
        } catch (const Error& e) {
            std::cerr << "error: " << e.what() << '\n';
            return 1;
        }
        return 0;
    }

    try {
        config.rhs = parse_rhs(rhs);
        config.precond = parse_preconditioner_kind(precond);
        config.mu = parse_mu(mu);
        config.stop = parse_stop_rule(stop);
        if (tol) {
            config.tol = *tol;
            if (config.stop == StopRule::none) config.stop = StopRule::residual;
        } else if (config.stop != StopRule::none) {
            std::cerr << "input error: --stop needs --tol\n";
            return 3;
        }
        config.matvec = parallel ? MatvecMode::parallel : MatvecMode::strict;
    } catch (const Error& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return 3;
    }
    return run(config, std::cerr).exit_code;
}
