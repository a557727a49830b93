#pragma once

#include "cgdiag/cg.hpp"
#include "cgdiag/monitor.hpp"
#include "cgdiag/sparse.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace cgdiag::harness {

enum class RhsMode { file, ones, random, e_last, eigen_equal };

struct RhsSpec {
    RhsMode mode = RhsMode::ones;
    std::string path;        ///< for file:<path>
    std::uint64_t seed = 0;  ///< for random:<seed>
};

/// Parses file:<path> | ones | random:<seed> | e_last | eigen_equal.
RhsSpec parse_rhs(const std::string& text);

enum class MuMode { auto_ritz, fixed, oracle };

struct MuSpec {
    MuMode mode = MuMode::auto_ritz;
    double value = 0.0;
};

/// Parses fixed:<value> | auto | oracle.
MuSpec parse_mu(const std::string& text);

enum class StopRule { none, residual, backward_error, anorm };

StopRule parse_stop_rule(const std::string& text);

struct RunConfig {
    std::string matrix_path;
    RhsSpec rhs;
    PreconditionerKind precond = PreconditionerKind::none;
    MuSpec mu;
    std::size_t delay = 0;
    std::size_t max_iters = 0;  ///< 0 selects 2n
    StopRule stop = StopRule::none;
    double tol = 0.0;
    bool refine = false;
    bool verify = false;
    MatvecMode matvec = MatvecMode::strict;
    std::string log_path;
    std::string plot_path;
};

/// Builds the right-hand side. eigen_equal needs a dense eigendecomposition
/// and throws OracleError above the verify limit.
Vector make_rhs(const SparseSymMatrix& A, const RhsSpec& spec);

/// Unit vector with entries drawn uniformly from [-1, 1) by a seeded mt19937_64.
Vector random_unit_vector(std::size_t n, std::uint64_t seed);

struct SolveOptions {
    MonitorConfig monitor;  ///< bnorm_minv2 and x0_norm2 are filled in by solve()
    std::size_t max_iters = 0;
    StopRule stop = StopRule::none;
    double tol = 0.0;
    bool verify = false;
    MatvecMode matvec = MatvecMode::strict;
    Vector x0;
};

/// Dense reference data collected in verify mode.
struct OracleData {
    double lambda_min = 0.0;  ///< of M^{-1} A
    double lambda_max = 0.0;
    std::vector<double> true_err_anorm;        ///< ||x - x_k||_A per iterate
    std::vector<double> xnorm_direct;          ///< ||x_k|| (M-norm under PCG)
    std::vector<double> backward_err_oracle;   ///< backward error with dense ||A^||
};

struct SolveResult {
    std::vector<DiagnosticsRow> rows;
    std::vector<IterationRecord> records;
    std::vector<LanczosCoeffs> coeffs;
    std::vector<double> rnorm;  ///< true ||r_k||
    std::optional<OracleData> oracle;
    bool converged = false;     ///< r_k became exactly zero
    bool stopped = false;       ///< the stopping rule fired
    Vector x;
};

/// Runs CG/PCG with the diagnostics monitor. Breakdowns propagate as exceptions.
SolveResult solve(const SparseSymMatrix& A, const Vector& b, const Preconditioner& M, const SolveOptions& options);

/// One CSV row; error quantities are square roots of the monitor's squared values.
struct IterationLogRow {
    std::size_t k = 0;
    double rnorm = 0.0;
    std::optional<double> gauss_lower;
    std::optional<double> gauss_radau_upper;
    std::optional<bool> gauss_radau_tainted;
    std::optional<double> new_upper;
    std::optional<double> approx_upper;
    std::optional<double> ritz_max_cheap;
    std::optional<double> ritz_min_cheap;
    std::optional<double> ritz_max_refined;
    std::optional<double> ritz_min_refined;
    std::optional<double> xi_sqrt;
    std::optional<double> backward_err_precond;
    std::optional<double> backward_err_oracle;
    std::optional<double> true_err_anorm;
};

std::vector<IterationLogRow> log_rows(const SolveResult& result);

const std::vector<std::string>& log_columns();
void write_csv(std::ostream& out, const std::vector<IterationLogRow>& rows);
/// Log-scale line chart of the error and backward error columns.
void write_svg(std::ostream& out, const std::vector<IterationLogRow>& rows, const std::string& title);

/// 17 significant digits, so values round-trip exactly.
std::string format_double(double v);

struct CheckResult {
    std::string name;
    bool passed = true;
    std::string detail;
};

/// Invariant suite over a verified run. `mu` is the Gauss-Radau node used.
std::vector<CheckResult> verify_invariants(const SolveResult& result, std::optional<double> mu);

struct RunOutcome {
    SolveResult result;
    std::vector<CheckResult> checks;
    int exit_code = 0;
};

/// Loads the problem, solves, writes the artifacts named in the config.
RunOutcome run(const RunConfig& config, std::ostream& report);

}  // namespace cgdiag::harness
