#pragma once

#include "cgdiag/sparse.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace cgdiag {

/// Evolving CG/PCG state. Only the vectors of the current iteration are kept.
///
/// For plain CG `rnorm2` is ||r_k||^2; under PCG it is z_k^T r_k, and `z` holds
/// M^{-1} r_k. With the identity preconditioner `z` stays empty and `r` plays
/// its role.
struct CgState {
    std::size_t k = 0;
    Vector x;
    Vector r;
    Vector z;
    Vector p;
    Vector Ap;
    double gamma_prev = 0.0;  ///< gamma_{k-1}; zero before the first step
    double delta = 0.0;       ///< delta_k; zero before the first step
    double rnorm2 = 0.0;
    bool converged = false;   ///< set once rnorm2 is exactly zero
    bool preconditioned = false;

    std::span<const double> precond_residual() const { return preconditioned ? z : r; }
};

/// The scalars CG produces in one iteration; everything the estimators consume.
struct IterationRecord {
    std::size_t k = 0;        ///< index of the new iterate x_k
    double gamma = 0.0;       ///< gamma_{k-1}
    double delta = 0.0;       ///< delta_k
    double rnorm2 = 0.0;      ///< ||r_k||^2 (z_k^T r_k under PCG)
    double rnorm2_prev = 0.0; ///< ||r_{k-1}||^2 (z_{k-1}^T r_{k-1})
    double psi = 0.0;         ///< gamma_{k-1} * rnorm2_prev
    std::optional<double> xnorm2_direct;
};

/// r_0 = b - A x_0, z_0 = M^{-1} r_0, p_0 = z_0. An empty `x0` means zero.
CgState init_cg(const SparseSymMatrix& A, const Preconditioner& M, std::span<const double> b,
                std::span<const double> x0 = {});

/// One iteration of CG (identity M) or PCG, in the textbook line order.
/// Throws BreakdownError on nonpositive p^T A p or z^T r, and DomainError
/// if the state has already converged.
IterationRecord cg_step(CgState& state, const SparseSymMatrix& A, const Preconditioner& M,
                        MatvecMode mode = MatvecMode::strict);

/// Lanczos quantities recovered from the CG coefficients.
struct LanczosCoeffs {
    std::size_t k = 0;
    double alpha_tilde = 0.0;  ///< diagonal entry of T_k
    double beta_tilde = 0.0;   ///< off-diagonal entry (k, k+1) of T_{k+1}
    double alpha = 0.0;        ///< diagonal entry of the upper bidiagonal factor, 1/sqrt(gamma_{k-1})
    double beta = 0.0;         ///< superdiagonal entry, sqrt(delta_k / gamma_{k-1})
};

/// Incremental CG -> Lanczos coefficient map. Holds gamma_{k-2} and delta_{k-1}.
class LanczosMap {
public:
    /// Returns nullopt (and stays truncated) once a negative delta is seen.
    std::optional<LanczosCoeffs> next(const IterationRecord& rec);
    bool truncated() const noexcept { return truncated_; }

private:
    double gamma_prev_ = 1.0;  // gamma_{-1} = 1
    double delta_prev_ = 0.0;  // delta_0 = 0
    bool truncated_ = false;
};

/// Batch form of LanczosMap; stops at the first flagged record.
std::vector<LanczosCoeffs> lanczos_coeffs(std::span<const IterationRecord> records);

/// Quantities a stopping rule may inspect after an iteration.
struct StopContext {
    std::size_t k = 0;
    double rnorm = 0.0;
    double bnorm = 0.0;
    std::optional<double> backward_error;
    std::optional<double> anorm_error_estimate;  ///< an estimate of ||x - x_k||_A
    std::optional<double> anorm_initial;         ///< reference scale for the relative A-norm test
};

using ConvergenceTest = std::function<bool(const StopContext&)>;

/// ||r_k|| / ||b|| <= tol.
ConvergenceTest relative_residual_test(double tol);
/// Normwise backward error <= tol (false while no estimate is available).
ConvergenceTest backward_error_test(double tol);
/// Estimated ||x - x_k||_A / ||x - x_0||_A <= tol (false while not available).
ConvergenceTest anorm_bound_test(double tol);

}  // namespace cgdiag
