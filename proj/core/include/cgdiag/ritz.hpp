#pragma once

#include "cgdiag/cg.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace cgdiag {

/// Largest eigenpair of the symmetric 2x2 matrix [rho sigma; sigma tau].
struct TwoByTwoEig {
    double rho = 0.0;
    double sigma = 0.0;
    double tau = 0.0;
    double chi = 0.0;          ///< sqrt((rho - tau)^2 + 4 sigma^2)
    double lambda_plus = 0.0;  ///< (rho + tau + chi) / 2
    double c2 = 0.0;           ///< squared second component of the unit eigenvector
    double c = 0.0;            ///< signed second component, sign(c) = sign(sigma), sign(0) = +1
    double s = 1.0;            ///< first component, s = sqrt(1 - c^2) >= 0
};

/// Closed-form solution. chi = 0 (a multiple of the identity) gives c = 0, s = 1.
TwoByTwoEig two_by_two_eigmax(double rho, double sigma, double tau);

enum class IncNormMode {
    forward,  ///< estimates ||B_k||^2, i.e. lambda_max(B_k^T B_k)
    inverse,  ///< estimates ||B_k^{-1}||^2, i.e. 1 / lambda_min(B_k^T B_k)
};

/// Scalar state of the incremental norm estimator for a growing upper
/// bidiagonal matrix B_k (or its inverse). Carries no arrays.
class IncNormState {
public:
    /// rho_1 = alpha_1^2, c_0 = 1.
    static IncNormState forward(double alpha1);
    /// rho_1 = alpha_1^{-2}, tau_0 = rho_1, sigma_0 = 0, s_0 = 0, c_0 = 1.
    static IncNormState inverse(double alpha1);

    IncNormMode mode() const noexcept { return mode_; }
    std::size_t k() const noexcept { return k_; }
    double rho() const noexcept { return rho_; }
    double s() const noexcept { return s_; }
    double c() const noexcept { return c_; }
    double sigma() const noexcept { return sigma_; }
    double tau() const noexcept { return tau_; }

    /// lambda_max estimate (forward) or lambda_min estimate 1/rho (inverse).
    double estimate() const noexcept { return mode_ == IncNormMode::forward ? rho_ : 1.0 / rho_; }

    /// Appends one column given the already-formed 2x2 entries sigma_k, tau_k:
    /// rho_{k+1} = rho_k + chi_k c_k^2.
    TwoByTwoEig advance(double sigma_k, double tau_k);

private:
    IncNormMode mode_ = IncNormMode::forward;
    std::size_t k_ = 1;
    double rho_ = 0.0;
    double s_ = 0.0;
    double c_ = 1.0;
    double sigma_ = 0.0;
    double tau_ = 0.0;
};

/// sigma_k = alpha_k beta_k c_{k-1}, tau_k = beta_k^2 + alpha_{k+1}^2.
IncNormState incnorm_forward_step(IncNormState state, double alpha_k, double beta_k, double alpha_k1);

/// sigma_k = -(beta_k / alpha_{k+1})(s_{k-1} sigma_{k-1} + c_{k-1} tau_{k-1}),
/// tau_k = (beta_k^2 tau_{k-1} + 1) / alpha_{k+1}^2. Throws DomainError for alpha_{k+1} = 0.
IncNormState incnorm_inverse_step(IncNormState state, double alpha_k, double beta_k, double alpha_k1);

struct RitzEstimates {
    double rho_max = 0.0;  ///< estimate of the largest Ritz value (from below)
    double rho_min = 0.0;  ///< estimate of the smallest Ritz value (from above)
};

/// Advances both estimators by one column using CG coefficients directly
/// (gamma_{k-1}, delta_k, gamma_k), without forming the bidiagonal entries.
RitzEstimates from_cg_coeffs(double gamma_prev, double delta, double gamma, IncNormState& fwd,
                             IncNormState& inv);

/// Cheap extreme Ritz value tracker fed by the CG record stream.
/// After record k it reports estimates for T_k; O(1) scalars, no allocation.
class ExtremeRitzTracker {
public:
    std::optional<RitzEstimates> observe(const IterationRecord& rec);
    std::optional<RitzEstimates> current() const;

    const std::optional<IncNormState>& forward_state() const noexcept { return fwd_; }
    const std::optional<IncNormState>& inverse_state() const noexcept { return inv_; }

private:
    std::optional<IncNormState> fwd_;
    std::optional<IncNormState> inv_;
    double gamma_prev_ = 0.0;
    double delta_prev_ = 0.0;
};

/// LDL^T factorization of a symmetric tridiagonal matrix: unit lower
/// bidiagonal L with subdiagonal `l` (size n-1) and diagonal D = `d`.
struct LdlFactor {
    std::vector<double> d;
    std::vector<double> l;
};

/// Differential stationary qd transform with shift: L+ D+ L+^T = L D L^T - shift I.
///
/// D+ may be indefinite. An exactly zero pivot is replaced by eps ||T|| with the
/// sign of the previous pivot (eps = 2^-52).
LdlFactor shifted_ldlt(std::span<const double> d, std::span<const double> l, double shift);

/// Solves L D L^T y = rhs.
std::vector<double> ldlt_solve(const LdlFactor& f, std::span<const double> rhs);

/// Stored upper bidiagonal B_k = L_k^T: diagonal `alphas`, superdiagonal `betas`.
struct BidiagonalFactor {
    std::vector<double> alphas;
    std::vector<double> betas;

    std::size_t size() const noexcept { return alphas.size(); }
    /// Extends B_k to B_{k+1} with beta_k and alpha_{k+1}.
    void append(double beta_k, double alpha_k1);

    std::vector<double> multiply(std::span<const double> x) const;   ///< B x
    std::vector<double> solve(std::span<const double> y) const;      ///< B^{-1} y
    LdlFactor gram_ldlt() const;          ///< LDL^T of B^T B
    LdlFactor reversed_outer_ldlt() const;///< LDL^T of J B B^T J (J the reversal)
};

struct RefineResult {
    double rho_hat = 0.0;      ///< ||B z_hat||^2 (max) or ||B^{-1} z_hat||^2 (min)
    double estimate = 0.0;     ///< lambda_max estimate (max) or 1/rho_hat (min)
    std::vector<double> z_hat;
    bool refined = false;      ///< false: solve failed, input returned unchanged
};

/// One shifted inverse iteration on B^T B with shift rho, started from z.
RefineResult refine_max(const BidiagonalFactor& B, std::span<const double> z, double rho);

/// One shifted inverse iteration on B B^T with shift 1/rho, started from z,
/// where rho estimates ||B^{-1}||^2.
RefineResult refine_min(const BidiagonalFactor& B, std::span<const double> z, double rho);

enum class RefineCadence { every_step, every_m, final_only };

/// Extreme Ritz value estimates improved by inverse iteration. Stores the
/// bidiagonal factor and both approximate singular vectors, so memory is O(k).
class RefinedRitzTracker {
public:
    explicit RefinedRitzTracker(RefineCadence cadence = RefineCadence::every_step, std::size_t every = 1);

    /// Returns estimates for T_k after record k. Values are refined on steps
    /// selected by the cadence; otherwise they are the general incremental
    /// estimates built on the last refined vectors.
    std::optional<RitzEstimates> observe(const IterationRecord& rec);

    /// Forces a refinement of the current estimates (used by final_only).
    std::optional<RitzEstimates> refine_now();
    std::optional<RitzEstimates> current() const;

    /// Number of refinement solves that failed and kept the unrefined value.
    std::size_t failed_refinements() const noexcept { return failed_; }

    const BidiagonalFactor& factor() const noexcept { return factor_; }
    const std::vector<double>& z_max() const noexcept { return z_max_; }
    const std::vector<double>& z_min() const noexcept { return z_min_; }
    const std::vector<double>& w_aux() const noexcept { return w_aux_; }
    double w_norm2() const noexcept { return w_norm2_; }

private:
    void append_column(double beta_k, double alpha_k1);
    void refine();

    RefineCadence cadence_;
    std::size_t every_;
    BidiagonalFactor factor_;
    std::vector<double> z_max_;
    std::vector<double> z_min_;
    std::vector<double> w_aux_;  // B_k^{-T} w_k, w_k the last column of B_k^{-1}
    double w_norm2_ = 0.0;
    double rho_max_ = 0.0;
    double rho_inv_ = 0.0;       // estimate of ||B_k^{-1}||^2
    double gamma_prev_ = 0.0;
    double delta_prev_ = 0.0;
    std::size_t failed_ = 0;
};

}  // namespace cgdiag
