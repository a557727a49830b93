#pragma once

#include <cstddef>
#include <optional>

namespace cgdiag {

/// Recurrences estimating ||x_k - x_0||^2 (the M-norm under PCG) from CG scalars.
///
///   theta_{k+1} = theta_k + gamma_k / phi_k
///   xi_{k+1}    = xi_k + psi_k (theta_{k+1} + theta_k)
///
/// phi_k is supplied by the caller, so the value shared with the bound
/// estimators is the one used here.
class XiState {
public:
    double xi() const noexcept { return xi_; }
    double theta() const noexcept { return theta_; }
    std::size_t k() const noexcept { return k_; }

    /// Consumes gamma_k, ||r_k||^2 (psi_k = gamma_k ||r_k||^2) and phi_k.
    /// Throws DomainError for nonpositive gamma or phi, or negative rnorm2.
    void advance(double gamma_k, double rnorm2_k, double phi_k);

private:
    double xi_ = 0.0;
    double theta_ = 0.0;
    std::size_t k_ = 0;
};

/// Cross term for a nonzero starting vector:
///   ||x_k||^2 = ||x_0||^2 + 2 C_k + xi_k,  C_k = x_0^T (x_k - x_0)
/// (M inner product under PCG). With omega_j = x_0^T r_j / ||r_j||^2, one inner
/// product per step, W_{j+1} = W_j + omega_j and C_{j+1} = C_j + psi_j W_{j+1}.
class StartCorrection {
public:
    /// `x0_norm2` is ||x_0||^2 (or x_0^T M x_0). Throws DomainError if negative.
    explicit StartCorrection(double x0_norm2);

    /// Consumes x_0^T r_k, ||r_k||^2 (z_k^T r_k under PCG) and gamma_k.
    /// Throws DomainError for rnorm2_k <= 0.
    void advance(double x0_dot_r_k, double rnorm2_k, double gamma_k);

    double cross() const noexcept { return cross_; }
    double x0_norm2() const noexcept { return x0_norm2_; }
    /// ||x_0||^2 + 2 C_k + xi_k.
    double estimate(double xi_k) const noexcept { return x0_norm2_ + 2.0 * cross_ + xi_k; }

private:
    double x0_norm2_;
    double weight_ = 0.0;
    double cross_ = 0.0;
};

/// ||r|| / (||A|| ||x|| + ||b||). Throws DomainError on negative input or a zero denominator.
double backward_error(double rnorm, double anorm_est, double xnorm_est, double bnorm);

/// sqrt(ztr) / (sqrt(rho_max_hat) sqrt(xi) + sqrt(b^T M^{-1} b)).
/// Throws BreakdownError for negative ztr and DomainError for a zero denominator.
double precond_backward_error(double ztr, double rho_max_hat, double xi, double bnorm_minv2);

}  // namespace cgdiag
