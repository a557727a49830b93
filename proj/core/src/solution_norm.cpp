#include "cgdiag/solution_norm.hpp"

#include "cgdiag/errors.hpp"

#include <cmath>

namespace cgdiag {

void XiState::advance(double gamma_k, double rnorm2_k, double phi_k) {
    if (!(gamma_k > 0.0)) throw DomainError("XiState: gamma must be positive");
    if (!(phi_k > 0.0)) throw DomainError("XiState: phi must be positive");
    if (rnorm2_k < 0.0) throw DomainError("XiState: negative residual norm");
    const double psi = gamma_k * rnorm2_k;
    const double theta_next = theta_ + gamma_k / phi_k;
    xi_ += psi * (theta_next + theta_);
    theta_ = theta_next;
    ++k_;
}

StartCorrection::StartCorrection(double x0_norm2) : x0_norm2_(x0_norm2) {
    if (x0_norm2 < 0.0) throw DomainError("StartCorrection: negative norm of x0");
}

void StartCorrection::advance(double x0_dot_r_k, double rnorm2_k, double gamma_k) {
    if (!(rnorm2_k > 0.0)) throw DomainError("StartCorrection: residual must be nonzero");
    weight_ += x0_dot_r_k / rnorm2_k;
    cross_ += gamma_k * rnorm2_k * weight_;
}

double backward_error(double rnorm, double anorm_est, double xnorm_est, double bnorm) {
    if (rnorm < 0.0 || anorm_est < 0.0 || xnorm_est < 0.0 || bnorm < 0.0) {
        throw DomainError("backward_error: inputs must be nonnegative");
    }
    const double denom = anorm_est * xnorm_est + bnorm;
    if (denom == 0.0) throw DomainError("backward_error: zero denominator");
    return rnorm / denom;
}

double precond_backward_error(double ztr, double rho_max_hat, double xi, double bnorm_minv2) {
    if (ztr < 0.0) throw BreakdownError(BreakdownError::Kind::preconditioner_not_spd, 0, ztr);
    if (rho_max_hat < 0.0 || xi < 0.0 || bnorm_minv2 < 0.0) {
        throw DomainError("precond_backward_error: inputs must be nonnegative");
    }
    const double denom = std::sqrt(rho_max_hat) * std::sqrt(xi) + std::sqrt(bnorm_minv2);
    if (denom == 0.0) throw DomainError("precond_backward_error: zero denominator");
    return std::sqrt(ztr) / denom;
}

}  // namespace cgdiag
