#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace cgdiag {

/// phi_k = phi_{k-1} / (phi_{k-1} + delta_k), the ratio ||r_k||^2 / ||p_k||^2.
/// Throws DomainError unless phi_prev is in (0, 1] and delta > 0.
double update_phi(double phi_prev, double delta);

class PhiState {
public:
    double value() const noexcept { return phi_; }
    void update(double delta) { phi_ = update_phi(phi_, delta); }

private:
    double phi_ = 1.0;
};

/// Runs the Gauss-Radau coefficient recurrence for a prescribed node mu.
///
/// gamma^(mu)_0 = 1/mu and
///   gamma^(mu)_{k+1} = (gamma^(mu)_k - gamma_k) / (mu (gamma^(mu)_k - gamma_k) + delta_{k+1}).
/// When gamma^(mu)_k - gamma_k <= 0 (mu above lambda_min, or roundoff) the
/// recurrence keeps running on the signed values and `sign_ok` is cleared for
/// good; `magnitude()` is what gets reported in that case.
class GaussRadauState {
public:
    /// Throws DomainError for nonpositive mu.
    explicit GaussRadauState(double mu);

    double mu() const noexcept { return mu_; }
    std::size_t k() const noexcept { return k_; }
    double gamma_mu() const noexcept { return gamma_mu_; }
    double magnitude() const noexcept;
    bool sign_ok() const noexcept { return sign_ok_; }

    /// Consumes gamma_k and delta_{k+1}; returns gamma^(mu)_{k+1}.
    /// Throws DegenerateNodeError when the denominator is exactly zero.
    double update(double gamma_k, double delta_k1);

private:
    double mu_;
    double gamma_mu_;
    std::size_t k_ = 0;
    bool sign_ok_ = true;
};

/// Free-function form of GaussRadauState::update.
double update_gamma_mu(GaussRadauState& state, double gamma_k, double delta_k1);

/// Holds the d most recent quadrature weights psi_j = gamma_j ||r_j||^2.
///
/// The partial sum is the literal sum of the window taken oldest first; it is
/// recomputed from the window rather than updated by add/subtract, because
/// subtracting a large old weight from a sum dominated by it cancels the small
/// recent ones.
class BoundLedger {
public:
    explicit BoundLedger(std::size_t delay);

    std::size_t delay() const noexcept { return delay_; }
    /// True once d weights are buffered.
    bool ready() const noexcept { return count_ >= delay_; }
    std::size_t pushed() const noexcept { return count_; }

    void push(double psi);
    /// sum_{j=k}^{k+d-1} psi_j for the current window, oldest first.
    double partial_sum() const;
    /// Buffered weights, oldest first.
    std::vector<double> window() const;

private:
    std::size_t delay_;
    std::vector<double> ring_;
    std::size_t head_ = 0;  // slot of the oldest weight once the ring is full
    std::size_t count_ = 0;
};

/// A bound value; `tainted` marks Gauss-Radau values computed after the node
/// recurrence lost its sign (mu > lambda_min behaviour).
struct BoundValue {
    double value = 0.0;
    bool tainted = false;
};

/// Squared Gauss lower bound for iteration k, given gamma_{k+d} and ||r_{k+d}||^2:
/// sum_{j=k}^{k+d-1} psi_j + gamma_{k+d} ||r_{k+d}||^2. nullopt while the ledger is underfilled.
std::optional<double> gauss_lower(const BoundLedger& ledger, double gamma_kd, double rnorm2_kd);

/// Squared Gauss-Radau upper bound with gamma^(mu)_{k+d} in place of gamma_{k+d}.
/// The magnitude of gamma_mu is used; `sign_ok = false` taints the result.
std::optional<BoundValue> gauss_radau_upper(const BoundLedger& ledger, double gamma_mu_kd, double rnorm2_kd,
                                            bool sign_ok = true);

/// Squared bound sum psi + (||r_{k+d}||^2 / mu) phi_{k+d}. Throws DomainError for mu <= 0.
std::optional<double> new_upper(const BoundLedger& ledger, double phi_kd, double rnorm2_kd, double mu);

/// (||r_k||^2 / mu_k) phi_k with mu_k a smallest-Ritz-value estimate. Not a
/// guaranteed bound. Throws DomainError for mu_k <= 0.
double approx_upper(double phi_k, double rnorm2_k, double mu_k);

}  // namespace cgdiag
