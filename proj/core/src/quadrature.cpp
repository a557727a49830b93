#include "cgdiag/quadrature.hpp"

#include "cgdiag/errors.hpp"

#include <cmath>
#include <string>

namespace cgdiag {

double update_phi(double phi_prev, double delta) {
    if (!(phi_prev > 0.0 && phi_prev <= 1.0)) {
        throw DomainError("update_phi: phi_prev = " + std::to_string(phi_prev) + " outside (0, 1]");
    }
    if (!(delta > 0.0)) throw DomainError("update_phi: delta must be positive");
    return phi_prev / (phi_prev + delta);
}

GaussRadauState::GaussRadauState(double mu) : mu_(mu), gamma_mu_(0.0) {
    if (!(mu > 0.0)) throw DomainError("Gauss-Radau node mu must be positive");
    gamma_mu_ = 1.0 / mu;
}

double GaussRadauState::magnitude() const noexcept { return std::abs(gamma_mu_); }

double GaussRadauState::update(double gamma_k, double delta_k1) {
    const double gap = gamma_mu_ - gamma_k;
    if (!(gap > 0.0)) sign_ok_ = false;
    const double denom = mu_ * gap + delta_k1;
    if (denom == 0.0) throw DegenerateNodeError(k_);
    gamma_mu_ = gap / denom;
    ++k_;
    if (!(gamma_mu_ > 0.0)) sign_ok_ = false;
    return gamma_mu_;
}

double update_gamma_mu(GaussRadauState& state, double gamma_k, double delta_k1) {
    return state.update(gamma_k, delta_k1);
}

BoundLedger::BoundLedger(std::size_t delay) : delay_(delay), ring_(delay, 0.0) {}

void BoundLedger::push(double psi) {
    ++count_;
    if (delay_ == 0) return;
    if (count_ <= delay_) {
        ring_[count_ - 1] = psi;
        return;
    }
    ring_[head_] = psi;
    head_ = (head_ + 1) % delay_;
}

double BoundLedger::partial_sum() const {
    double s = 0.0;
    const std::size_t held = count_ < delay_ ? count_ : delay_;
    for (std::size_t i = 0; i < held; ++i) s += ring_[(head_ + i) % delay_];
    return s;
}

std::vector<double> BoundLedger::window() const {
    std::vector<double> w;
    const std::size_t held = count_ < delay_ ? count_ : delay_;
    w.reserve(held);
    for (std::size_t i = 0; i < held; ++i) w.push_back(ring_[(head_ + i) % delay_]);
    return w;
}

std::optional<double> gauss_lower(const BoundLedger& ledger, double gamma_kd, double rnorm2_kd) {
    if (!ledger.ready()) return std::nullopt;
    return ledger.partial_sum() + gamma_kd * rnorm2_kd;
}

std::optional<BoundValue> gauss_radau_upper(const BoundLedger& ledger, double gamma_mu_kd, double rnorm2_kd,
                                            bool sign_ok) {
    if (!ledger.ready()) return std::nullopt;
    const bool tainted = !sign_ok || !(gamma_mu_kd > 0.0);
    return BoundValue{ledger.partial_sum() + std::abs(gamma_mu_kd) * rnorm2_kd, tainted};
}

std::optional<double> new_upper(const BoundLedger& ledger, double phi_kd, double rnorm2_kd, double mu) {
    if (!(mu > 0.0)) throw DomainError("new_upper: mu must be positive");
    if (!ledger.ready()) return std::nullopt;
    return ledger.partial_sum() + (rnorm2_kd / mu) * phi_kd;
}

double approx_upper(double phi_k, double rnorm2_k, double mu_k) {
    if (!(mu_k > 0.0)) throw DomainError("approx_upper: mu_k must be positive");
    return (rnorm2_k / mu_k) * phi_k;
}

}  // namespace cgdiag
