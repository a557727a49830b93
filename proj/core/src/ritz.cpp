#include "cgdiag/ritz.hpp"

#include "cgdiag/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace cgdiag {

TwoByTwoEig two_by_two_eigmax(double rho, double sigma, double tau) {
    TwoByTwoEig e;
    e.rho = rho;
    e.sigma = sigma;
    e.tau = tau;
    const double diff = rho - tau;
    e.chi = std::hypot(diff, 2.0 * sigma);
    if (e.chi == 0.0) {
        e.lambda_plus = rho;
        e.c2 = 0.0;
        e.c = 0.0;
        e.s = 1.0;
        return e;
    }
    // Each branch forms the small one of c^2, s^2 without cancellation and
    // adds chi times it to the larger diagonal entry.
    double s2 = 0.0;
    if (diff >= 0.0) {
        e.c2 = (2.0 * sigma / e.chi) * (sigma / (e.chi + diff));
        s2 = 0.5 * (1.0 + diff / e.chi);
        e.lambda_plus = rho + e.chi * e.c2;
    } else {
        s2 = (2.0 * sigma / e.chi) * (sigma / (e.chi - diff));
        e.c2 = 0.5 * (1.0 - diff / e.chi);
        e.lambda_plus = tau + e.chi * s2;
    }
    e.c2 = std::clamp(e.c2, 0.0, 1.0);
    const double c = std::sqrt(e.c2);
    e.c = sigma < 0.0 ? -c : c;
    e.s = std::sqrt(std::clamp(s2, 0.0, 1.0));
    return e;
}

IncNormState IncNormState::forward(double alpha1) {
    if (!(alpha1 != 0.0) || !std::isfinite(alpha1)) throw DomainError("IncNormState: alpha_1 must be finite and nonzero");
    IncNormState st;
    st.mode_ = IncNormMode::forward;
    st.rho_ = alpha1 * alpha1;
    st.tau_ = st.rho_;
    return st;
}

IncNormState IncNormState::inverse(double alpha1) {
    if (!(alpha1 != 0.0) || !std::isfinite(alpha1)) throw DomainError("IncNormState: alpha_1 must be finite and nonzero");
    IncNormState st;
    st.mode_ = IncNormMode::inverse;
    st.rho_ = 1.0 / (alpha1 * alpha1);
    st.tau_ = st.rho_;
    return st;
}

TwoByTwoEig IncNormState::advance(double sigma_k, double tau_k) {
    const TwoByTwoEig e = two_by_two_eigmax(rho_, sigma_k, tau_k);
    rho_ = e.lambda_plus;
    s_ = e.s;
    c_ = e.c;
    sigma_ = sigma_k;
    tau_ = tau_k;
    ++k_;
    return e;
}

IncNormState incnorm_forward_step(IncNormState state, double alpha_k, double beta_k, double alpha_k1) {
    if (state.mode() != IncNormMode::forward) throw DomainError("incnorm_forward_step: state is in inverse mode");
    state.advance(alpha_k * beta_k * state.c(), beta_k * beta_k + alpha_k1 * alpha_k1);
    return state;
}

IncNormState incnorm_inverse_step(IncNormState state, double /*alpha_k*/, double beta_k, double alpha_k1) {
    if (state.mode() != IncNormMode::inverse) throw DomainError("incnorm_inverse_step: state is in forward mode");
    if (alpha_k1 == 0.0) throw DomainError("incnorm_inverse_step: singular bidiagonal (alpha = 0)");
    const double ratio = beta_k / alpha_k1;
    const double sigma = -ratio * (state.s() * state.sigma() + state.c() * state.tau());
    const double tau = (beta_k * beta_k * state.tau() + 1.0) / (alpha_k1 * alpha_k1);
    state.advance(sigma, tau);
    return state;
}

RitzEstimates from_cg_coeffs(double gamma_prev, double delta, double gamma, IncNormState& fwd,
                             IncNormState& inv) {
    if (!(gamma_prev > 0.0) || !(gamma > 0.0)) throw DomainError("from_cg_coeffs: step lengths must be positive");
    if (delta < 0.0) throw DomainError("from_cg_coeffs: negative delta");
    const double beta2 = delta / gamma_prev;  // beta_k^2
    fwd.advance(std::sqrt(delta) / gamma_prev * fwd.c(), beta2 + 1.0 / gamma);
    const double sigma = -std::sqrt(gamma * beta2) * (inv.s() * inv.sigma() + inv.c() * inv.tau());
    inv.advance(sigma, gamma * (beta2 * inv.tau() + 1.0));
    return {fwd.estimate(), inv.estimate()};
}

std::optional<RitzEstimates> ExtremeRitzTracker::observe(const IterationRecord& rec) {
    if (rec.k == 1) {
        if (!(rec.gamma > 0.0)) throw DomainError("ExtremeRitzTracker: gamma_0 must be positive");
        const double alpha1 = 1.0 / std::sqrt(rec.gamma);
        fwd_ = IncNormState::forward(alpha1);
        inv_ = IncNormState::inverse(alpha1);
    } else {
        if (!fwd_ || rec.k != fwd_->k() + 1) {
            throw DomainError("ExtremeRitzTracker: record " + std::to_string(rec.k) + " out of order");
        }
        from_cg_coeffs(gamma_prev_, delta_prev_, rec.gamma, *fwd_, *inv_);
    }
    gamma_prev_ = rec.gamma;
    delta_prev_ = rec.delta;
    return current();
}

std::optional<RitzEstimates> ExtremeRitzTracker::current() const {
    if (!fwd_) return std::nullopt;
    return RitzEstimates{fwd_->estimate(), inv_->estimate()};
}

namespace {

double tridiag_norm_bound(std::span<const double> d, std::span<const double> l) {
    // max row sum of |L D L^T|
    const std::size_t n = d.size();
    double best = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double diag = d[i];
        double row = 0.0;
        if (i > 0) {
            diag += l[i - 1] * l[i - 1] * d[i - 1];
            row += std::abs(l[i - 1] * d[i - 1]);
        }
        if (i + 1 < n) row += std::abs(l[i] * d[i]);
        best = std::max(best, std::abs(diag) + row);
    }
    return best;
}

bool normalize(std::vector<double>& y) {
    double scale = 0.0;
    for (double v : y) {
        if (!std::isfinite(v)) return false;
        scale = std::max(scale, std::abs(v));
    }
    if (scale == 0.0) return false;
    double sum = 0.0;
    for (double& v : y) {
        v /= scale;
        sum += v * v;
    }
    const double nrm = std::sqrt(sum);
    for (double& v : y) v /= nrm;
    return true;
}

double sum_squares(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
}

}  // namespace

LdlFactor shifted_ldlt(std::span<const double> d, std::span<const double> l, double shift) {
    const std::size_t n = d.size();
    if (n == 0) throw DimensionError("shifted_ldlt: empty matrix");
    if (l.size() != n - 1) throw DimensionError("shifted_ldlt: need n-1 subdiagonal entries");

    LdlFactor out;
    out.d.resize(n);
    out.l.resize(n - 1);
    double norm = -1.0;
    auto guard = [&](double pivot, std::size_t i) {
        if (pivot != 0.0) return pivot;
        if (norm < 0.0) norm = tridiag_norm_bound(d, l);
        const double eps = std::numeric_limits<double>::epsilon();
        double tiny = eps * norm;
        if (tiny == 0.0) tiny = std::numeric_limits<double>::min();
        return (i > 0 && out.d[i - 1] < 0.0) ? -tiny : tiny;
    };

    double s = -shift;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        out.d[i] = guard(d[i] + s, i);
        out.l[i] = d[i] * l[i] / out.d[i];
        s = out.l[i] * l[i] * s - shift;
    }
    out.d[n - 1] = guard(d[n - 1] + s, n - 1);
    return out;
}

std::vector<double> ldlt_solve(const LdlFactor& f, std::span<const double> rhs) {
    const std::size_t n = f.d.size();
    if (rhs.size() != n) throw DimensionError("ldlt_solve: rhs length mismatch");
    std::vector<double> y(rhs.begin(), rhs.end());
    for (std::size_t i = 1; i < n; ++i) y[i] -= f.l[i - 1] * y[i - 1];
    for (std::size_t i = 0; i < n; ++i) y[i] /= f.d[i];
    for (std::size_t i = n - 1; i-- > 0;) y[i] -= f.l[i] * y[i + 1];
    return y;
}

void BidiagonalFactor::append(double beta_k, double alpha_k1) {
    if (alphas.empty()) throw DomainError("BidiagonalFactor::append: factor has no first column");
    betas.push_back(beta_k);
    alphas.push_back(alpha_k1);
}

std::vector<double> BidiagonalFactor::multiply(std::span<const double> x) const {
    const std::size_t n = size();
    if (x.size() != n) throw DimensionError("BidiagonalFactor::multiply: length mismatch");
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = alphas[i] * x[i];
        if (i + 1 < n) y[i] += betas[i] * x[i + 1];
    }
    return y;
}

std::vector<double> BidiagonalFactor::solve(std::span<const double> y) const {
    const std::size_t n = size();
    if (y.size() != n) throw DimensionError("BidiagonalFactor::solve: length mismatch");
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double v = y[i];
        if (i + 1 < n) v -= betas[i] * x[i + 1];
        x[i] = v / alphas[i];
    }
    return x;
}

LdlFactor BidiagonalFactor::gram_ldlt() const {
    const std::size_t n = size();
    LdlFactor f;
    f.d.resize(n);
    f.l.resize(n > 0 ? n - 1 : 0);
    for (std::size_t i = 0; i < n; ++i) f.d[i] = alphas[i] * alphas[i];
    for (std::size_t i = 0; i + 1 < n; ++i) f.l[i] = betas[i] / alphas[i];
    return f;
}

LdlFactor BidiagonalFactor::reversed_outer_ldlt() const {
    // B B^T = U D U^T with U unit upper bidiagonal, U(i, i+1) = beta_i / alpha_{i+1}
    // and D = diag(alpha^2). Conjugating by the reversal turns it into L D L^T.
    const std::size_t n = size();
    LdlFactor f;
    f.d.resize(n);
    f.l.resize(n > 0 ? n - 1 : 0);
    for (std::size_t i = 0; i < n; ++i) f.d[n - 1 - i] = alphas[i] * alphas[i];
    for (std::size_t i = 0; i + 1 < n; ++i) f.l[n - 2 - i] = betas[i] / alphas[i + 1];
    return f;
}

RefineResult refine_max(const BidiagonalFactor& B, std::span<const double> z, double rho) {
    if (z.size() != B.size() || B.size() == 0) throw DimensionError("refine_max: vector length mismatch");
    const LdlFactor f = B.gram_ldlt();
    const LdlFactor shifted = shifted_ldlt(f.d, f.l, rho);
    RefineResult res;
    std::vector<double> y = ldlt_solve(shifted, z);
    if (!normalize(y)) {
        res.rho_hat = rho;
        res.estimate = rho;
        res.z_hat.assign(z.begin(), z.end());
        return res;
    }
    res.rho_hat = sum_squares(B.multiply(y));
    res.estimate = res.rho_hat;
    res.z_hat = std::move(y);
    res.refined = true;
    return res;
}

RefineResult refine_min(const BidiagonalFactor& B, std::span<const double> z, double rho) {
    if (z.size() != B.size() || B.size() == 0) throw DimensionError("refine_min: vector length mismatch");
    if (!(rho > 0.0)) throw DomainError("refine_min: rho must be positive");
    const std::size_t n = B.size();
    const LdlFactor f = B.reversed_outer_ldlt();
    const LdlFactor shifted = shifted_ldlt(f.d, f.l, 1.0 / rho);
    std::vector<double> rz(z.rbegin(), z.rend());
    std::vector<double> yr = ldlt_solve(shifted, rz);
    RefineResult res;
    if (!normalize(yr)) {
        res.rho_hat = rho;
        res.estimate = 1.0 / rho;
        res.z_hat.assign(z.begin(), z.end());
        return res;
    }
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = yr[n - 1 - i];
    res.rho_hat = sum_squares(B.solve(y));
    res.estimate = 1.0 / res.rho_hat;
    res.z_hat = std::move(y);
    res.refined = true;
    return res;
}

RefinedRitzTracker::RefinedRitzTracker(RefineCadence cadence, std::size_t every)
    : cadence_(cadence), every_(every) {
    if (cadence_ == RefineCadence::every_m && every_ == 0) throw DomainError("RefinedRitzTracker: period must be positive");
}

std::optional<RitzEstimates> RefinedRitzTracker::observe(const IterationRecord& rec) {
    if (rec.k == 1) {
        if (!(rec.gamma > 0.0)) throw DomainError("RefinedRitzTracker: gamma_0 must be positive");
        const double alpha1 = 1.0 / std::sqrt(rec.gamma);
        factor_ = BidiagonalFactor{{alpha1}, {}};
        z_max_ = {1.0};
        z_min_ = {1.0};
        rho_max_ = alpha1 * alpha1;
        rho_inv_ = 1.0 / (alpha1 * alpha1);
        w_norm2_ = rho_inv_;
        w_aux_ = {w_norm2_};
    } else {
        if (factor_.size() == 0 || rec.k != factor_.size() + 1) {
            throw DomainError("RefinedRitzTracker: record " + std::to_string(rec.k) + " out of order");
        }
        if (!(rec.gamma > 0.0)) throw DomainError("RefinedRitzTracker: step length must be positive");
        const double delta = delta_prev_;
        if (delta < 0.0) throw DomainError("RefinedRitzTracker: negative delta");
        append_column(std::sqrt(delta / gamma_prev_), 1.0 / std::sqrt(rec.gamma));
        const bool due = (cadence_ == RefineCadence::every_step) ||
                         (cadence_ == RefineCadence::every_m && rec.k % every_ == 0);
        if (due) refine();
    }
    gamma_prev_ = rec.gamma;
    delta_prev_ = rec.delta;
    return current();
}

void RefinedRitzTracker::append_column(double beta_k, double alpha_k1) {
    const std::size_t k = factor_.size();
    const double alpha_k = factor_.alphas[k - 1];

    // Largest singular value of B_{k+1}: general incremental step on z_max.
    const TwoByTwoEig fe =
        two_by_two_eigmax(rho_max_, alpha_k * beta_k * z_max_.back(), beta_k * beta_k + alpha_k1 * alpha_k1);
    for (double& v : z_max_) v *= fe.s;
    z_max_.push_back(fe.c);
    rho_max_ = fe.lambda_plus;

    // Largest singular value of B_{k+1}^{-1}, driven by g = B_k^{-T} w_k.
    const double ratio = beta_k / alpha_k1;
    double zg = 0.0;
    for (std::size_t i = 0; i < k; ++i) zg += z_min_[i] * w_aux_[i];
    const double tau = (beta_k * beta_k * w_norm2_ + 1.0) / (alpha_k1 * alpha_k1);
    const TwoByTwoEig ie = two_by_two_eigmax(rho_inv_, -ratio * zg, tau);
    for (double& v : z_min_) v *= ie.s;
    z_min_.push_back(ie.c);
    rho_inv_ = ie.lambda_plus;
    for (double& v : w_aux_) v *= -ratio;
    w_aux_.push_back(tau);
    w_norm2_ = tau;

    factor_.append(beta_k, alpha_k1);
}

void RefinedRitzTracker::refine() {
    RefineResult top = refine_max(factor_, z_max_, rho_max_);
    if (top.refined) {
        rho_max_ = top.rho_hat;
        z_max_ = std::move(top.z_hat);
    } else {
        ++failed_;
    }
    RefineResult bottom = refine_min(factor_, z_min_, rho_inv_);
    if (bottom.refined) {
        rho_inv_ = bottom.rho_hat;
        z_min_ = std::move(bottom.z_hat);
    } else {
        ++failed_;
    }
}

std::optional<RitzEstimates> RefinedRitzTracker::refine_now() {
    if (factor_.size() == 0) return std::nullopt;
    refine();
    return current();
}

std::optional<RitzEstimates> RefinedRitzTracker::current() const {
    if (factor_.size() == 0) return std::nullopt;
    return RitzEstimates{rho_max_, 1.0 / rho_inv_};
}

}  // namespace cgdiag
