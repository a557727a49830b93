#include "cgdiag/cg.hpp"

#include "cgdiag/errors.hpp"

#include <cmath>

namespace cgdiag {

CgState init_cg(const SparseSymMatrix& A, const Preconditioner& M, std::span<const double> b,
                std::span<const double> x0) {
    const std::size_t n = A.size();
    if (b.size() != n) throw DimensionError("init_cg: rhs has " + std::to_string(b.size()) + " entries");
    if (!x0.empty() && x0.size() != n) throw DimensionError("init_cg: x0 has wrong length");
    if (M.size() != n) throw DimensionError("init_cg: preconditioner has wrong order");

    CgState s;
    s.preconditioned = M.kind() != PreconditionerKind::none;
    s.x.assign(n, 0.0);
    s.r.assign(b.begin(), b.end());
    if (!x0.empty()) {
        s.x.assign(x0.begin(), x0.end());
        const Vector Ax = matvec(A, s.x);
        for (std::size_t i = 0; i < n; ++i) s.r[i] = b[i] - Ax[i];
    }
    if (s.preconditioned) {
        s.z = M.apply_inverse(s.r);
        s.p = s.z;
    } else {
        s.p = s.r;
    }
    s.Ap.assign(n, 0.0);
    s.rnorm2 = dot(s.r, s.precond_residual());
    if (s.preconditioned && s.rnorm2 < 0.0) {
        throw BreakdownError(BreakdownError::Kind::preconditioner_not_spd, 0, s.rnorm2);
    }
    s.converged = s.rnorm2 == 0.0;
    return s;
}

IterationRecord cg_step(CgState& s, const SparseSymMatrix& A, const Preconditioner& M, MatvecMode mode) {
    if (s.converged) throw DomainError("cg_step: state has already converged at k = " + std::to_string(s.k));
    const std::size_t n = s.x.size();
    const std::size_t k = s.k + 1;

    matvec(A, s.p, s.Ap, mode);
    const double curvature = dot(s.p, s.Ap);
    if (!(curvature > 0.0)) throw BreakdownError(BreakdownError::Kind::matrix_not_spd, k, curvature);

    const double rnorm2_prev = s.rnorm2;
    const double gamma = rnorm2_prev / curvature;
    for (std::size_t i = 0; i < n; ++i) s.x[i] += gamma * s.p[i];
    for (std::size_t i = 0; i < n; ++i) s.r[i] -= gamma * s.Ap[i];
    if (s.preconditioned) M.apply_inverse(s.r, s.z);

    const double rnorm2 = dot(s.r, s.precond_residual());
    if (s.preconditioned && rnorm2 < 0.0) {
        throw BreakdownError(BreakdownError::Kind::preconditioner_not_spd, k, rnorm2);
    }
    const double delta = rnorm2 / rnorm2_prev;
    const auto direction = s.precond_residual();
    for (std::size_t i = 0; i < n; ++i) s.p[i] = direction[i] + delta * s.p[i];

    s.k = k;
    s.gamma_prev = gamma;
    s.delta = delta;
    s.rnorm2 = rnorm2;
    s.converged = rnorm2 == 0.0;

    IterationRecord rec;
    rec.k = k;
    rec.gamma = gamma;
    rec.delta = delta;
    rec.rnorm2 = rnorm2;
    rec.rnorm2_prev = rnorm2_prev;
    rec.psi = gamma * rnorm2_prev;
    return rec;
}

std::optional<LanczosCoeffs> LanczosMap::next(const IterationRecord& rec) {
    if (truncated_) return std::nullopt;
    if (rec.delta < 0.0 || !(rec.gamma > 0.0)) {
        truncated_ = true;
        return std::nullopt;
    }
    LanczosCoeffs c;
    c.k = rec.k;
    c.alpha_tilde = 1.0 / rec.gamma + delta_prev_ / gamma_prev_;
    c.beta_tilde = std::sqrt(rec.delta) / rec.gamma;
    c.alpha = 1.0 / std::sqrt(rec.gamma);
    c.beta = std::sqrt(rec.delta / rec.gamma);
    gamma_prev_ = rec.gamma;
    delta_prev_ = rec.delta;
    return c;
}

std::vector<LanczosCoeffs> lanczos_coeffs(std::span<const IterationRecord> records) {
    LanczosMap map;
    std::vector<LanczosCoeffs> out;
    out.reserve(records.size());
    for (const auto& rec : records) {
        auto c = map.next(rec);
        if (!c) break;
        out.push_back(*c);
    }
    return out;
}

ConvergenceTest relative_residual_test(double tol) {
    return [tol](const StopContext& ctx) { return ctx.bnorm > 0.0 && ctx.rnorm <= tol * ctx.bnorm; };
}

ConvergenceTest backward_error_test(double tol) {
    return [tol](const StopContext& ctx) { return ctx.backward_error && *ctx.backward_error <= tol; };
}

ConvergenceTest anorm_bound_test(double tol) {
    return [tol](const StopContext& ctx) {
        return ctx.anorm_error_estimate && ctx.anorm_initial && *ctx.anorm_initial > 0.0 &&
               *ctx.anorm_error_estimate <= tol * *ctx.anorm_initial;
    };
}

}  // namespace cgdiag
