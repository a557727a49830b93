#include "cgdiag/oracle.hpp"

#include "cgdiag/errors.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <string>

namespace cgdiag {

namespace {

void check_limit(std::size_t n, std::size_t limit) {
    if (n > limit) {
        throw OracleError("order " + std::to_string(n) + " exceeds the dense verify limit " + std::to_string(limit));
    }
}

void check_info(lapack_int info, const char* routine) {
    if (info != 0) throw OracleError(std::string(routine) + " failed with info = " + std::to_string(info));
}

lapack_int as_int(std::size_t n) { return static_cast<lapack_int>(n); }

}  // namespace

DenseSym to_dense(const SparseSymMatrix& A, std::size_t limit) {
    check_limit(A.size(), limit);
    DenseSym D(A.size());
    const auto rows = A.row_offsets();
    const auto cols = A.col_indices();
    const auto vals = A.values();
    for (std::size_t i = 0; i < A.size(); ++i) {
        for (std::size_t p = rows[i]; p < rows[i + 1]; ++p) D(i, cols[p]) = vals[p];
    }
    return D;
}

DenseSym preconditioner_matrix(const Preconditioner& M, std::size_t limit) {
    const std::size_t n = M.size();
    check_limit(n, limit);
    DenseSym D(n);
    switch (M.kind()) {
    case PreconditionerKind::none:
        for (std::size_t i = 0; i < n; ++i) D(i, i) = 1.0;
        break;
    case PreconditionerKind::jacobi:
        for (std::size_t i = 0; i < n; ++i) D(i, i) = 1.0 / M.inverse_diagonal()[i];
        break;
    case PreconditionerKind::ic0: {
        const LowerFactor& L = M.factor();
        std::vector<double> dense_l(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t p = L.row_offsets[i]; p < L.row_offsets[i + 1]; ++p) {
                dense_l[i * n + L.col_indices[p]] = L.values[p];
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                double s = 0.0;
                for (std::size_t q = 0; q <= j; ++q) s += dense_l[i * n + q] * dense_l[j * n + q];
                D(i, j) = s;
                D(j, i) = s;
            }
        }
        break;
    }
    }
    return D;
}

DenseSym tridiagonal(std::span<const double> diag, std::span<const double> offdiag) {
    const std::size_t n = diag.size();
    if (n > 0 && offdiag.size() + 1 != n) throw DimensionError("tridiagonal: need n-1 off-diagonal entries");
    DenseSym T(n);
    for (std::size_t i = 0; i < n; ++i) T(i, i) = diag[i];
    for (std::size_t i = 0; i + 1 < n; ++i) {
        T(i, i + 1) = offdiag[i];
        T(i + 1, i) = offdiag[i];
    }
    return T;
}

std::vector<double> dense_eigs(const DenseSym& T) {
    if (T.n == 0) return {};
    std::vector<double> a = T.entries;
    std::vector<double> w(T.n);
    check_info(LAPACKE_dsyevd(LAPACK_ROW_MAJOR, 'N', 'U', as_int(T.n), a.data(), as_int(T.n), w.data()), "dsyevd");
    return w;
}

EigenDecomposition dense_eigs_vectors(const DenseSym& T) {
    EigenDecomposition out;
    if (T.n == 0) return out;
    std::vector<double> a = T.entries;
    out.values.resize(T.n);
    check_info(LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', as_int(T.n), a.data(), as_int(T.n), out.values.data()),
               "dsyevd");
    out.vectors = std::move(a);
    return out;
}

std::vector<double> generalized_eigs(const DenseSym& A, const DenseSym& M) {
    if (A.n != M.n) throw DimensionError("generalized_eigs: orders differ");
    if (A.n == 0) return {};
    std::vector<double> a = A.entries;
    std::vector<double> b = M.entries;
    std::vector<double> w(A.n);
    check_info(LAPACKE_dsygvd(LAPACK_ROW_MAJOR, 1, 'N', 'U', as_int(A.n), a.data(), as_int(A.n), b.data(),
                              as_int(A.n), w.data()),
               "dsygvd");
    return w;
}

std::vector<double> tridiagonal_eigs(std::span<const double> diag, std::span<const double> offdiag) {
    const std::size_t n = diag.size();
    if (n == 0) return {};
    if (offdiag.size() + 1 != n) throw DimensionError("tridiagonal_eigs: need n-1 off-diagonal entries");
    std::vector<double> d(diag.begin(), diag.end());
    std::vector<double> e(offdiag.begin(), offdiag.end());
    e.push_back(0.0);
    check_info(LAPACKE_dstev(LAPACK_COL_MAJOR, 'N', as_int(n), d.data(), e.data(), nullptr, 1), "dstev");
    return d;
}

std::vector<double> bidiagonal_gram_eigs(std::span<const double> alphas, std::span<const double> betas) {
    const std::size_t n = alphas.size();
    if (n == 0) return {};
    if (betas.size() < n - 1) throw DimensionError("bidiagonal: need n-1 superdiagonal entries");
    std::vector<double> d(alphas.begin(), alphas.end());
    std::vector<double> e(betas.begin(), betas.begin() + static_cast<std::ptrdiff_t>(n - 1));
    e.push_back(0.0);
    check_info(LAPACKE_dbdsqr(LAPACK_COL_MAJOR, 'U', as_int(n), 0, 0, 0, d.data(), e.data(), nullptr, 1, nullptr,
                              1, nullptr, 1),
               "dbdsqr");
    // dbdsqr returns singular values in decreasing order
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = d[n - 1 - i] * d[n - 1 - i];
    return out;
}

ExtremeSingular dense_extreme_singular(std::span<const double> alphas, std::span<const double> betas) {
    const auto eigs = bidiagonal_gram_eigs(alphas, betas);
    if (eigs.empty()) throw DimensionError("dense_extreme_singular: empty matrix");
    return {std::sqrt(eigs.back()), std::sqrt(eigs.front())};
}

std::vector<double> ritz_values(std::span<const LanczosCoeffs> coeffs, std::size_t k) {
    if (k == 0 || k > coeffs.size()) throw DimensionError("ritz_values: k out of range");
    std::vector<double> alphas(k), betas(k - 1);
    for (std::size_t i = 0; i < k; ++i) alphas[i] = coeffs[i].alpha;
    for (std::size_t i = 0; i + 1 < k; ++i) betas[i] = coeffs[i].beta;
    return bidiagonal_gram_eigs(alphas, betas);
}

namespace {

/// y = A x with extended-precision accumulation.
std::vector<long double> matvec_extended(const SparseSymMatrix& A, std::span<const long double> x) {
    const auto off = A.row_offsets();
    const auto col = A.col_indices();
    const auto val = A.values();
    std::vector<long double> y(A.size(), 0.0L);
    for (std::size_t i = 0; i < A.size(); ++i) {
        long double s = 0.0L;
        for (std::size_t p = off[i]; p < off[i + 1]; ++p) s += static_cast<long double>(val[p]) * x[col[p]];
        y[i] = s;
    }
    return y;
}

}  // namespace

ReferenceSolution::ReferenceSolution(const SparseSymMatrix& A, std::span<const double> b, std::size_t limit)
    : A_(&A) {
    if (b.size() != A.size()) throw DimensionError("ReferenceSolution: rhs length mismatch");
    DenseSym D = to_dense(A, limit);
    const lapack_int n = as_int(A.size());
    x_.assign(b.begin(), b.end());
    x_ext_.assign(b.begin(), b.end());
    if (n == 0) return;
    const lapack_int info = LAPACKE_dpotrf(LAPACK_ROW_MAJOR, 'L', n, D.entries.data(), n);
    if (info > 0) throw OracleError("dense Cholesky failed: matrix is not positive definite");
    check_info(info, "dpotrf");
    check_info(LAPACKE_dpotrs(LAPACK_ROW_MAJOR, 'L', n, 1, D.entries.data(), n, x_.data(), 1), "dpotrs");

    // Iterative refinement with extended-precision residuals, so the reference
    // error is limited by the long double unit roundoff rather than kappa eps.
    x_ext_.assign(x_.begin(), x_.end());
    Vector corr(A.size());
    for (int sweep = 0; sweep < 4; ++sweep) {
        const auto Ax = matvec_extended(A, x_ext_);
        for (std::size_t i = 0; i < A.size(); ++i) corr[i] = static_cast<double>(static_cast<long double>(b[i]) - Ax[i]);
        check_info(LAPACKE_dpotrs(LAPACK_ROW_MAJOR, 'L', n, 1, D.entries.data(), n, corr.data(), 1), "dpotrs");
        for (std::size_t i = 0; i < A.size(); ++i) x_ext_[i] += corr[i];
    }
    for (std::size_t i = 0; i < A.size(); ++i) x_[i] = static_cast<double>(x_ext_[i]);
}

double ReferenceSolution::error_anorm(std::span<const double> x_k) const {
    if (x_k.size() != x_.size()) throw DimensionError("error_anorm: length mismatch");
    std::vector<long double> e(x_.size());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = x_ext_[i] - static_cast<long double>(x_k[i]);
    const auto Ae = matvec_extended(*A_, e);
    long double s = 0.0L;
    for (std::size_t i = 0; i < e.size(); ++i) s += e[i] * Ae[i];
    return static_cast<double>(std::sqrt(std::max(0.0L, s)));
}

double true_error_anorm(const SparseSymMatrix& A, std::span<const double> b, std::span<const double> x_k) {
    return ReferenceSolution(A, b).error_anorm(x_k);
}

LanczosTridiagonal explicit_lanczos(const SparseSymMatrix& A, std::span<const double> v, std::size_t k) {
    const std::size_t n = A.size();
    if (v.size() != n) throw DimensionError("explicit_lanczos: start vector length mismatch");
    const double nv = norm2(v);
    if (nv == 0.0) throw DomainError("explicit_lanczos: zero start vector");
    LanczosTridiagonal T;
    Vector prev(n, 0.0);
    Vector cur(n);
    for (std::size_t i = 0; i < n; ++i) cur[i] = v[i] / nv;
    double beta = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        Vector w = matvec(A, cur);
        for (std::size_t i = 0; i < n; ++i) w[i] -= beta * prev[i];
        const double alpha = dot(w, cur);
        for (std::size_t i = 0; i < n; ++i) w[i] -= alpha * cur[i];
        T.diag.push_back(alpha);
        if (j + 1 == k) break;
        beta = norm2(w);
        if (beta == 0.0) break;
        T.offdiag.push_back(beta);
        prev = cur;
        for (std::size_t i = 0; i < n; ++i) cur[i] = w[i] / beta;
    }
    return T;
}

}  // namespace cgdiag
