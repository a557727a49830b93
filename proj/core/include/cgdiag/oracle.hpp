#pragma once

#include "cgdiag/cg.hpp"
#include "cgdiag/sparse.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace cgdiag {

/// Largest order the dense reference routines accept by default.
inline constexpr std::size_t kVerifyLimit = 2000;

/// Dense symmetric matrix, row-major (equivalently column-major).
struct DenseSym {
    std::size_t n = 0;
    std::vector<double> entries;

    DenseSym() = default;
    explicit DenseSym(std::size_t order) : n(order), entries(order * order, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return entries[i * n + j]; }
    double operator()(std::size_t i, std::size_t j) const { return entries[i * n + j]; }
};

/// Throws OracleError when n exceeds `limit`.
DenseSym to_dense(const SparseSymMatrix& A, std::size_t limit = kVerifyLimit);

/// The matrix M whose inverse the preconditioner applies (I, diag(A), or L L^T).
DenseSym preconditioner_matrix(const Preconditioner& M, std::size_t limit = kVerifyLimit);

/// Symmetric tridiagonal matrix with the given diagonal and off-diagonal.
DenseSym tridiagonal(std::span<const double> diag, std::span<const double> offdiag);

/// All eigenvalues, ascending.
std::vector<double> dense_eigs(const DenseSym& T);

struct EigenDecomposition {
    std::vector<double> values;   ///< ascending
    std::vector<double> vectors;  ///< column j (entries j*n .. j*n+n-1) belongs to values[j]
};

EigenDecomposition dense_eigs_vectors(const DenseSym& T);

/// Eigenvalues of A v = lambda M v (M symmetric positive definite), ascending.
std::vector<double> generalized_eigs(const DenseSym& A, const DenseSym& M);

/// Eigenvalues of a symmetric tridiagonal matrix, ascending.
std::vector<double> tridiagonal_eigs(std::span<const double> diag, std::span<const double> offdiag);

struct ExtremeSingular {
    double smax = 0.0;
    double smin = 0.0;
};

/// Extreme singular values of the upper bidiagonal matrix with diagonal
/// `alphas` and superdiagonal `betas`, to high relative accuracy.
ExtremeSingular dense_extreme_singular(std::span<const double> alphas, std::span<const double> betas);

/// Squared singular values of the bidiagonal, ascending: the eigenvalues of B^T B.
std::vector<double> bidiagonal_gram_eigs(std::span<const double> alphas, std::span<const double> betas);

/// Ritz values (eigenvalues of T_k) for the first k Lanczos coefficient sets, ascending.
std::vector<double> ritz_values(std::span<const LanczosCoeffs> coeffs, std::size_t k);

/// Dense Cholesky solve of A x = b refined in extended precision, kept for
/// repeated error evaluation.
class ReferenceSolution {
public:
    /// Throws OracleError if A is not numerically SPD or too large.
    ReferenceSolution(const SparseSymMatrix& A, std::span<const double> b, std::size_t limit = kVerifyLimit);

    const Vector& x() const noexcept { return x_; }
    /// ||x - x_k||_A, evaluated with the sparse A.
    double error_anorm(std::span<const double> x_k) const;

private:
    const SparseSymMatrix* A_;
    Vector x_;
    std::vector<long double> x_ext_;
};

/// ||x - x_k||_A with x from a dense Cholesky solve.
double true_error_anorm(const SparseSymMatrix& A, std::span<const double> b, std::span<const double> x_k);

struct LanczosTridiagonal {
    std::vector<double> diag;     ///< alpha-tilde_1 .. alpha-tilde_k
    std::vector<double> offdiag;  ///< beta-tilde_1 .. beta-tilde_{k-1}
};

/// k steps of the textbook three-term Lanczos process started from v.
LanczosTridiagonal explicit_lanczos(const SparseSymMatrix& A, std::span<const double> v, std::size_t k);

}  // namespace cgdiag
