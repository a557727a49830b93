#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace cgdiag {

using Vector = std::vector<double>;

/// One stored (row, col, value) triple, zero-based.
struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
};

/// Symmetric matrix in fully expanded CSR form.
///
/// Both triangles are stored, column indices are sorted within each row and
/// every diagonal entry is present and strictly positive. Immutable after
/// construction, so a single instance can be shared read-only across threads.
class SparseSymMatrix {
public:
    SparseSymMatrix() = default;

    /// Builds from entries that already cover both triangles. Validates all
    /// invariants and throws DimensionError / DomainError on violation.
    static SparseSymMatrix from_full_triplets(std::size_t n, std::vector<Triplet> entries);

    /// Builds from one triangle (either one); off-diagonal entries are mirrored.
    static SparseSymMatrix from_triangle(std::size_t n, std::vector<Triplet> entries);

    std::size_t size() const noexcept { return n_; }
    std::size_t nnz() const noexcept { return values_.size(); }

    std::span<const std::size_t> row_offsets() const noexcept { return row_offsets_; }
    std::span<const std::size_t> col_indices() const noexcept { return col_indices_; }
    std::span<const double> values() const noexcept { return values_; }

    double diagonal(std::size_t i) const;

private:
    std::size_t n_ = 0;
    std::vector<std::size_t> row_offsets_{0};
    std::vector<std::size_t> col_indices_;
    std::vector<double> values_;
};

/// Reads `matrix coordinate real {symmetric|general}` Matrix Market text.
/// `general` input must be exactly symmetric.
SparseSymMatrix parse_matrix_market(std::istream& in);
SparseSymMatrix read_matrix_market(const std::filesystem::path& path);

/// Reads a dense vector: Matrix Market `array real general` with one column,
/// or plain whitespace-separated numbers (lines starting with `%` or `#` skipped).
Vector parse_vector(std::istream& in);
Vector read_vector(const std::filesystem::path& path);

void write_matrix_market(std::ostream& out, const SparseSymMatrix& A, const std::string& comment = {});

enum class MatvecMode {
    strict,    ///< serial, row-major, left-to-right
    parallel,  ///< rows split across threads; per-row order unchanged
};

/// y = A x. Each row is summed left to right in ascending column order, so the
/// result is bitwise reproducible in both modes.
void matvec(const SparseSymMatrix& A, std::span<const double> x, std::span<double> y,
            MatvecMode mode = MatvecMode::strict);
Vector matvec(const SparseSymMatrix& A, std::span<const double> x, MatvecMode mode = MatvecMode::strict);

double dot(std::span<const double> x, std::span<const double> y);
double norm2(std::span<const double> x);

enum class PreconditionerKind { none, jacobi, ic0 };

PreconditionerKind parse_preconditioner_kind(const std::string& name);
std::string to_string(PreconditionerKind kind);

/// Lower-triangular CSR factor; the diagonal is the last entry of each row.
struct LowerFactor {
    std::size_t n = 0;
    std::vector<std::size_t> row_offsets{0};
    std::vector<std::size_t> col_indices;
    std::vector<double> values;
};

/// Applies M^{-1} for M = I, M = diag(A) or M = L L^T (zero-fill IC).
class Preconditioner {
public:
    static Preconditioner identity(std::size_t n);
    static Preconditioner jacobi(const SparseSymMatrix& A);
    /// Throws PivotError at the first nonpositive pivot; never shifts.
    static Preconditioner ic0(const SparseSymMatrix& A);

    PreconditionerKind kind() const noexcept { return kind_; }
    std::size_t size() const noexcept { return n_; }

    /// z = M^{-1} r. `z` and `r` may not alias.
    void apply_inverse(std::span<const double> r, std::span<double> z) const;
    Vector apply_inverse(std::span<const double> r) const;

    /// x^T M x.
    double m_norm2(std::span<const double> x) const;

    const std::vector<double>& inverse_diagonal() const noexcept { return inv_diag_; }
    const LowerFactor& factor() const noexcept { return factor_; }

private:
    PreconditionerKind kind_ = PreconditionerKind::none;
    std::size_t n_ = 0;
    std::vector<double> inv_diag_;
    LowerFactor factor_;
};

Preconditioner build_preconditioner(const SparseSymMatrix& A, PreconditionerKind kind);

/// Five-point finite-difference discretization of -div(lambda grad u) on the
/// unit square with homogeneous Dirichlet data, grid x grid interior nodes and
/// lambda(x, y) = 1 / ((2 + 1.8 sin 10x)(2 + 1.8 sin 10y)).
SparseSymMatrix diffusion_fd_matrix(std::size_t grid);

}  // namespace cgdiag
