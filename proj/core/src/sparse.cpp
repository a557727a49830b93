#include "cgdiag/sparse.hpp"

#include "cgdiag/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

namespace cgdiag {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

bool is_comment_or_blank(const std::string& line) {
    auto pos = line.find_first_not_of(" \t\r");
    return pos == std::string::npos || line[pos] == '%';
}

}  // namespace

SparseSymMatrix SparseSymMatrix::from_full_triplets(std::size_t n, std::vector<Triplet> entries) {
    for (const auto& t : entries) {
        if (t.row >= n || t.col >= n) {
            throw DimensionError("entry (" + std::to_string(t.row) + ", " + std::to_string(t.col) +
                                 ") outside a " + std::to_string(n) + " x " + std::to_string(n) + " matrix");
        }
    }
    std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });

    SparseSymMatrix A;
    A.n_ = n;
    A.row_offsets_.assign(n + 1, 0);
    A.col_indices_.reserve(entries.size());
    A.values_.reserve(entries.size());
    for (std::size_t e = 0; e < entries.size(); ++e) {
        if (e > 0 && entries[e].row == entries[e - 1].row && entries[e].col == entries[e - 1].col) {
            throw DomainError("duplicate entry (" + std::to_string(entries[e].row + 1) + ", " +
                              std::to_string(entries[e].col + 1) + ")");
        }
        A.row_offsets_[entries[e].row + 1]++;
        A.col_indices_.push_back(entries[e].col);
        A.values_.push_back(entries[e].value);
    }
    for (std::size_t i = 0; i < n; ++i) A.row_offsets_[i + 1] += A.row_offsets_[i];

    auto find = [&A](std::size_t i, std::size_t j) -> const double* {
        auto first = A.col_indices_.begin() + static_cast<std::ptrdiff_t>(A.row_offsets_[i]);
        auto last = A.col_indices_.begin() + static_cast<std::ptrdiff_t>(A.row_offsets_[i + 1]);
        auto it = std::lower_bound(first, last, j);
        if (it == last || *it != j) return nullptr;
        return &A.values_[static_cast<std::size_t>(it - A.col_indices_.begin())];
    };

    for (std::size_t i = 0; i < n; ++i) {
        const double* d = find(i, i);
        if (d == nullptr || !(*d > 0.0)) {
            throw DomainError("diagonal entry " + std::to_string(i + 1) + " is missing or not positive");
        }
        for (std::size_t p = A.row_offsets_[i]; p < A.row_offsets_[i + 1]; ++p) {
            const std::size_t j = A.col_indices_[p];
            const double* mirror = find(j, i);
            if (mirror == nullptr || *mirror != A.values_[p]) {
                throw DomainError("matrix is not symmetric at (" + std::to_string(i + 1) + ", " +
                                  std::to_string(j + 1) + ")");
            }
        }
    }
    return A;
}

SparseSymMatrix SparseSymMatrix::from_triangle(std::size_t n, std::vector<Triplet> entries) {
    const std::size_t stored = entries.size();
    for (std::size_t e = 0; e < stored; ++e) {
        if (entries[e].row != entries[e].col) {
            entries.push_back({entries[e].col, entries[e].row, entries[e].value});
        }
    }
    return from_full_triplets(n, std::move(entries));
}

double SparseSymMatrix::diagonal(std::size_t i) const {
    auto first = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i]);
    auto last = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i + 1]);
    auto it = std::lower_bound(first, last, i);
    return values_[static_cast<std::size_t>(it - col_indices_.begin())];
}

SparseSymMatrix parse_matrix_market(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw ParseError("empty input", 0);
    ++lineno;

    std::istringstream header(lower(line));
    std::string banner, object, format, field, symmetry;
    header >> banner >> object >> format >> field >> symmetry;
    if (banner != "%%matrixmarket" || object != "matrix") {
        throw ParseError("missing %%MatrixMarket matrix header", lineno);
    }
    if (format != "coordinate") throw ParseError("unsupported format '" + format + "'", lineno);
    if (field != "real" && field != "integer") throw ParseError("unsupported field '" + field + "'", lineno);
    if (symmetry != "symmetric" && symmetry != "general") {
        throw ParseError("unsupported symmetry '" + symmetry + "'", lineno);
    }
    const bool symmetric = symmetry == "symmetric";

    do {
        if (!std::getline(in, line)) throw ParseError("missing size line", lineno);
        ++lineno;
    } while (is_comment_or_blank(line));

    long long rows = 0, cols = 0, stored = 0;
    {
        std::istringstream sizes(line);
        if (!(sizes >> rows >> cols >> stored) || rows <= 0 || cols <= 0 || stored < 0) {
            throw ParseError("malformed size line", lineno);
        }
    }
    if (rows != cols) throw ParseError("matrix is not square", lineno);
    const auto n = static_cast<std::size_t>(rows);

    std::vector<Triplet> entries;
    entries.reserve(static_cast<std::size_t>(stored) * (symmetric ? 2 : 1));
    long long seen = 0;
    while (seen < stored && std::getline(in, line)) {
        ++lineno;
        if (is_comment_or_blank(line)) continue;
        std::istringstream fields(line);
        long long i = 0, j = 0;
        double v = 0.0;
        if (!(fields >> i >> j >> v)) throw ParseError("malformed entry", lineno);
        if (i < 1 || j < 1 || i > rows || j > cols) throw ParseError("index out of range", lineno);
        entries.push_back({static_cast<std::size_t>(i - 1), static_cast<std::size_t>(j - 1), v});
        ++seen;
    }
    if (seen != stored) throw ParseError("expected " + std::to_string(stored) + " entries", lineno);

    try {
        return symmetric ? SparseSymMatrix::from_triangle(n, std::move(entries))
                         : SparseSymMatrix::from_full_triplets(n, std::move(entries));
    } catch (const Error& e) {
        throw ParseError(e.what(), lineno);
    }
}

SparseSymMatrix read_matrix_market(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string(), 0);
    return parse_matrix_market(in);
}

Vector parse_vector(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    Vector v;
    bool matrix_market = false;
    bool have_size = false;
    std::size_t expected = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1 && lower(line).rfind("%%matrixmarket", 0) == 0) {
            std::istringstream header(lower(line));
            std::string banner, object, format, field;
            header >> banner >> object >> format >> field;
            if (format != "array" || (field != "real" && field != "integer")) {
                throw ParseError("vector files must use the array real format", lineno);
            }
            matrix_market = true;
            continue;
        }
        auto pos = line.find_first_not_of(" \t\r");
        if (pos == std::string::npos || line[pos] == '%' || line[pos] == '#') continue;
        std::istringstream fields(line);
        if (matrix_market && !have_size) {
            long long rows = 0, cols = 0;
            if (!(fields >> rows >> cols) || rows <= 0 || cols != 1) {
                throw ParseError("vector must be a single column", lineno);
            }
            expected = static_cast<std::size_t>(rows);
            have_size = true;
            continue;
        }
        double x = 0.0;
        while (fields >> x) v.push_back(x);
        if (!fields.eof()) throw ParseError("malformed number", lineno);
    }
    if (matrix_market && v.size() != expected) {
        throw ParseError("expected " + std::to_string(expected) + " values", lineno);
    }
    return v;
}

Vector read_vector(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string(), 0);
    return parse_vector(in);
}

void write_matrix_market(std::ostream& out, const SparseSymMatrix& A, const std::string& comment) {
    std::size_t lower_count = 0;
    const auto offsets = A.row_offsets();
    const auto cols = A.col_indices();
    const auto vals = A.values();
    for (std::size_t i = 0; i < A.size(); ++i) {
        for (std::size_t p = offsets[i]; p < offsets[i + 1]; ++p) {
            if (cols[p] <= i) ++lower_count;
        }
    }
    out << "%%MatrixMarket matrix coordinate real symmetric\n";
    if (!comment.empty()) out << "% " << comment << '\n';
    out << A.size() << ' ' << A.size() << ' ' << lower_count << '\n';
    char buf[64];
    // Column-major lower triangle, the customary ordering.
    std::vector<std::vector<std::pair<std::size_t, double>>> by_col(A.size());
    for (std::size_t i = 0; i < A.size(); ++i) {
        for (std::size_t p = offsets[i]; p < offsets[i + 1]; ++p) {
            if (cols[p] <= i) by_col[cols[p]].emplace_back(i, vals[p]);
        }
    }
    for (std::size_t j = 0; j < A.size(); ++j) {
        for (const auto& [i, v] : by_col[j]) {
            auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
            out << i + 1 << ' ' << j + 1 << ' ' << std::string_view(buf, res.ptr) << '\n';
        }
    }
}

void matvec(const SparseSymMatrix& A, std::span<const double> x, std::span<double> y, MatvecMode mode) {
    const std::size_t n = A.size();
    if (x.size() != n || y.size() != n) {
        throw DimensionError("matvec: matrix order " + std::to_string(n) + ", x has " + std::to_string(x.size()) +
                             ", y has " + std::to_string(y.size()));
    }
    const auto offsets = A.row_offsets();
    const auto cols = A.col_indices();
    const auto vals = A.values();
    auto rows = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            double s = 0.0;
            for (std::size_t p = offsets[i]; p < offsets[i + 1]; ++p) s += vals[p] * x[cols[p]];
            y[i] = s;
        }
    };

    const std::size_t workers = mode == MatvecMode::parallel
                                    ? std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()),
                                                            n / 4096)
                                    : 1;
    if (workers <= 1) {
        rows(0, n);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin < end) pool.emplace_back(rows, begin, end);
    }
}

Vector matvec(const SparseSymMatrix& A, std::span<const double> x, MatvecMode mode) {
    Vector y(A.size());
    matvec(A, x, y, mode);
    return y;
}

double dot(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DimensionError("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

PreconditionerKind parse_preconditioner_kind(const std::string& name) {
    const std::string key = lower(name);
    if (key == "none") return PreconditionerKind::none;
    if (key == "jacobi") return PreconditionerKind::jacobi;
    if (key == "ic0") return PreconditionerKind::ic0;
    throw DomainError("unknown preconditioner '" + name + "'");
}

std::string to_string(PreconditionerKind kind) {
    switch (kind) {
        case PreconditionerKind::none: return "none";
        case PreconditionerKind::jacobi: return "jacobi";
        case PreconditionerKind::ic0: return "ic0";
    }
    return "?";
}

Preconditioner Preconditioner::identity(std::size_t n) {
    Preconditioner P;
    P.kind_ = PreconditionerKind::none;
    P.n_ = n;
    return P;
}

Preconditioner Preconditioner::jacobi(const SparseSymMatrix& A) {
    Preconditioner P;
    P.kind_ = PreconditionerKind::jacobi;
    P.n_ = A.size();
    P.inv_diag_.resize(A.size());
    for (std::size_t i = 0; i < A.size(); ++i) P.inv_diag_[i] = 1.0 / A.diagonal(i);
    return P;
}

Preconditioner Preconditioner::ic0(const SparseSymMatrix& A) {
    const std::size_t n = A.size();
    LowerFactor L;
    L.n = n;
    L.row_offsets.assign(n + 1, 0);
    const auto offsets = A.row_offsets();
    const auto cols = A.col_indices();
    const auto vals = A.values();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = offsets[i]; p < offsets[i + 1] && cols[p] <= i; ++p) {
            L.col_indices.push_back(cols[p]);
            L.values.push_back(vals[p]);
        }
        L.row_offsets[i + 1] = L.col_indices.size();
    }

    // Row-oriented IC(0): l_ij = (a_ij - sum_{m<j} l_im l_jm) / l_jj on the pattern of tril(A).
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t row_begin = L.row_offsets[i];
        const std::size_t diag = L.row_offsets[i + 1] - 1;
        for (std::size_t p = row_begin; p < diag; ++p) {
            const std::size_t j = L.col_indices[p];
            double s = L.values[p];
            // Sparse dot of the already-final prefixes of rows i and j (columns < j).
            std::size_t a = row_begin;
            std::size_t b = L.row_offsets[j];
            const std::size_t b_end = L.row_offsets[j + 1] - 1;
            while (a < p && b < b_end) {
                if (L.col_indices[a] == L.col_indices[b]) {
                    s -= L.values[a] * L.values[b];
                    ++a;
                    ++b;
                } else if (L.col_indices[a] < L.col_indices[b]) {
                    ++a;
                } else {
                    ++b;
                }
            }
            L.values[p] = s / L.values[L.row_offsets[j + 1] - 1];
        }
        double pivot = L.values[diag];
        for (std::size_t p = row_begin; p < diag; ++p) pivot -= L.values[p] * L.values[p];
        if (!(pivot > 0.0)) throw PivotError(i, pivot);
        L.values[diag] = std::sqrt(pivot);
    }

    Preconditioner P;
    P.kind_ = PreconditionerKind::ic0;
    P.n_ = n;
    P.factor_ = std::move(L);
    return P;
}

void Preconditioner::apply_inverse(std::span<const double> r, std::span<double> z) const {
    if (r.size() != n_ || z.size() != n_) throw DimensionError("apply_inverse: length mismatch");
    switch (kind_) {
        case PreconditionerKind::none:
            std::copy(r.begin(), r.end(), z.begin());
            return;
        case PreconditionerKind::jacobi:
            for (std::size_t i = 0; i < n_; ++i) z[i] = inv_diag_[i] * r[i];
            return;
        case PreconditionerKind::ic0: {
            const auto& L = factor_;
            for (std::size_t i = 0; i < n_; ++i) {
                double s = r[i];
                const std::size_t diag = L.row_offsets[i + 1] - 1;
                for (std::size_t p = L.row_offsets[i]; p < diag; ++p) s -= L.values[p] * z[L.col_indices[p]];
                z[i] = s / L.values[diag];
            }
            // L^T solve, reading the rows of L as columns of L^T.
            for (std::size_t i = n_; i-- > 0;) {
                const std::size_t diag = L.row_offsets[i + 1] - 1;
                z[i] /= L.values[diag];
                const double zi = z[i];
                for (std::size_t p = L.row_offsets[i]; p < diag; ++p) z[L.col_indices[p]] -= L.values[p] * zi;
            }
            return;
        }
    }
}

Vector Preconditioner::apply_inverse(std::span<const double> r) const {
    Vector z(n_);
    apply_inverse(r, z);
    return z;
}

double Preconditioner::m_norm2(std::span<const double> x) const {
    if (x.size() != n_) throw DimensionError("m_norm2: length mismatch");
    switch (kind_) {
        case PreconditionerKind::none:
            return dot(x, x);
        case PreconditionerKind::jacobi: {
            double s = 0.0;
            for (std::size_t i = 0; i < n_; ++i) s += x[i] * x[i] / inv_diag_[i];
            return s;
        }
        case PreconditionerKind::ic0: {
            // ||L^T x||^2, accumulated column by column of L^T.
            Vector y(n_, 0.0);
            const auto& L = factor_;
            for (std::size_t i = 0; i < n_; ++i) {
                for (std::size_t p = L.row_offsets[i]; p < L.row_offsets[i + 1]; ++p) {
                    y[L.col_indices[p]] += L.values[p] * x[i];
                }
            }
            return dot(y, y);
        }
    }
    return 0.0;
}

Preconditioner build_preconditioner(const SparseSymMatrix& A, PreconditionerKind kind) {
    switch (kind) {
        case PreconditionerKind::none: return Preconditioner::identity(A.size());
        case PreconditionerKind::jacobi: return Preconditioner::jacobi(A);
        case PreconditionerKind::ic0: return Preconditioner::ic0(A);
    }
    throw DomainError("unknown preconditioner kind");
}

SparseSymMatrix diffusion_fd_matrix(std::size_t grid) {
    if (grid == 0) throw DomainError("diffusion_fd_matrix: grid must be positive");
    const double h = 1.0 / static_cast<double>(grid + 1);
    auto coeff = [](double x, double y) {
        return 1.0 / ((2.0 + 1.8 * std::sin(10.0 * x)) * (2.0 + 1.8 * std::sin(10.0 * y)));
    };
    auto node = [grid](std::size_t i, std::size_t j) { return j * grid + i; };

    std::vector<Triplet> entries;
    entries.reserve(5 * grid * grid);
    // Half-grid coordinates are formed from integers so that the coefficient
    // shared by two neighbours is bitwise identical from both sides.
    auto half = [h](std::size_t twice) { return static_cast<double>(twice) * 0.5 * h; };
    for (std::size_t j = 0; j < grid; ++j) {
        for (std::size_t i = 0; i < grid; ++i) {
            const std::size_t xi = 2 * (i + 1);
            const std::size_t yj = 2 * (j + 1);
            const double west = coeff(half(xi - 1), half(yj));
            const double east = coeff(half(xi + 1), half(yj));
            const double south = coeff(half(xi), half(yj - 1));
            const double north = coeff(half(xi), half(yj + 1));
            const std::size_t me = node(i, j);
            entries.push_back({me, me, west + east + south + north});
            if (i > 0) entries.push_back({me, node(i - 1, j), -west});
            if (i + 1 < grid) entries.push_back({me, node(i + 1, j), -east});
            if (j > 0) entries.push_back({me, node(i, j - 1), -south});
            if (j + 1 < grid) entries.push_back({me, node(i, j + 1), -north});
        }
    }
    return SparseSymMatrix::from_full_triplets(grid * grid, std::move(entries));
}

}  // namespace cgdiag
