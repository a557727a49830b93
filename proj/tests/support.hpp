#pragma once

#include "cgdiag/cg.hpp"
#include "cgdiag/oracle.hpp"
#include "cgdiag/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace cgdiag::testing {

/// Seeded source of the random inputs used by the property tests.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
    std::size_t index(std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
    }
    Vector vector(std::size_t n, double lo = -1.0, double hi = 1.0) {
        Vector v(n);
        for (double& x : v) x = uniform(lo, hi);
        return v;
    }

private:
    std::mt19937_64 rng_;
};

/// Dense Q diag(eigs) Q^T with Q a product of three Householder reflectors,
/// returned in exactly symmetric sparse form.
inline SparseSymMatrix spd_with_spectrum(Gen& g, const std::vector<double>& eigs) {
    const std::size_t n = eigs.size();
    std::vector<double> Q(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) Q[i * n + i] = 1.0;
    for (int h = 0; h < 3; ++h) {
        Vector v = g.vector(n);
        const double vv = dot(v, v);
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += Q[i * n + j] * v[j];
            for (std::size_t j = 0; j < n; ++j) Q[i * n + j] -= 2.0 * s * v[j] / vv;
        }
    }
    std::vector<Triplet> entries;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = 0.0;
            for (std::size_t q = 0; q < n; ++q) s += Q[i * n + q] * eigs[q] * Q[j * n + q];
            entries.push_back({i, j, s});
        }
    }
    return SparseSymMatrix::from_triangle(n, std::move(entries));
}

/// Spectrum in [1, kappa] with both ends present and log-spaced random interior.
inline std::vector<double> random_spectrum(Gen& g, std::size_t n, double kappa) {
    std::vector<double> e(n);
    e[0] = 1.0;
    if (n > 1) e[n - 1] = kappa;
    for (std::size_t i = 1; i + 1 < n; ++i) e[i] = g.log_uniform(1.0, kappa);
    std::sort(e.begin(), e.end());
    return e;
}

inline SparseSymMatrix random_spd(Gen& g, std::size_t n, double kappa) {
    return spd_with_spectrum(g, random_spectrum(g, n, kappa));
}

/// Random symmetric tridiagonal matrix that is positive definite (diagonally dominant).
inline SparseSymMatrix random_spd_tridiagonal(Gen& g, std::size_t n) {
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < n; ++i) {
        t.push_back({i, i, g.uniform(2.5, 4.0)});
        if (i + 1 < n) t.push_back({i + 1, i, g.uniform(-1.0, 1.0)});
    }
    return SparseSymMatrix::from_triangle(n, std::move(t));
}

/// A CG coefficient stream: positive gamma_0..gamma_{k-1} and delta_1..delta_k.
struct CoeffStream {
    std::vector<IterationRecord> records;
};

inline CoeffStream random_stream(Gen& g, std::size_t k) {
    CoeffStream s;
    double rnorm2 = 1.0;
    for (std::size_t i = 1; i <= k; ++i) {
        IterationRecord r;
        r.k = i;
        r.gamma = g.log_uniform(1e-2, 1e2);
        r.delta = g.log_uniform(1e-2, 1.0);
        r.rnorm2_prev = rnorm2;
        r.psi = r.gamma * rnorm2;
        rnorm2 *= r.delta;
        r.rnorm2 = rnorm2;
        s.records.push_back(r);
    }
    return s;
}

inline double rel(double a, double b) {
    const double s = std::max(std::abs(a), std::abs(b));
    return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

/// Runs plain CG for up to `iters` steps and collects the records.
inline std::vector<IterationRecord> cg_records(const SparseSymMatrix& A, const Vector& b, std::size_t iters,
                                               const Preconditioner* M = nullptr) {
    const Preconditioner I = Preconditioner::identity(A.size());
    const Preconditioner& P = M ? *M : I;
    CgState s = init_cg(A, P, b);
    std::vector<IterationRecord> out;
    for (std::size_t k = 0; k < iters && !s.converged; ++k) out.push_back(cg_step(s, A, P));
    return out;
}

}  // namespace cgdiag::testing
