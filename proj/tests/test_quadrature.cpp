#include "support.hpp"

#include "cgdiag/errors.hpp"
#include "cgdiag/quadrature.hpp"
#include "harness.hpp"

#include <gtest/gtest.h>

using namespace cgdiag;
using cgdiag::testing::Gen;
using cgdiag::testing::rel;

namespace {

harness::SolveResult verified_run(const SparseSymMatrix& A, const Vector& b, std::optional<double> mu,
                                  std::size_t delay, std::size_t iters) {
    harness::SolveOptions o;
    o.monitor.mu = mu;
    o.monitor.delay = delay;
    o.max_iters = iters;
    o.verify = true;
    return harness::solve(A, b, Preconditioner::identity(A.size()), o);
}

}  // namespace

TEST(Phi, UpdateRule) {
    EXPECT_DOUBLE_EQ(update_phi(1.0, 1.0), 0.5);
    EXPECT_THROW(update_phi(1.0, 0.0), DomainError);
    EXPECT_THROW(update_phi(1.0, -1.0), DomainError);
    EXPECT_THROW(update_phi(0.0, 1.0), DomainError);
    EXPECT_THROW(update_phi(1.5, 1.0), DomainError);
    PhiState p;
    EXPECT_EQ(p.value(), 1.0);
    p.update(3.0);
    EXPECT_DOUBLE_EQ(p.value(), 0.25);
}

TEST(Phi, MinresIdentityOnRandomRuns) {
    Gen g(51);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = g.index(30, 60);
        const auto A = cgdiag::testing::random_spd(g, n, 1e3);
        const auto recs = cgdiag::testing::cg_records(A, g.vector(n), 30);
        double phi = 1.0;
        double inv_sum = 1.0 / recs.front().rnorm2_prev;
        for (const auto& r : recs) {
            phi = update_phi(phi, r.delta);
            inv_sum += 1.0 / r.rnorm2;
            EXPECT_LE(rel(phi, 1.0 / (r.rnorm2 * inv_sum)), 1e-12);
            EXPECT_GT(phi, 0.0);
            EXPECT_LT(phi, 1.0);
        }
    }
}

TEST(GaussRadau, InitialisationAndDegenerateNode) {
    GaussRadauState s(4.0);
    EXPECT_DOUBLE_EQ(s.gamma_mu(), 0.25);
    EXPECT_TRUE(s.sign_ok());
    EXPECT_THROW(GaussRadauState(0.0), DomainError);

    GaussRadauState d(1.0);
    try {
        d.update(2.0, 1.0);
        FAIL() << "expected DegenerateNodeError";
    } catch (const DegenerateNodeError& e) {
        EXPECT_EQ(e.k(), 0u);
    }
}

TEST(GaussRadau, SignLossIsSticky) {
    GaussRadauState s(1.0);
    s.update(2.0, 0.5);  // gap = -1, value (-1)/(-0.5)
    EXPECT_FALSE(s.sign_ok());
    EXPECT_DOUBLE_EQ(s.gamma_mu(), 2.0);
    EXPECT_DOUBLE_EQ(s.magnitude(), 2.0);
    s.update(0.1, 0.5);
    EXPECT_FALSE(s.sign_ok());

    GaussRadauState a(2.0);
    GaussRadauState b(2.0);
    a.update(0.1, 0.3);
    EXPECT_EQ(update_gamma_mu(b, 0.1, 0.3), a.gamma_mu());
    EXPECT_TRUE(b.sign_ok());
}

TEST(GaussRadau, ExactAtLastStepWithExactNode) {
    const auto A = SparseSymMatrix::from_triangle(3, {{0, 0, 1.0}, {1, 1, 2.0}, {2, 2, 3.0}});
    const Vector b{1.0, 1.0, 1.0};
    const auto run = verified_run(A, b, 1.0, 0, 2);
    ASSERT_EQ(run.rows.size(), 3u);
    const double e = run.oracle->true_err_anorm[2];
    EXPECT_LE(rel(*run.rows[2].gauss_radau_upper, e * e), 1e-10);
}

TEST(GaussRadau, NodeAboveSpectrumLosesSign) {
    Gen g(52);
    const auto A = cgdiag::testing::random_spd(g, 10, 100.0);
    const auto run = verified_run(A, g.vector(10), 3.0, 0, 10);
    bool tainted = false;
    for (const auto& r : run.rows) tainted = tainted || r.gauss_radau_tainted;
    EXPECT_TRUE(tainted);
}

TEST(Ledger, WindowAndReadiness) {
    BoundLedger l(3);
    EXPECT_FALSE(l.ready());
    l.push(1.0);
    l.push(2.0);
    EXPECT_FALSE(l.ready());
    EXPECT_FALSE(gauss_lower(l, 1.0, 1.0));
    l.push(4.0);
    EXPECT_TRUE(l.ready());
    EXPECT_EQ(l.partial_sum(), 7.0);
    l.push(8.0);
    EXPECT_EQ(l.window(), (std::vector<double>{2.0, 4.0, 8.0}));
    EXPECT_EQ(l.partial_sum(), 14.0);
    EXPECT_EQ(l.pushed(), 4u);

    BoundLedger z(0);
    EXPECT_TRUE(z.ready());
    z.push(5.0);
    EXPECT_EQ(z.partial_sum(), 0.0);
    EXPECT_DOUBLE_EQ(*gauss_lower(z, 2.0, 3.0), 6.0);
}

TEST(Ledger, PartialSumIsLiteralSumOfWindow) {
    Gen g(53);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t d = g.index(1, 12);
        BoundLedger l(d);
        std::vector<double> all;
        for (int i = 0; i < 40; ++i) {
            const double psi = g.log_uniform(1e-12, 1e3);
            all.push_back(psi);
            l.push(psi);
            if (!l.ready()) continue;
            double s = 0.0;
            for (std::size_t j = all.size() - d; j < all.size(); ++j) s += all[j];
            EXPECT_EQ(l.partial_sum(), s);
        }
    }
}

TEST(Bounds, ZeroDelayForms) {
    BoundLedger l(0);
    EXPECT_DOUBLE_EQ(*gauss_lower(l, 0.5, 4.0), 2.0);
    const auto u = gauss_radau_upper(l, 0.75, 4.0);
    EXPECT_DOUBLE_EQ(u->value, 3.0);
    EXPECT_FALSE(u->tainted);
    const auto t = gauss_radau_upper(l, -0.75, 4.0, true);
    EXPECT_DOUBLE_EQ(t->value, 3.0);
    EXPECT_TRUE(t->tainted);
    EXPECT_TRUE(gauss_radau_upper(l, 0.75, 4.0, false)->tainted);
    EXPECT_DOUBLE_EQ(*new_upper(l, 1.0, 8.0, 2.0), 4.0);
    EXPECT_THROW(new_upper(l, 1.0, 8.0, 0.0), DomainError);
    EXPECT_DOUBLE_EQ(approx_upper(0.5, 8.0, 2.0), 2.0);
    EXPECT_THROW(approx_upper(0.5, 8.0, -1.0), DomainError);
}

TEST(Bounds, NewAndRadauCoincideAtStart) {
    Gen g(54);
    const auto A = cgdiag::testing::random_spd(g, 15, 100.0);
    const Vector b = g.vector(15);
    const auto run = verified_run(A, b, 0.5, 0, 5);
    const auto& r0 = run.rows[0];
    EXPECT_DOUBLE_EQ(*r0.new_upper, r0.rnorm2 / 0.5);
    EXPECT_DOUBLE_EQ(*r0.gauss_radau_upper, *r0.new_upper);
}

TEST(Bounds, DelayedLowerBelowTrueError) {
    Gen g(55);
    for (int trial = 0; trial < 10; ++trial) {
        const auto A = cgdiag::testing::random_spd(g, 20, 1e3);
        const auto run = verified_run(A, g.vector(20), std::nullopt, 4, 40);
        const double e0 = run.oracle->true_err_anorm[0];
        for (const auto& r : run.rows) {
            const double e = run.oracle->true_err_anorm[r.k];
            if (!r.gauss_lower || e < 1e-5 * e0) continue;
            EXPECT_LE(*r.gauss_lower, e * e * (1.0 + 1e-6)) << "k = " << r.k;
        }
    }
}

TEST(Bounds, DelayOneExceedsDelayZero) {
    Gen g(56);
    const auto A = cgdiag::testing::random_spd(g, 30, 1e3);
    const Vector b = g.vector(30);
    const auto r0 = verified_run(A, b, std::nullopt, 0, 20);
    const auto r1 = verified_run(A, b, std::nullopt, 1, 20);
    for (std::size_t k = 0; k < 19; ++k) EXPECT_GT(*r1.rows[k].gauss_lower, *r0.rows[k].gauss_lower);
}

TEST(Bounds, SandwichWithExactNodeAndDelayTwo) {
    Gen g(57);
    for (int trial = 0; trial < 10; ++trial) {
        const auto spectrum = cgdiag::testing::random_spectrum(g, 20, 1e3);
        const auto A = cgdiag::testing::spd_with_spectrum(g, spectrum);
        const auto run = verified_run(A, g.vector(20), spectrum.front() * (1.0 - 1e-12), 2, 30);
        const double e0 = run.oracle->true_err_anorm[0];
        for (const auto& r : run.rows) {
            const double e = run.oracle->true_err_anorm[r.k];
            if (e < 1e-5 * e0 || !r.gauss_radau_upper || !r.gauss_lower) continue;
            EXPECT_GE(*r.gauss_radau_upper, e * e * (1.0 - 1e-6)) << "k = " << r.k;
            EXPECT_LE(*r.gauss_lower, e * e * (1.0 + 1e-6)) << "k = " << r.k;
            EXPECT_FALSE(r.gauss_radau_tainted);
        }
    }
}

TEST(Bounds, NodeInequalityAndMonotoneNewBound) {
    Gen g(58);
    for (int trial = 0; trial < 10; ++trial) {
        const auto spectrum = cgdiag::testing::random_spectrum(g, 30, 1e4);
        const auto A = cgdiag::testing::spd_with_spectrum(g, spectrum);
        const double mu = spectrum.front() * (1.0 - 1e-10);
        const auto run = verified_run(A, g.vector(30), mu, 0, 25);
        for (std::size_t k = 0; k < run.rows.size(); ++k) {
            const auto& r = run.rows[k];
            EXPECT_LE(mu * *r.gamma_mu, r.phi * (1.0 + 1e-12)) << "k = " << k;
            EXPECT_LE(*r.gauss_radau_upper, *r.new_upper * (1.0 + 1e-12));
            if (k > 0) {
                EXPECT_LE(*r.new_upper, *run.rows[k - 1].new_upper * (1.0 + 1e-14));
            }
        }
    }
}

TEST(Bounds, ApproximateBoundEqualsNewBoundAtExactNode) {
    BoundLedger l(0);
    EXPECT_DOUBLE_EQ(approx_upper(0.3, 2.0, 5.0), *new_upper(l, 0.3, 2.0, 5.0));
}

TEST(Bounds, ApproximateBoundLateAccuracy) {
    Gen g(59);
    for (int trial = 0; trial < 10; ++trial) {
        const auto spectrum = cgdiag::testing::random_spectrum(g, 20, 1e3);
        const auto A = cgdiag::testing::spd_with_spectrum(g, spectrum);
        const auto run = verified_run(A, g.vector(20), spectrum.front(), 0, 19);
        const auto& last = run.rows.back();
        ASSERT_TRUE(last.approx_upper && last.gauss_radau_upper);
        EXPECT_LE(*last.approx_upper, 10.0 * *last.gauss_radau_upper);
        EXPECT_GE(*last.approx_upper, 0.1 * *last.gauss_radau_upper);
    }
}
