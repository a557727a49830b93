#include "support.hpp"

#include "cgdiag/errors.hpp"
#include "cgdiag/monitor.hpp"

#include <gtest/gtest.h>

using namespace cgdiag;
using cgdiag::testing::Gen;
using cgdiag::testing::rel;

namespace {

IterationRecord make_record(std::size_t k, double gamma, double delta, double rnorm2_prev) {
    IterationRecord r;
    r.k = k;
    r.gamma = gamma;
    r.delta = delta;
    r.rnorm2_prev = rnorm2_prev;
    r.rnorm2 = rnorm2_prev * delta;
    r.psi = gamma * rnorm2_prev;
    return r;
}

}  // namespace

TEST(Monitor, RejectsBadInput) {
    EXPECT_THROW(DiagnosticsMonitor({}, 0.0), DomainError);
    DiagnosticsMonitor m({}, 1.0);
    EXPECT_THROW(m.observe(make_record(2, 1.0, 0.5, 1.0)), DomainError);
    MonitorConfig c;
    c.x0_norm2 = 1.0;
    DiagnosticsMonitor s(c, 1.0);
    EXPECT_THROW(s.observe(make_record(1, 1.0, 0.5, 1.0)), DomainError);
}

TEST(Monitor, DelayedValuesArriveOnSchedule) {
    Gen g(101);
    const auto A = cgdiag::testing::random_spd(g, 40, 1e3);
    const Vector b = g.vector(40);
    const auto recs = cgdiag::testing::cg_records(A, b, 20);
    const std::size_t d = 3;
    MonitorConfig c;
    c.delay = d;
    c.mu = 0.5;
    DiagnosticsMonitor m(c, dot(b, b));
    for (const auto& rec : recs) {
        m.observe(rec);
        const std::size_t k = rec.k;
        for (const auto& row : m.rows()) {
            EXPECT_EQ(row.gauss_lower.has_value(), row.k + d + 1 <= k) << "row " << row.k << " after " << k;
            EXPECT_EQ(row.gauss_radau_upper.has_value(), row.k + d <= k) << "row " << row.k << " after " << k;
            EXPECT_EQ(row.new_upper.has_value(), row.k + d <= k);
        }
    }
}

TEST(Monitor, DelayedLowerIsWindowSum) {
    Gen g(102);
    const auto A = cgdiag::testing::random_spd(g, 40, 1e3);
    const Vector b = g.vector(40);
    const auto recs = cgdiag::testing::cg_records(A, b, 25);
    for (std::size_t d : {0u, 1u, 4u}) {
        MonitorConfig c;
        c.delay = d;
        DiagnosticsMonitor m(c, dot(b, b));
        for (const auto& rec : recs) m.observe(rec);
        for (const auto& row : m.rows()) {
            if (!row.gauss_lower) continue;
            double s = 0.0;
            for (std::size_t j = row.k; j <= row.k + d; ++j) s += recs[j].psi;
            EXPECT_LE(rel(*row.gauss_lower, s), 1e-15);
        }
    }
}

TEST(Monitor, ExactConvergenceClosesPendingRows) {
    // A = 2I: x_1 = x exactly, ||x||_A^2 = b^T x = 3/2.
    const auto A = SparseSymMatrix::from_triangle(3, {{0, 0, 2.0}, {1, 1, 2.0}, {2, 2, 2.0}});
    const Vector b{1.0, 1.0, 1.0};
    const auto recs = cgdiag::testing::cg_records(A, b, 5);
    ASSERT_EQ(recs.size(), 1u);
    ASSERT_EQ(recs[0].rnorm2, 0.0);
    MonitorConfig c;
    c.delay = 2;
    c.mu = 1.0;
    DiagnosticsMonitor m(c, 3.0);
    m.observe(recs[0]);
    EXPECT_TRUE(m.finished());
    ASSERT_EQ(m.rows().size(), 2u);
    const auto& r0 = m.rows()[0];
    EXPECT_DOUBLE_EQ(*r0.gauss_lower, 1.5);
    EXPECT_DOUBLE_EQ(*r0.gauss_radau_upper, 1.5);
    EXPECT_DOUBLE_EQ(*r0.new_upper, 1.5);
    EXPECT_EQ(*m.rows()[1].gauss_lower, 0.0);
    EXPECT_EQ(m.rows()[1].phi, 0.0);
    EXPECT_THROW(m.observe(recs[0]), DomainError);
}

TEST(Monitor, DegenerateNodeStopsOnlyGaussRadau) {
    MonitorConfig c;
    c.mu = 1.0;
    DiagnosticsMonitor m(c, 1.0);
    m.observe(make_record(1, 2.0, 1.0, 1.0));  // gamma^mu_0 - gamma_0 = -1, mu (-1) + 1 = 0
    EXPECT_EQ(m.gauss_radau_stopped_at(), std::optional<std::size_t>(1));
    m.observe(make_record(2, 1.0, 0.5, 1.0));
    const auto& last = m.rows().back();
    EXPECT_FALSE(last.gauss_radau_upper);
    EXPECT_TRUE(last.new_upper);
    EXPECT_TRUE(last.ritz_max_cheap);
}

TEST(Monitor, BackwardErrorColumn) {
    Gen g(103);
    const auto A = cgdiag::testing::random_spd(g, 20, 50.0);
    const Vector b = g.vector(20);
    MonitorConfig c;
    c.bnorm_minv2 = dot(b, b);
    DiagnosticsMonitor m(c, dot(b, b));
    EXPECT_DOUBLE_EQ(*m.rows()[0].backward_error, 1.0);
    for (const auto& rec : cgdiag::testing::cg_records(A, b, 10)) m.observe(rec);
    for (const auto& row : m.rows()) {
        ASSERT_TRUE(row.backward_error);
        const double expect = std::sqrt(row.rnorm2) /
                              (std::sqrt(row.ritz_max_cheap.value_or(0.0)) * std::sqrt(row.xi) + std::sqrt(dot(b, b)));
        EXPECT_LE(rel(*row.backward_error, expect), 1e-15);
    }
}

TEST(Monitor, RefinedColumnsOnlyWhenRequested) {
    Gen g(104);
    const auto A = cgdiag::testing::random_spd(g, 20, 50.0);
    const Vector b = g.vector(20);
    const auto recs = cgdiag::testing::cg_records(A, b, 8);
    MonitorConfig plain;
    MonitorConfig fine;
    fine.refine = true;
    DiagnosticsMonitor a(plain, dot(b, b)), c(fine, dot(b, b));
    for (const auto& rec : recs) {
        a.observe(rec);
        c.observe(rec);
    }
    EXPECT_FALSE(a.rows().back().ritz_max_refined);
    EXPECT_TRUE(c.rows().back().ritz_max_refined);
    EXPECT_FALSE(a.refined_tracker());
    EXPECT_EQ(a.rows().back().ritz_max_cheap, c.rows().back().ritz_max_cheap);
}
