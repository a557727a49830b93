#include "support.hpp"

#include "cgdiag/errors.hpp"
#include "harness.hpp"

#include <gtest/gtest.h>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace cgdiag;
using namespace cgdiag::harness;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& contents) {
    const auto path = std::filesystem::temp_directory_path() / ("cgdiag_test_" + name);
    std::ofstream(path) << contents;
    return path;
}

const char* kIdentity3 =
    "%%MatrixMarket matrix coordinate real symmetric\n3 3 3\n1 1 1.0\n2 2 1.0\n3 3 1.0\n";

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

}  // namespace

TEST(Parse, RhsSpecs) {
    EXPECT_EQ(parse_rhs("ones").mode, RhsMode::ones);
    EXPECT_EQ(parse_rhs("e_last").mode, RhsMode::e_last);
    EXPECT_EQ(parse_rhs("eigen_equal").mode, RhsMode::eigen_equal);
    const auto r = parse_rhs("random:42");
    EXPECT_EQ(r.mode, RhsMode::random);
    EXPECT_EQ(r.seed, 42u);
    const auto f = parse_rhs("file:b.txt");
    EXPECT_EQ(f.mode, RhsMode::file);
    EXPECT_EQ(f.path, "b.txt");
    EXPECT_THROW(parse_rhs("random:x"), DomainError);
    EXPECT_THROW(parse_rhs("file:"), DomainError);
    EXPECT_THROW(parse_rhs("zeros"), DomainError);
}

TEST(Parse, MuAndStopRule) {
    EXPECT_EQ(parse_mu("auto").mode, MuMode::auto_ritz);
    EXPECT_EQ(parse_mu("oracle").mode, MuMode::oracle);
    const auto m = parse_mu("fixed:2.5e3");
    EXPECT_EQ(m.mode, MuMode::fixed);
    EXPECT_EQ(m.value, 2500.0);
    EXPECT_THROW(parse_mu("fixed:-1"), DomainError);
    EXPECT_THROW(parse_mu("fixed:abc"), DomainError);
    EXPECT_EQ(parse_stop_rule("backward"), StopRule::backward_error);
    EXPECT_EQ(parse_stop_rule("anorm"), StopRule::anorm);
    EXPECT_THROW(parse_stop_rule("energy"), DomainError);
}

TEST(Rhs, Modes) {
    const auto A = diffusion_fd_matrix(4);
    const auto b = make_rhs(A, parse_rhs("random:3"));
    EXPECT_NEAR(norm2(b), 1.0, 1e-15);
    EXPECT_EQ(b, make_rhs(A, parse_rhs("random:3")));
    EXPECT_NE(b, make_rhs(A, parse_rhs("random:4")));
    const auto e = make_rhs(A, parse_rhs("e_last"));
    EXPECT_EQ(e.back(), 1.0);
    // Equal components in the eigenvector basis.
    const auto q = make_rhs(A, parse_rhs("eigen_equal"));
    EXPECT_NEAR(norm2(q), 1.0, 1e-14);
    const auto eig = dense_eigs_vectors(to_dense(A));
    const std::size_t n = A.size();
    for (std::size_t j = 0; j < n; ++j) {
        double c = 0.0;
        for (std::size_t i = 0; i < n; ++i) c += eig.vectors[j * n + i] * q[i];
        EXPECT_NEAR(c, 1.0 / std::sqrt(double(n)), 1e-14);
    }
    const auto path = temp_file("rhs_short.txt", "1.0\n2.0\n");
    EXPECT_THROW(make_rhs(A, parse_rhs("file:" + path.string())), DimensionError);
}

TEST(Csv, FormatRoundTrips) {
    for (double v : {0.1, 1.0 / 3.0, 3.417267562666500e3, 1e-300, -2.5}) {
        const std::string s = format_double(v);
        double back = 0.0;
        std::from_chars(s.data(), s.data() + s.size(), back);
        EXPECT_EQ(back, v) << s;
    }
    EXPECT_EQ(format_double(0.1), "0.10000000000000001");
}

TEST(Run, IdentityConvergesInOneStep) {
    RunConfig c;
    c.matrix_path = temp_file("identity3.mtx", kIdentity3).string();
    c.log_path = (std::filesystem::temp_directory_path() / "cgdiag_test_identity.csv").string();
    std::ostringstream report;
    const auto out = run(c, report);
    EXPECT_EQ(out.exit_code, 0) << report.str();
    EXPECT_TRUE(out.result.converged);
    std::ifstream in(c.log_path);
    std::stringstream buf;
    buf << in.rdbuf();
    const auto rows = lines(buf.str());
    ASSERT_EQ(rows.size(), 3u);  // header + two iterates
    std::string header;
    for (std::size_t i = 0; i < log_columns().size(); ++i) header += (i ? "," : "") + log_columns()[i];
    EXPECT_EQ(rows[0], header);
}

TEST(Run, CsvIsDeterministicAndTailCellsEmpty) {
    const auto A = diffusion_fd_matrix(8);
    std::ostringstream mtx;
    write_matrix_market(mtx, A);
    RunConfig c;
    c.matrix_path = temp_file("fd8.mtx", mtx.str()).string();
    c.rhs = parse_rhs("random:7");
    c.delay = 4;
    c.mu = parse_mu("fixed:0.01");
    c.max_iters = 20;
    c.refine = true;
    std::string text[2];
    for (int i = 0; i < 2; ++i) {
        c.log_path = (std::filesystem::temp_directory_path() / ("cgdiag_test_det" + std::to_string(i) + ".csv")).string();
        std::ostringstream report;
        ASSERT_EQ(run(c, report).exit_code, 0) << report.str();
        std::stringstream buf;
        buf << std::ifstream(c.log_path).rdbuf();
        text[i] = buf.str();
    }
    EXPECT_EQ(text[0], text[1]);
    const auto rows = lines(text[0]);
    ASSERT_EQ(rows.size(), 22u);
    // Last row: k = 20, gauss_lower (third column) not yet available.
    EXPECT_EQ(rows.back().rfind("20,", 0), 0u);
    const auto first_comma = rows.back().find(',');
    const auto second_comma = rows.back().find(',', first_comma + 1);
    EXPECT_EQ(rows.back()[second_comma + 1], ',');
}

TEST(Run, ExitCodes) {
    std::ostringstream report;
    RunConfig missing;
    missing.matrix_path = "/nonexistent/matrix.mtx";
    EXPECT_EQ(run(missing, report).exit_code, 3);

    // Positive diagonal, indefinite: CG breaks down at the second step.
    RunConfig indefinite;
    indefinite.matrix_path =
        temp_file("indef.mtx", "%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n1 1 1.0\n2 1 2.0\n2 2 1.0\n")
            .string();
    indefinite.rhs = parse_rhs("e_last");
    indefinite.log_path = (std::filesystem::temp_directory_path() / "cgdiag_test_indef.csv").string();
    EXPECT_EQ(run(indefinite, report).exit_code, 2);
    EXPECT_NE(report.str().find("breakdown"), std::string::npos);

    RunConfig pivot = indefinite;
    pivot.precond = PreconditionerKind::ic0;
    EXPECT_EQ(run(pivot, report).exit_code, 2);
}

TEST(Run, VerifyReportsChecks) {
    RunConfig c;
    c.matrix_path = std::string(CGDIAG_DATA_DIR) + "/bcsstk01.mtx";
    c.rhs = parse_rhs("eigen_equal");
    c.mu = parse_mu("fixed:3417.2");
    c.max_iters = 300;
    c.verify = true;
    c.refine = true;
    c.log_path = (std::filesystem::temp_directory_path() / "cgdiag_test_verify.csv").string();
    c.plot_path = (std::filesystem::temp_directory_path() / "cgdiag_test_verify.svg").string();
    std::ostringstream report;
    const auto out = run(c, report);
    EXPECT_EQ(out.exit_code, 0) << report.str();
    EXPECT_EQ(out.checks.size(), 5u);
    for (const auto& check : out.checks) EXPECT_TRUE(check.passed) << check.name << ": " << check.detail;
    std::stringstream svg;
    svg << std::ifstream(c.plot_path).rdbuf();
    EXPECT_NE(svg.str().find("<svg"), std::string::npos);
    EXPECT_NE(svg.str().find("true_err_anorm"), std::string::npos);
}

TEST(Solve, StoppingRules) {
    const auto A = diffusion_fd_matrix(10);
    const auto b = random_unit_vector(A.size(), 5);
    SolveOptions o;
    o.stop = StopRule::residual;
    o.tol = 1e-6;
    const auto r = solve(A, b, Preconditioner::identity(A.size()), o);
    EXPECT_TRUE(r.stopped);
    EXPECT_LE(r.rnorm.back(), 1e-6);
    EXPECT_GT(r.rnorm[r.rnorm.size() - 2], 1e-6);

    o.stop = StopRule::backward_error;
    o.tol = 1e-8;
    const auto be = solve(A, b, Preconditioner::identity(A.size()), o);
    EXPECT_TRUE(be.stopped);
    EXPECT_LE(*be.rows.back().backward_error, 1e-8);

    o.stop = StopRule::anorm;
    o.tol = 1e-4;
    o.monitor.delay = 3;
    const auto an = solve(A, b, Preconditioner::identity(A.size()), o);
    EXPECT_TRUE(an.stopped);
}
