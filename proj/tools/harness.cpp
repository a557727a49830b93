#include "harness.hpp"

#include "cgdiag/errors.hpp"
#include "cgdiag/oracle.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>

namespace cgdiag::harness {

namespace {

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

double parse_number(const std::string& text, const std::string& what) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || text.empty()) throw DomainError("invalid " + what + " '" + text + "'");
    return v;
}

}  // namespace

RhsSpec parse_rhs(const std::string& text) {
    RhsSpec spec;
    if (text == "ones") {
        spec.mode = RhsMode::ones;
    } else if (text == "e_last") {
        spec.mode = RhsMode::e_last;
    } else if (text == "eigen_equal") {
        spec.mode = RhsMode::eigen_equal;
    } else if (starts_with(text, "file:") && text.size() > 5) {
        spec.mode = RhsMode::file;
        spec.path = text.substr(5);
    } else if (starts_with(text, "random:")) {
        spec.mode = RhsMode::random;
        const std::string digits = text.substr(7);
        const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), spec.seed);
        if (ec != std::errc{} || ptr != digits.data() + digits.size() || digits.empty()) {
            throw DomainError("invalid random seed '" + digits + "'");
        }
    } else {
        throw DomainError("unknown rhs mode '" + text + "'");
    }
    return spec;
}

MuSpec parse_mu(const std::string& text) {
    MuSpec spec;
    if (text == "auto") {
        spec.mode = MuMode::auto_ritz;
    } else if (text == "oracle") {
        spec.mode = MuMode::oracle;
    } else if (starts_with(text, "fixed:")) {
        spec.mode = MuMode::fixed;
        spec.value = parse_number(text.substr(6), "mu");
        if (!(spec.value > 0.0)) throw DomainError("mu must be positive");
    } else {
        throw DomainError("unknown mu mode '" + text + "'");
    }
    return spec;
}

StopRule parse_stop_rule(const std::string& text) {
    if (text == "none") return StopRule::none;
    if (text == "residual") return StopRule::residual;
    if (text == "backward") return StopRule::backward_error;
    if (text == "anorm") return StopRule::anorm;
    throw DomainError("unknown stop rule '" + text + "'");
}

Vector random_unit_vector(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    Vector v(n);
    for (double& x : v) {
        const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
        x = 2.0 * u - 1.0;
    }
    const double nrm = norm2(v);
    if (nrm == 0.0) throw DomainError("random rhs is zero");
    for (double& x : v) x /= nrm;
    return v;
}

Vector make_rhs(const SparseSymMatrix& A, const RhsSpec& spec) {
    const std::size_t n = A.size();
    switch (spec.mode) {
    case RhsMode::ones:
        return Vector(n, 1.0);
    case RhsMode::e_last: {
        Vector b(n, 0.0);
        if (n > 0) b[n - 1] = 1.0;
        return b;
    }
    case RhsMode::random:
        return random_unit_vector(n, spec.seed);
    case RhsMode::file: {
        Vector b = read_vector(spec.path);
        if (b.size() != n) {
            throw DimensionError("rhs file has " + std::to_string(b.size()) + " entries, matrix order is " +
                                 std::to_string(n));
        }
        return b;
    }
    case RhsMode::eigen_equal: {
        const EigenDecomposition eig = dense_eigs_vectors(to_dense(A));
        Vector b(n, 0.0);
        const double w = 1.0 / std::sqrt(static_cast<double>(n));
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t i = 0; i < n; ++i) b[i] += w * eig.vectors[j * n + i];
        }
        return b;
    }
    }
    throw DomainError("unknown rhs mode");
}

SolveResult solve(const SparseSymMatrix& A, const Vector& b, const Preconditioner& M, const SolveOptions& options) {
    const std::size_t n = A.size();
    const std::size_t max_iters = options.max_iters ? options.max_iters : 2 * n;
    CgState state = init_cg(A, M, b, options.x0);
    if (!(state.rnorm2 > 0.0)) throw DomainError("initial residual is zero; nothing to solve");

    const bool nonzero_start =
        !options.x0.empty() && std::any_of(options.x0.begin(), options.x0.end(), [](double v) { return v != 0.0; });
    MonitorConfig cfg = options.monitor;
    cfg.bnorm_minv2 = dot(b, M.apply_inverse(b));
    if (nonzero_start) cfg.x0_norm2 = M.m_norm2(options.x0);
    DiagnosticsMonitor monitor(cfg, state.rnorm2);

    SolveResult result;
    result.rnorm.push_back(norm2(state.r));

    std::optional<ReferenceSolution> reference;
    double bnorm_minv2 = *cfg.bnorm_minv2;
    if (options.verify) {
        OracleData data;
        const DenseSym Ad = to_dense(A);
        const std::vector<double> eigs =
            M.kind() == PreconditionerKind::none ? dense_eigs(Ad) : generalized_eigs(Ad, preconditioner_matrix(M));
        data.lambda_min = eigs.front();
        data.lambda_max = eigs.back();
        reference.emplace(A, b);
        result.oracle = std::move(data);
    }
    auto record_oracle = [&](double ztr) {
        if (!reference) return;
        OracleData& data = *result.oracle;
        data.true_err_anorm.push_back(reference->error_anorm(state.x));
        const double xnorm = std::sqrt(M.m_norm2(state.x));
        data.xnorm_direct.push_back(xnorm);
        data.backward_err_oracle.push_back(std::sqrt(ztr) /
                                           (std::sqrt(data.lambda_max) * xnorm + std::sqrt(bnorm_minv2)));
    };
    record_oracle(state.rnorm2);

    const double bnorm = norm2(b);
    LanczosMap lanczos;
    for (std::size_t k = 1; k <= max_iters; ++k) {
        std::optional<double> x0_dot_r;
        if (nonzero_start) x0_dot_r = dot(options.x0, state.r);
        const IterationRecord rec = cg_step(state, A, M, options.matvec);
        monitor.observe(rec, x0_dot_r);
        result.records.push_back(rec);
        if (auto c = lanczos.next(rec)) result.coeffs.push_back(*c);
        result.rnorm.push_back(norm2(state.r));
        record_oracle(state.rnorm2);
        if (state.converged) {
            result.converged = true;
            break;
        }
        if (options.stop != StopRule::none) {
            const auto& rows = monitor.rows();
            StopContext ctx;
            ctx.k = k;
            ctx.rnorm = result.rnorm.back();
            ctx.bnorm = bnorm;
            ctx.backward_error = rows.back().backward_error;
            for (auto it = rows.rbegin(); it != rows.rend(); ++it) {
                if (it->gauss_lower) {
                    ctx.anorm_error_estimate = std::sqrt(*it->gauss_lower);
                    break;
                }
            }
            if (rows.front().gauss_lower) ctx.anorm_initial = std::sqrt(*rows.front().gauss_lower);
            ConvergenceTest test;
            switch (options.stop) {
            case StopRule::residual: test = relative_residual_test(options.tol); break;
            case StopRule::backward_error: test = backward_error_test(options.tol); break;
            case StopRule::anorm: test = anorm_bound_test(options.tol); break;
            case StopRule::none: break;
            }
            if (test && test(ctx)) {
                result.stopped = true;
                break;
            }
        }
    }
    result.rows = monitor.rows();
    result.x = std::move(state.x);
    return result;
}

std::vector<IterationLogRow> log_rows(const SolveResult& result) {
    auto root = [](const std::optional<double>& v) -> std::optional<double> {
        if (!v) return std::nullopt;
        return std::sqrt(std::max(0.0, *v));
    };
    std::vector<IterationLogRow> out;
    out.reserve(result.rows.size());
    for (const DiagnosticsRow& d : result.rows) {
        IterationLogRow row;
        row.k = d.k;
        row.rnorm = result.rnorm.at(d.k);
        row.gauss_lower = root(d.gauss_lower);
        row.gauss_radau_upper = root(d.gauss_radau_upper);
        if (d.gauss_radau_upper) row.gauss_radau_tainted = d.gauss_radau_tainted;
        row.new_upper = root(d.new_upper);
        row.approx_upper = root(d.approx_upper);
        row.ritz_max_cheap = d.ritz_max_cheap;
        row.ritz_min_cheap = d.ritz_min_cheap;
        row.ritz_max_refined = d.ritz_max_refined;
        row.ritz_min_refined = d.ritz_min_refined;
        row.xi_sqrt = root(d.xnorm2 ? d.xnorm2 : std::optional<double>(d.xi));
        row.backward_err_precond = d.backward_error;
        if (result.oracle) {
            row.backward_err_oracle = result.oracle->backward_err_oracle.at(d.k);
            row.true_err_anorm = result.oracle->true_err_anorm.at(d.k);
        }
        out.push_back(row);
    }
    return out;
}

const std::vector<std::string>& log_columns() {
    static const std::vector<std::string> columns = {
        "k",
        "rnorm",
        "gauss_lower",
        "gauss_radau_upper",
        "gauss_radau_tainted",
        "new_upper",
        "approx_upper",
        "ritz_max_cheap",
        "ritz_min_cheap",
        "ritz_max_refined",
        "ritz_min_refined",
        "xi_sqrt",
        "backward_err_precond",
        "backward_err_oracle",
        "true_err_anorm",
    };
    return columns;
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    if (ec != std::errc{}) return "nan";
    return std::string(buf, ptr);
}

void write_csv(std::ostream& out, const std::vector<IterationLogRow>& rows) {
    const auto& cols = log_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
    auto cell = [&out](const std::optional<double>& v) {
        out << ',';
        if (v) out << format_double(*v);
    };
    for (const IterationLogRow& r : rows) {
        out << r.k << ',' << format_double(r.rnorm);
        cell(r.gauss_lower);
        cell(r.gauss_radau_upper);
        out << ',';
        if (r.gauss_radau_tainted) out << (*r.gauss_radau_tainted ? 1 : 0);
        cell(r.new_upper);
        cell(r.approx_upper);
        cell(r.ritz_max_cheap);
        cell(r.ritz_min_cheap);
        cell(r.ritz_max_refined);
        cell(r.ritz_min_refined);
        cell(r.xi_sqrt);
        cell(r.backward_err_precond);
        cell(r.backward_err_oracle);
        cell(r.true_err_anorm);
        out << '\n';
    }
}

void write_svg(std::ostream& out, const std::vector<IterationLogRow>& rows, const std::string& title) {
    struct Series {
        const char* name;
        const char* color;
        std::optional<double> IterationLogRow::*field;
    };
    const Series series[] = {
        {"true_err_anorm", "#000000", &IterationLogRow::true_err_anorm},
        {"gauss_lower", "#1f77b4", &IterationLogRow::gauss_lower},
        {"gauss_radau_upper", "#d62728", &IterationLogRow::gauss_radau_upper},
        {"new_upper", "#ff7f0e", &IterationLogRow::new_upper},
        {"approx_upper", "#2ca02c", &IterationLogRow::approx_upper},
        {"backward_err_precond", "#9467bd", &IterationLogRow::backward_err_precond},
        {"backward_err_oracle", "#8c564b", &IterationLogRow::backward_err_oracle},
    };

    const double width = 900, height = 560, left = 80, right = 200, top = 40, bottom = 50;
    const double plot_w = width - left - right, plot_h = height - top - bottom;

    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    std::size_t kmax = 1;
    for (const auto& r : rows) {
        kmax = std::max(kmax, r.k);
        for (const auto& s : series) {
            const auto& v = r.*(s.field);
            if (v && *v > 0.0 && std::isfinite(*v)) {
                lo = std::min(lo, std::log10(*v));
                hi = std::max(hi, std::log10(*v));
            }
        }
    }
    if (!std::isfinite(lo)) {
        lo = -1.0;
        hi = 1.0;
    }
    lo = std::floor(lo);
    hi = std::ceil(hi);
    if (hi <= lo) hi = lo + 1.0;

    auto px = [&](double k) { return left + plot_w * k / static_cast<double>(kmax); };
    auto py = [&](double v) { return top + plot_h * (hi - std::log10(v)) / (hi - lo); };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << left << "\" y=\"24\" font-size=\"15\">" << title << "</text>\n";
    const int step = std::max(1, static_cast<int>((hi - lo) / 12.0 + 0.999));
    for (int e = static_cast<int>(lo); e <= static_cast<int>(hi); e += step) {
        const double y = py(std::pow(10.0, e));
        out << "<line x1=\"" << left << "\" y1=\"" << y << "\" x2=\"" << left + plot_w << "\" y2=\"" << y
            << "\" stroke=\"#dddddd\"/>\n";
        out << "<text x=\"" << left - 8 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">1e" << e << "</text>\n";
    }
    out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << plot_w << "\" height=\"" << plot_h
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    out << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\">iteration k</text>\n";
    out << "<text x=\"" << left << "\" y=\"" << top + plot_h + 18 << "\" text-anchor=\"middle\">0</text>\n";
    out << "<text x=\"" << left + plot_w << "\" y=\"" << top + plot_h + 18 << "\" text-anchor=\"middle\">" << kmax
        << "</text>\n";

    double legend_y = top + 10;
    for (const auto& s : series) {
        std::vector<std::string> pieces;
        std::ostringstream path;
        bool open = false, any = false;
        for (const auto& r : rows) {
            const auto& v = r.*(s.field);
            if (v && *v > 0.0 && std::isfinite(*v)) {
                path << (open ? " L" : " M") << px(static_cast<double>(r.k)) << ' ' << py(*v);
                open = true;
                any = true;
            } else {
                open = false;
            }
        }
        if (!any) continue;
        out << "<path d=\"" << path.str() << "\" fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\"/>\n";
        out << "<line x1=\"" << left + plot_w + 12 << "\" y1=\"" << legend_y << "\" x2=\"" << left + plot_w + 36
            << "\" y2=\"" << legend_y << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << left + plot_w + 42 << "\" y=\"" << legend_y + 4 << "\">" << s.name << "</text>\n";
        legend_y += 18;
    }
    out << "</svg>\n";
}

std::vector<CheckResult> verify_invariants(const SolveResult& result, std::optional<double> mu) {
    std::vector<CheckResult> checks;
    const auto& rows = result.rows;
    auto fail = [](CheckResult& c, const std::string& detail) {
        if (c.passed) c.detail = detail;
        c.passed = false;
    };

    {
        CheckResult c{"minres identity", true, {}};
        // Long double keeps sum 1/||r_j||^2 finite after the residuals underflow.
        long double inv_sum = 0.0L;
        for (const auto& r : rows) {
            if (r.rnorm2 == 0.0) break;
            inv_sum += 1.0L / static_cast<long double>(r.rnorm2);
            const long double rec = static_cast<long double>(r.rnorm2) * static_cast<long double>(r.phi);
            const long double direct = 1.0L / inv_sum;
            const double gap = static_cast<double>(std::abs(rec - direct) / std::max(rec, direct));
            if (gap > 1e-12) fail(c, "k = " + std::to_string(r.k) + ": relative gap " + format_double(gap));
            if (!(r.phi > 0.0 && r.phi <= 1.0)) fail(c, "k = " + std::to_string(r.k) + ": phi outside (0, 1]");
        }
        checks.push_back(c);
    }

    {
        CheckResult c{"xi nondecreasing", true, {}};
        for (std::size_t i = 1; i < rows.size(); ++i) {
            if (rows[i].xi < rows[i - 1].xi) fail(c, "k = " + std::to_string(rows[i].k));
        }
        checks.push_back(c);
    }

    {
        CheckResult c{"ritz sandwich", true, {}};
        const std::size_t kk = result.coeffs.size();
        const std::size_t stride = kk > 300 ? kk / 200 : 1;
        for (std::size_t k = 1; k <= kk; ++k) {
            if (k % stride != 0 && k != kk && k > 2) continue;
            const std::vector<double> theta = ritz_values(result.coeffs, k);
            const DiagnosticsRow& r = rows.at(k);
            auto within = [&](const std::optional<double>& lo_est, const std::optional<double>& hi_est) {
                if (hi_est && *hi_est > theta.back() * (1.0 + 1e-12)) {
                    fail(c, "k = " + std::to_string(k) + ": max estimate above largest Ritz value");
                }
                if (lo_est && *lo_est < theta.front() * (1.0 - 1e-12)) {
                    fail(c, "k = " + std::to_string(k) + ": min estimate below smallest Ritz value");
                }
            };
            within(r.ritz_min_cheap, r.ritz_max_cheap);
            within(r.ritz_min_refined, r.ritz_max_refined);
        }
        checks.push_back(c);
    }

    {
        CheckResult c{"new upper envelopes gauss-radau", true, {}};
        for (const auto& r : rows) {
            if (r.gauss_radau_upper && r.new_upper && !r.gauss_radau_tainted &&
                *r.gauss_radau_upper > *r.new_upper * (1.0 + 1e-12)) {
                fail(c, "k = " + std::to_string(r.k));
            }
        }
        if (mu && result.oracle &&
            *mu > result.oracle->lambda_min - std::numeric_limits<double>::epsilon() * result.oracle->lambda_max) {
            c.detail = "skipped: mu not certified below lambda_min";
            c.passed = true;
        }
        checks.push_back(c);
    }

    if (result.oracle) {
        CheckResult c{"bound chain", true, {}};
        const auto& err = result.oracle->true_err_anorm;
        const double e0 = err.front();
        // A dense lambda_min carries an absolute error of order eps lambda_max;
        // a node inside that band cannot be certified to lie below lambda_min.
        const double band = std::numeric_limits<double>::epsilon() * result.oracle->lambda_max;
        const bool mu_valid = mu && *mu <= result.oracle->lambda_min - band;
        if (mu && !mu_valid) c.detail = "upper bounds skipped: mu not certified below lambda_min";
        // The refined reference solution is accurate to about kappa u ||x||_A
        // (u the long double unit roundoff); the true error is known to that margin.
        const double kappa = result.oracle->lambda_max / result.oracle->lambda_min;
        const double margin = 10.0 * static_cast<double>(std::numeric_limits<long double>::epsilon()) * kappa * e0;
        for (const auto& r : rows) {
            const double e = err.at(r.k);
            const double hi = (e + margin) * (e + margin) * (1.0 + 1e-10);
            const double lo = e > margin ? (e - margin) * (e - margin) * (1.0 - 1e-10) : 0.0;
            if (r.gauss_lower && *r.gauss_lower > hi) {
                fail(c, "k = " + std::to_string(r.k) + ": lower bound above true error");
            }
            if (mu_valid && r.gauss_radau_upper && !r.gauss_radau_tainted && *r.gauss_radau_upper < lo) {
                fail(c, "k = " + std::to_string(r.k) + ": Gauss-Radau bound below true error");
            }
            if (mu_valid && r.new_upper && *r.new_upper < lo) {
                fail(c, "k = " + std::to_string(r.k) + ": new bound below true error");
            }
        }
        checks.push_back(c);
    }
    return checks;
}

RunOutcome run(const RunConfig& config, std::ostream& report) {
    RunOutcome outcome;
    try {
        const SparseSymMatrix A = read_matrix_market(config.matrix_path);
        const Vector b = make_rhs(A, config.rhs);
        const Preconditioner M = build_preconditioner(A, config.precond);

        SolveOptions options;
        options.monitor.delay = config.delay;
        options.monitor.refine = config.refine;
        options.max_iters = config.max_iters;
        options.stop = config.stop;
        options.tol = config.tol;
        options.verify = config.verify;
        options.matvec = config.matvec;
        switch (config.mu.mode) {
        case MuMode::fixed: options.monitor.mu = config.mu.value; break;
        case MuMode::oracle: {
            const DenseSym Ad = to_dense(A);
            const auto eigs = config.precond == PreconditionerKind::none
                                  ? dense_eigs(Ad)
                                  : generalized_eigs(Ad, preconditioner_matrix(M));
            options.monitor.mu = eigs.front();
            break;
        }
        case MuMode::auto_ritz: break;
        }

        outcome.result = solve(A, b, M, options);
        const auto rows = log_rows(outcome.result);
        if (config.log_path.empty()) {
            write_csv(std::cout, rows);
        } else {
            std::ofstream out(config.log_path);
            if (!out) throw ParseError("cannot write " + config.log_path, 0);
            write_csv(out, rows);
        }
        if (!config.plot_path.empty()) {
            std::ofstream out(config.plot_path);
            if (!out) throw ParseError("cannot write " + config.plot_path, 0);
            write_svg(out, rows, config.matrix_path);
        }

        const auto& res = outcome.result;
        report << "iterations: " << res.records.size() << (res.converged ? " (exact convergence)" : "")
               << (res.stopped ? " (stopping rule)" : "") << '\n';
        if (config.verify) {
            outcome.checks = verify_invariants(res, options.monitor.mu);
            bool ok = true;
            for (const auto& c : outcome.checks) {
                report << "verify: " << c.name << ": " << (c.passed ? "ok" : "FAIL");
                if (!c.detail.empty()) report << " (" << c.detail << ")";
                report << '\n';
                ok = ok && c.passed;
            }
            if (!ok) outcome.exit_code = 4;
        }
    } catch (const BreakdownError& e) {
        report << "breakdown: " << e.what() << '\n';
        outcome.exit_code = 2;
    } catch (const PivotError& e) {
        report << "preconditioner breakdown: " << e.what() << '\n';
        outcome.exit_code = 2;
    } catch (const ParseError& e) {
        report << "input error: " << e.what() << '\n';
        outcome.exit_code = 3;
    } catch (const DegenerateNodeError& e) {
        report << "error: " << e.what() << '\n';
        outcome.exit_code = 2;
    } catch (const Error& e) {
        report << "error: " << e.what() << '\n';
        outcome.exit_code = 1;
    }
    return outcome;
}

}  // namespace cgdiag::harness
