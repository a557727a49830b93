#pragma once

#include "cgdiag/cg.hpp"
#include "cgdiag/quadrature.hpp"
#include "cgdiag/ritz.hpp"
#include "cgdiag/solution_norm.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace cgdiag {

struct MonitorConfig {
    std::size_t delay = 0;
    /// Prescribed Gauss-Radau node; without it the Gauss-Radau and new upper
    /// bound columns stay empty.
    std::optional<double> mu;
    bool refine = false;
    RefineCadence cadence = RefineCadence::every_step;
    std::size_t refine_every = 1;
    /// b^T M^{-1} b (||b||^2 without preconditioning); enables the backward error column.
    std::optional<double> bnorm_minv2;
    /// ||x_0||^2 (x_0^T M x_0 under PCG); enables the nonzero start correction.
    std::optional<double> x0_norm2;
};

/// Diagnostics for iteration k. Error bounds are squared A-norm quantities;
/// delayed values are filled in d iterations later.
struct DiagnosticsRow {
    std::size_t k = 0;
    double rnorm2 = 0.0;
    double phi = 1.0;
    std::optional<double> gamma_mu;
    std::optional<double> gauss_lower;
    std::optional<double> gauss_radau_upper;
    bool gauss_radau_tainted = false;
    std::optional<double> new_upper;
    std::optional<double> approx_upper;
    std::optional<double> ritz_max_cheap;
    std::optional<double> ritz_min_cheap;
    std::optional<double> ritz_max_refined;
    std::optional<double> ritz_min_refined;
    double xi = 0.0;                       ///< estimate of ||x_k - x_0||^2
    std::optional<double> xnorm2;          ///< estimate of ||x_k||^2 when x_0 is known
    std::optional<double> backward_error;  ///< preconditioned backward error estimate
};

/// Consumes the CG record stream and maintains one DiagnosticsRow per iterate.
///
/// Record k carries gamma_{k-1}, delta_k and ||r_k||^2. From it the lower bound
/// for row k-1-d, the upper bounds for row k-d, and the Ritz, xi and backward
/// error values for row k are produced. When ||r_k|| is exactly zero the
/// pending rows are closed with the telescoped sums, which are exact there.
class DiagnosticsMonitor {
public:
    /// `rnorm2_0` is ||r_0||^2 (z_0^T r_0); it must be positive.
    DiagnosticsMonitor(const MonitorConfig& config, double rnorm2_0);

    /// `x0_dot_r_prev` is x_0^T r_{k-1}; required when the start correction is enabled.
    void observe(const IterationRecord& rec, std::optional<double> x0_dot_r_prev = std::nullopt);

    const std::vector<DiagnosticsRow>& rows() const noexcept { return rows_; }
    const MonitorConfig& config() const noexcept { return config_; }
    bool finished() const noexcept { return finished_; }
    /// Set when the Gauss-Radau recurrence hit a zero denominator and was stopped.
    std::optional<std::size_t> gauss_radau_stopped_at() const noexcept { return gr_stopped_at_; }

    const ExtremeRitzTracker& cheap_tracker() const noexcept { return cheap_; }
    const std::optional<RefinedRitzTracker>& refined_tracker() const noexcept { return refined_; }

private:
    void emit_upper(std::size_t row, double rnorm2);
    void close_converged(std::size_t m);
    void fill_backward_error(DiagnosticsRow& row) const;

    MonitorConfig config_;
    std::vector<DiagnosticsRow> rows_;
    BoundLedger ledger_;
    PhiState phi_;
    std::optional<GaussRadauState> gr_;
    std::optional<std::size_t> gr_stopped_at_;
    ExtremeRitzTracker cheap_;
    std::optional<RefinedRitzTracker> refined_;
    XiState xi_;
    std::optional<StartCorrection> start_;
    bool finished_ = false;
};

}  // namespace cgdiag
