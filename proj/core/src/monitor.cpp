#include "cgdiag/monitor.hpp"

#include "cgdiag/errors.hpp"

#include <string>

namespace cgdiag {

DiagnosticsMonitor::DiagnosticsMonitor(const MonitorConfig& config, double rnorm2_0)
    : config_(config), ledger_(config.delay) {
    if (!(rnorm2_0 > 0.0)) throw DomainError("DiagnosticsMonitor: initial residual must be nonzero");
    if (config_.mu) gr_.emplace(*config_.mu);
    if (config_.refine) refined_.emplace(config_.cadence, config_.refine_every);
    if (config_.x0_norm2) start_.emplace(*config_.x0_norm2);

    DiagnosticsRow row0;
    row0.rnorm2 = rnorm2_0;
    if (gr_) row0.gamma_mu = gr_->gamma_mu();
    if (start_) row0.xnorm2 = start_->estimate(0.0);
    rows_.push_back(row0);
    fill_backward_error(rows_.back());
    if (config_.delay == 0) emit_upper(0, rnorm2_0);
}

void DiagnosticsMonitor::fill_backward_error(DiagnosticsRow& row) const {
    if (!config_.bnorm_minv2 || !(*config_.bnorm_minv2 > 0.0)) return;
    const double xnorm2 = row.xnorm2 ? *row.xnorm2 : row.xi;
    // Without an iterate norm the operator norm term vanishes, so a missing
    // estimate at k = 0 does not matter.
    const double anorm2 = row.ritz_max_cheap ? *row.ritz_max_cheap : 0.0;
    row.backward_error = precond_backward_error(row.rnorm2, anorm2, xnorm2 > 0.0 ? xnorm2 : 0.0, *config_.bnorm_minv2);
}

void DiagnosticsMonitor::emit_upper(std::size_t row, double rnorm2) {
    DiagnosticsRow& r = rows_[row];
    const DiagnosticsRow& head = rows_.back();
    if (gr_) {
        if (auto u = gauss_radau_upper(ledger_, gr_->gamma_mu(), rnorm2, gr_->sign_ok())) {
            r.gauss_radau_upper = u->value;
            r.gauss_radau_tainted = u->tainted;
        }
        r.new_upper = new_upper(ledger_, head.phi, rnorm2, gr_->mu());
    } else if (config_.mu) {
        r.new_upper = new_upper(ledger_, head.phi, rnorm2, *config_.mu);
    }
    if (head.ritz_min_cheap && ledger_.ready()) {
        r.approx_upper = ledger_.partial_sum() + approx_upper(head.phi, rnorm2, *head.ritz_min_cheap);
    }
}

void DiagnosticsMonitor::observe(const IterationRecord& rec, std::optional<double> x0_dot_r_prev) {
    if (finished_) throw DomainError("DiagnosticsMonitor: run already finished");
    const std::size_t m = rows_.size();
    if (rec.k != m) {
        throw DomainError("DiagnosticsMonitor: expected record " + std::to_string(m) + ", got " + std::to_string(rec.k));
    }
    const DiagnosticsRow prev = rows_.back();
    const double gamma = rec.gamma;
    const double psi = rec.psi;
    const std::size_t d = config_.delay;

    // Lower bound for row m-1-d needs gamma_{m-1}, before psi_{m-1} joins the window.
    if (m - 1 >= d) rows_[m - 1 - d].gauss_lower = gauss_lower(ledger_, gamma, prev.rnorm2);
    ledger_.push(psi);

    xi_.advance(gamma, prev.rnorm2, prev.phi);
    if (start_) {
        if (!x0_dot_r_prev) throw DomainError("DiagnosticsMonitor: start correction needs x0^T r");
        start_->advance(*x0_dot_r_prev, prev.rnorm2, gamma);
    }

    DiagnosticsRow row;
    row.k = m;
    row.rnorm2 = rec.rnorm2;
    row.xi = xi_.xi();
    if (start_) row.xnorm2 = start_->estimate(row.xi);

    const auto cheap = cheap_.observe(rec);
    row.ritz_max_cheap = cheap->rho_max;
    row.ritz_min_cheap = cheap->rho_min;
    if (refined_) {
        const auto fine = refined_->observe(rec);
        row.ritz_max_refined = fine->rho_max;
        row.ritz_min_refined = fine->rho_min;
    }

    if (rec.rnorm2 == 0.0) {
        row.phi = 0.0;
        rows_.push_back(row);
        fill_backward_error(rows_.back());
        close_converged(m);
        return;
    }

    phi_.update(rec.delta);
    row.phi = phi_.value();
    if (gr_) {
        try {
            gr_->update(gamma, rec.delta);
            row.gamma_mu = gr_->gamma_mu();
        } catch (const DegenerateNodeError&) {
            gr_stopped_at_ = m;
            gr_.reset();
        }
    }
    rows_.push_back(row);
    fill_backward_error(rows_.back());
    if (m >= d) emit_upper(m - d, rec.rnorm2);
}

void DiagnosticsMonitor::close_converged(std::size_t m) {
    // r_m = 0: every later psi vanishes, so for row j the error is exactly
    // psi_j + ... + psi_{m-1}. The ledger holds psi_{m-d} .. psi_{m-1}.
    const std::vector<double> window = ledger_.window();
    const std::size_t first = window.size() <= m ? m - window.size() : 0;
    for (std::size_t j = first; j <= m; ++j) {
        double s = 0.0;
        for (std::size_t i = j - first; i < window.size(); ++i) s += window[i];
        DiagnosticsRow& r = rows_[j];
        if (!r.gauss_lower) r.gauss_lower = s;
        if (gr_ && !r.gauss_radau_upper) {
            r.gauss_radau_upper = s;
            r.gauss_radau_tainted = !gr_->sign_ok();
        }
        if (config_.mu && !r.new_upper) r.new_upper = s;
        if (!r.approx_upper) r.approx_upper = s;
    }
    finished_ = true;
}

}  // namespace cgdiag
