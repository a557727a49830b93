#include "cgdiag/cg.hpp"
#include "cgdiag/monitor.hpp"
#include "cgdiag/ritz.hpp"
#include "cgdiag/sparse.hpp"

#include <benchmark/benchmark.h>

#include <vector>

using namespace cgdiag;

namespace {

Vector ones(std::size_t n) { return Vector(n, 1.0); }

/// Records of a plain CG run on the finite-difference matrix.
std::vector<IterationRecord> fd_records(std::size_t grid, std::size_t iters) {
    const auto A = diffusion_fd_matrix(grid);
    const auto I = Preconditioner::identity(A.size());
    CgState s = init_cg(A, I, ones(A.size()));
    std::vector<IterationRecord> out;
    for (std::size_t k = 0; k < iters && !s.converged; ++k) out.push_back(cg_step(s, A, I));
    return out;
}

void BM_Matvec(benchmark::State& state) {
    const auto A = diffusion_fd_matrix(static_cast<std::size_t>(state.range(0)));
    const auto mode = state.range(1) ? MatvecMode::parallel : MatvecMode::strict;
    const Vector x = ones(A.size());
    Vector y(A.size());
    for (auto _ : state) {
        matvec(A, x, y, mode);
        benchmark::DoNotOptimize(y.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * A.nnz()));
}
BENCHMARK(BM_Matvec)->Args({60, 0})->Args({200, 0})->Args({200, 1})->Args({500, 0})->Args({500, 1});

void BM_CgStep(benchmark::State& state) {
    const auto A = diffusion_fd_matrix(static_cast<std::size_t>(state.range(0)));
    const auto kind = static_cast<PreconditionerKind>(state.range(1));
    const auto M = build_preconditioner(A, kind);
    CgState s = init_cg(A, M, ones(A.size()));
    for (auto _ : state) {
        if (s.converged) {
            state.PauseTiming();
            s = init_cg(A, M, ones(A.size()));
            state.ResumeTiming();
        }
        benchmark::DoNotOptimize(cg_step(s, A, M));
    }
}
BENCHMARK(BM_CgStep)
    ->Args({200, static_cast<int>(PreconditionerKind::none)})
    ->Args({200, static_cast<int>(PreconditionerKind::jacobi)})
    ->Args({200, static_cast<int>(PreconditionerKind::ic0)});

/// Cost of the whole diagnostics monitor per CG iteration, without the CG work.
void BM_MonitorStep(benchmark::State& state) {
    static const auto recs = fd_records(60, 400);
    MonitorConfig c;
    c.delay = static_cast<std::size_t>(state.range(0));
    c.mu = 1e-3;
    c.refine = state.range(1) != 0;
    c.bnorm_minv2 = 3600.0;
    for (auto _ : state) {
        DiagnosticsMonitor m(c, recs.front().rnorm2_prev);
        for (const auto& r : recs) m.observe(r);
        benchmark::DoNotOptimize(m.rows().back());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * recs.size()));
}
BENCHMARK(BM_MonitorStep)->Args({0, 0})->Args({10, 0})->Args({0, 1});

void BM_CheapRitzTracker(benchmark::State& state) {
    static const auto recs = fd_records(60, 400);
    for (auto _ : state) {
        ExtremeRitzTracker t;
        for (const auto& r : recs) t.observe(r);
        benchmark::DoNotOptimize(t.current());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * recs.size()));
}
BENCHMARK(BM_CheapRitzTracker);

}  // namespace

BENCHMARK_MAIN();
