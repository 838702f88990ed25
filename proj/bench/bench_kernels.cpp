// FFT/OpenMP lattice kernels against the serial direct-sum reference.
// BOREL_RICCATI_THREADS caps the OpenMP team.

#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>

#include "borel_riccati/borel.hpp"
#include "borel_riccati/geometry.hpp"

using namespace br;

namespace {

struct Airy {
    RiccatiEquation raw = RiccatiEquation::from_rational({parse_rational("1")}, {parse_rational("0")},
                                                         {parse_rational("-x")});
    FieldElem chi = parse_field_elem("sqrtD0/2", raw.ambient());
    RiccatiEquation reg = raw.regularize(chi);
    FormalSolution fs = formal_solve(reg, 1, 6);
    LiouvilleFrame frame = LiouvilleFrame::make(raw.D0(), 0.0, 0.0, 1, BranchContext{});

    StandardizedEquation standardized(double h, double xi_max) const {
        GridParams gp;
        gp.h = h;
        gp.xi_max = xi_max;
        return standardize(reg, frame, fs, 1.0, gp, chi);
    }
};

const Airy& airy() {
    static const Airy a;
    return a;
}

void lattice(benchmark::State& state, bool serial) {
    const double h = 1.0 / state.range(0);
    auto st = airy().standardized(h, 4.0);
    SolveOptions so;
    so.n_max = 40;
    so.tol = 1e-13;
    so.serial_reference = serial;
    so.check_residual = false;
    for (auto _ : state) benchmark::DoNotOptimize(successive_approx(st, so).n_star);
    state.counters["nodes"] = double(st.nodes_count);
}

void BM_LatticeFFT(benchmark::State& s) { lattice(s, false); }
void BM_LatticeSerial(benchmark::State& s) { lattice(s, true); }

// Public trapezoid convolution; direct sum, no FFT.
void BM_Convolve(benchmark::State& state) {
    const int L = int(state.range(0));
    std::vector<cplx> f(L), g(L);
    for (int m = 0; m < L; ++m) {
        f[m] = std::exp(-0.01 * m);
        g[m] = std::cos(0.02 * m);
    }
    for (auto _ : state) benchmark::DoNotOptimize(convolve(f, g, 1.0 / 64).back());
}

void BM_HalfstripProbes(benchmark::State& state) {
    cplx x0 = std::pow(0.75, 2.0 / 3.0) * std::polar(1.0, std::numbers::pi / 3);
    for (auto _ : state) benchmark::DoNotOptimize(probe_halfstrip(airy().frame, x0, 0.5, int(state.range(0))).radius);
}

} // namespace

BENCHMARK(BM_LatticeFFT)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LatticeSerial)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Convolve)->Arg(256)->Arg(1024)->Arg(4096)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_HalfstripProbes)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
