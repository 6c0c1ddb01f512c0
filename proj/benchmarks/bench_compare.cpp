// Compares the serial reference path against the OpenMP path for the three
// parallelized stages: convolution-weight construction, batched relaxation
// solves, and spectral evolution.  The parallel loops run over independent
// rows, solves, and modes with no reductions, so the two paths must agree
// bitwise; any difference is reported as a failure and sets the exit code.
//
// Default sizes exercise the stages at production scale; --quick shrinks
// them for use as a regression test under ctest.

#include <chrono>
#include <complex>
#include <cstdio>
#include <cstring>
#include <random>
#include <string>
#include <vector>

#include "sonine/execution.hpp"
#include "sonine/kernels.hpp"
#include "sonine/spectral.hpp"
#include "sonine/volterra.hpp"

using namespace sonine;
using clock_type = std::chrono::steady_clock;

namespace {

struct StageResult {
    double ms = 0.0;
    std::vector<double> data;  // flattened output for the bitwise comparison
};

template <typename Fn>
StageResult timed(int reps, Fn&& fn) {
    StageResult best;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = clock_type::now();
        std::vector<double> data = fn();
        const double ms =
            std::chrono::duration<double, std::milli>(clock_type::now() - t0).count();
        if (r == 0 || ms < best.ms) best.ms = ms;
        best.data = std::move(data);
    }
    return best;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return 1e300;
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(a[i] - b[i]));
    }
    return worst;
}

}  // namespace

int main(int argc, char** argv) {
    bool quick = false;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--quick") == 0) quick = true;
    }
    const int weights_steps = quick ? 512 : 2048;
    const int batch_steps = quick ? 512 : 1024;
    const int batch_count = quick ? 64 : 256;
    const int evolve_points = quick ? 32 : 64;
    const int evolve_steps = quick ? 256 : 512;
    const int reps = quick ? 1 : 2;

    std::printf("mode: %s (reps=%d)\n", quick ? "quick" : "full", reps);
    std::printf("%-18s %12s %12s %9s %12s\n", "stage", "serial ms", "parallel ms", "speedup",
                "max|diff|");

    int mismatches = 0;
    auto report = [&](const char* name, const StageResult& ser, const StageResult& par) {
        const double diff = max_abs_diff(ser.data, par.data);
        if (diff != 0.0) ++mismatches;
        std::printf("%-18s %12.1f %12.1f %8.2fx %12g%s\n", name, ser.ms, par.ms,
                    ser.ms / par.ms, diff, diff != 0.0 ? "  MISMATCH" : "");
        std::fflush(stdout);
    };

    // Stage 1: weight-table construction for the most quadrature-heavy
    // density (the distributed-order family integrates over the order).
    {
        const auto grid = TimeGrid::graded(5.0, weights_steps, 4.0);
        const DensityFunction density = density_of(SoninePair::distributed_order());
        auto run = [&](ExecutionPolicy policy) {
            return timed(reps, [&] {
                const ConvolutionWeights w(density, grid, policy);
                std::vector<double> flat;
                flat.reserve(static_cast<std::size_t>(weights_steps) * (weights_steps - 1));
                for (int i = 1; i <= weights_steps; ++i) {
                    for (int j = 0; j < i; ++j) {
                        flat.push_back(w.A(i, j));
                        flat.push_back(w.B(i, j));
                    }
                }
                return flat;
            });
        };
        const StageResult ser = run(ExecutionPolicy::serial);
        const StageResult par = run(ExecutionPolicy::parallel);
        report("weights-build", ser, par);
    }

    // Stage 2: batched relaxation solves sharing one weight table.
    {
        const auto grid = TimeGrid::graded(10.0, batch_steps, 4.0);
        const ConvolutionWeights weights(density_of(SoninePair::fractional(0.5)), grid);
        std::vector<double> mus;
        for (int q = 0; q < batch_count; ++q) {
            mus.push_back(0.01 * std::pow(10.0, 4.0 * q / (batch_count - 1)));
        }
        auto run = [&](ExecutionPolicy policy) {
            return timed(reps, [&] {
                const auto sols = solve_relaxation_batch(weights, mus, policy);
                std::vector<double> flat;
                flat.reserve(sols.size() * (batch_steps + 1));
                for (const auto& s : sols) flat.insert(flat.end(), s.begin(), s.end());
                return flat;
            });
        };
        const StageResult ser = run(ExecutionPolicy::serial);
        const StageResult par = run(ExecutionPolicy::parallel);
        report("relaxation-batch", ser, par);
    }

    // Stage 3: homogeneous evolution of a random band-limited field on the
    // 2-torus (per-mode relaxation plus field assembly).
    {
        const double period = 2.0 * std::acos(-1.0);
        FieldState u0 = FieldState::zeros(2, evolve_points, period);
        std::mt19937_64 rng(2024);
        std::uniform_real_distribution<double> uni(-1.0, 1.0);
        std::vector<std::complex<double>> spec(u0.values.size(), 0.0);
        for (std::size_t m = 1; m < spec.size(); ++m) spec[m] = {uni(rng), uni(rng)};
        u0 = field_from_spectrum(u0, spec, 0.0);

        const auto pair = SoninePair::fractional(0.5);
        const auto symbol = OperatorSymbol::laplacian(2);
        const auto grid = TimeGrid::graded(10.0, evolve_steps, 4.0);
        std::vector<double> times;
        for (int i = evolve_steps / 8; i <= evolve_steps; i += evolve_steps / 8) {
            times.push_back(grid.nodes()[i]);
        }
        auto run = [&](ExecutionPolicy policy) {
            return timed(reps, [&] {
                const auto states = evolve_homogeneous(u0, pair, symbol, grid, times, policy);
                std::vector<double> flat;
                flat.reserve(states.size() * u0.values.size() * 2);
                for (const auto& st : states) {
                    for (const auto& z : st.values) {
                        flat.push_back(z.real());
                        flat.push_back(z.imag());
                    }
                }
                return flat;
            });
        };
        const StageResult ser = run(ExecutionPolicy::serial);
        const StageResult par = run(ExecutionPolicy::parallel);
        report("evolve", ser, par);
    }

    if (mismatches != 0) {
        std::printf("FAILED: %d stage(s) disagree between serial and parallel\n", mismatches);
    }
    return mismatches;
}
