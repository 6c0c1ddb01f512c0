#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "sonine/errors.hpp"
#include "sonine/kernels.hpp"
#include "sonine/specfun.hpp"
#include "sonine/spectral.hpp"
#include "sonine/volterra.hpp"

using namespace sonine;
using cd = std::complex<double>;

namespace {

constexpr double kTau = 6.283185307179586476925286766559;  // 2*pi

double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

FieldState random_complex_field(int dim, int points, double period, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    FieldState s = FieldState::zeros(dim, points, period);
    for (auto& z : s.values) z = cd(u(rng), u(rng));
    return s;
}

// Single-mode initial state u0(x) = exp(i x) on [0, period).
FieldState single_mode(int points, double period) {
    FieldState s = FieldState::zeros(1, points, period);
    for (int j = 0; j < points; ++j) s.values[j] = std::polar(1.0, j * period / points);
    return s;
}

// Source history whose every snapshot is amp(t) * exp(i x).
std::vector<FieldState> modulated_source(int points, double period, const TimeGrid& grid,
                                         const std::vector<double>& amp) {
    std::vector<FieldState> src;
    src.reserve(grid.nodes().size());
    for (std::size_t j = 0; j < grid.nodes().size(); ++j) {
        FieldState f = FieldState::zeros(1, points, period, grid.nodes()[j]);
        for (int x = 0; x < points; ++x) f.values[x] = std::polar(amp[j], x * period / points);
        src.push_back(f);
    }
    return src;
}

}  // namespace

// ---------------------------------------------------------------------------
// Transforms
// ---------------------------------------------------------------------------

TEST_CASE("transform matches the direct discrete Fourier sum in one dimension") {
    FieldState s = random_complex_field(1, 16, kTau, 42);
    auto spec = forward_transform(s);
    REQUIRE(spec.size() == 16);
    double worst = 0.0;
    for (int k = 0; k < 16; ++k) {
        cd acc(0.0, 0.0);
        const double xi = lattice_frequency(k, 16, s.period);
        for (int j = 0; j < 16; ++j) {
            acc += s.values[j] * std::polar(1.0, -xi * (j * s.period / 16));
        }
        acc /= 16.0;
        worst = std::max(worst, std::abs(acc - spec[k]));
    }
    CHECK(worst < 1e-14);

    FieldState back = field_from_spectrum(s, spec, 0.75);
    CHECK(back.time == 0.75);
    worst = 0.0;
    for (int j = 0; j < 16; ++j) worst = std::max(worst, std::abs(back.values[j] - s.values[j]));
    CHECK(worst < 1e-14);
}

TEST_CASE("transform matches the direct sum in two dimensions and keeps Parseval") {
    FieldState s = random_complex_field(2, 8, kTau, 43);
    auto spec = forward_transform(s);
    REQUIRE(spec.size() == 64);
    double worst = 0.0;
    for (int k0 = 0; k0 < 8; ++k0) {
        for (int k1 = 0; k1 < 8; ++k1) {
            cd acc(0.0, 0.0);
            const double xi0 = lattice_frequency(k0, 8, s.period);
            const double xi1 = lattice_frequency(k1, 8, s.period);
            for (int j0 = 0; j0 < 8; ++j0) {
                for (int j1 = 0; j1 < 8; ++j1) {
                    const double x0 = j0 * s.period / 8, x1 = j1 * s.period / 8;
                    acc += s.values[j0 * 8 + j1] * std::polar(1.0, -(xi0 * x0 + xi1 * x1));
                }
            }
            acc /= 64.0;
            worst = std::max(worst, std::abs(acc - spec[k0 * 8 + k1]));
        }
    }
    CHECK(worst < 1e-14);

    // (L/M)^n sum |u|^2 == L^n sum |u_hat|^2
    double lhs = 0.0, rhs = 0.0;
    for (const auto& z : s.values) lhs += std::norm(z);
    lhs *= (s.period / 8) * (s.period / 8);
    for (const auto& z : spec) rhs += std::norm(z);
    rhs *= s.period * s.period;
    CHECK(rel_err(lhs, rhs) < 1e-13);
}

TEST_CASE("transform roundtrip stays at roundoff for large sizes") {
    FieldState s = random_complex_field(1, 4096, kTau, 44);
    FieldState back = field_from_spectrum(s, forward_transform(s), 0.0);
    double worst = 0.0;
    for (std::size_t j = 0; j < s.values.size(); ++j) {
        worst = std::max(worst, std::abs(back.values[j] - s.values[j]));
    }
    CHECK(worst < 1e-14);
}

TEST_CASE("field state validation rejects malformed lattices") {
    CHECK_THROWS_AS(FieldState::zeros(3, 8, 1.0), validation_error);
    CHECK_THROWS_AS(FieldState::zeros(0, 8, 1.0), validation_error);
    CHECK_THROWS_AS(FieldState::zeros(1, 12, 1.0), validation_error);  // not a power of two
    CHECK_THROWS_AS(FieldState::zeros(1, 1, 1.0), validation_error);
    CHECK_THROWS_AS(FieldState::zeros(1, 8, 0.0), validation_error);
    CHECK_THROWS_AS(FieldState::zeros(1, 8, -2.0), validation_error);
    CHECK_THROWS_AS(FieldState::zeros(1, 8, 1.0, -0.5), validation_error);

    FieldState s = FieldState::zeros(2, 4, 1.0);
    CHECK(s.size() == 16);
    s.values.pop_back();
    CHECK_THROWS_AS(s.validate(), validation_error);
    s.values.push_back(cd(std::nan(""), 0.0));
    CHECK_THROWS_AS(s.validate(), validation_error);

    FieldState c = FieldState::constant(1, 4, 2.0, cd(1.0, -3.0), 0.25);
    CHECK(c.time == 0.25);
    for (const auto& z : c.values) CHECK(z == cd(1.0, -3.0));
}

TEST_CASE("lattice frequencies are signed and scale with the period") {
    const double expected8[] = {0, 1, 2, 3, 4, -3, -2, -1};
    for (int m = 0; m < 8; ++m) CHECK(lattice_frequency(m, 8, kTau) == expected8[m]);
    // Halving the period doubles every frequency.
    CHECK(lattice_frequency(1, 4, kTau / 2) == 2.0);
    CHECK(lattice_frequency(3, 4, kTau / 2) == -2.0);
    CHECK(lattice_frequency(2, 4, kTau / 2) == 4.0);
}

// ---------------------------------------------------------------------------
// Symbols and group metadata
// ---------------------------------------------------------------------------

TEST_CASE("operator symbols evaluate their closed forms exactly") {
    auto lap2 = OperatorSymbol::laplacian(2);
    const double xi[] = {1.0, 1.0};
    CHECK(lap2.eval(xi) == 2.0);
    CHECK(lap2.nu() == 2.0);
    CHECK(lap2.homogeneous_dimension() == 2.0);

    auto poly = OperatorSymbol::polyharmonic(1, 2);
    CHECK(poly.eval1(3.0) == 81.0);  // (3^2)^2 without pow() rounding
    CHECK(poly.nu() == 4.0);

    auto aniso = OperatorSymbol::anisotropic({1.0, 2.0}, 1);
    const double xi2[] = {1.0, 1.0};
    CHECK(aniso.eval(xi2) == 3.0);
    CHECK(aniso.dim() == 2);
    CHECK(!aniso.describe().empty());

    CHECK_THROWS_AS(OperatorSymbol::laplacian(0), validation_error);
    CHECK_THROWS_AS(OperatorSymbol::laplacian(3), validation_error);
    CHECK_THROWS_AS(OperatorSymbol::polyharmonic(1, 0), validation_error);
    CHECK_THROWS_AS(OperatorSymbol::anisotropic({}, 1), validation_error);
    CHECK_THROWS_AS(OperatorSymbol::anisotropic({1.0, -1.0}, 1), validation_error);
    CHECK_THROWS_AS(OperatorSymbol::anisotropic({1.0, 0.0}, 1), validation_error);
}

TEST_CASE("symbol on the lattice lists sigma in flattened layout") {
    FieldState like = FieldState::zeros(1, 4, kTau);
    auto sg = symbol_on_lattice(OperatorSymbol::laplacian(1), like);
    REQUIRE(sg.size() == 4);
    CHECK(sg[0] == 0.0);
    CHECK(sg[1] == 1.0);
    CHECK(sg[2] == 4.0);
    CHECK(sg[3] == 1.0);
}

TEST_CASE("group metadata lists homogeneous dimensions and admissible orders") {
    auto h1 = GroupMetadata::heisenberg(1);
    CHECK(h1.homogeneous_dimension == 4.0);
    CHECK(h1.admissible_orders == std::vector<double>{2.0, 4.0, 6.0, 8.0});
    CHECK(GroupMetadata::heisenberg(3).homogeneous_dimension == 8.0);
    auto e = GroupMetadata::engel();
    CHECK(e.homogeneous_dimension == 7.0);
    CHECK(e.admissible_orders == std::vector<double>{6.0, 12.0, 18.0});
    CHECK_THROWS_AS(GroupMetadata::heisenberg(0), validation_error);
}

// ---------------------------------------------------------------------------
// Homogeneous evolution
// ---------------------------------------------------------------------------

TEST_CASE("single-mode evolution reproduces the relaxation special function") {
    const int M = 16;
    FieldState u0 = single_mode(M, kTau);
    auto grid = TimeGrid::graded(1.0, 256, 4.0);
    auto out = evolve_homogeneous(u0, SoninePair::fractional(0.5), OperatorSymbol::laplacian(1),
                                  grid, {1.0});
    REQUIRE(out.size() == 1);
    MittagLefflerEvaluator ml({0.5, 1.0});
    const double exact = ml(-1.0);
    double worst = 0.0;
    for (int j = 0; j < M; ++j) {
        const cd want = std::polar(exact, j * kTau / M);
        worst = std::max(worst, std::abs(out[0].values[j] - want));
    }
    CHECK(worst < 1e-5);  // product integration at N=256: measured 1.9e-6
}

TEST_CASE("constant initial data is preserved exactly and the mean never drifts") {
    FieldState u0 = FieldState::constant(2, 8, kTau, cd(2.5, -1.0));
    auto grid = TimeGrid::graded(2.0, 64, 3.0);
    auto out = evolve_homogeneous(u0, SoninePair::fractional(0.5), OperatorSymbol::laplacian(2),
                                  grid, {grid.nodes()[32], grid.nodes()[64]});
    for (const auto& st : out) {
        for (const auto& z : st.values) CHECK(z == cd(2.5, -1.0));
    }

    // Random data: the lattice mean is the untouched zero mode.
    FieldState w0 = random_complex_field(2, 8, kTau, 45);
    cd mean0(0.0, 0.0);
    for (const auto& z : w0.values) mean0 += z;
    mean0 /= static_cast<double>(w0.values.size());
    auto wout = evolve_homogeneous(w0, SoninePair::distributed_order(),
                                   OperatorSymbol::laplacian(2), grid, {grid.nodes()[64]});
    cd mean1(0.0, 0.0);
    for (const auto& z : wout[0].values) mean1 += z;
    mean1 /= static_cast<double>(wout[0].values.size());
    CHECK(std::abs(mean1 - mean0) < 1e-13);
}

TEST_CASE("modal amplitudes decrease in time and respect the relaxation envelope") {
    auto pair = SoninePair::two_term(0.3, 0.7);
    FieldState u0 = single_mode(8, kTau);  // sigma = 1 under the laplacian
    auto grid = TimeGrid::graded(10.0, 128, 3.0);
    std::vector<double> times;
    for (int i = 16; i <= 128; i += 16) times.push_back(grid.nodes()[i]);
    auto out = evolve_homogeneous(u0, pair, OperatorSymbol::laplacian(1), grid, times);
    double prev = 1.0;
    for (const auto& st : out) {
        const double amp = std::abs(forward_transform(st)[1]);
        CHECK(amp <= prev + 1e-12);
        CHECK(amp <= 1.0 / (1.0 + pair.cumulative_l(st.time)) + 1e-9);
        prev = amp;
    }
}

TEST_CASE("real initial data stays real along the evolution") {
    std::mt19937_64 rng(46);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    FieldState u0 = FieldState::zeros(1, 32, 5.0);
    for (auto& z : u0.values) z = cd(u(rng), 0.0);
    auto grid = TimeGrid::graded(1.0, 64, 2.0);
    auto out = evolve_homogeneous(u0, SoninePair::tempered(0.5, 1.0),
                                  OperatorSymbol::polyharmonic(1, 2), grid, {grid.nodes()[64]});
    double worst = 0.0;
    for (const auto& z : out[0].values) worst = std::max(worst, std::abs(z.imag()));
    CHECK(worst < 1e-13);
}

TEST_CASE("evolution rejects output times that are not grid nodes") {
    FieldState u0 = single_mode(8, kTau);
    auto grid = TimeGrid::graded(1.0, 32, 2.0);
    CHECK_THROWS_AS(evolve_homogeneous(u0, SoninePair::fractional(0.5),
                                       OperatorSymbol::laplacian(1), grid, {0.123456}),
                    validation_error);
    CHECK_THROWS_AS(evolve_homogeneous(u0, SoninePair::fractional(0.5),
                                       OperatorSymbol::laplacian(1), grid, {}),
                    validation_error);
    CHECK_THROWS_AS(evolve_homogeneous(u0, SoninePair::fractional(0.5),
                                       OperatorSymbol::laplacian(2), grid, {1.0}),
                    validation_error);  // dimension mismatch
}

// ---------------------------------------------------------------------------
// Inhomogeneous evolution
// ---------------------------------------------------------------------------

TEST_CASE("zero source reproduces the homogeneous evolution exactly") {
    const int M = 8, N = 64;
    FieldState u0 = random_complex_field(1, M, kTau, 47);
    auto grid = TimeGrid::graded(2.0, N, 3.0);
    std::vector<FieldState> zero_src;
    for (int j = 0; j <= N; ++j) {
        zero_src.push_back(FieldState::zeros(1, M, kTau, grid.nodes()[j]));
    }
    auto pair = SoninePair::two_term(0.3, 0.7);
    auto sym = OperatorSymbol::laplacian(1);
    std::vector<double> tt = {grid.nodes()[40], grid.nodes()[64]};
    auto a = evolve_homogeneous(u0, pair, sym, grid, tt);
    auto b = evolve_inhomogeneous(u0, zero_src, pair, sym, grid, tt, SourceConvention::kernel_eq);
    for (std::size_t k = 0; k < tt.size(); ++k) {
        for (int j = 0; j < M; ++j) CHECK(a[k].values[j] == b[k].values[j]);
    }
}

TEST_CASE("constant forcing on the zero mode integrates the density exactly") {
    // kernel_eq with sigma = 0: u_hat(t) = (l * c)(t) = c * L(t).
    const int M = 8, N = 128;
    auto pair = SoninePair::fractional(0.5);
    auto grid = TimeGrid::graded(2.0, N, 4.0);
    FieldState u0 = FieldState::zeros(1, M, kTau);
    std::vector<FieldState> src;
    for (int j = 0; j <= N; ++j) {
        src.push_back(FieldState::constant(1, M, kTau, cd(0.75, -0.25), grid.nodes()[j]));
    }
    std::vector<double> tt = {grid.nodes()[64], grid.nodes()[128]};
    auto out = evolve_inhomogeneous(u0, src, pair, OperatorSymbol::laplacian(1), grid, tt,
                                    SourceConvention::kernel_eq);
    for (std::size_t k = 0; k < tt.size(); ++k) {
        const cd want = cd(0.75, -0.25) * pair.cumulative_l(tt[k]);
        CHECK(std::abs(out[k].values[3] - want) < 1e-9 * std::abs(want));
    }

    // subdiffusion_eq with sigma = 0: u_hat(t) = (1 * f)(t), exact for linear
    // forcing since the interpolant is the forcing itself.
    std::vector<FieldState> ramp;
    for (int j = 0; j <= N; ++j) {
        ramp.push_back(FieldState::constant(1, M, kTau, cd(grid.nodes()[j], 0.0), grid.nodes()[j]));
    }
    auto out2 = evolve_inhomogeneous(u0, ramp, pair, OperatorSymbol::laplacian(1), grid, tt,
                                     SourceConvention::subdiffusion_eq);
    for (std::size_t k = 0; k < tt.size(); ++k) {
        CHECK(rel_err(out2[k].values[5].real(), 0.5 * tt[k] * tt[k]) < 1e-13);
        CHECK(std::abs(out2[k].values[5].imag()) < 1e-15);
    }
}

TEST_CASE("manufactured forced solution converges at second order") {
    // u(t, x) = t^{0.8} exp(i x) under d/dt(k * u) + R u = f with the
    // fractional pair at alpha = 0.5 and R the one-dimensional laplacian:
    // f_hat(t) = Gamma(1.8)/Gamma(1.3) t^{0.3} + t^{0.8} on the sigma = 1 mode.
    const int M = 8;
    const double c = gamma_fn(1.8) * recip_gamma(1.3);
    auto run = [&](int N) {
        auto grid = TimeGrid::graded(1.0, N, 4.0);
        std::vector<double> amp(N + 1);
        for (int j = 0; j <= N; ++j) {
            const double t = grid.nodes()[j];
            amp[j] = c * std::pow(t, 0.3) + std::pow(t, 0.8);
        }
        FieldState u0 = FieldState::zeros(1, M, kTau);
        auto src = modulated_source(M, kTau, grid, amp);
        auto out = evolve_inhomogeneous(u0, src, SoninePair::fractional(0.5),
                                        OperatorSymbol::laplacian(1), grid, {1.0},
                                        SourceConvention::kernel_eq);
        double worst = 0.0;
        for (int x = 0; x < M; ++x) {
            const cd want = std::polar(1.0, x * kTau / M);  // t^{0.8} = 1 at t = 1
            worst = std::max(worst, std::abs(out[0].values[x] - want));
        }
        return worst;
    };
    const double e512 = run(512);
    const double e1024 = run(1024);
    CHECK(e512 < 5e-6);   // measured 6.8e-7
    CHECK(e1024 < 2e-6);  // measured 1.7e-7
    CHECK(e512 / e1024 > 2.5);  // second order: measured ratio 4.0
}

TEST_CASE("time-integrated source convention matches its special-function solution") {
    // d/dt u + d/dt (l * u) = 1 on the sigma = 1 mode with u(0) = 0 and the
    // fractional pair at alpha = 1/2 has u(t) = t E_{1/2,2}(-sqrt(t)).
    const int M = 8, N = 512;
    auto grid = TimeGrid::graded(2.0, N, 4.0);
    FieldState u0 = FieldState::zeros(1, M, kTau);
    std::vector<double> amp(N + 1, 1.0);
    auto src = modulated_source(M, kTau, grid, amp);
    std::vector<double> tt = {grid.nodes()[430], grid.nodes()[512]};
    auto out = evolve_inhomogeneous(u0, src, SoninePair::fractional(0.5),
                                    OperatorSymbol::laplacian(1), grid, tt,
                                    SourceConvention::subdiffusion_eq);
    MittagLefflerEvaluator ml({0.5, 2.0});
    for (std::size_t k = 0; k < tt.size(); ++k) {
        const double want = tt[k] * ml(-std::sqrt(tt[k]));
        const double got = std::abs(out[k].values[0]);
        CHECK(rel_err(got, want) < 1e-5);  // measured 8.5e-7 at N = 512
    }
}

TEST_CASE("inhomogeneous evolution validates its source history") {
    const int M = 8, N = 16;
    FieldState u0 = FieldState::zeros(1, M, kTau);
    auto grid = TimeGrid::graded(1.0, N, 2.0);
    auto pair = SoninePair::fractional(0.5);
    auto sym = OperatorSymbol::laplacian(1);

    std::vector<FieldState> src;
    for (int j = 0; j < N; ++j) src.push_back(FieldState::zeros(1, M, kTau, grid.nodes()[j]));
    // one state short
    CHECK_THROWS_AS(evolve_inhomogeneous(u0, src, pair, sym, grid, {1.0},
                                         SourceConvention::kernel_eq),
                    validation_error);
    src.push_back(FieldState::zeros(1, M, kTau, 0.123));  // wrong time stamp
    CHECK_THROWS_AS(evolve_inhomogeneous(u0, src, pair, sym, grid, {1.0},
                                         SourceConvention::kernel_eq),
                    validation_error);
    src.back() = FieldState::zeros(1, 2 * M, kTau, grid.nodes()[N]);  // wrong lattice
    CHECK_THROWS_AS(evolve_inhomogeneous(u0, src, pair, sym, grid, {1.0},
                                         SourceConvention::kernel_eq),
                    validation_error);
}

// ---------------------------------------------------------------------------
// Counting
// ---------------------------------------------------------------------------

TEST_CASE("lattice counting enumerates small level sets exactly") {
    auto lap2 = OperatorSymbol::laplacian(2);
    CHECK(spectral_counting(lap2, 1.5, 2) == 4);
    CHECK(spectral_counting(lap2, 2.5, 2) == 8);
    CHECK(spectral_counting(lap2, 0.5, 1) == 0);
    CHECK(spectral_counting(OperatorSymbol::laplacian(1), 1.5, 1) == 2);

    CHECK_THROWS_AS(spectral_counting(lap2, 100.0, 2), validation_error);  // box too small
    CHECK_THROWS_AS(spectral_counting(lap2, 0.0, 4), validation_error);
    CHECK_THROWS_AS(spectral_counting(lap2, 1.0, 0), validation_error);

    // Anisotropic with unit coefficients is the laplacian.
    auto aniso = OperatorSymbol::anisotropic({1.0, 1.0}, 1);
    for (double v : {1.5, 2.5, 7.3, 26.0}) {
        CHECK(spectral_counting(aniso, v, 8) == spectral_counting(lap2, v, 8));
    }
}

TEST_CASE("log-log counting fits recover the homogeneous-dimension-over-order slope") {
    std::vector<double> vg;
    for (int i = 0; i <= 30; ++i) vg.push_back(10.0 * std::pow(10.0, i / 10.0));

    auto fit2 = fit_counting_exponent(OperatorSymbol::laplacian(2), vg);
    CHECK(std::abs(fit2.slope - 1.0) < 0.03);  // measured 1.011
    CHECK(fit2.residual < 0.1);
    REQUIRE(fit2.counts.size() == vg.size());
    for (std::size_t i = 1; i < fit2.counts.size(); ++i) {
        CHECK(fit2.counts[i] >= fit2.counts[i - 1]);
    }

    auto fit1 = fit_counting_exponent(OperatorSymbol::laplacian(1), vg);
    CHECK(std::abs(fit1.slope - 0.5) < 0.03);  // measured 0.520

    std::vector<double> vg2;
    for (int i = 0; i <= 25; ++i) vg2.push_back(10.0 * std::pow(10.0, i / 5.0));
    auto fitp = fit_counting_exponent(OperatorSymbol::polyharmonic(1, 2), vg2);
    CHECK(std::abs(fitp.slope - 0.25) < 0.05);  // measured 0.284

    CHECK_THROWS_AS(fit_counting_exponent(OperatorSymbol::laplacian(2), {1.0, 2.0, 3.0}),
                    validation_error);  // needs three decades
}

// ---------------------------------------------------------------------------
// Interpolation helper
// ---------------------------------------------------------------------------

TEST_CASE("piecewise-linear interpolant evaluates and integrates exactly") {
    PiecewiseLinear f({0.0, 1.0, 3.0}, {1.0, 2.0, 0.0});
    CHECK(f(0.0) == 1.0);
    CHECK(f(0.5) == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(f(2.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(f(-1.0) == 1.0);  // constant extrapolation
    CHECK(f(5.0) == 0.0);
    CHECK(f.integral(1.0) == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(f.integral(0.5) == doctest::Approx(0.625).epsilon(1e-15));
    CHECK(f.integral(3.0) == doctest::Approx(3.5).epsilon(1e-15));
    CHECK(f.integral(5.0) == doctest::Approx(3.5).epsilon(1e-15));

    CHECK_THROWS_AS(PiecewiseLinear({0.0}, {1.0}), validation_error);
    CHECK_THROWS_AS(PiecewiseLinear({0.0, 1.0}, {1.0}), validation_error);
    CHECK_THROWS_AS(PiecewiseLinear({0.0, 0.0}, {1.0, 2.0}), validation_error);
}

// ---------------------------------------------------------------------------
// Execution policy
// ---------------------------------------------------------------------------

TEST_CASE("serial and parallel evolutions agree bit for bit") {
    const int M = 8, N = 48;
    FieldState u0 = random_complex_field(2, M, kTau, 48);
    auto grid = TimeGrid::graded(1.0, N, 3.0);
    auto pair = SoninePair::multi_term({0.8, 0.4});
    auto sym = OperatorSymbol::laplacian(2);
    std::vector<double> tt = {grid.nodes()[24], grid.nodes()[48]};

    auto hs = evolve_homogeneous(u0, pair, sym, grid, tt, ExecutionPolicy::serial);
    auto hp = evolve_homogeneous(u0, pair, sym, grid, tt, ExecutionPolicy::parallel);
    for (std::size_t k = 0; k < tt.size(); ++k) {
        for (std::size_t j = 0; j < hs[k].values.size(); ++j) {
            CHECK(hs[k].values[j] == hp[k].values[j]);
        }
    }

    std::vector<FieldState> src;
    for (int j = 0; j <= N; ++j) {
        FieldState f = random_complex_field(2, M, kTau, 100 + j);
        f.time = grid.nodes()[j];
        src.push_back(f);
    }
    auto is = evolve_inhomogeneous(u0, src, pair, sym, grid, tt, SourceConvention::kernel_eq,
                                   ExecutionPolicy::serial);
    auto ip = evolve_inhomogeneous(u0, src, pair, sym, grid, tt, SourceConvention::kernel_eq,
                                   ExecutionPolicy::parallel);
    for (std::size_t k = 0; k < tt.size(); ++k) {
        for (std::size_t j = 0; j < is[k].values.size(); ++j) {
            CHECK(is[k].values[j] == ip[k].values[j]);
        }
    }
}
