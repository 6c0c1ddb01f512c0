#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sonine/execution.hpp"
#include "sonine/kernels.hpp"
#include "sonine/volterra.hpp"

namespace sonine {

// ---------------------------------------------------------------------------
// Periodic lattice states
// ---------------------------------------------------------------------------

// Complex samples on an n-dimensional periodic lattice with M points per axis
// (M a power of two) and prescribed period.  Values are stored row-major:
// index = i0 * M + i1 for dim == 2.  Physical coordinates are x_j = j * L / M;
// the frequency attached to index m is xi = (2*pi/L) * m_signed with
// m_signed = m for m <= M/2 and m - M otherwise.
struct FieldState {
    int dim = 1;             // 1 or 2
    int points = 0;          // M, points per axis
    double period = 0.0;     // L
    double time = 0.0;
    std::vector<std::complex<double>> values;  // M^dim samples

    // Total number of lattice points (M^dim).
    std::size_t size() const;
    // Throws validation_error unless the state is well formed: dim in {1,2},
    // M a power of two >= 2, period positive and finite, time >= 0, values of
    // length M^dim with finite entries.
    void validate() const;

    static FieldState zeros(int dim, int points, double period, double time = 0.0);
    static FieldState constant(int dim, int points, double period, std::complex<double> c,
                               double time = 0.0);
};

// Signed frequency of lattice index m (0 <= m < points) for the given period.
double lattice_frequency(int index, int points, double period);

// Forward discrete Fourier transform with the 1/M^dim normalization, so that
// u(x) = sum_m spectrum[m] * exp(i xi_m . x).  Layout matches FieldState.
std::vector<std::complex<double>> forward_transform(const FieldState& state);

// Inverse transform: rebuilds physical samples from a spectrum laid out like
// `like.values`, stamping the given time.
FieldState field_from_spectrum(const FieldState& like,
                               const std::vector<std::complex<double>>& spectrum, double time);

// ---------------------------------------------------------------------------
// Operator symbols and group metadata
// ---------------------------------------------------------------------------

enum class SymbolKind { laplacian, polyharmonic, anisotropic };

// Nonnegative homogeneous symbol sigma(xi) of an elliptic operator on the
// lattice: |xi|^2, |xi|^{2m}, or sum_j a_j xi_j^{2m}.  Carries the homogeneous
// order nu = 2m and the homogeneous dimension Q (= dim for these symbols).
class OperatorSymbol {
  public:
    static OperatorSymbol laplacian(int dim);
    static OperatorSymbol polyharmonic(int dim, int power);
    static OperatorSymbol anisotropic(std::vector<double> coefficients, int power);

    double eval(const double* xi) const;  // xi has dim() components
    double eval1(double xi) const;        // dim() == 1 convenience

    SymbolKind kind() const { return kind_; }
    int dim() const { return dim_; }
    int power() const { return power_; }
    double nu() const { return 2.0 * power_; }
    double homogeneous_dimension() const { return static_cast<double>(dim_); }
    const std::vector<double>& coefficients() const { return coeffs_; }
    std::string describe() const;

  private:
    OperatorSymbol(SymbolKind kind, int dim, int power, std::vector<double> coeffs);
    SymbolKind kind_;
    int dim_;
    int power_;
    std::vector<double> coeffs_;
};

// sigma evaluated at every lattice point of `like` (flattened layout).
std::vector<double> symbol_on_lattice(const OperatorSymbol& symbol, const FieldState& like);

// Homogeneous dimension bookkeeping for stratified groups.  Used only to feed
// analytic rate predictions; no computation happens on the group itself.
struct GroupMetadata {
    std::string name;
    double homogeneous_dimension = 0.0;
    std::vector<double> admissible_orders;  // homogeneous orders nu available

    static GroupMetadata heisenberg(int n);  // Q = 2n + 2
    static GroupMetadata engel();            // Q = 7
};

// ---------------------------------------------------------------------------
// Modal evolution
// ---------------------------------------------------------------------------

// How an external source enters the evolution equation:
//  * kernel_eq:       d/dt (k * [u - u0]) + R u = f
//  * subdiffusion_eq: d/dt u + d/dt (l * R u) = f   (source integrated in time)
enum class SourceConvention { kernel_eq, subdiffusion_eq };

// Solves the homogeneous problem by diagonalizing frequency-by-frequency:
// u_hat(t, xi) = s_{sigma(xi)}(t) * u0_hat(xi).  One relaxation solve per
// distinct sigma value; the zero mode is copied untouched.  `times` must be
// nodes of `grid`.
std::vector<FieldState> evolve_homogeneous(const FieldState& u0, const SoninePair& pair,
                                           const OperatorSymbol& symbol, const TimeGrid& grid,
                                           const std::vector<double>& times,
                                           ExecutionPolicy policy = ExecutionPolicy::parallel);

// Inhomogeneous evolution.  `source` holds one FieldState per grid node (same
// lattice as u0, times matching the nodes) and is taken piecewise linear in
// time; the Duhamel term is obtained by product integration on the same
// weight table as the homogeneous part, so no quadrature ever sees the
// interpolated (kinked) forcing.  With source == 0 this reduces to
// evolve_homogeneous exactly.
std::vector<FieldState> evolve_inhomogeneous(const FieldState& u0,
                                             const std::vector<FieldState>& source,
                                             const SoninePair& pair,
                                             const OperatorSymbol& symbol, const TimeGrid& grid,
                                             const std::vector<double>& times,
                                             SourceConvention convention,
                                             ExecutionPolicy policy = ExecutionPolicy::parallel);

// ---------------------------------------------------------------------------
// Lattice spectral counting
// ---------------------------------------------------------------------------

// N(v) = #{ xi in Z^dim \ {0} : sigma(xi) < v }, enumerated exhaustively over
// the integer lattice box [-truncation, truncation]^dim.  Throws a
// validation_error when the box provably cannot contain every such xi
// (smallest coefficient times (truncation+1)^nu must reach v).
std::int64_t spectral_counting(const OperatorSymbol& symbol, double v, int truncation);

// Least-squares slope of log N(v) against log v over a log-spaced grid
// spanning at least three decades.  The lattice truncation is derived from
// the symbol's growth; counts of zero are rejected.
struct CountingFit {
    double slope = 0.0;
    double prefactor = 0.0;  // exp(intercept)
    double residual = 0.0;   // RMS residual of the log-log fit
    std::vector<double> v_values;
    std::vector<std::int64_t> counts;
};

CountingFit fit_counting_exponent(const OperatorSymbol& symbol, const std::vector<double>& v_grid);

// ---------------------------------------------------------------------------
// Piecewise-linear time interpolation (used for sampled sources)
// ---------------------------------------------------------------------------

// Linear interpolant through (x_i, y_i) with exact antiderivative; constant
// extrapolation beyond the endpoints.  x must be strictly increasing.
class PiecewiseLinear {
  public:
    PiecewiseLinear(std::vector<double> x, std::vector<double> y);
    double operator()(double t) const;
    double integral(double t) const;  // int_{x_front}^{t}

  private:
    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<double> cum_;  // antiderivative at the knots
};

}  // namespace sonine
