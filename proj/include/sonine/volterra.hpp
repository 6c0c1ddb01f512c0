#pragma once

// Product-integration machinery for Volterra equations of the second kind
// with weakly singular kernels:
//
//   relaxation   s + mu (l * s) = 1
//   resolvent    r + mu (l * r) = l        (solved for rho = r / l)
//   inversion    (k * l) = 1 given k, recovering l
//
// The unknown is piecewise linear on a (possibly graded) grid; every cell
// moment is integrated to near machine precision, so the scheme error is the
// interpolation error alone.  Weights depend only on the kernel and the grid
// and are reused across mu sweeps.

#include <complex>
#include <functional>
#include <vector>

#include "sonine/execution.hpp"
#include "sonine/kernels.hpp"

namespace sonine {

class TimeGrid {
public:
    // t_i = T (i/N)^g, i = 0..N; g >= 1 concentrates nodes near zero where
    // the kernel is singular.
    static TimeGrid graded(double horizon, int steps, double grading);
    static TimeGrid uniform(double horizon, int steps);

    const std::vector<double>& nodes() const { return nodes_; }
    double horizon() const { return nodes_.back(); }
    int steps() const { return static_cast<int>(nodes_.size()) - 1; }
    double grading() const { return grading_; }

    // Every other node (steps must be even).  Graded grids are nested under
    // this halving, and the shared nodes are bitwise identical.
    TimeGrid coarsened() const;

private:
    TimeGrid() = default;
    std::vector<double> nodes_;
    double grading_ = 1.0;
};

// A convolution density: pointwise values for t > 0 plus the singular
// expansion near zero.  Adapts a kernel pair's l, or any custom density
// (e.g. l = 1 turns the relaxation equation into s' = -mu s).
struct DensityFunction {
    std::function<double(double)> value;
    SingularExpansion expansion;
    std::string label = "density";
};
DensityFunction density_of(const SoninePair& pair);
DensityFunction constant_density(double c = 1.0);

// Weights of the piecewise-linear product integration
//   (l * s)(t_i) = sum_{j<i} A(i,j) s_j + B(i,j) s_{j+1}.
// Rows are independent and built in parallel under the parallel policy.
class ConvolutionWeights {
public:
    ConvolutionWeights(const DensityFunction& density, const TimeGrid& grid,
                       ExecutionPolicy policy = ExecutionPolicy::parallel);

    double A(int i, int j) const { return a_[offset(i) + j]; }
    double B(int i, int j) const { return b_[offset(i) + j]; }
    const TimeGrid& grid() const { return grid_; }

    // (l * s)(t_i) for nodal values s_0..s_i (s beyond i is not read).
    double apply_row(int i, const std::vector<double>& s) const;

private:
    static std::size_t offset(int i) {
        return static_cast<std::size_t>(i) * (i - 1) / 2;
    }
    TimeGrid grid_;
    std::vector<double> a_, b_;
};

// Nodal values of s solving s + mu (l * s) = 1, s_0 = 1.  mu >= 0.
std::vector<double> solve_relaxation(const ConvolutionWeights& weights, double mu);

// Independent solves sharing one weight table.
std::vector<std::vector<double>> solve_relaxation_batch(const ConvolutionWeights& weights,
                                                        const std::vector<double>& mus,
                                                        ExecutionPolicy policy = ExecutionPolicy::parallel);

// Nodal values of y solving y + mu (l * y) = g with a general right-hand side
// given at the grid nodes (rhs.size() == steps+1); y_0 = rhs_0.  mu >= 0.
//
// This is the workhorse behind Duhamel terms: y = (resolvent * f) satisfies
// y + mu (l * y) = (l * f), so convolving sampled forcing with the resolvent
// reduces to apply_row against the forcing followed by this solve — no
// quadrature against the (generally kinked) interpolated forcing is needed.
std::vector<double> solve_volterra_rhs(const ConvolutionWeights& weights, double mu,
                                       const std::vector<double>& rhs);

// Pointwise relaxation envelope 1/(1 + mu/k(t)) <= s_mu(t) <= 1/(1 + mu L(t)).
struct SandwichBounds {
    double lower;
    double upper;
};
SandwichBounds relaxation_sandwich(const SoninePair& pair, double mu, double t);

// Pointwise resolvent envelope 0 <= r_mu(t) <= l(t) / (1 + mu L(t)).
double resolvent_upper_bound(const SoninePair& pair, double mu, double t);

struct ResolventSolution {
    std::vector<double> rho;      // r = l rho; rho_0 = 1
    std::vector<double> r;        // r at nodes; r[0] is the (possibly infinite) limit
    std::vector<double> integral; // (1 * r) at nodes, same product-integration order
    double mu = 0.0;
};

// Doubly weighted cell moments for the resolvent equation, plus the forward
// moments for (1 * r).  Like ConvolutionWeights these depend only on the
// kernel and the grid, so one table serves every load mu — the expensive
// quadrature is paid once per grid.
class ResolventWeights {
  public:
    ResolventWeights(const DensityFunction& density, const TimeGrid& grid,
                     ExecutionPolicy policy = ExecutionPolicy::parallel);
    const TimeGrid& grid() const { return grid_; }

  private:
    friend ResolventSolution solve_resolvent(const ResolventWeights& weights, double mu);
    TimeGrid grid_;
    std::vector<double> p_, q_;    // moments of l(tau) l(t_i - tau) against both hats
    std::vector<double> lv_;       // l at the nodes
    std::vector<double> fl_, fr_;  // forward moments of l per cell (for 1 * r)
    double r_limit_ = 0.0;         // lim_{t -> 0+} l(t), possibly +inf
};

ResolventSolution solve_resolvent(const ResolventWeights& weights, double mu);
ResolventSolution solve_resolvent(const DensityFunction& density, const TimeGrid& grid, double mu,
                                  ExecutionPolicy policy = ExecutionPolicy::parallel);

// d_i = int_0^{t_i} l(tau) rho(tau) f(t_i - tau) dtau with rho piecewise
// linear on the grid: the Duhamel forcing term once rho solves the resolvent
// equation.  f must be evaluable on [0, horizon].
std::vector<double> convolve_resolvent_forcing(const DensityFunction& density, const TimeGrid& grid,
                                               const std::vector<double>& rho,
                                               const std::function<double(double)>& forcing,
                                               ExecutionPolicy policy = ExecutionPolicy::parallel);

// Complex forcing, convolved componentwise (real and imaginary passes share
// the same quadrature path and therefore the same accuracy).  Named rather
// than overloaded so that plain lambdas bind unambiguously above.
std::vector<std::complex<double>> convolve_resolvent_forcing_complex(
    const DensityFunction& density, const TimeGrid& grid, const std::vector<double>& rho,
    const std::function<std::complex<double>(double)>& forcing,
    ExecutionPolicy policy = ExecutionPolicy::parallel);

// Recover l from k by collocating (k * l)(t_i) = 1 on a uniform grid with l
// piecewise constant per cell; returns the M cell values.  Only cumulative_k
// is consulted, so this cross-validates k against l.
std::vector<double> invert_sonine(const SoninePair& pair, double horizon, int cells);

} // namespace sonine
