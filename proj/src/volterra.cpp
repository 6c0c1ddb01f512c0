#include "sonine/volterra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sonine/errors.hpp"
#include "sonine/quadrature.hpp"

namespace sonine {

namespace {

constexpr int kMaxSteps = 4096; // two triangular weight tables at this size stay ~270 MB

void validate_grid_args(double horizon, int steps, double grading) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw validation_error("TimeGrid: horizon must be positive and finite");
    }
    if (steps < 2 || steps > kMaxSteps) {
        throw validation_error("TimeGrid: steps must lie in [2, 4096]");
    }
    if (!(grading >= 1.0) || !(grading <= 8.0)) {
        throw validation_error("TimeGrid: grading must lie in [1, 8]");
    }
}

// Quadrature settings for the weakly singular cell integrals: purely
// relative, so weights of every magnitude are equally accurate.
AdaptiveOptions singular_cell_options() {
    AdaptiveOptions opt;
    opt.abs_tol = 0.0;
    opt.rel_tol = 1e-11;
    return opt;
}
constexpr int kFlatten = 8;

// Gauss order for a cell whose integrand is analytic but has a singularity
// at distance `a` outside (cell = [a, b] measured from it).  The Bernstein
// ellipse through the singularity has parameter
//   rho = v + sqrt(v^2 - 1),  v = (b + a)/(b - a),
// and the n-point error decays like rho^{-2n}.
int gauss_order_for(double a, double b) {
    const double ratio = b / a;
    if (ratio < 1.3) return 8;
    if (ratio < 2.5) return 12;
    if (ratio < 5.0) return 16;
    return 24;
}

double limit_at_zero(const SingularExpansion& e) {
    if (e.terms.empty()) return 0.0;
    double pmin = std::numeric_limits<double>::infinity();
    for (const auto& t : e.terms) pmin = std::min(pmin, t.power);
    double c = 0.0, d = 0.0;
    for (const auto& t : e.terms) {
        if (t.power == pmin) (t.log ? d : c) += t.coef;
    }
    const double inf = std::numeric_limits<double>::infinity();
    if (pmin < 0.0 || (pmin == 0.0 && d != 0.0)) {
        // u^p dominates; with a log factor the sign flips (ln u -> -inf)
        if (pmin < 0.0 && d == 0.0) return c > 0.0 ? inf : -inf;
        return d < 0.0 ? inf : -inf;
    }
    if (pmin == 0.0) return c;
    return 0.0;
}

} // namespace

TimeGrid TimeGrid::graded(double horizon, int steps, double grading) {
    validate_grid_args(horizon, steps, grading);
    TimeGrid g;
    g.grading_ = grading;
    g.nodes_.resize(steps + 1);
    for (int i = 0; i <= steps; ++i) {
        g.nodes_[i] = horizon * std::pow(static_cast<double>(i) / steps, grading);
    }
    g.nodes_[steps] = horizon;
    for (int i = 1; i <= steps; ++i) {
        if (!(g.nodes_[i] > g.nodes_[i - 1])) {
            throw integrity_error("TimeGrid: grading collapsed adjacent nodes");
        }
    }
    return g;
}

TimeGrid TimeGrid::uniform(double horizon, int steps) {
    validate_grid_args(horizon, steps, 1.0);
    TimeGrid g;
    g.grading_ = 1.0;
    g.nodes_.resize(steps + 1);
    for (int i = 0; i <= steps; ++i) {
        g.nodes_[i] = horizon * (static_cast<double>(i) / steps);
    }
    g.nodes_[steps] = horizon;
    return g;
}

TimeGrid TimeGrid::coarsened() const {
    const int n = steps();
    if (n % 2 != 0 || n < 4) {
        throw validation_error("TimeGrid::coarsened: steps must be even and >= 4");
    }
    TimeGrid g;
    g.grading_ = grading_;
    g.nodes_.resize(n / 2 + 1);
    for (int i = 0; i <= n / 2; ++i) g.nodes_[i] = nodes_[2 * i];
    return g;
}

DensityFunction density_of(const SoninePair& pair) {
    DensityFunction d;
    d.value = [pair](double t) { return pair.l(t); };
    d.expansion = pair.l_expansion();
    d.label = pair.describe();
    return d;
}

DensityFunction constant_density(double c) {
    if (!std::isfinite(c)) throw validation_error("constant_density: value must be finite");
    DensityFunction d;
    d.value = [c](double) { return c; };
    d.expansion.terms = {{c, 0.0, false}};
    d.expansion.remainder_power = std::numeric_limits<double>::infinity();
    d.label = "constant";
    return d;
}

// ---------------------------------------------------------------------------
// ConvolutionWeights
// ---------------------------------------------------------------------------

ConvolutionWeights::ConvolutionWeights(const DensityFunction& density, const TimeGrid& grid,
                                       ExecutionPolicy policy)
    : grid_(grid) {
    if (!density.value) throw validation_error("ConvolutionWeights: density has no value function");
    const auto& t = grid_.nodes();
    const int n = grid_.steps();
    a_.resize(offset(n + 1));
    b_.resize(offset(n + 1));

    const AdaptiveOptions sing_opt = singular_cell_options();
    const auto& l = density.value;

    auto build_row = [&](int i) {
        const double ti = t[i];
        const std::size_t row = offset(i);
        for (int j = 0; j < i; ++j) {
            const double a = ti - t[j + 1]; // distance from the singular end
            const double b = ti - t[j];
            const double h = t[j + 1] - t[j];
            if (j == i - 1) {
                // singular cell: u -> 0 inside
                a_[row + j] = integrate_singular_lower(
                    [&](double u) { return l(u) * (u / h); }, h, sing_opt, kFlatten);
                b_[row + j] = integrate_singular_lower(
                    [&](double u) { return l(u) * ((h - u) / h); }, h, sing_opt, kFlatten);
            } else {
                const GaussRule& rule = gauss_legendre(gauss_order_for(a, b));
                double acc_a = 0.0, acc_b = 0.0;
                for (std::size_t q = 0; q < rule.x.size(); ++q) {
                    const double w = 0.5 * h * (rule.x[q] + 1.0); // local coordinate in [0, h]
                    const double lv = l(a + w) * (0.5 * h * rule.w[q]);
                    acc_a += lv * (w / h);
                    acc_b += lv * ((h - w) / h);
                }
                a_[row + j] = acc_a;
                b_[row + j] = acc_b;
            }
        }
    };

    if (policy == ExecutionPolicy::parallel) {
#pragma omp parallel for schedule(dynamic, 4)
        for (int i = 1; i <= n; ++i) build_row(i);
    } else {
        for (int i = 1; i <= n; ++i) build_row(i);
    }
}

double ConvolutionWeights::apply_row(int i, const std::vector<double>& s) const {
    const std::size_t row = offset(i);
    double acc = 0.0;
    for (int j = 0; j < i; ++j) {
        acc += a_[row + j] * s[j] + b_[row + j] * s[j + 1];
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Relaxation
// ---------------------------------------------------------------------------

std::vector<double> solve_relaxation(const ConvolutionWeights& weights, double mu) {
    if (!(mu >= 0.0) || !std::isfinite(mu)) {
        throw validation_error("solve_relaxation: mu must be nonnegative and finite");
    }
    const int n = weights.grid().steps();
    std::vector<double> s(n + 1);
    s[0] = 1.0;
    for (int i = 1; i <= n; ++i) {
        // all terms except the implicit one (B of the last cell times s_i)
        double acc = 0.0;
        for (int j = 0; j < i - 1; ++j) {
            acc += weights.A(i, j) * s[j] + weights.B(i, j) * s[j + 1];
        }
        acc += weights.A(i, i - 1) * s[i - 1];
        s[i] = (1.0 - mu * acc) / (1.0 + mu * weights.B(i, i - 1));
    }
    return s;
}

std::vector<std::vector<double>> solve_relaxation_batch(const ConvolutionWeights& weights,
                                                        const std::vector<double>& mus,
                                                        ExecutionPolicy policy) {
    std::vector<std::vector<double>> out(mus.size());
    const int m = static_cast<int>(mus.size());
    if (policy == ExecutionPolicy::parallel) {
#pragma omp parallel for schedule(dynamic)
        for (int q = 0; q < m; ++q) out[q] = solve_relaxation(weights, mus[q]);
    } else {
        for (int q = 0; q < m; ++q) out[q] = solve_relaxation(weights, mus[q]);
    }
    return out;
}

std::vector<double> solve_volterra_rhs(const ConvolutionWeights& weights, double mu,
                                       const std::vector<double>& rhs) {
    if (!(mu >= 0.0) || !std::isfinite(mu)) {
        throw validation_error("solve_volterra_rhs: mu must be nonnegative and finite");
    }
    const int n = weights.grid().steps();
    if (rhs.size() != static_cast<std::size_t>(n) + 1) {
        throw validation_error("solve_volterra_rhs: rhs must hold one value per grid node");
    }
    std::vector<double> y(n + 1);
    y[0] = rhs[0];
    for (int i = 1; i <= n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < i - 1; ++j) {
            acc += weights.A(i, j) * y[j] + weights.B(i, j) * y[j + 1];
        }
        acc += weights.A(i, i - 1) * y[i - 1];
        y[i] = (rhs[i] - mu * acc) / (1.0 + mu * weights.B(i, i - 1));
    }
    return y;
}

SandwichBounds relaxation_sandwich(const SoninePair& pair, double mu, double t) {
    if (!(mu >= 0.0) || !std::isfinite(mu)) {
        throw validation_error("relaxation_sandwich: mu must be nonnegative and finite");
    }
    SandwichBounds b;
    b.lower = 1.0 / (1.0 + mu / pair.k(t));
    b.upper = 1.0 / (1.0 + mu * pair.cumulative_l(t));
    return b;
}

double resolvent_upper_bound(const SoninePair& pair, double mu, double t) {
    if (!(mu >= 0.0) || !std::isfinite(mu)) {
        throw validation_error("resolvent_upper_bound: mu must be nonnegative and finite");
    }
    return pair.l(t) / (1.0 + mu * pair.cumulative_l(t));
}

// ---------------------------------------------------------------------------
// Resolvent: r + mu (l * r) = l, solved as rho = r / l with rho_0 = 1.
// Cell moments carry the product weight l(tau) l(t_i - tau), singular at both
// tau = 0 and tau = t_i; each singular end gets the adaptive flattening
// quadrature, interior cells a Gauss rule sized by both ellipses.
// ---------------------------------------------------------------------------

ResolventWeights::ResolventWeights(const DensityFunction& density, const TimeGrid& grid,
                                   ExecutionPolicy policy)
    : grid_(grid) {
    if (!density.value) throw validation_error("ResolventWeights: density has no value function");
    const auto& t = grid.nodes();
    const int n = grid.steps();
    const auto& l = density.value;
    const AdaptiveOptions sing_opt = singular_cell_options();

    auto offset = [](int i) { return static_cast<std::size_t>(i) * (i - 1) / 2; };
    std::vector<double>& P = p_;
    std::vector<double>& Q = q_;
    P.assign(offset(n + 1), 0.0);
    Q.assign(offset(n + 1), 0.0);

    auto build_row = [&](int i) {
        const double ti = t[i];
        const std::size_t row = offset(i);
        if (i == 1) {
            // single cell, singular at both ends; by the symmetry of
            // l(w) l(t1 - w) both hats give the same moment
            const double h = t[1];
            const double m = 0.5 * h;
            auto F = [&](double w) { return l(w) * l(ti - w); };
            const double i1 =
                integrate_singular_lower([&](double w) { return F(w) * ((h - w) / h); }, m, sing_opt, kFlatten);
            const double i2 =
                integrate_singular_lower([&](double w) { return F(w) * (w / h); }, m, sing_opt, kFlatten);
            P[row] = Q[row] = i1 + i2;
            return;
        }
        for (int j = 0; j < i; ++j) {
            const double h = t[j + 1] - t[j];
            if (j == 0) {
                // l(tau) singular at tau = 0; the other factor is smooth here
                P[row] = integrate_singular_lower(
                    [&](double w) { return l(w) * l(ti - w) * ((h - w) / h); }, h, sing_opt, kFlatten);
                Q[row] = integrate_singular_lower(
                    [&](double w) { return l(w) * l(ti - w) * (w / h); }, h, sing_opt, kFlatten);
            } else if (j == i - 1) {
                // l(t_i - tau) singular at tau = t_i; distance form w = t_i - tau
                P[row + j] = integrate_singular_lower(
                    [&](double w) { return l(w) * l(ti - w) * (w / h); }, h, sing_opt, kFlatten);
                Q[row + j] = integrate_singular_lower(
                    [&](double w) { return l(w) * l(ti - w) * ((h - w) / h); }, h, sing_opt, kFlatten);
            } else {
                const double dist_left = t[j];            // to the tau = 0 singularity
                const double dist_right = ti - t[j + 1];  // to the tau = t_i singularity
                const int order = std::max(gauss_order_for(dist_left, dist_left + h),
                                           gauss_order_for(dist_right, dist_right + h));
                const GaussRule& rule = gauss_legendre(order);
                double acc_p = 0.0, acc_q = 0.0;
                for (std::size_t q = 0; q < rule.x.size(); ++q) {
                    const double w = 0.5 * h * (rule.x[q] + 1.0);
                    // anchor each factor's argument at its own singular end
                    const double fv =
                        l(t[j] + w) * l(dist_right + (h - w)) * (0.5 * h * rule.w[q]);
                    acc_p += fv * ((h - w) / h);
                    acc_q += fv * (w / h);
                }
                P[row + j] = acc_p;
                Q[row + j] = acc_q;
            }
        }
    };

    if (policy == ExecutionPolicy::parallel) {
#pragma omp parallel for schedule(dynamic, 4)
        for (int i = 1; i <= n; ++i) build_row(i);
    } else {
        for (int i = 1; i <= n; ++i) build_row(i);
    }

    lv_.assign(n + 1, 0.0);
    for (int i = 1; i <= n; ++i) lv_[i] = l(t[i]);
    r_limit_ = limit_at_zero(density.expansion);

    // Forward moments of l against the two hats are row-independent; they
    // turn the piecewise-linear rho into (1 * r) by prefix summation.
    fl_.assign(n, 0.0);
    fr_.assign(n, 0.0);
    auto build_forward = [&](int j) {
        const double h = t[j + 1] - t[j];
        if (j == 0) {
            fl_[0] = integrate_singular_lower(
                [&](double w) { return l(w) * ((h - w) / h); }, h, sing_opt, kFlatten);
            fr_[0] = integrate_singular_lower(
                [&](double w) { return l(w) * (w / h); }, h, sing_opt, kFlatten);
        } else {
            const GaussRule& rule = gauss_legendre(gauss_order_for(t[j], t[j + 1]));
            double acc_l = 0.0, acc_r = 0.0;
            for (std::size_t q = 0; q < rule.x.size(); ++q) {
                const double w = 0.5 * h * (rule.x[q] + 1.0);
                const double fv = l(t[j] + w) * (0.5 * h * rule.w[q]);
                acc_l += fv * ((h - w) / h);
                acc_r += fv * (w / h);
            }
            fl_[j] = acc_l;
            fr_[j] = acc_r;
        }
    };
    if (policy == ExecutionPolicy::parallel) {
#pragma omp parallel for schedule(dynamic, 16)
        for (int j = 0; j < n; ++j) build_forward(j);
    } else {
        for (int j = 0; j < n; ++j) build_forward(j);
    }
}

ResolventSolution solve_resolvent(const ResolventWeights& weights, double mu) {
    if (!(mu >= 0.0) || !std::isfinite(mu)) {
        throw validation_error("solve_resolvent: mu must be nonnegative and finite");
    }
    const int n = weights.grid_.steps();
    auto offset = [](int i) { return static_cast<std::size_t>(i) * (i - 1) / 2; };
    const auto& P = weights.p_;
    const auto& Q = weights.q_;
    const auto& lv = weights.lv_;

    ResolventSolution sol;
    sol.mu = mu;
    sol.rho.assign(n + 1, 0.0);
    sol.rho[0] = 1.0;
    for (int i = 1; i <= n; ++i) {
        const std::size_t row = offset(i);
        double acc = 0.0;
        for (int j = 0; j < i - 1; ++j) {
            acc += P[row + j] * sol.rho[j] + Q[row + j] * sol.rho[j + 1];
        }
        acc += P[row + i - 1] * sol.rho[i - 1];
        sol.rho[i] = (lv[i] - mu * acc) / (lv[i] + mu * Q[row + i - 1]);
    }

    sol.r.assign(n + 1, 0.0);
    sol.r[0] = weights.r_limit_;
    for (int i = 1; i <= n; ++i) sol.r[i] = lv[i] * sol.rho[i];

    sol.integral.assign(n + 1, 0.0);
    for (int i = 1; i <= n; ++i) {
        sol.integral[i] = sol.integral[i - 1] + weights.fl_[i - 1] * sol.rho[i - 1] +
                          weights.fr_[i - 1] * sol.rho[i];
    }
    return sol;
}

ResolventSolution solve_resolvent(const DensityFunction& density, const TimeGrid& grid, double mu,
                                  ExecutionPolicy policy) {
    if (!(mu >= 0.0) || !std::isfinite(mu)) {
        throw validation_error("solve_resolvent: mu must be nonnegative and finite");
    }
    return solve_resolvent(ResolventWeights(density, grid, policy), mu);
}

// ---------------------------------------------------------------------------
// Duhamel forcing
// ---------------------------------------------------------------------------

std::vector<double> convolve_resolvent_forcing(const DensityFunction& density, const TimeGrid& grid,
                                               const std::vector<double>& rho,
                                               const std::function<double(double)>& forcing,
                                               ExecutionPolicy policy) {
    if (!density.value) {
        throw validation_error("convolve_resolvent_forcing: density has no value function");
    }
    if (!forcing) throw validation_error("convolve_resolvent_forcing: forcing is empty");
    const auto& t = grid.nodes();
    const int n = grid.steps();
    if (rho.size() != t.size()) {
        throw validation_error("convolve_resolvent_forcing: rho size does not match the grid");
    }
    const auto& l = density.value;
    const AdaptiveOptions sing_opt = singular_cell_options();

    std::vector<double> out(n + 1, 0.0);
    auto row_value = [&](int i) {
        const double ti = t[i];
        double acc = 0.0;
        if (i == 1) {
            // single cell: l singular at 0, the forcing possibly rough at
            // t_i - tau -> 0; treat both ends in distance form
            const double h = t[1];
            const double m = 0.5 * h;
            auto rho_at = [&](double tau) { return rho[0] + (rho[1] - rho[0]) * (tau / h); };
            acc += integrate_singular_lower(
                [&](double w) { return l(w) * rho_at(w) * forcing(ti - w); }, m, sing_opt, kFlatten);
            acc += integrate_singular_lower(
                [&](double w) { return l(ti - w) * rho_at(ti - w) * forcing(w); }, m, sing_opt,
                kFlatten);
            return acc;
        }
        for (int j = 0; j < i; ++j) {
            const double h = t[j + 1] - t[j];
            auto rho_at = [&](double w) { return rho[j] + (rho[j + 1] - rho[j]) * (w / h); };
            if (j == 0) {
                acc += integrate_singular_lower(
                    [&](double w) { return l(w) * rho_at(w) * forcing(ti - w); }, h, sing_opt,
                    kFlatten);
            } else if (j == i - 1) {
                // forcing argument goes to zero here; let the adaptive rule
                // absorb whatever endpoint behavior it has
                acc += integrate_singular_lower(
                    [&](double w) {
                        return l(ti - w) * rho_at(h - w) * forcing(w);
                    },
                    h, sing_opt, kFlatten);
            } else {
                // both the density's origin and the forcing's t_i end can
                // limit analyticity; size the rule by the nearer of the two
                const double dist_right = ti - t[j + 1];
                const int order = std::max(gauss_order_for(t[j], t[j + 1]),
                                           gauss_order_for(dist_right, dist_right + h));
                const GaussRule& rule = gauss_legendre(order);
                double cell = 0.0;
                for (std::size_t q = 0; q < rule.x.size(); ++q) {
                    const double w = 0.5 * h * (rule.x[q] + 1.0);
                    cell += l(t[j] + w) * rho_at(w) * forcing(dist_right + (h - w)) *
                            (0.5 * h * rule.w[q]);
                }
                acc += cell;
            }
        }
        return acc;
    };

    if (policy == ExecutionPolicy::parallel) {
#pragma omp parallel for schedule(dynamic, 4)
        for (int i = 1; i <= n; ++i) out[i] = row_value(i);
    } else {
        for (int i = 1; i <= n; ++i) out[i] = row_value(i);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sonine inversion
// ---------------------------------------------------------------------------

std::vector<double> invert_sonine(const SoninePair& pair, double horizon, int cells) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw validation_error("invert_sonine: horizon must be positive and finite");
    }
    if (cells < 2 || cells > kMaxSteps) {
        throw validation_error("invert_sonine: cells must lie in [2, 4096]");
    }
    const double h = horizon / cells;
    // cumulative kernel at multiples of h: the collocation matrix entries are
    // K1((i-c+1) h) - K1((i-c) h)
    std::vector<double> kk(cells + 1);
    for (int d = 0; d <= cells; ++d) kk[d] = pair.cumulative_k(d * h);
    if (!(kk[1] > 0.0)) {
        throw integrity_error("invert_sonine: cumulative kernel is not increasing over one cell");
    }
    std::vector<double> lambda(cells);
    for (int i = 1; i <= cells; ++i) {
        double acc = 0.0;
        for (int c = 1; c < i; ++c) {
            acc += lambda[c - 1] * (kk[i - c + 1] - kk[i - c]);
        }
        lambda[i - 1] = (1.0 - acc) / kk[1];
    }
    return lambda;
}

std::vector<std::complex<double>> convolve_resolvent_forcing_complex(
    const DensityFunction& density, const TimeGrid& grid, const std::vector<double>& rho,
    const std::function<std::complex<double>(double)>& forcing, ExecutionPolicy policy) {
    if (!forcing) {
        throw validation_error("convolve_resolvent_forcing: forcing is empty");
    }
    const std::function<double(double)> real_part = [&forcing](double t) {
        return forcing(t).real();
    };
    const std::function<double(double)> imag_part = [&forcing](double t) {
        return forcing(t).imag();
    };
    auto re = convolve_resolvent_forcing(density, grid, rho, real_part, policy);
    auto im = convolve_resolvent_forcing(density, grid, rho, imag_part, policy);
    std::vector<std::complex<double>> out(re.size());
    for (std::size_t i = 0; i < re.size(); ++i) {
        out[i] = std::complex<double>(re[i], im[i]);
    }
    return out;
}

} // namespace sonine
