#pragma once

#include <functional>
#include <vector>

namespace sonine {

// Gauss-Legendre rule on [-1, 1].  Nodes ascend; weights are positive.
struct GaussRule {
    std::vector<double> x;
    std::vector<double> w;
};

// Rule of order n, computed once (Newton on the Legendre recurrence) and cached.
const GaussRule& gauss_legendre(int n);

// Fixed-order Gauss-Legendre approximation of \int_a^b f.
double integrate_gl(const std::function<double(double)>& f, double a, double b, int n);

// Adaptive Gauss-Kronrod 7/15 bisection.  Throws accuracy_error if the
// requested tolerance is unreachable within max_depth levels (unless
// best_effort is set, in which case the deepest estimate is returned).
struct AdaptiveOptions {
    double abs_tol = 1e-12;
    double rel_tol = 1e-11;
    int max_depth = 48;
    bool best_effort = false;
};
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          const AdaptiveOptions& opt = {});

// \int_0^len g(s) ds where g has an integrable singularity at s = 0 and s is
// the distance from it.  The substitution s = len v^p flattens the endpoint,
// and the flattened integrand is integrated over dyadic panels marching
// toward it, with the geometric tail of the panel sums extrapolated; this
// converges for any integrable power-law endpoint even when the flattening
// is imperfect.  Passing the distance (rather than an absolute coordinate)
// keeps the integrand free of endpoint cancellation.
double integrate_singular_lower(const std::function<double(double)>& g, double len,
                                const AdaptiveOptions& opt = {}, int flatten_power = 4);

// \int_a^b f with an integrable singularity at `a` (left) or `b` (right),
// expressed through integrate_singular_lower.  The integrand is evaluated at
// a + s (resp. b - s); if f itself recomputes the endpoint distance from
// that absolute coordinate it loses precision near the endpoint, in which
// case call integrate_singular_lower directly.
double integrate_endpoint_singular(const std::function<double(double)>& f, double a, double b,
                                   bool singular_at_left, const AdaptiveOptions& opt = {},
                                   int flatten_power = 4);

// Closed-form moments used by the product-integration weight engine.
// power_moment:      \int_a^b u^p du            (p > -1, 0 <= a <= b)
// power_log_moment:  \int_a^b u^p ln(u) du      (p > -1, 0 <= a <= b)
double power_moment(double p, double a, double b);
double power_log_moment(double p, double a, double b);

} // namespace sonine
