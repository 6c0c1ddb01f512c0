#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sonine/kernels.hpp"
#include "sonine/spectral.hpp"

namespace sonine {

// ---------------------------------------------------------------------------
// Norms on lattice states
// ---------------------------------------------------------------------------

// L^p norm by the rectangle rule, ((L/M)^n sum_x |u(x)|^p)^{1/p}; exact for
// trigonometric polynomials when p = 2.  p = infinity returns the maximum
// modulus.  Requires p >= 1.
double lp_norm(const FieldState& state, double p);

// Homogeneous Sobolev norm of index s built on the operator symbol:
//   ( L^n  sum_{xi != 0}  sigma(xi)^{2 s / nu} |u_hat(xi)|^2 )^{1/2}.
// The zero mode is excluded, so constants have norm zero and the norm only
// controls the mean-free part.  s may be any real (negative indices appear on
// the initial-data side of smoothing estimates).
double sobolev_norm(const FieldState& state, double s, const OperatorSymbol& symbol);

// ---------------------------------------------------------------------------
// Decay bounds and predictions
// ---------------------------------------------------------------------------

// Closed-form evaluation of  sup_{v > 0}  v^{lambda/r} / (1 + v * L(t))  with
// L = (1 * l), the scalar optimization every smoothing estimate reduces to.
//
//  * r > lambda: the supremum sits at v* = lambda / ((r - lambda) L(t)) and
//    equals v*^{lambda/r} / (1 + v* L(t)); it scales like L(t)^{-lambda/r}.
//  * r = lambda: the bound is L(t)^{-1}, approached as v grows without bound;
//    the maximizer is reported as +infinity.
//  * r < lambda: the underlying hypothesis fails -> domain_error.
//
// Every r > lambda call cross-checks the closed form against a log-spaced
// numerical scan around the maximizer and throws accuracy_error if they
// disagree beyond 1e-6 relative.
struct SupBound {
    double value = 0.0;
    double maximizer = 0.0;
};
SupBound decay_sup_bound(double lambda, double r, const SoninePair& pair, double t);

// Predicted smoothing envelope for initial data in L^p measured in L^q:
//   envelope(t) = L(t)^{-(Q/nu)(1/p - 1/q)}.
// Requires 1 < p <= 2 <= q < infinity and nu/Q >= 1/p - 1/q; violations throw
// domain_error naming the failing inequality.  For the fractional pair the
// envelope is a pure power of t and t_exponent carries it.
struct DecayPrediction {
    double exponent = 0.0;    // envelope(t) = L(t)^{exponent}; exponent <= 0
    bool pure_power = false;  // true for the fractional family
    double t_exponent = 0.0;  // envelope ~ t^{t_exponent} when pure_power
    std::function<double(double)> envelope;
    std::string description;
};
DecayPrediction predict_decay_rate(double p, double q, double Q, double nu,
                                   const SoninePair& pair);

// ---------------------------------------------------------------------------
// Empirical decay fits
// ---------------------------------------------------------------------------

struct NormSeries {
    std::vector<double> times;
    std::vector<double> norms;
    std::string label;  // e.g. "L2", "H2"
};

// Fit window in time.  Window selection is an explicit input by design: a
// periodic lattice shows the continuum decay rate only over an intermediate
// window (before the spectral gap takes over and decay turns faster), and
// auto-selecting the window would silently hide that crossover.
struct DecayWindow {
    double t_min = 0.0;
    double t_max = 0.0;
};

struct DecayReport {
    double predicted_exponent = 0.0;
    double fitted_exponent = 0.0;
    double residual = 0.0;  // RMS residual of the log-log fit
    DecayWindow window;
    std::string norm_label;
    double tolerance = 0.0;
    bool pass = false;  // |fitted - predicted| <= tolerance
    std::size_t samples_used = 0;
};

// Least-squares slope of log ||u(t)|| against log L(t) over the in-window
// samples (at least 8 required, all norms positive).  Decay exponents are
// always measured against L(t) = (1 * l)(t), never against t itself, so every
// kernel family runs through the same harness.
DecayReport fit_decay_exponent(const NormSeries& series, const SoninePair& pair,
                               DecayWindow window, double predicted_exponent,
                               double tolerance);

}  // namespace sonine
