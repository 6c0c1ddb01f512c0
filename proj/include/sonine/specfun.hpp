#pragma once

// Special functions backing the kernel families: gamma, two-parameter
// Mittag-Leffler (real axis, with a series/asymptotic branch switch),
// multivariate Mittag-Leffler (truncated multinomial series with a reported
// tail bound), the exponential integral E_1, and the regularized lower
// incomplete gamma.

#include <memory>
#include <vector>

namespace sonine {

inline constexpr double euler_gamma = 0.57721566490153286060651209008240243;

// Gamma(x) for x > 0; throws std::domain_error otherwise.
double gamma_fn(double x);

// log Gamma(x) for x > 0.
double log_gamma(double x);

// 1 / Gamma(x) for any real x; exactly 0 at the poles x = 0, -1, -2, ...
double recip_gamma(double x);

// sin(pi x) with exact integer zeros.
double sinpi(double x);

struct MLOrder {
    double alpha;
    double beta;
};

struct MLOptions {
    // Series/asymptotic crossover on the negative axis, in |z|.  Non-positive
    // selects the default 36^alpha, which balances the accuracy floors of the
    // two branches (the flattened form of a fixed-|z| switch; see README).
    double crossover = 0.0;
    double tol = 1e-12;
    int max_terms = 4096;
};

// E_{alpha,beta}(z) = sum_k z^k / Gamma(alpha k + beta) on the real axis.
// alpha > 0, beta > 0.  Full accuracy is guaranteed for alpha in (0, 1] and
// z <= 0 (the regime the kernel families use); alpha > 1 falls back to the
// compensated series and reports an accuracy error outside its safe range.
double mittag_leffler(MLOrder order, double z, const MLOptions& opt = {});

// Branch internals, exposed so the seam agreement can be tested directly.
double ml_series(MLOrder order, double z, const MLOptions& opt = {});
double ml_asymptotic_negative(MLOrder order, double x, const MLOptions& opt = {}); // x = -z > 0

// Default negative-axis crossover in |z| for the given alpha.
double ml_default_crossover(double alpha);

// Reusable evaluator for a fixed order: caches the Gamma-ratio tables the
// series needs (in both double and compensated precision), so per-call cost
// is a short recurrence.  Immutable and safe to share across threads.
class MittagLefflerEvaluator {
public:
    explicit MittagLefflerEvaluator(MLOrder order, MLOptions opt = {});
    ~MittagLefflerEvaluator();
    MittagLefflerEvaluator(MittagLefflerEvaluator&&) noexcept;
    MittagLefflerEvaluator& operator=(MittagLefflerEvaluator&&) noexcept;

    double operator()(double z) const;
    MLOrder order() const;

private:
    struct Impl;
    std::shared_ptr<const Impl> impl_;
};

struct MVMLOrder {
    std::vector<double> alphas; // nonempty, each > 0
    double beta;                // > 0
};

struct MVMLOptions {
    int degree = 80;   // largest multinomial shell summed
    double tol = 0.0;  // > 0: throw accuracy_error if the tail bound exceeds it
};

struct MVMLResult {
    double value;
    double tail_bound; // rigorous bound on the dropped shells
    int degree;
};

// Multivariate Mittag-Leffler
//   E_{(a_1..a_m),beta}(z) = sum_{k>=0} sum_{|l|=k} k!/(l_1!..l_m!)
//                            prod_j z_j^{l_j} / Gamma(beta + sum_j a_j l_j),
// summed shell by shell through `degree`.
MVMLResult mv_mittag_leffler_full(const MVMLOrder& order, const std::vector<double>& z,
                                  const MVMLOptions& opt = {});
double mv_mittag_leffler(const MVMLOrder& order, const std::vector<double>& z,
                         const MVMLOptions& opt = {});

// Cached-coefficient evaluator for a fixed order (shell/composition tables
// built once).  Immutable after construction.
class MvMittagLefflerEvaluator {
public:
    MvMittagLefflerEvaluator(MVMLOrder order, MVMLOptions opt = {});
    ~MvMittagLefflerEvaluator();
    MvMittagLefflerEvaluator(MvMittagLefflerEvaluator&&) noexcept;
    MvMittagLefflerEvaluator& operator=(MvMittagLefflerEvaluator&&) noexcept;

    MVMLResult eval(const std::vector<double>& z) const;
    const MVMLOrder& order() const;

private:
    struct Impl;
    std::shared_ptr<const Impl> impl_;
};

namespace detail {
// All compositions of k into m nonnegative parts, in a fixed deterministic
// order.  Exposed for shell-structure tests.
std::vector<std::vector<int>> mvml_compositions(int k, int m);
// Multinomial coefficient k! / (l_1! ... l_m!) with k = sum l.
double multinomial(const std::vector<int>& l);
} // namespace detail

// E_1(x) = int_x^inf e^{-t}/t dt for x > 0: power series below 1, modified
// Lentz continued fraction above.
double exp_integral_e1(double x);

// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
double gamma_p(double a, double x);

} // namespace sonine
