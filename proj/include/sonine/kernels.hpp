#pragma once

// Kernel pairs (k, l) satisfying the convolution identity (k * l)(t) = 1 for
// all t > 0, with k nonincreasing and l nonnegative locally integrable.  The
// pair drives the integro-differential evolution: k is the memory kernel of
// the time derivative, l its convolution inverse, and L = \int_0^t l the
// clock that governs relaxation bounds and decay rates.

#include <memory>
#include <string>
#include <vector>

namespace sonine {

enum class KernelFamily {
    fractional,        // k = t^{-a}/Gamma(1-a),            l = t^{a-1}/Gamma(a)
    two_term,          // k = g_{1-b+a} + g_{1-b},          l = t^{b-1} E_{a,b}(-t^a)
    distributed_order, // k = int_0^1 g_a da,               l = e^t E_1(t)
    multi_term,        // k = sum_j g_{1-a_j},              l via multivariate ML
    tempered,          // k = t^{-a} e^{-c t}/Gamma(1-a),   l via incomplete gamma
};

// Local behavior of l near t = 0 as a finite sum of c * u^p and
// c * u^p * ln(u) terms; l minus this expansion has at least two continuous
// derivatives on [0, h], which is what the product-integration weights need
// to integrate the singular cell accurately.
struct SingularExpansion {
    struct Term {
        double coef;
        double power;
        bool log;
    };
    std::vector<Term> terms;

    double eval(double u) const;
    // Smallest remainder power: |l(u) - eval(u)| = O(u^remainder_power).
    double remainder_power = 3.0;
};

class SoninePair {
public:
    static SoninePair fractional(double alpha);
    static SoninePair two_term(double alpha, double beta);
    static SoninePair distributed_order();
    static SoninePair multi_term(std::vector<double> alphas); // strictly decreasing
    static SoninePair tempered(double alpha, double rate);

    // Pointwise kernel values; t > 0 (both kernels are singular at 0 for all
    // families except tempered/distributed l, which stay integrable anyway).
    double k(double t) const;
    double l(double t) const;
    // Cumulatives: L(t) = \int_0^t l and (1 * k)(t); defined for t >= 0.
    double cumulative_l(double t) const;
    double cumulative_k(double t) const;

    const SingularExpansion& l_expansion() const;
    KernelFamily family() const;
    const std::vector<double>& parameters() const;
    std::string describe() const;

    struct Impl; // defined in kernels.cpp; one derived type per family

private:
    explicit SoninePair(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<const Impl> impl_;
};

// Numerical check of the defining identity (k * l)(t) = 1 at sample times.
struct KernelVerifyOptions {
    std::vector<double> times; // empty: 20 log-spaced points in [0.1, 10]
    double tol = 1e-6;
};
struct KernelVerifySample {
    double t;
    double value; // computed (k * l)(t)
    double abs_err;
};
struct KernelVerifyReport {
    std::vector<KernelVerifySample> samples;
    double max_abs_err = 0.0;
    double worst_t = 0.0;
    bool pass = false;
};
KernelVerifyReport verify_sonine(const SoninePair& pair, const KernelVerifyOptions& opt = {});

} // namespace sonine
