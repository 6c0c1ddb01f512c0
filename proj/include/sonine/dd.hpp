#pragma once

// Compensated double-double arithmetic (~31 significant digits).
//
// Implementation detail of the special-function layer: the Mittag-Leffler
// power series on the negative real axis cancels catastrophically (the
// largest term exceeds the sum by a factor growing like exp(c |z|^{1/alpha})),
// so partial sums are accumulated in double-double precision.  Only the
// operations the series needs are provided: +,-,*,/ plus exp, log and
// log-gamma.

#include <cmath>
#include <cstdint>

namespace sonine {

struct dd {
    double hi = 0.0;
    double lo = 0.0;

    constexpr dd() = default;
    constexpr dd(double h) : hi(h), lo(0.0) {}
    constexpr dd(double h, double l) : hi(h), lo(l) {}

    double value() const { return hi + lo; }
};

namespace dd_detail {

inline dd quick_two_sum(double a, double b) {
    double s = a + b;
    return {s, b - (s - a)};
}

inline dd two_sum(double a, double b) {
    double s = a + b;
    double bb = s - a;
    return {s, (a - (s - bb)) + (b - bb)};
}

inline dd two_prod(double a, double b) {
    double p = a * b;
    return {p, std::fma(a, b, -p)};
}

} // namespace dd_detail

inline dd operator+(dd a, dd b) {
    using namespace dd_detail;
    dd s = two_sum(a.hi, b.hi);
    dd t = two_sum(a.lo, b.lo);
    s.lo += t.hi;
    s = quick_two_sum(s.hi, s.lo);
    s.lo += t.lo;
    return quick_two_sum(s.hi, s.lo);
}

inline dd operator-(dd a) { return {-a.hi, -a.lo}; }
inline dd operator-(dd a, dd b) { return a + (-b); }

inline dd operator*(dd a, dd b) {
    using namespace dd_detail;
    dd p = two_prod(a.hi, b.hi);
    p.lo += a.hi * b.lo + a.lo * b.hi;
    return quick_two_sum(p.hi, p.lo);
}

inline dd operator/(dd a, dd b) {
    double q1 = a.hi / b.hi;
    dd r = a - dd(q1) * b;
    double q2 = r.hi / b.hi;
    r = r - dd(q2) * b;
    double q3 = r.hi / b.hi;
    dd q = dd_detail::quick_two_sum(q1, q2);
    return q + dd(q3);
}

inline dd operator+(dd a, double b) { return a + dd(b); }
inline dd operator-(dd a, double b) { return a - dd(b); }
inline dd operator*(dd a, double b) { return a * dd(b); }
inline dd operator/(dd a, double b) { return a / dd(b); }
inline dd operator*(double a, dd b) { return dd(a) * b; }

inline bool dd_less(dd a, dd b) { return a.hi < b.hi || (a.hi == b.hi && a.lo < b.lo); }
inline double dd_abs(dd a) { return std::fabs(a.value()); }

// pi and ln 2 to double-double precision (standard splittings).
inline constexpr dd dd_pi{3.141592653589793116e0, 1.224646799147353207e-16};
inline constexpr dd dd_ln2{6.931471805599452862e-1, 2.319046813846299558e-17};

// exp in double-double: reduce by ln 2, Taylor-sum the remainder.
inline dd dd_exp(dd a) {
    if (a.hi > 709.0) return {HUGE_VAL, 0.0};
    if (a.hi < -745.0) return {0.0, 0.0};
    double m = std::nearbyint(a.hi / dd_ln2.hi);
    dd r = a - dd_ln2 * m;
    dd sum = dd(1.0) + r;
    dd term = r;
    for (int k = 2; k <= 30; ++k) {
        term = term * r / double(k);
        sum = sum + term;
        if (std::fabs(term.hi) < 1e-35 * std::fabs(sum.hi)) break;
    }
    int e = int(m);
    return {std::ldexp(sum.hi, e), std::ldexp(sum.lo, e)};
}

// log via one Newton step off the double-precision seed: y <- y + x e^{-y} - 1.
inline dd dd_log(dd x) {
    double y0 = std::log(x.hi);
    dd y(y0);
    y = y + (x * dd_exp(-y) - dd(1.0));
    return y;
}

namespace dd_detail {

// Stirling coefficients B_{2n} / (2n (2n-1)) as exact integer ratios.
inline const dd* stirling_coeffs() {
    static const dd c[15] = {
        dd(1.0) / 12.0,
        dd(-1.0) / 360.0,
        dd(1.0) / 1260.0,
        dd(-1.0) / 1680.0,
        dd(1.0) / 1188.0,
        dd(-691.0) / 360360.0,
        dd(1.0) / 156.0,
        dd(-3617.0) / 122400.0,
        dd(43867.0) / 244188.0,
        dd(-174611.0) / 125400.0,
        dd(854513.0) / 63756.0,
        dd(-236364091.0) / 1506960.0,
        dd(8553103.0) / 3900.0,
        dd(-23749461029.0) / 657720.0,
        dd(8615841276005.0) / 12460140.0,
    };
    return c;
}

inline dd half_ln_two_pi() {
    static const dd v = dd_log(dd(2.0) * dd_pi) * 0.5;
    return v;
}

// Stirling series, valid for y >= 30.
inline dd lgamma_stirling(dd y) {
    dd ly = dd_log(y);
    dd res = (y - dd(0.5)) * ly - y + half_ln_two_pi();
    dd w = dd(1.0) / (y * y);
    dd p = dd(1.0) / y;
    const dd* c = stirling_coeffs();
    for (int n = 0; n < 15; ++n) {
        res = res + c[n] * p;
        p = p * w;
    }
    return res;
}

} // namespace dd_detail

// log Gamma(x) for x > 0 in double-double precision (~1e-30 relative).
// Arguments below the Stirling range are shifted up by the recursion
// Gamma(x+1) = x Gamma(x).
inline dd dd_lgamma(dd x) {
    if (x.hi >= 30.0) return dd_detail::lgamma_stirling(x);
    int n = int(std::ceil(30.0 - x.hi));
    dd prod(1.0);
    dd xi = x;
    for (int i = 0; i < n; ++i) {
        prod = prod * xi;
        xi = xi + 1.0;
    }
    return dd_detail::lgamma_stirling(xi) - dd_log(prod);
}

} // namespace sonine
