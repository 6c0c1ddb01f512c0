#include "sonine/quadrature.hpp"
#include "sonine/errors.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <string>

namespace sonine {

namespace {

GaussRule build_gauss_legendre(int n) {
    GaussRule rule;
    rule.x.resize(n);
    rule.w.resize(n);
    const double pi = 3.14159265358979323846;
    for (int i = 0; i < (n + 1) / 2; ++i) {
        // Chebyshev-based initial guess, then Newton on P_n.
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 64; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::fabs(dx) < 1e-16) break;
        }
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.x[i] = -x; // guesses start from the right; store ascending
        rule.w[i] = w;
        rule.x[n - 1 - i] = x;
        rule.w[n - 1 - i] = w;
    }
    return rule;
}

} // namespace

const GaussRule& gauss_legendre(int n) {
    if (n < 1 || n > 512) throw validation_error("gauss_legendre: order out of range: " + std::to_string(n));
    static std::map<int, GaussRule> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, build_gauss_legendre(n)).first;
    return it->second;
}

double integrate_gl(const std::function<double(double)>& f, double a, double b, int n) {
    const GaussRule& r = gauss_legendre(n);
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += r.w[i] * f(mid + half * r.x[i]);
    return sum * half;
}

namespace {

// QUADPACK Gauss-Kronrod 7/15 nodes and weights.
const double xgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
const double wgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
const double wg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct PanelResult {
    double kronrod;
    double error;
};

PanelResult gk15_panel(const std::function<double(double)>& f, double a, double b) {
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double fc = f(mid);
    double resg = wg[3] * fc;
    double resk = wgk[7] * fc;
    for (int j = 0; j < 7; ++j) {
        double dx = half * xgk[j];
        double f1 = f(mid - dx);
        double f2 = f(mid + dx);
        resk += wgk[j] * (f1 + f2);
        if (j % 2 == 1) resg += wg[j / 2] * (f1 + f2);
    }
    return {resk * half, std::fabs((resk - resg) * half)};
}

double adaptive_rec(const std::function<double(double)>& f, double a, double b, double tol,
                    int depth, const AdaptiveOptions& opt, bool& clean) {
    PanelResult r = gk15_panel(f, a, b);
    if (r.error <= tol || depth >= opt.max_depth) {
        if (r.error > tol && depth >= opt.max_depth) clean = false;
        return r.kronrod;
    }
    double mid = 0.5 * (a + b);
    return adaptive_rec(f, a, mid, 0.5 * tol, depth + 1, opt, clean) +
           adaptive_rec(f, mid, b, 0.5 * tol, depth + 1, opt, clean);
}

} // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          const AdaptiveOptions& opt) {
    if (a == b) return 0.0;
    PanelResult first = gk15_panel(f, a, b);
    double tol = std::max(opt.abs_tol, opt.rel_tol * std::fabs(first.kronrod));
    bool clean = true;
    double result = adaptive_rec(f, a, b, tol, 0, opt, clean);
    if (!clean && !opt.best_effort)
        throw accuracy_error("integrate_adaptive: tolerance unreachable on [" + std::to_string(a) +
                             ", " + std::to_string(b) + "]");
    return result;
}

double integrate_singular_lower(const std::function<double(double)>& g, double len,
                                const AdaptiveOptions& opt, int flatten_power) {
    if (!(len >= 0.0)) throw validation_error("integrate_singular_lower: negative length");
    if (len == 0.0) return 0.0;
    const double p = double(flatten_power);
    // s = len v^p, v in (0, 1]; computed directly, so no cancellation.
    auto h = [&](double v) {
        double s = len * std::pow(v, p);
        if (s == 0.0) return 0.0; // underflow: measure-zero neighborhood
        double jac = len * p * std::pow(v, p - 1.0);
        return g(s) * jac;
    };
    // March dyadic panels toward v = 0.  For any integrable power endpoint
    // the panel contributions decay geometrically, so the remainder can be
    // extrapolated from the observed ratio and the march stopped early; the
    // flattening only needs to make each panel smooth, not the whole run.
    AdaptiveOptions panel_opt = opt;
    panel_opt.abs_tol = 0.02 * opt.abs_tol;
    panel_opt.rel_tol = 0.1 * opt.rel_tol;
    double total = 0.0;
    double hi = 1.0;
    double prev = 0.0;
    bool resolved = false;
    for (int j = 0; j < 960; ++j) {
        double lo = 0.5 * hi;
        double piece = integrate_adaptive(h, lo, hi, panel_opt);
        total += piece;
        double tol_total = std::max(opt.abs_tol, opt.rel_tol * std::fabs(total));
        double ap = std::fabs(piece);
        if (ap == 0.0) {
            resolved = true;
            break;
        }
        if (j > 2 && std::fabs(prev) > 0.0) {
            double ratio = ap / std::fabs(prev);
            if (ratio < 0.995) {
                double tail_est = 3.0 * ap * ratio / (1.0 - ratio);
                if (tail_est <= 0.3 * tol_total) {
                    resolved = true;
                    break;
                }
            }
        }
        prev = piece;
        hi = lo;
    }
    if (!resolved && !opt.best_effort)
        throw accuracy_error(
            "integrate_singular_lower: endpoint contributions decay too slowly to meet the "
            "tolerance (consider a larger flattening power)");
    return total;
}

double integrate_endpoint_singular(const std::function<double(double)>& f, double a, double b,
                                   bool singular_at_left, const AdaptiveOptions& opt,
                                   int flatten_power) {
    if (!(b > a)) {
        if (a == b) return 0.0;
        throw validation_error("integrate_endpoint_singular: empty interval");
    }
    auto g = [&](double s) { return singular_at_left ? f(a + s) : f(b - s); };
    return integrate_singular_lower(g, b - a, opt, flatten_power);
}

double power_moment(double p, double a, double b) {
    if (p <= -1.0) throw validation_error("power_moment: exponent must exceed -1");
    double q = p + 1.0;
    return (std::pow(b, q) - std::pow(a, q)) / q;
}

double power_log_moment(double p, double a, double b) {
    if (p <= -1.0) throw validation_error("power_log_moment: exponent must exceed -1");
    double q = p + 1.0;
    auto F = [&](double u) {
        if (u == 0.0) return 0.0; // u^q ln u -> 0 for q > 0
        return std::pow(u, q) * (std::log(u) - 1.0 / q) / q;
    };
    return F(b) - F(a);
}

} // namespace sonine
