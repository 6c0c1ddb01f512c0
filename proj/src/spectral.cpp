#include "sonine/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <utility>

#include "sonine/errors.hpp"

namespace sonine {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

bool power_of_two(int m) { return m >= 2 && (m & (m - 1)) == 0; }

// Integer power by repeated multiplication: exact for small exponents on
// representable bases (e.g. 3^4 = 81 without pow() rounding).
double ipow(double base, int exponent) {
    double acc = 1.0;
    for (int i = 0; i < exponent; ++i) acc *= base;
    return acc;
}

// In-place radix-2 decimation-in-time FFT, unnormalized.  sign = -1 gives the
// forward kernel exp(-i xi x), sign = +1 the inverse.  Twiddles come from
// std::polar per index rather than running products, keeping rounding flat
// across stages.
void fft_pass(std::complex<double>* a, int n, int sign) {
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        const int half = len / 2;
        const double ang = sign * kTwoPi / len;
        for (int j = 0; j < half; ++j) {
            const std::complex<double> w = std::polar(1.0, ang * j);
            for (int i = j; i < n; i += len) {
                const std::complex<double> u = a[i];
                const std::complex<double> v = a[i + half] * w;
                a[i] = u + v;
                a[i + half] = u - v;
            }
        }
    }
}

// Applies the 1-D pass along every axis of a flattened dim-dimensional array.
void fft_nd(std::vector<std::complex<double>>& a, int dim, int m, int sign) {
    if (dim == 1) {
        fft_pass(a.data(), m, sign);
        return;
    }
    for (int r = 0; r < m; ++r) {
        fft_pass(a.data() + static_cast<std::size_t>(r) * m, m, sign);
    }
    std::vector<std::complex<double>> col(m);
    for (int c = 0; c < m; ++c) {
        for (int r = 0; r < m; ++r) col[r] = a[static_cast<std::size_t>(r) * m + c];
        fft_pass(col.data(), m, sign);
        for (int r = 0; r < m; ++r) a[static_cast<std::size_t>(r) * m + c] = col[r];
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// FieldState
// ---------------------------------------------------------------------------

std::size_t FieldState::size() const {
    std::size_t s = 1;
    for (int d = 0; d < dim; ++d) s *= static_cast<std::size_t>(points);
    return s;
}

void FieldState::validate() const {
    if (dim != 1 && dim != 2) {
        throw validation_error("FieldState: dim must be 1 or 2");
    }
    if (!power_of_two(points)) {
        throw validation_error("FieldState: points per axis must be a power of two >= 2");
    }
    if (!(period > 0.0) || !std::isfinite(period)) {
        throw validation_error("FieldState: period must be positive and finite");
    }
    if (!(time >= 0.0) || !std::isfinite(time)) {
        throw validation_error("FieldState: time must be nonnegative and finite");
    }
    if (values.size() != size()) {
        throw validation_error("FieldState: values length does not match the lattice");
    }
    for (const auto& z : values) {
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
            throw validation_error("FieldState: values must be finite");
        }
    }
}

FieldState FieldState::zeros(int dim, int points, double period, double time) {
    FieldState s;
    s.dim = dim;
    s.points = points;
    s.period = period;
    s.time = time;
    s.values.assign(s.size(), std::complex<double>(0.0, 0.0));
    s.validate();
    return s;
}

FieldState FieldState::constant(int dim, int points, double period, std::complex<double> c,
                                double time) {
    FieldState s = zeros(dim, points, period, time);
    std::fill(s.values.begin(), s.values.end(), c);
    s.validate();
    return s;
}

double lattice_frequency(int index, int points, double period) {
    const int signed_index = (index <= points / 2) ? index : index - points;
    return kTwoPi * static_cast<double>(signed_index) / period;
}

std::vector<std::complex<double>> forward_transform(const FieldState& state) {
    state.validate();
    std::vector<std::complex<double>> a = state.values;
    fft_nd(a, state.dim, state.points, -1);
    const double scale = 1.0 / static_cast<double>(state.size());
    for (auto& z : a) z *= scale;
    return a;
}

FieldState field_from_spectrum(const FieldState& like,
                               const std::vector<std::complex<double>>& spectrum, double time) {
    if (spectrum.size() != like.size()) {
        throw validation_error("field_from_spectrum: spectrum length does not match the lattice");
    }
    FieldState out;
    out.dim = like.dim;
    out.points = like.points;
    out.period = like.period;
    out.time = time;
    out.values = spectrum;
    fft_nd(out.values, out.dim, out.points, +1);
    out.validate();
    return out;
}

// ---------------------------------------------------------------------------
// OperatorSymbol
// ---------------------------------------------------------------------------

OperatorSymbol::OperatorSymbol(SymbolKind kind, int dim, int power, std::vector<double> coeffs)
    : kind_(kind), dim_(dim), power_(power), coeffs_(std::move(coeffs)) {}

OperatorSymbol OperatorSymbol::laplacian(int dim) {
    if (dim != 1 && dim != 2) throw validation_error("OperatorSymbol: dim must be 1 or 2");
    return OperatorSymbol(SymbolKind::laplacian, dim, 1, std::vector<double>(dim, 1.0));
}

OperatorSymbol OperatorSymbol::polyharmonic(int dim, int power) {
    if (dim != 1 && dim != 2) throw validation_error("OperatorSymbol: dim must be 1 or 2");
    if (power < 1) throw validation_error("OperatorSymbol: power must be >= 1");
    return OperatorSymbol(SymbolKind::polyharmonic, dim, power, std::vector<double>(dim, 1.0));
}

OperatorSymbol OperatorSymbol::anisotropic(std::vector<double> coefficients, int power) {
    const int dim = static_cast<int>(coefficients.size());
    if (dim != 1 && dim != 2) {
        throw validation_error("OperatorSymbol: coefficient count must be 1 or 2");
    }
    if (power < 1) throw validation_error("OperatorSymbol: power must be >= 1");
    for (double a : coefficients) {
        if (!(a > 0.0) || !std::isfinite(a)) {
            throw validation_error("OperatorSymbol: coefficients must be positive and finite");
        }
    }
    return OperatorSymbol(SymbolKind::anisotropic, dim, power, std::move(coefficients));
}

double OperatorSymbol::eval(const double* xi) const {
    switch (kind_) {
        case SymbolKind::laplacian: {
            double s = 0.0;
            for (int d = 0; d < dim_; ++d) s += xi[d] * xi[d];
            return s;
        }
        case SymbolKind::polyharmonic: {
            double s = 0.0;
            for (int d = 0; d < dim_; ++d) s += xi[d] * xi[d];
            return ipow(s, power_);
        }
        case SymbolKind::anisotropic: {
            double s = 0.0;
            for (int d = 0; d < dim_; ++d) s += coeffs_[d] * ipow(xi[d] * xi[d], power_);
            return s;
        }
    }
    return 0.0;  // unreachable
}

double OperatorSymbol::eval1(double xi) const { return eval(&xi); }

std::string OperatorSymbol::describe() const {
    char buf[128];
    switch (kind_) {
        case SymbolKind::laplacian:
            std::snprintf(buf, sizeof(buf), "laplacian(dim=%d)", dim_);
            break;
        case SymbolKind::polyharmonic:
            std::snprintf(buf, sizeof(buf), "polyharmonic(dim=%d, m=%d)", dim_, power_);
            break;
        case SymbolKind::anisotropic:
            if (dim_ == 1) {
                std::snprintf(buf, sizeof(buf), "anisotropic(a=[%g], m=%d)", coeffs_[0], power_);
            } else {
                std::snprintf(buf, sizeof(buf), "anisotropic(a=[%g, %g], m=%d)", coeffs_[0],
                              coeffs_[1], power_);
            }
            break;
    }
    return buf;
}

std::vector<double> symbol_on_lattice(const OperatorSymbol& symbol, const FieldState& like) {
    like.validate();
    if (symbol.dim() != like.dim) {
        throw validation_error("symbol_on_lattice: symbol and state dimensions differ");
    }
    const int m = like.points;
    std::vector<double> sigma(like.size(), 0.0);
    if (like.dim == 1) {
        for (int i = 0; i < m; ++i) {
            const double xi = lattice_frequency(i, m, like.period);
            sigma[i] = symbol.eval(&xi);
        }
    } else {
        std::vector<double> freq(m);
        for (int i = 0; i < m; ++i) freq[i] = lattice_frequency(i, m, like.period);
        for (int r = 0; r < m; ++r) {
            for (int c = 0; c < m; ++c) {
                const double xi[2] = {freq[r], freq[c]};
                sigma[static_cast<std::size_t>(r) * m + c] = symbol.eval(xi);
            }
        }
    }
    return sigma;
}

// ---------------------------------------------------------------------------
// GroupMetadata
// ---------------------------------------------------------------------------

GroupMetadata GroupMetadata::heisenberg(int n) {
    if (n < 1) throw validation_error("GroupMetadata: heisenberg index must be >= 1");
    GroupMetadata g;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "heisenberg(%d)", n);
    g.name = buf;
    g.homogeneous_dimension = 2.0 * n + 2.0;
    g.admissible_orders = {2.0, 4.0, 6.0, 8.0};  // any positive even order
    return g;
}

GroupMetadata GroupMetadata::engel() {
    GroupMetadata g;
    g.name = "engel";
    g.homogeneous_dimension = 7.0;
    g.admissible_orders = {6.0, 12.0, 18.0};  // even orders divisible by three
    return g;
}

// ---------------------------------------------------------------------------
// Modal evolution
// ---------------------------------------------------------------------------

namespace {

// Distinct sigma values over the lattice with a slot map: slot[m] = -1 for the
// zero mode (sigma == 0), otherwise an index into `distinct`.
struct ModeGroups {
    std::vector<double> distinct;
    std::vector<int> slot;
};

ModeGroups group_modes(const OperatorSymbol& symbol, const FieldState& like) {
    ModeGroups g;
    const std::vector<double> sigma = symbol_on_lattice(symbol, like);
    std::map<double, std::vector<std::size_t>> level_sets;
    g.slot.assign(sigma.size(), -1);
    for (std::size_t m = 0; m < sigma.size(); ++m) {
        if (sigma[m] == 0.0) continue;
        level_sets[sigma[m]].push_back(m);
    }
    g.distinct.reserve(level_sets.size());
    for (const auto& [value, members] : level_sets) {
        const int idx = static_cast<int>(g.distinct.size());
        g.distinct.push_back(value);
        for (std::size_t m : members) g.slot[m] = idx;
    }
    return g;
}

// Maps each requested output time to its grid node index; anything that is
// not a node is rejected.
std::vector<int> resolve_time_indices(const TimeGrid& grid, const std::vector<double>& times) {
    if (times.empty()) {
        throw validation_error("evolve: at least one output time is required");
    }
    const auto& nodes = grid.nodes();
    std::vector<int> idx(times.size(), -1);
    for (std::size_t k = 0; k < times.size(); ++k) {
        const double t = times[k];
        if (!std::isfinite(t)) throw validation_error("evolve: output times must be finite");
        const auto it = std::lower_bound(nodes.begin(), nodes.end(), t);
        int best = -1;
        for (int cand :
             {static_cast<int>(it - nodes.begin()) - 1, static_cast<int>(it - nodes.begin())}) {
            if (cand < 0 || cand >= static_cast<int>(nodes.size())) continue;
            if (std::abs(nodes[cand] - t) <= 1e-9 * std::max(1.0, std::abs(t))) best = cand;
        }
        if (best < 0) {
            char buf[96];
            std::snprintf(buf, sizeof(buf), "evolve: time %.12g is not a node of the grid", t);
            throw validation_error(buf);
        }
        idx[k] = best;
    }
    return idx;
}

}  // namespace

std::vector<FieldState> evolve_homogeneous(const FieldState& u0, const SoninePair& pair,
                                           const OperatorSymbol& symbol, const TimeGrid& grid,
                                           const std::vector<double>& times,
                                           ExecutionPolicy policy) {
    u0.validate();
    if (symbol.dim() != u0.dim) {
        throw validation_error("evolve_homogeneous: symbol and state dimensions differ");
    }
    const std::vector<int> tindex = resolve_time_indices(grid, times);
    const std::vector<std::complex<double>> spectrum = forward_transform(u0);
    const ModeGroups groups = group_modes(symbol, u0);

    ConvolutionWeights weights(density_of(pair), grid, policy);
    const std::vector<std::vector<double>> s_all =
        solve_relaxation_batch(weights, groups.distinct, policy);

    std::vector<FieldState> out;
    out.reserve(times.size());
    std::vector<std::complex<double>> spec_t(spectrum.size());
    for (std::size_t k = 0; k < times.size(); ++k) {
        const int i = tindex[k];
        for (std::size_t m = 0; m < spectrum.size(); ++m) {
            const int slot = groups.slot[m];
            spec_t[m] = (slot < 0) ? spectrum[m] : spectrum[m] * s_all[slot][i];
        }
        out.push_back(field_from_spectrum(u0, spec_t, times[k]));
    }
    return out;
}

std::vector<FieldState> evolve_inhomogeneous(const FieldState& u0,
                                             const std::vector<FieldState>& source,
                                             const SoninePair& pair, const OperatorSymbol& symbol,
                                             const TimeGrid& grid,
                                             const std::vector<double>& times,
                                             SourceConvention convention,
                                             ExecutionPolicy policy) {
    u0.validate();
    if (symbol.dim() != u0.dim) {
        throw validation_error("evolve_inhomogeneous: symbol and state dimensions differ");
    }
    const int n = grid.steps();
    const auto& nodes = grid.nodes();
    if (source.size() != static_cast<std::size_t>(n) + 1) {
        throw validation_error(
            "evolve_inhomogeneous: source must hold one state per grid node");
    }
    for (int j = 0; j <= n; ++j) {
        source[j].validate();
        if (source[j].dim != u0.dim || source[j].points != u0.points ||
            source[j].period != u0.period) {
            throw validation_error("evolve_inhomogeneous: source lattice differs from u0");
        }
        if (std::abs(source[j].time - nodes[j]) > 1e-9 * std::max(1.0, nodes[j])) {
            throw validation_error("evolve_inhomogeneous: source times must follow the grid nodes");
        }
    }
    const std::vector<int> tindex = resolve_time_indices(grid, times);

    // Frequency side of the data: u0 spectrum plus one source spectrum per node.
    const std::vector<std::complex<double>> spectrum0 = forward_transform(u0);
    const std::size_t modes = spectrum0.size();
    std::vector<std::vector<std::complex<double>>> fspec(n + 1);
    for (int j = 0; j <= n; ++j) fspec[j] = forward_transform(source[j]);

    const ModeGroups groups = group_modes(symbol, u0);

    ConvolutionWeights weights(density_of(pair), grid, policy);
    const std::vector<std::vector<double>> s_all =
        solve_relaxation_batch(weights, groups.distinct, policy);

    // Duhamel term per mode.  Writing y for the forced part of u_hat,
    //   kernel_eq:        y = (r * f_hat)      solves y + sigma (l * y) = (l * f_hat),
    //   subdiffusion_eq:  y = u_hat - s u0_hat solves y + sigma (l * y) = (1 * f_hat),
    // so both reduce to the general-RHS product-integration solve on the shared
    // weight table.  The forcing enters as its piecewise-linear interpolant:
    // (l * f_hat)(t_i) is exactly apply_row against the nodal samples, and
    // (1 * f_hat)(t_i) is the exact integral of the interpolant.
    const std::vector<double> knots(nodes.begin(), nodes.end());
    std::vector<std::vector<std::complex<double>>> duhamel(modes);
    const std::int64_t mcount = static_cast<std::int64_t>(modes);
#pragma omp parallel for schedule(dynamic, 16) if (policy == ExecutionPolicy::parallel)
    for (std::int64_t m = 0; m < mcount; ++m) {
        std::vector<double> re(n + 1), im(n + 1);
        bool is_zero = true;
        for (int j = 0; j <= n; ++j) {
            re[j] = fspec[j][m].real();
            im[j] = fspec[j][m].imag();
            if (re[j] != 0.0 || im[j] != 0.0) is_zero = false;
        }
        if (is_zero) continue;  // unforced mode: homogeneous formula only

        const int slot = groups.slot[m];
        const double sigma = (slot < 0) ? 0.0 : groups.distinct[slot];

        std::vector<double> gre(n + 1), gim(n + 1);
        if (convention == SourceConvention::kernel_eq) {
            for (int i = 0; i <= n; ++i) {
                gre[i] = weights.apply_row(i, re);
                gim[i] = weights.apply_row(i, im);
            }
        } else {
            PiecewiseLinear fre(knots, re), fim(knots, im);
            for (int i = 0; i <= n; ++i) {
                gre[i] = fre.integral(nodes[i]);
                gim[i] = fim.integral(nodes[i]);
            }
        }
        const std::vector<double> yre = solve_volterra_rhs(weights, sigma, gre);
        const std::vector<double> yim = solve_volterra_rhs(weights, sigma, gim);
        duhamel[m].resize(n + 1);
        for (int i = 0; i <= n; ++i) {
            duhamel[m][i] = std::complex<double>(yre[i], yim[i]);
        }
    }

    std::vector<FieldState> out;
    out.reserve(times.size());
    std::vector<std::complex<double>> spec_t(modes);
    for (std::size_t k = 0; k < times.size(); ++k) {
        const int i = tindex[k];
        for (std::size_t m = 0; m < modes; ++m) {
            const int slot = groups.slot[m];
            std::complex<double> v =
                (slot < 0) ? spectrum0[m] : spectrum0[m] * s_all[slot][i];
            if (!duhamel[m].empty()) v += duhamel[m][i];
            spec_t[m] = v;
        }
        out.push_back(field_from_spectrum(u0, spec_t, times[k]));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Spectral counting
// ---------------------------------------------------------------------------

namespace {

double min_coefficient(const OperatorSymbol& symbol) {
    double c = 1.0;
    for (double a : symbol.coefficients()) c = std::min(c, a);
    return c;
}

}  // namespace

std::int64_t spectral_counting(const OperatorSymbol& symbol, double v, int truncation) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw validation_error("spectral_counting: v must be positive and finite");
    }
    if (truncation < 1) throw validation_error("spectral_counting: truncation must be >= 1");
    // Outside the box every component magnitude reaching truncation+1 gives
    // sigma >= c_min (truncation+1)^nu; demand that this already clears v.
    const double reach = min_coefficient(symbol) * ipow(truncation + 1.0, 2 * symbol.power());
    if (reach < v) {
        throw validation_error(
            "spectral_counting: truncation too small to enclose all frequencies below v");
    }
    std::int64_t count = 0;
    if (symbol.dim() == 1) {
        for (int m = -truncation; m <= truncation; ++m) {
            if (m == 0) continue;
            const double xi = static_cast<double>(m);
            if (symbol.eval(&xi) < v) ++count;
        }
    } else {
        for (int m0 = -truncation; m0 <= truncation; ++m0) {
            for (int m1 = -truncation; m1 <= truncation; ++m1) {
                if (m0 == 0 && m1 == 0) continue;
                const double xi[2] = {static_cast<double>(m0), static_cast<double>(m1)};
                if (symbol.eval(xi) < v) ++count;
            }
        }
    }
    return count;
}

CountingFit fit_counting_exponent(const OperatorSymbol& symbol,
                                  const std::vector<double>& v_grid) {
    if (v_grid.size() < 4) {
        throw validation_error("fit_counting_exponent: need at least 4 grid values");
    }
    for (double v : v_grid) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw validation_error("fit_counting_exponent: grid values must be positive");
        }
    }
    if (!std::is_sorted(v_grid.begin(), v_grid.end())) {
        throw validation_error("fit_counting_exponent: grid must be increasing");
    }
    if (v_grid.back() / v_grid.front() < 1e3) {
        throw validation_error("fit_counting_exponent: grid must span at least three decades");
    }

    CountingFit fit;
    fit.v_values = v_grid;
    fit.counts.reserve(v_grid.size());
    const double c_min = min_coefficient(symbol);
    const double nu = symbol.nu();
    for (double v : v_grid) {
        // Smallest box that provably encloses {sigma < v}.
        const int truncation =
            static_cast<int>(std::ceil(std::pow(v / c_min, 1.0 / nu))) + 1;
        const std::int64_t n = spectral_counting(symbol, v, truncation);
        if (n <= 0) {
            throw validation_error(
                "fit_counting_exponent: empty count in the grid; raise the smallest v");
        }
        fit.counts.push_back(n);
    }

    const std::size_t n = v_grid.size();
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = std::log(v_grid[i]);
        const double y = std::log(static_cast<double>(fit.counts[i]));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double denom = n * sxx - sx * sx;
    if (denom <= 0.0) {
        throw validation_error("fit_counting_exponent: degenerate grid");
    }
    fit.slope = (n * sxy - sx * sy) / denom;
    const double intercept = (sy - fit.slope * sx) / n;
    fit.prefactor = std::exp(intercept);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = std::log(v_grid[i]);
        const double y = std::log(static_cast<double>(fit.counts[i]));
        const double r = y - (fit.slope * x + intercept);
        ss += r * r;
    }
    fit.residual = std::sqrt(ss / n);
    return fit;
}

// ---------------------------------------------------------------------------
// PiecewiseLinear
// ---------------------------------------------------------------------------

PiecewiseLinear::PiecewiseLinear(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
    if (x_.size() < 2 || x_.size() != y_.size()) {
        throw validation_error("PiecewiseLinear: need matching x/y with at least two knots");
    }
    for (std::size_t i = 1; i < x_.size(); ++i) {
        if (!(x_[i] > x_[i - 1])) {
            throw validation_error("PiecewiseLinear: knots must be strictly increasing");
        }
    }
    cum_.assign(x_.size(), 0.0);
    for (std::size_t i = 1; i < x_.size(); ++i) {
        cum_[i] = cum_[i - 1] + 0.5 * (y_[i - 1] + y_[i]) * (x_[i] - x_[i - 1]);
    }
}

double PiecewiseLinear::operator()(double t) const {
    if (t <= x_.front()) return y_.front();
    if (t >= x_.back()) return y_.back();
    const auto it = std::upper_bound(x_.begin(), x_.end(), t);
    const std::size_t j = static_cast<std::size_t>(it - x_.begin()) - 1;
    const double w = (t - x_[j]) / (x_[j + 1] - x_[j]);
    return y_[j] + w * (y_[j + 1] - y_[j]);
}

double PiecewiseLinear::integral(double t) const {
    if (t <= x_.front()) return (t - x_.front()) * y_.front();
    if (t >= x_.back()) return cum_.back() + (t - x_.back()) * y_.back();
    const auto it = std::upper_bound(x_.begin(), x_.end(), t);
    const std::size_t j = static_cast<std::size_t>(it - x_.begin()) - 1;
    const double dt = t - x_[j];
    const double slope = (y_[j + 1] - y_[j]) / (x_[j + 1] - x_[j]);
    return cum_[j] + y_[j] * dt + 0.5 * slope * dt * dt;
}

}  // namespace sonine
