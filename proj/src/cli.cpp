#include "sonine/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "sonine/analysis.hpp"
#include "sonine/errors.hpp"
#include "sonine/kernels.hpp"
#include "sonine/spectral.hpp"
#include "sonine/volterra.hpp"

namespace sonine::cli {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Formatting and hashing
// ---------------------------------------------------------------------------

std::string csv_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.15g", v);
    return buf;
}

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string fnv1a64_hex(std::string_view data) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(data)));
    return buf;
}

// ---------------------------------------------------------------------------
// Dotted-path overrides
// ---------------------------------------------------------------------------

void apply_override(json& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw std::invalid_argument("--set expects dotted.path=value, got '" + assignment + "'");
    }
    const std::string path = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);

    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error&) {
        value = text;  // bare words are strings
    }

    json* node = &config;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
        if (key.empty()) {
            throw std::invalid_argument("--set path has an empty segment: '" + path + "'");
        }
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        if (!node->contains(key) || !(*node)[key].is_object()) (*node)[key] = json::object();
        node = &(*node)[key];
        start = dot + 1;
    }
}

// ---------------------------------------------------------------------------
// Config access with path diagnostics
// ---------------------------------------------------------------------------

namespace {

struct ConfigError {
    std::string path;
    std::string message;
};

[[noreturn]] void fail(const std::string& path, const std::string& message) {
    throw ConfigError{path, message};
}

std::string join(const std::string& path, const char* key) {
    return path.empty() ? key : path + "." + key;
}

const json& need(const json& obj, const std::string& path, const char* key) {
    if (!obj.is_object()) fail(path, "expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) fail(join(path, key), "required field is missing");
    return *it;
}

const json* find(const json& obj, const char* key) {
    if (!obj.is_object()) return nullptr;
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

double as_number(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

int as_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    return j.get<int>();
}

std::string as_string(const json& j, const std::string& path) {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
}

double need_number(const json& obj, const std::string& path, const char* key) {
    return as_number(need(obj, path, key), join(path, key));
}

int need_int(const json& obj, const std::string& path, const char* key) {
    return as_int(need(obj, path, key), join(path, key));
}

std::string need_string(const json& obj, const std::string& path, const char* key) {
    return as_string(need(obj, path, key), join(path, key));
}

double opt_number(const json& obj, const std::string& path, const char* key, double fallback) {
    const json* j = find(obj, key);
    return j ? as_number(*j, join(path, key)) : fallback;
}

int opt_int(const json& obj, const std::string& path, const char* key, int fallback) {
    const json* j = find(obj, key);
    return j ? as_int(*j, join(path, key)) : fallback;
}

std::vector<double> number_array(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) fail(path, "expected a nonempty array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        out.push_back(as_number(j[i], path + "[" + std::to_string(i) + "]"));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Domain parsers
// ---------------------------------------------------------------------------

// Parameter-value violations surface as validation_error inside the library;
// at the configuration boundary they are schema problems, so re-badge them
// with the path of the section being parsed.
template <typename Fn>
auto checked(const std::string& path, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const validation_error& e) {
        fail(path, e.what());
    }
}

SoninePair parse_kernel(const json& cfg, const std::string& path) {
    const std::string family = need_string(cfg, path, "family");
    if (family == "fractional") {
        const double alpha = need_number(cfg, path, "alpha");
        return checked(path, [&] { return SoninePair::fractional(alpha); });
    }
    if (family == "two_term") {
        const double alpha = need_number(cfg, path, "alpha");
        const double beta = need_number(cfg, path, "beta");
        return checked(path, [&] { return SoninePair::two_term(alpha, beta); });
    }
    if (family == "distributed_order") {
        return SoninePair::distributed_order();
    }
    if (family == "multi_term") {
        const auto alphas = number_array(need(cfg, path, "alphas"), join(path, "alphas"));
        return checked(path, [&] { return SoninePair::multi_term(alphas); });
    }
    if (family == "tempered") {
        const double alpha = need_number(cfg, path, "alpha");
        const double rate = need_number(cfg, path, "rate");
        return checked(path, [&] { return SoninePair::tempered(alpha, rate); });
    }
    fail(join(path, "family"),
         "unknown family '" + family +
             "' (expected fractional, two_term, distributed_order, multi_term, tempered)");
}

OperatorSymbol parse_operator(const json& cfg, const std::string& path) {
    const std::string kind = need_string(cfg, path, "kind");
    if (kind == "laplacian") {
        const int dim = need_int(cfg, path, "dim");
        return checked(path, [&] { return OperatorSymbol::laplacian(dim); });
    }
    if (kind == "polyharmonic") {
        const int dim = need_int(cfg, path, "dim");
        const int power = need_int(cfg, path, "power");
        return checked(path, [&] { return OperatorSymbol::polyharmonic(dim, power); });
    }
    if (kind == "anisotropic") {
        const auto coeffs =
            number_array(need(cfg, path, "coefficients"), join(path, "coefficients"));
        const int power = need_int(cfg, path, "power");
        return checked(path, [&] { return OperatorSymbol::anisotropic(coeffs, power); });
    }
    fail(join(path, "kind"),
         "unknown kind '" + kind + "' (expected laplacian, polyharmonic, anisotropic)");
}

TimeGrid parse_grid(const json& cfg, const std::string& path) {
    const double horizon = need_number(cfg, path, "horizon");
    const int steps = need_int(cfg, path, "steps");
    const double grading = opt_number(cfg, path, "grading", 1.0);
    return checked(path, [&] {
        return grading == 1.0 ? TimeGrid::uniform(horizon, steps)
                              : TimeGrid::graded(horizon, steps, grading);
    });
}

struct SpaceSpec {
    int dim = 1;
    int points = 0;
    double period = 0.0;
};

SpaceSpec parse_space(const json& cfg, const std::string& path) {
    SpaceSpec s;
    s.dim = need_int(cfg, path, "dim");
    s.points = need_int(cfg, path, "points");
    s.period = need_number(cfg, path, "period");
    checked(path, [&] { return FieldState::zeros(s.dim, s.points, s.period); });
    return s;
}

// Converts a signed lattice index to the storage index.
int wrap_mode(int m, int points, const std::string& path) {
    if (m < -points / 2 || m > points / 2) {
        fail(path, "mode index " + std::to_string(m) + " outside [-M/2, M/2] for M = " +
                       std::to_string(points));
    }
    return (m % points + points) % points;
}

std::size_t mode_slot(const std::vector<int>& mode, const SpaceSpec& space,
                      const std::string& path) {
    if (static_cast<int>(mode.size()) != space.dim) {
        fail(path, "mode must have one index per space dimension");
    }
    if (space.dim == 1) {
        return static_cast<std::size_t>(wrap_mode(mode[0], space.points, path));
    }
    const int r = wrap_mode(mode[0], space.points, path);
    const int c = wrap_mode(mode[1], space.points, path);
    return static_cast<std::size_t>(r) * space.points + c;
}

std::vector<int> int_array(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) fail(path, "expected a nonempty array of integers");
    std::vector<int> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        out.push_back(as_int(j[i], path + "[" + std::to_string(i) + "]"));
    }
    return out;
}

FieldState build_initial(const json& cfg, const std::string& path, const SpaceSpec& space) {
    const std::string type = need_string(cfg, path, "type");
    FieldState state = FieldState::zeros(space.dim, space.points, space.period);
    if (type == "zero") {
        return state;
    }
    if (type == "constant") {
        const auto v = number_array(need(cfg, path, "value"), join(path, "value"));
        if (v.size() != 2) fail(join(path, "value"), "expected [re, im]");
        return FieldState::constant(space.dim, space.points, space.period, {v[0], v[1]});
    }
    if (type == "single_mode") {
        auto spectrum = forward_transform(state);
        const auto mode = int_array(need(cfg, path, "mode"), join(path, "mode"));
        std::complex<double> amp(1.0, 0.0);
        if (const json* a = find(cfg, "amplitude")) {
            const auto v = number_array(*a, join(path, "amplitude"));
            if (v.size() != 2) fail(join(path, "amplitude"), "expected [re, im]");
            amp = {v[0], v[1]};
        }
        spectrum[mode_slot(mode, space, join(path, "mode"))] = amp;
        return field_from_spectrum(state, spectrum, 0.0);
    }
    if (type == "random_band") {
        const int band = need_int(cfg, path, "band");
        if (band < 1) fail(join(path, "band"), "band limit must be >= 1");
        if (!find(cfg, "seed")) {
            fail(join(path, "seed"), "randomized data requires an explicit seed");
        }
        const auto seed = static_cast<std::uint64_t>(need_int(cfg, path, "seed"));
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        auto spectrum = forward_transform(state);
        const int M = space.points;
        if (space.dim == 1) {
            for (int m = 0; m < M; ++m) {
                const int ms = (m <= M / 2) ? m : m - M;
                if (ms == 0 || std::abs(ms) > band) continue;
                spectrum[m] = {u(rng), u(rng)};
            }
        } else {
            for (int r = 0; r < M; ++r) {
                for (int c = 0; c < M; ++c) {
                    const int mr = (r <= M / 2) ? r : r - M;
                    const int mc = (c <= M / 2) ? c : c - M;
                    if ((mr == 0 && mc == 0) || std::abs(mr) > band || std::abs(mc) > band) {
                        continue;
                    }
                    spectrum[r * M + c] = {u(rng), u(rng)};
                }
            }
        }
        return field_from_spectrum(state, spectrum, 0.0);
    }
    if (type == "point_mass") {
        // Mean-free approximate point mass: every nonzero mode inside the band
        // carries unit weight.
        const int band = need_int(cfg, path, "band");
        if (band < 1) fail(join(path, "band"), "band limit must be >= 1");
        auto spectrum = forward_transform(state);
        const int M = space.points;
        if (space.dim == 1) {
            for (int m = 0; m < M; ++m) {
                const int ms = (m <= M / 2) ? m : m - M;
                if (ms == 0 || std::abs(ms) > band) continue;
                spectrum[m] = 1.0;
            }
        } else {
            for (int r = 0; r < M; ++r) {
                for (int c = 0; c < M; ++c) {
                    const int mr = (r <= M / 2) ? r : r - M;
                    const int mc = (c <= M / 2) ? c : c - M;
                    if ((mr == 0 && mc == 0) || std::abs(mr) > band || std::abs(mc) > band) {
                        continue;
                    }
                    spectrum[r * M + c] = 1.0;
                }
            }
        }
        return field_from_spectrum(state, spectrum, 0.0);
    }
    fail(join(path, "type"),
         "unknown type '" + type +
             "' (expected zero, constant, single_mode, random_band, point_mass)");
}

// Output-time selection: explicit node indices, or every node in [min, max]
// thinned by `stride`.
std::vector<double> select_times(const json& cfg, const std::string& path, const TimeGrid& grid) {
    const auto& nodes = grid.nodes();
    if (const json* idx = find(cfg, "indices")) {
        std::vector<double> out;
        const auto list = int_array(*idx, join(path, "indices"));
        for (int i : list) {
            if (i < 0 || i > grid.steps()) {
                fail(join(path, "indices"), "node index " + std::to_string(i) + " outside [0, " +
                                                std::to_string(grid.steps()) + "]");
            }
            out.push_back(nodes[i]);
        }
        return out;
    }
    const double lo = need_number(cfg, path, "min");
    const double hi = need_number(cfg, path, "max");
    const int stride = opt_int(cfg, path, "stride", 1);
    if (stride < 1) fail(join(path, "stride"), "stride must be >= 1");
    if (!(lo < hi)) fail(path, "requires min < max");
    std::vector<double> out;
    int kept = 0;
    for (int i = 1; i <= grid.steps(); ++i) {
        if (nodes[i] < lo || nodes[i] > hi) continue;
        if (kept % stride == 0) out.push_back(nodes[i]);
        ++kept;
    }
    if (out.empty()) fail(path, "no grid nodes fall inside [min, max]");
    return out;
}

struct NormSpec {
    bool sobolev = false;
    double p = 2.0;  // lp order
    double s = 0.0;  // sobolev index
    std::string label;
};

NormSpec parse_norm(const json& cfg, const std::string& path) {
    NormSpec n;
    const std::string type = need_string(cfg, path, "type");
    char buf[32];
    if (type == "lp") {
        n.sobolev = false;
        const json& pj = need(cfg, path, "p");
        if (pj.is_string() && pj.get<std::string>() == "inf") {
            n.p = std::numeric_limits<double>::infinity();
            n.label = "Linf";
            return n;
        }
        n.p = as_number(pj, join(path, "p"));
        if (!(n.p >= 1.0)) fail(join(path, "p"), "requires p >= 1");
        std::snprintf(buf, sizeof(buf), "L%.6g", n.p);
        n.label = buf;
        return n;
    }
    if (type == "sobolev") {
        n.sobolev = true;
        n.s = need_number(cfg, path, "s");
        std::snprintf(buf, sizeof(buf), "H%.6g", n.s);
        n.label = buf;
        return n;
    }
    fail(join(path, "type"), "unknown norm type '" + type + "' (expected lp, sobolev)");
}

// ---------------------------------------------------------------------------
// Artifact collection
// ---------------------------------------------------------------------------

struct Verdict {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct Artifacts {
    std::filesystem::path dir;
    json outputs = json::array();
    std::vector<Verdict> verdicts;

    void write(const std::string& name, const std::string& content) {
        const std::filesystem::path target = dir / name;
        std::ofstream out(target, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + target.string());
        out << content;
        out.close();
        outputs.push_back({{"file", name},
                           {"bytes", content.size()},
                           {"fnv1a64", fnv1a64_hex(content)}});
    }

    void verdict(const std::string& name, bool pass, const std::string& detail) {
        verdicts.push_back({name, pass, detail});
    }

    bool all_pass() const {
        for (const auto& v : verdicts) {
            if (!v.pass) return false;
        }
        return true;
    }
};

std::string detail_max(const char* what, double value, double tol) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%s %.3e (tolerance %.3e)", what, value, tol);
    return buf;
}

// ---------------------------------------------------------------------------
// Pipelines
// ---------------------------------------------------------------------------

void run_kernel_verify(const json& cfg, Artifacts& art) {
    const SoninePair pair = parse_kernel(need(cfg, "", "kernel"), "kernel");
    KernelVerifyOptions opt;
    if (const json* v = find(cfg, "verify")) {
        const double lo = opt_number(*v, "verify", "t_min", 0.1);
        const double hi = opt_number(*v, "verify", "t_max", 10.0);
        const int count = opt_int(*v, "verify", "count", 20);
        opt.tol = opt_number(*v, "verify", "tol", 1e-6);
        if (!(lo > 0.0) || !(hi > lo)) fail("verify", "requires 0 < t_min < t_max");
        if (count < 2) fail("verify.count", "requires at least 2 sample times");
        for (int i = 0; i < count; ++i) {
            opt.times.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1)));
        }
    }
    const KernelVerifyReport rep = verify_sonine(pair, opt);

    std::string csv = "t,value,abs_err\n";
    for (const auto& s : rep.samples) {
        csv += csv_number(s.t) + "," + csv_number(s.value) + "," + csv_number(s.abs_err) + "\n";
    }
    art.write("verify.csv", csv);
    art.verdict("sonine-identity", rep.pass,
                detail_max("max |(k*l)(t) - 1| =", rep.max_abs_err, opt.tol));
}

void run_relax(const json& cfg, Artifacts& art) {
    const SoninePair pair = parse_kernel(need(cfg, "", "kernel"), "kernel");
    const TimeGrid grid = parse_grid(need(cfg, "", "grid"), "grid");
    const std::vector<double> mus = number_array(need(cfg, "", "mus"), "mus");
    double slack = 1e-9;
    if (const json* r = find(cfg, "relax")) slack = opt_number(*r, "relax", "sandwich_slack", slack);

    const ConvolutionWeights weights(density_of(pair), grid);
    const auto solutions = solve_relaxation_batch(weights, mus);

    const auto& nodes = grid.nodes();
    for (std::size_t q = 0; q < mus.size(); ++q) {
        const double mu = mus[q];
        std::string csv = "t,s,lower,upper\n";
        double worst = 0.0;
        for (int i = 0; i <= grid.steps(); ++i) {
            double lower = 1.0, upper = 1.0;
            if (i > 0) {
                const SandwichBounds b = relaxation_sandwich(pair, mu, nodes[i]);
                lower = b.lower;
                upper = b.upper;
            }
            const double s = solutions[q][i];
            worst = std::max(worst, std::max(lower - s, s - upper));
            csv += csv_number(nodes[i]) + "," + csv_number(s) + "," + csv_number(lower) + "," +
                   csv_number(upper) + "\n";
        }
        art.write("relax_" + std::to_string(q) + ".csv", csv);
        char name[64];
        std::snprintf(name, sizeof(name), "sandwich mu=%.6g", mu);
        art.verdict(name, worst <= slack, detail_max("max bound violation", worst, slack));
    }
}

void run_resolvent(const json& cfg, Artifacts& art) {
    const SoninePair pair = parse_kernel(need(cfg, "", "kernel"), "kernel");
    const TimeGrid grid = parse_grid(need(cfg, "", "grid"), "grid");
    const std::vector<double> mus = number_array(need(cfg, "", "mus"), "mus");
    double tol = 1e-4;
    if (const json* r = find(cfg, "resolvent")) tol = opt_number(*r, "resolvent", "identity_tol", tol);

    const DensityFunction density = density_of(pair);
    const ConvolutionWeights weights(density, grid);
    const ResolventWeights rweights(density, grid);
    const auto& nodes = grid.nodes();

    for (std::size_t q = 0; q < mus.size(); ++q) {
        const double mu = mus[q];
        const ResolventSolution sol = solve_resolvent(rweights, mu);
        const std::vector<double> s = solve_relaxation(weights, mu);
        std::string csv = "t,rho,r,integral_r\n";
        double worst = 0.0;
        for (int i = 0; i <= grid.steps(); ++i) {
            worst = std::max(worst, std::abs(s[i] - (1.0 - mu * sol.integral[i])));
            csv += csv_number(nodes[i]) + "," + csv_number(sol.rho[i]) + "," +
                   csv_number(sol.r[i]) + "," + csv_number(sol.integral[i]) + "\n";
        }
        art.write("resolvent_" + std::to_string(q) + ".csv", csv);
        char name[64];
        std::snprintf(name, sizeof(name), "resolvent-identity mu=%.6g", mu);
        art.verdict(name, worst <= tol,
                    detail_max("max |s - (1 - mu (1*r))| =", worst, tol));
    }
}

// Shared by evolve and decay-fit: space grid, initial state, evolution.
struct EvolutionSetup {
    SoninePair pair;
    OperatorSymbol symbol;
    TimeGrid grid;
    SpaceSpec space;
    FieldState u0;
    std::vector<double> times;
};

EvolutionSetup parse_evolution(const json& cfg, const json& times_spec,
                               const std::string& times_path) {
    EvolutionSetup setup{parse_kernel(need(cfg, "", "kernel"), "kernel"),
                         parse_operator(need(cfg, "", "operator"), "operator"),
                         parse_grid(need(cfg, "", "grid"), "grid"),
                         parse_space(need(cfg, "", "space"), "space"),
                         FieldState{},
                         {}};
    if (setup.symbol.dim() != setup.space.dim) {
        fail("operator.dim", "operator and space dimensions differ");
    }
    setup.u0 = build_initial(need(cfg, "", "initial"), "initial", setup.space);
    setup.times = select_times(times_spec, times_path, setup.grid);
    return setup;
}

std::vector<FieldState> build_source(const json& cfg, const std::string& path,
                                     const EvolutionSetup& setup, SourceConvention& convention) {
    const std::string conv = need_string(cfg, path, "convention");
    if (conv == "kernel_eq") {
        convention = SourceConvention::kernel_eq;
    } else if (conv == "subdiffusion_eq") {
        convention = SourceConvention::subdiffusion_eq;
    } else {
        fail(join(path, "convention"),
             "unknown convention '" + conv + "' (expected kernel_eq, subdiffusion_eq)");
    }
    const auto mode = int_array(need(cfg, path, "mode"), join(path, "mode"));
    const std::size_t slot = mode_slot(mode, setup.space, join(path, "mode"));

    const auto& nodes = setup.grid.nodes();
    std::vector<std::complex<double>> amp(nodes.size(), 0.0);
    if (const json* terms = find(cfg, "terms")) {
        if (!terms->is_array() || terms->empty()) {
            fail(join(path, "terms"), "expected a nonempty array of {coef, power} terms");
        }
        for (std::size_t k = 0; k < terms->size(); ++k) {
            const std::string tpath = join(path, "terms") + "[" + std::to_string(k) + "]";
            const double coef = need_number((*terms)[k], tpath, "coef");
            const double power = need_number((*terms)[k], tpath, "power");
            if (power < 0.0) fail(tpath + ".power", "requires power >= 0");
            for (std::size_t j = 0; j < nodes.size(); ++j) {
                amp[j] += coef * (power == 0.0 ? 1.0 : std::pow(nodes[j], power));
            }
        }
    } else if (const json* csv = find(cfg, "csv")) {
        const std::string file = as_string(*csv, join(path, "csv"));
        std::ifstream in(file);
        if (!in) fail(join(path, "csv"), "cannot open '" + file + "'");
        std::string line;
        std::getline(in, line);  // header
        std::size_t row = 0;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            if (row >= nodes.size()) fail(join(path, "csv"), "more rows than grid nodes");
            double t = 0.0, re = 0.0, im = 0.0;
            if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &t, &re, &im) != 3) {
                fail(join(path, "csv"), "row " + std::to_string(row + 1) +
                                            " is not 't,re,im'");
            }
            if (std::abs(t - nodes[row]) > 1e-9 * std::max(1.0, nodes[row])) {
                fail(join(path, "csv"),
                     "row " + std::to_string(row + 1) + " time does not match grid node");
            }
            amp[row] = {re, im};
            ++row;
        }
        if (row != nodes.size()) fail(join(path, "csv"), "fewer rows than grid nodes");
    } else {
        fail(path, "requires either 'terms' or 'csv'");
    }

    // Spatial profile: the chosen lattice mode.
    FieldState like = FieldState::zeros(setup.space.dim, setup.space.points, setup.space.period);
    auto spectrum = forward_transform(like);
    std::vector<FieldState> source;
    source.reserve(nodes.size());
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        spectrum[slot] = amp[j];
        source.push_back(field_from_spectrum(like, spectrum, nodes[j]));
    }
    return source;
}

void write_field_csv(Artifacts& art, const std::string& name, const FieldState& st) {
    std::string csv = st.dim == 1 ? "index,x,re,im\n" : "index,x0,x1,re,im\n";
    const int M = st.points;
    for (std::size_t idx = 0; idx < st.values.size(); ++idx) {
        const auto& z = st.values[idx];
        if (st.dim == 1) {
            csv += std::to_string(idx) + "," + csv_number(idx * st.period / M);
        } else {
            const std::size_t r = idx / M, c = idx % M;
            csv += std::to_string(idx) + "," + csv_number(r * st.period / M) + "," +
                   csv_number(c * st.period / M);
        }
        csv += "," + csv_number(z.real()) + "," + csv_number(z.imag()) + "\n";
    }
    art.write(name, csv);
}

void run_evolve(const json& cfg, Artifacts& art) {
    EvolutionSetup setup = parse_evolution(cfg, need(cfg, "", "times"), "times");
    for (std::size_t k = 1; k < setup.times.size(); ++k) {
        if (!(setup.times[k] > setup.times[k - 1])) {
            fail("times", "output times must be strictly increasing");
        }
    }

    std::vector<FieldState> out;
    bool homogeneous = true;
    if (const json* src_cfg = find(cfg, "source")) {
        homogeneous = false;
        SourceConvention convention = SourceConvention::kernel_eq;
        const auto source = build_source(*src_cfg, "source", setup, convention);
        out = evolve_inhomogeneous(setup.u0, source, setup.pair, setup.symbol, setup.grid,
                                   setup.times, convention);
    } else {
        out = evolve_homogeneous(setup.u0, setup.pair, setup.symbol, setup.grid, setup.times);
    }

    // Norm table.
    std::vector<NormSpec> norms;
    if (const json* nj = find(cfg, "norms")) {
        if (!nj->is_array() || nj->empty()) fail("norms", "expected a nonempty array");
        for (std::size_t i = 0; i < nj->size(); ++i) {
            norms.push_back(parse_norm((*nj)[i], "norms[" + std::to_string(i) + "]"));
        }
    } else {
        norms.push_back(NormSpec{false, 2.0, 0.0, "L2"});
    }
    std::string table = "t,L";
    for (const auto& n : norms) table += "," + n.label;
    table += "\n";
    for (const auto& st : out) {
        table += csv_number(st.time) + "," + csv_number(setup.pair.cumulative_l(st.time));
        for (const auto& n : norms) {
            table += "," + csv_number(n.sobolev ? sobolev_norm(st, n.s, setup.symbol)
                                                : lp_norm(st, n.p));
        }
        table += "\n";
    }
    art.write("norms.csv", table);

    char fname[32];
    for (std::size_t k = 0; k < out.size(); ++k) {
        std::snprintf(fname, sizeof(fname), "field_%03zu.csv", k);
        write_field_csv(art, fname, out[k]);
    }

    // Invariants (checked on source-free runs, where they are theorems).
    if (homogeneous) {
        std::complex<double> mean0(0.0, 0.0);
        for (const auto& z : setup.u0.values) mean0 += z;
        mean0 /= static_cast<double>(setup.u0.values.size());
        double mean_drift = 0.0;
        for (const auto& st : out) {
            std::complex<double> m(0.0, 0.0);
            for (const auto& z : st.values) m += z;
            m /= static_cast<double>(st.values.size());
            mean_drift = std::max(mean_drift, std::abs(m - mean0));
        }
        art.verdict("mean-conservation", mean_drift <= 1e-12,
                    detail_max("max |mean(t) - mean(0)| =", mean_drift, 1e-12));

        double worst_growth = 0.0;
        std::vector<std::complex<double>> prev = forward_transform(setup.u0);
        for (const auto& st : out) {
            const auto spec = forward_transform(st);
            for (std::size_t m = 1; m < spec.size(); ++m) {
                worst_growth = std::max(worst_growth, std::abs(spec[m]) - std::abs(prev[m]));
            }
            prev = spec;
        }
        art.verdict("modal-monotonicity", worst_growth <= 1e-12,
                    detail_max("max modal growth", worst_growth, 1e-12));
    }
}

void run_decay_fit(const json& cfg, Artifacts& art) {
    const json& fit_cfg = need(cfg, "", "fit");
    const json& wj = need(fit_cfg, "fit", "window");
    DecayWindow window{need_number(wj, "fit.window", "t_min"),
                       need_number(wj, "fit.window", "t_max")};
    const double tolerance = need_number(fit_cfg, "fit", "tolerance");

    json default_times = {{"min", window.t_min}, {"max", window.t_max}};
    const json* times_spec = find(cfg, "times");
    EvolutionSetup setup =
        parse_evolution(cfg, times_spec ? *times_spec : default_times, "times");

    double predicted = 0.0;
    const json& pj = need(fit_cfg, "fit", "predicted");
    if (pj.is_number()) {
        predicted = pj.get<double>();
    } else if (pj.is_object()) {
        const double p = need_number(pj, "fit.predicted", "p");
        const double q = need_number(pj, "fit.predicted", "q");
        const double Q =
            opt_number(pj, "fit.predicted", "Q", setup.symbol.homogeneous_dimension());
        const double nu = opt_number(pj, "fit.predicted", "nu", setup.symbol.nu());
        predicted = predict_decay_rate(p, q, Q, nu, setup.pair).exponent;
    } else {
        fail("fit.predicted", "expected a number or {p, q, Q, nu}");
    }

    const NormSpec norm = parse_norm(need(cfg, "", "norm"), "norm");
    const auto out = evolve_homogeneous(setup.u0, setup.pair, setup.symbol, setup.grid,
                                        setup.times);
    NormSeries series;
    series.label = norm.label;
    for (const auto& st : out) {
        series.times.push_back(st.time);
        series.norms.push_back(norm.sobolev ? sobolev_norm(st, norm.s, setup.symbol)
                                            : lp_norm(st, norm.p));
    }
    const DecayReport rep =
        fit_decay_exponent(series, setup.pair, window, predicted, tolerance);

    std::string csv = "t,L,norm,envelope\n";
    for (std::size_t i = 0; i < series.times.size(); ++i) {
        const double L = setup.pair.cumulative_l(series.times[i]);
        csv += csv_number(series.times[i]) + "," + csv_number(L) + "," +
               csv_number(series.norms[i]) + "," + csv_number(std::pow(L, predicted)) + "\n";
    }
    art.write("series.csv", csv);

    const json report = {{"predicted_exponent", rep.predicted_exponent},
                         {"fitted_exponent", rep.fitted_exponent},
                         {"residual", rep.residual},
                         {"window", {{"t_min", rep.window.t_min}, {"t_max", rep.window.t_max}}},
                         {"norm", rep.norm_label},
                         {"tolerance", rep.tolerance},
                         {"samples_used", rep.samples_used},
                         {"pass", rep.pass}};
    art.write("report.json", report.dump(2) + "\n");

    char detail[160];
    std::snprintf(detail, sizeof(detail), "fitted %.6g vs predicted %.6g (tolerance %.3g)",
                  rep.fitted_exponent, rep.predicted_exponent, rep.tolerance);
    art.verdict("decay-exponent", rep.pass, detail);
}

void run_count(const json& cfg, Artifacts& art) {
    const OperatorSymbol symbol = parse_operator(need(cfg, "", "operator"), "operator");
    const json& cj = need(cfg, "", "count");
    std::vector<double> vg;
    if (const json* values = find(cj, "values")) {
        vg = number_array(*values, "count.values");
    } else {
        const double lo = need_number(cj, "count", "v_min");
        const double hi = need_number(cj, "count", "v_max");
        const int points = need_int(cj, "count", "points");
        if (!(lo > 0.0) || !(hi > lo)) fail("count", "requires 0 < v_min < v_max");
        if (points < 4) fail("count.points", "requires at least 4 points");
        for (int i = 0; i < points; ++i) {
            vg.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1)));
        }
    }
    const CountingFit fit = fit_counting_exponent(symbol, vg);

    std::string csv = "v,count\n";
    for (std::size_t i = 0; i < fit.v_values.size(); ++i) {
        csv += csv_number(fit.v_values[i]) + "," + std::to_string(fit.counts[i]) + "\n";
    }
    art.write("counts.csv", csv);

    char detail[160];
    std::snprintf(detail, sizeof(detail), "slope %.6g, prefactor %.6g, residual %.3g", fit.slope,
                  fit.prefactor, fit.residual);
    if (const json* expected = find(cj, "expected_slope")) {
        const double want = as_number(*expected, "count.expected_slope");
        const double tol = opt_number(cj, "count", "slope_tol", 0.05);
        art.verdict("counting-slope", std::abs(fit.slope - want) <= tol,
                    std::string(detail) + detail_max(", |slope - expected| =",
                                                     std::abs(fit.slope - want), tol));
    } else {
        art.verdict("counting-fit", true, detail);
    }
}

void run_predict(const json& cfg, Artifacts& art) {
    const SoninePair pair = parse_kernel(need(cfg, "", "kernel"), "kernel");
    const json& pj = need(cfg, "", "predict");
    const double p = need_number(pj, "predict", "p");
    const double q = need_number(pj, "predict", "q");

    double Q = 0.0, nu = 0.0;
    bool have_Q = false, have_nu = false;
    if (const json* j = find(pj, "Q")) {
        Q = as_number(*j, "predict.Q");
        have_Q = true;
    }
    if (const json* j = find(pj, "nu")) {
        nu = as_number(*j, "predict.nu");
        have_nu = true;
    }
    json group_echo;
    if (const json* oj = find(cfg, "operator")) {
        // Group metadata overrides the flat-lattice homogeneous dimension.
        if (const json* gj = find(*oj, "group")) {
            const std::string name = need_string(*gj, "operator.group", "name");
            GroupMetadata meta;
            if (name == "heisenberg") {
                const int n = need_int(*gj, "operator.group", "n");
                meta = checked("operator.group", [&] { return GroupMetadata::heisenberg(n); });
            } else if (name == "engel") {
                meta = GroupMetadata::engel();
            } else {
                fail("operator.group.name",
                     "unknown group '" + name + "' (expected heisenberg, engel)");
            }
            if (!have_Q) {
                Q = meta.homogeneous_dimension;
                have_Q = true;
            }
            if (!have_nu) fail("predict.nu", "required when a group is named");
            if (std::find(meta.admissible_orders.begin(), meta.admissible_orders.end(), nu) ==
                meta.admissible_orders.end()) {
                fail("predict.nu", "order " + std::to_string(nu) + " is not admissible on " +
                                       meta.name);
            }
            group_echo = {{"name", meta.name},
                          {"homogeneous_dimension", meta.homogeneous_dimension}};
        } else {
            const OperatorSymbol symbol = parse_operator(*oj, "operator");
            if (!have_Q) {
                Q = symbol.homogeneous_dimension();
                have_Q = true;
            }
            if (!have_nu) {
                nu = symbol.nu();
                have_nu = true;
            }
        }
    }
    if (!have_Q || !have_nu) {
        fail("predict", "requires Q and nu (explicitly or via an operator/group)");
    }

    const DecayPrediction pred = predict_decay_rate(p, q, Q, nu, pair);
    json out = {{"p", p},
                {"q", q},
                {"Q", Q},
                {"nu", nu},
                {"exponent", pred.exponent},
                {"pure_power", pred.pure_power},
                {"description", pred.description}};
    if (pred.pure_power) out["t_exponent"] = pred.t_exponent;
    if (!group_echo.is_null()) out["group"] = group_echo;
    art.write("prediction.json", out.dump(2) + "\n");

    art.verdict("prediction", true, pred.description);
}

}  // namespace

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

RunOutcome run(json config, const std::string& out_dir_override, int threads) {
    const auto t0 = std::chrono::steady_clock::now();
    RunOutcome outcome;
    Artifacts art;
    std::string command;

    try {
        if (!out_dir_override.empty()) config["output"]["dir"] = out_dir_override;
        if (threads > 0) {
#ifdef _OPENMP
            omp_set_num_threads(threads);
#endif
        }

        command = need_string(config, "", "command");
        const json& output = need(config, "", "output");
        art.dir = need_string(output, "output", "dir");
        std::filesystem::create_directories(art.dir);

        if (command == "kernel-verify") {
            run_kernel_verify(config, art);
        } else if (command == "relax") {
            run_relax(config, art);
        } else if (command == "resolvent") {
            run_resolvent(config, art);
        } else if (command == "evolve") {
            run_evolve(config, art);
        } else if (command == "decay-fit") {
            run_decay_fit(config, art);
        } else if (command == "count") {
            run_count(config, art);
        } else if (command == "predict") {
            run_predict(config, art);
        } else {
            fail("command", "unknown command '" + command + "'");
        }

        outcome.exit_code = art.all_pass() ? 0 : 1;
        std::string failed;
        for (const auto& v : art.verdicts) {
            if (!v.pass) failed += (failed.empty() ? "" : ", ") + v.name;
        }
        outcome.message = outcome.exit_code == 0
                              ? command + ": all checks pass"
                              : command + ": failed checks: " + failed;
    } catch (const ConfigError& e) {
        outcome.exit_code = 2;
        outcome.message = "config error at " + (e.path.empty() ? "<root>" : e.path) + ": " +
                          e.message;
    } catch (const json::exception& e) {
        outcome.exit_code = 2;
        outcome.message = std::string("config error: ") + e.what();
    } catch (const std::exception& e) {
        outcome.exit_code = 1;
        outcome.message = std::string("numerical failure: ") + e.what();
    }

    // Manifest (best effort: the output directory may not exist on config errors).
    const double wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (!art.dir.empty()) {
        json verdicts = json::array();
        for (const auto& v : art.verdicts) {
            verdicts.push_back({{"name", v.name}, {"pass", v.pass}, {"detail", v.detail}});
        }
        const json manifest = {{"command", command},
                               {"version", kVersion},
                               {"config", config},
                               {"wall_ms", wall_ms},
                               {"verdicts", verdicts},
                               {"outputs", art.outputs},
                               {"exit_code", outcome.exit_code},
                               {"message", outcome.message}};
        std::error_code ec;
        std::filesystem::create_directories(art.dir, ec);
        if (!ec) {
            std::ofstream out(art.dir / "run.json", std::ios::binary);
            if (out) out << manifest.dump(2) << "\n";
        }
    }
    return outcome;
}

}  // namespace sonine::cli
