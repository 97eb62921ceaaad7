#pragma once

// Normal-incidence layered dielectric stacks: transfer matrices, mode
// dispersion functions, argument-principle pole counting in the upper half
// plane, and a Kramers-Kronig check of the Lorentz susceptibility.
//
// Field vector (E, dE/dx); each layer maps it by
//   [[cos qd, sin(qd)/q], [-q sin qd, cos qd]],  q = omega sqrt(eps(omega)).
// Every entry is an even function of q, so no square-root branch enters.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spt/detail/parallel.hpp"
#include "spt/errors.hpp"
#include "spt/model.hpp"

namespace spt {

struct Material {
    enum class Kind { Vacuum, Lorentz, ConstantEps };
    Kind kind = Kind::Vacuum;
    LorentzModel lorentz{};
    double eps = 1.0;

    static Material vacuum() { return {}; }
    static Material constant(double e) { return {Kind::ConstantEps, {}, e}; }
    static Material lorentz_medium(LorentzModel m) { return {Kind::Lorentz, m, 1.0}; }

    void validate() const {
        if (kind == Kind::Lorentz) lorentz.validate();
        if (kind == Kind::ConstantEps && (!std::isfinite(eps) || eps == 0.0))
            throw DomainError("constant permittivity must be finite and non-zero");
    }

    cplx epsilon(cplx omega) const {
        switch (kind) {
            case Kind::Vacuum: return 1.0;
            case Kind::ConstantEps: return eps;
            case Kind::Lorentz: return lorentz_epsilon(lorentz, omega);
        }
        return 1.0;
    }
};

struct Layer {
    double thickness = 1.0;
    Material material{};
};

enum class Boundary { Open, PerfectMirrors };

struct LayerStack {
    std::vector<Layer> layers;
    Boundary boundary = Boundary::PerfectMirrors;

    void validate() const {
        if (layers.empty()) throw DomainError("a stack needs at least one layer");
        for (const auto& l : layers) {
            if (!(l.thickness > 0.0) || !std::isfinite(l.thickness))
                throw DomainError("layer thickness must be positive and finite");
            l.material.validate();
        }
    }

    double length() const {
        double s = 0.0;
        for (const auto& l : layers) s += l.thickness;
        return s;
    }
};

/// value = mantissa * exp(log_scale). Lets the contour code follow the phase
/// of dispersion functions whose modulus overflows near lossless resonances.
struct ScaledComplex {
    cplx mantissa{0.0, 0.0};
    double log_scale = 0.0;

    cplx value() const { return mantissa * std::exp(log_scale); }
    double log_abs() const {
        const double a = std::abs(mantissa);
        return a == 0.0 ? -std::numeric_limits<double>::infinity() : std::log(a) + log_scale;
    }
    double phase() const { return std::arg(mantissa); }
};

namespace detail {

// Layer matrix times exp(-|Im qd|), together with that exponent.
inline std::pair<Eigen::Matrix2cd, double> scaled_layer(cplx q, double d) {
    const cplx z = q * d;
    const double t = std::abs(z.imag());
    const cplx i(0.0, 1.0);
    const cplx ep = std::exp(i * z - t);  // e^{iz} e^{-t}
    const cplx em = std::exp(-i * z - t); // e^{-iz} e^{-t}
    const cplx c = 0.5 * (ep + em);
    const cplx s = (ep - em) / (2.0 * i); // sin z e^{-t}
    cplx sinc;                            // sin(z)/z e^{-t}
    if (std::abs(z) < 1e-4) {
        const cplx z2 = z * z;
        sinc = (1.0 - z2 / 6.0 + z2 * z2 / 120.0) * std::exp(-t);
    } else {
        sinc = s / z;
    }
    Eigen::Matrix2cd m;
    m << c, d * sinc, -q * s, c;
    return {m, t};
}

inline std::pair<Eigen::Matrix2cd, double> scaled_transfer(const LayerStack& stack, cplx omega) {
    Eigen::Matrix2cd total = Eigen::Matrix2cd::Identity();
    double log_scale = 0.0;
    for (const auto& layer : stack.layers) {
        const cplx q = omega * std::sqrt(layer.material.epsilon(omega));
        auto [m, t] = scaled_layer(q, layer.thickness);
        total = m * total;
        log_scale += t;
        const double norm = total.cwiseAbs().maxCoeff();
        if (norm > 0.0 && std::isfinite(norm)) {
            total /= norm;
            log_scale += std::log(norm);
        }
    }
    return {total, log_scale};
}

} // namespace detail

inline Eigen::Matrix2cd transfer_matrix(const LayerStack& stack, cplx omega) {
    stack.validate();
    auto [m, s] = detail::scaled_transfer(stack, omega);
    return m * std::exp(s);
}

/// Mode condition of the stack. PerfectMirrors: E = 0 at both walls, D = M01.
/// Open: vacuum half-spaces with outgoing waves on both sides,
/// D = M10 - i q0 (M00 + M11) - q0^2 M01 with q0 = omega.
inline ScaledComplex dispersion_scaled(const LayerStack& stack, cplx omega) {
    auto [m, s] = detail::scaled_transfer(stack, omega);
    if (stack.boundary == Boundary::PerfectMirrors) return {m(0, 1), s};
    const cplx i(0.0, 1.0);
    const cplx q0 = omega;
    return {m(1, 0) - i * q0 * (m(0, 0) + m(1, 1)) - q0 * q0 * m(0, 1), s};
}

inline cplx dispersion(const LayerStack& stack, cplx omega) {
    stack.validate();
    return dispersion_scaled(stack, omega).value();
}

/// Analytic function of omega whose zeros are the modes under study.
struct DispersionFunction {
    std::function<ScaledComplex(cplx)> eval;

    static DispersionFunction of(const LayerStack& stack) {
        stack.validate();
        return {[stack](cplx w) { return dispersion_scaled(stack, w); }};
    }
    static DispersionFunction plain(std::function<cplx(cplx)> f) {
        return {[f = std::move(f)](cplx w) { return ScaledComplex{f(w), 0.0}; }};
    }
    cplx operator()(cplx w) const { return eval(w).value(); }
};

/// Homogeneous medium at fixed wavenumber k: D = eps(omega) omega^2 - k^2.
inline DispersionFunction bulk_dispersion(const LorentzModel& m, double k) {
    m.validate();
    return DispersionFunction::plain([m, k](cplx w) { return lorentz_epsilon(m, w) * w * w - k * k; });
}

/// Product of independent blocks; zeros of each block are zeros of the product.
inline DispersionFunction product(std::vector<DispersionFunction> blocks) {
    return {[blocks = std::move(blocks)](cplx w) {
        ScaledComplex r{1.0, 0.0};
        for (const auto& b : blocks) {
            const auto v = b.eval(w);
            r.mantissa *= v.mantissa;
            r.log_scale += v.log_scale;
        }
        return r;
    }};
}

// ---------------------------------------------------------------------------
// Argument principle

inline constexpr double default_contour_floor = 1e-6;

struct Region {
    double re_min = 0.0;
    double re_max = 1.0;
    double im_min = default_contour_floor;
    double im_max = 1.0;

    void validate(double floor = default_contour_floor) const {
        if (!(re_max > re_min) || !(im_max > im_min)) throw DomainError("region must have positive extent");
        if (!(im_min >= floor)) throw DomainError("region must lie in the upper half plane above the contour floor");
        if (!std::isfinite(re_min) || !std::isfinite(re_max) || !std::isfinite(im_max))
            throw DomainError("region must be finite");
    }
    cplx center() const { return {0.5 * (re_min + re_max), 0.5 * (im_min + im_max)}; }
    double diameter() const { return std::hypot(re_max - re_min, im_max - im_min); }
    bool contains(cplx w) const {
        return w.real() >= re_min && w.real() <= re_max && w.imag() >= im_min && w.imag() <= im_max;
    }
};

struct WindingOptions {
    double floor = default_contour_floor;
    double zero_threshold = 1e-12; // |D| below this on the contour counts as a contour zero
    int samples_per_edge = 64;
    int max_depth = 48;
    int retries = 5;
    unsigned threads = 1;
};

namespace detail {

struct ContourHit {}; // contour touched a zero or a singularity

inline double phase_step(double from, double to) {
    double d = to - from;
    while (d > M_PI) d -= 2.0 * M_PI;
    while (d <= -M_PI) d += 2.0 * M_PI;
    return d;
}

inline ScaledComplex sample(const DispersionFunction& f, cplx w, const WindingOptions& opt) {
    ScaledComplex v;
    try {
        v = f.eval(w);
    } catch (const PoleError&) {
        throw ContourHit{};
    }
    if (!std::isfinite(v.mantissa.real()) || !std::isfinite(v.mantissa.imag()) || !std::isfinite(v.log_scale))
        throw ContourHit{};
    if (v.log_abs() < std::log(opt.zero_threshold)) throw ContourHit{};
    return v;
}

// Accumulated phase change of f along the segment [a, b]. Every accepted
// step keeps the phase change, and the bound |D'/D| * step on the change of
// log D at the step's ends and midpoint, below pi/4. The log-derivative bound
// shrinks steps near zeros lying just off the contour, which a phase-only
// test would step over.
inline double edge_phase(const DispersionFunction& f, cplx a, cplx b, const WindingOptions& opt) {
    struct Node {
        double t;
        double phase;
        double rate; // |d log D / dt|
    };
    const cplx dir = b - a;
    auto node = [&](double t) {
        const cplx z = a + t * dir;
        const ScaledComplex v = sample(f, z, opt);
        const cplx eps = 1e-8 * std::max(1.0, std::abs(z)) * dir / std::abs(dir);
        auto ratio = [&](const ScaledComplex& u) { return u.mantissa / v.mantissa * std::exp(u.log_scale - v.log_scale); };
        cplx plus, minus;
        try {
            plus = ratio(f.eval(z + eps));
            minus = ratio(f.eval(z - eps));
        } catch (const PoleError&) {
            throw ContourHit{};
        }
        const double rate = std::abs((plus - minus) / (2.0 * eps)) * std::abs(dir);
        if (!std::isfinite(rate)) throw ContourHit{};
        return Node{t, v.phase(), rate};
    };

    std::vector<Node> pts;
    pts.reserve(static_cast<std::size_t>(opt.samples_per_edge) + 1);
    for (int k = 0; k <= opt.samples_per_edge; ++k) pts.push_back(node(static_cast<double>(k) / opt.samples_per_edge));

    const double limit = 0.25 * M_PI;
    double total = 0.0;
    std::function<void(const Node&, const Node&, int)> walk = [&](const Node& lo, const Node& hi, int depth) {
        const double dt = hi.t - lo.t;
        const double step = phase_step(lo.phase, hi.phase);
        const Node mid = node(0.5 * (lo.t + hi.t));
        const double left = phase_step(lo.phase, mid.phase);
        const double right = phase_step(mid.phase, hi.phase);
        const double bound = std::max({lo.rate, mid.rate, hi.rate}) * dt;
        if (bound < limit && std::abs(step) < limit && std::abs(left + right - step) < 1e-9) {
            total += step;
            return;
        }
        if (depth >= opt.max_depth) throw ContourHit{}; // unresolvable: treat like a zero on the contour
        walk(lo, mid, depth + 1);
        walk(mid, hi, depth + 1);
    };
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) walk(pts[k], pts[k + 1], 0);
    return total;
}

inline int winding_once(const DispersionFunction& f, const Region& r, const WindingOptions& opt) {
    const std::array<cplx, 4> corner = {cplx(r.re_min, r.im_min), cplx(r.re_max, r.im_min), cplx(r.re_max, r.im_max),
                                        cplx(r.re_min, r.im_max)};
    const auto phases = parallel_map(4, opt.threads, [&](std::size_t e) -> std::optional<double> {
        try {
            return edge_phase(f, corner[e], corner[(e + 1) % 4], opt);
        } catch (const ContourHit&) {
            return std::nullopt;
        }
    });
    double total = 0.0;
    for (const auto& p : phases) {
        if (!p) throw ContourHit{};
        total += *p;
    }
    const double turns = total / (2.0 * M_PI);
    const double rounded = std::round(turns);
    if (std::abs(turns - rounded) > 1e-3) throw ContourHit{};
    return static_cast<int>(rounded);
}

// Retry geometry: outer edges move out, the floor edge moves up.
inline Region perturbed(const Region& r, int attempt) {
    if (attempt == 0) return r;
    const double step = 1e-3 * attempt * 0.6180339887498949;
    const double w = r.re_max - r.re_min;
    const double h = r.im_max - r.im_min;
    Region p = r;
    p.re_min -= step * w;
    p.re_max += 1.3 * step * w;
    p.im_max += 0.7 * step * h;
    p.im_min += 0.1 * step * h;
    return p;
}

} // namespace detail

struct WindingResult {
    int winding = 0;
    Region region; // the rectangle actually integrated over (after retries)
    int attempts = 1;
};

inline WindingResult winding_details(const DispersionFunction& f, const Region& region, WindingOptions opt = {}) {
    region.validate(opt.floor);
    for (int attempt = 0; attempt <= opt.retries; ++attempt) {
        const Region r = detail::perturbed(region, attempt);
        try {
            return {detail::winding_once(f, r, opt), r, attempt + 1};
        } catch (const detail::ContourHit&) {
        }
    }
    throw ContourError("dispersion function vanishes or is singular on the contour after " +
                       std::to_string(opt.retries) + " retries");
}

/// Number of zeros minus poles of f inside the region (argument principle).
inline int winding_count(const DispersionFunction& f, const Region& region, WindingOptions opt = {}) {
    return winding_details(f, region, opt).winding;
}

// ---------------------------------------------------------------------------
// Pole location

struct Pole {
    cplx omega;
    int multiplicity = 1;
    double abs_D = 0.0;
    bool refined = false;
};

struct PoleCensus {
    Region region;
    int winding = 0;
    std::vector<Pole> poles;
};

struct LocateOptions {
    WindingOptions winding{};
    double residual = 1e-9;
    int newton_iterations = 100;
    int max_depth = 24;
};

namespace detail {

inline std::optional<cplx> newton(const DispersionFunction& f, cplx w, const Region& cell, const LocateOptions& opt) {
    const double slack = 0.05 * cell.diameter();
    for (int it = 0; it < opt.newton_iterations; ++it) {
        const cplx v = f(w);
        if (std::abs(v) < opt.residual * 1e-3) return w;
        const double h = 1e-7 * std::max(1.0, std::abs(w));
        const cplx dv = (f(w + h) - f(w - h)) / (2.0 * h);
        if (dv == cplx(0.0, 0.0) || !std::isfinite(std::abs(dv))) return std::nullopt;
        const cplx step = v / dv;
        w -= step;
        if (!std::isfinite(std::abs(w))) return std::nullopt;
        if (w.real() < cell.re_min - slack || w.real() > cell.re_max + slack || w.imag() < cell.im_min - slack ||
            w.imag() > cell.im_max + slack)
            return std::nullopt;
        if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(w))) break;
    }
    if (std::abs(f(w)) < opt.residual) return w;
    return std::nullopt;
}

inline std::array<Region, 4> quarters(const Region& r, double fx, double fy) {
    const double xm = r.re_min + fx * (r.re_max - r.re_min);
    const double ym = r.im_min + fy * (r.im_max - r.im_min);
    return {Region{r.re_min, xm, r.im_min, ym}, Region{xm, r.re_max, r.im_min, ym}, Region{r.re_min, xm, ym, r.im_max},
            Region{xm, r.re_max, ym, r.im_max}};
}

inline void locate(const DispersionFunction& f, const Region& cell, int winding, int depth, const LocateOptions& opt,
                   std::vector<Pole>& out) {
    if (winding <= 0) return;
    if (winding == 1) {
        if (auto w = newton(f, cell.center(), cell, opt)) {
            out.push_back({*w, 1, std::abs(f(*w)), true});
            return;
        }
    }
    if (depth >= opt.max_depth) {
        out.push_back({cell.center(), winding, std::abs(f(cell.center())), false});
        return;
    }
    // Slightly off-centre splits; other fractions if a split line hits a zero.
    static constexpr std::array<std::pair<double, double>, 4> splits = {
        {{0.5123, 0.4871}, {0.4377, 0.5619}, {0.6011, 0.3907}, {0.3313, 0.6661}}};
    WindingOptions strict = opt.winding;
    strict.retries = 0; // sub-cells must tile the parent exactly
    for (const auto& [fx, fy] : splits) {
        const auto q = quarters(cell, fx, fy);
        std::array<int, 4> w{};
        try {
            for (int k = 0; k < 4; ++k) w[static_cast<std::size_t>(k)] = winding_count(f, q[static_cast<std::size_t>(k)], strict);
        } catch (const ContourError&) {
            continue;
        }
        if (w[0] + w[1] + w[2] + w[3] != winding) continue;
        for (int k = 0; k < 4; ++k) locate(f, q[static_cast<std::size_t>(k)], w[static_cast<std::size_t>(k)], depth + 1, opt, out);
        return;
    }
    out.push_back({cell.center(), winding, std::abs(f(cell.center())), false});
}

} // namespace detail

/// Winding number of the region plus refined zero locations. Unrefined cells
/// are reported with refined = false; multiplicities always sum to winding.
inline PoleCensus locate_poles(const DispersionFunction& f, const Region& region, LocateOptions opt = {}) {
    const auto w = winding_details(f, region, opt.winding);
    PoleCensus census{w.region, w.winding, {}};
    WindingOptions inner = opt.winding;
    inner.floor = std::min(opt.winding.floor, w.region.im_min);
    opt.winding = inner;
    detail::locate(f, w.region, w.winding, 0, opt, census.poles);
    std::sort(census.poles.begin(), census.poles.end(), [](const Pole& a, const Pole& b) {
        return a.omega.imag() != b.omega.imag() ? a.omega.imag() < b.omega.imag() : a.omega.real() < b.omega.real();
    });
    return census;
}

// ---------------------------------------------------------------------------
// Real axis

struct AxisSample {
    double omega;
    cplx value;
};

/// Values of D on a uniform real-frequency grid; samples at material poles
/// are skipped.
inline std::vector<AxisSample> real_axis_scan(const DispersionFunction& f, double lo, double hi, int samples) {
    if (!(hi > lo) || samples < 2) throw DomainError("real-axis scan needs hi > lo and at least two samples");
    std::vector<AxisSample> out;
    out.reserve(static_cast<std::size_t>(samples));
    for (int k = 0; k < samples; ++k) {
        const double w = lo + (hi - lo) * k / (samples - 1);
        try {
            out.push_back({w, f(w)});
        } catch (const PoleError&) {
        }
    }
    return out;
}

/// Real zeros of a function that is real on the real axis (lossless mirrored
/// stacks): sign changes of Re D, bisected, keeping those where D vanishes
/// (sign changes across a material pole are discarded).
inline std::vector<double> real_axis_roots(const DispersionFunction& f, double lo, double hi, int samples) {
    const auto scan = real_axis_scan(f, lo, hi, samples);
    std::vector<double> roots;
    for (std::size_t k = 0; k + 1 < scan.size(); ++k) {
        double a = scan[k].omega, b = scan[k + 1].omega;
        double fa = scan[k].value.real(), fb = scan[k + 1].value.real();
        if (fa == 0.0) {
            roots.push_back(a);
            continue;
        }
        if ((fa < 0.0) == (fb < 0.0)) continue;
        const double bound = std::max(std::abs(fa), std::abs(fb));
        try {
            for (int it = 0; it < 200 && b - a > 4e-16 * std::max(1.0, std::abs(a)); ++it) {
                const double m = 0.5 * (a + b);
                const double fm = f(m).real();
                if ((fm < 0.0) == (fa < 0.0)) {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
        } catch (const PoleError&) {
            continue;
        }
        const double root = 0.5 * (a + b);
        if (std::abs(f(root)) <= bound) roots.push_back(root);
    }
    return roots;
}

// ---------------------------------------------------------------------------
// Kramers-Kronig

/// max_i |Re chi(w_i) - (2/pi) PV int w' Im chi(w') / (w'^2 - w_i^2) dw'| / max|chi|
/// over the interior nodes of a uniform grid starting at 0. The principal
/// value uses the trapezoid rule with the singular node excluded and replaced
/// by its regularized limit h d/dw' [w' Im chi(w') / (w' + w_i)].
inline double kk_residual(const LorentzModel& m, const std::vector<double>& grid) {
    m.validate();
    if (!(m.gamma > 0.0)) throw DomainError("Kramers-Kronig check needs gamma > 0 (Im chi is distributional at gamma = 0)");
    const std::size_t n = grid.size();
    if (n < 4) throw DomainError("Kramers-Kronig grid needs at least four points");
    const double h = (grid.back() - grid.front()) / static_cast<double>(n - 1);
    if (grid.front() != 0.0 || !(h > 0.0)) throw DomainError("Kramers-Kronig grid must start at 0 and increase");
    for (std::size_t k = 0; k < n; ++k)
        if (std::abs(grid[k] - k * h) > 1e-9 * h) throw DomainError("Kramers-Kronig grid must be uniform");

    std::vector<cplx> chi(n);
    double chi_max = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        chi[k] = lorentz_chi(m, grid[k]);
        chi_max = std::max(chi_max, std::abs(chi[k]));
    }
    if (chi_max == 0.0) return 0.0;

    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double w = grid[i];
        auto g = [&](std::size_t k) { return grid[k] * chi[k].imag() / (grid[k] + w); };
        double sum = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            if (k == i) continue;
            const double weight = (k == 0 || k == n - 1) ? 0.5 : 1.0;
            sum += weight * g(k) / (grid[k] - w);
        }
        sum *= h;
        sum += h * (g(i + 1) - g(i - 1)) / (2.0 * h);
        const double kk = 2.0 / M_PI * sum;
        worst = std::max(worst, std::abs(chi[i].real() - kk));
    }
    return worst / chi_max;
}

inline std::vector<double> uniform_grid(double omega_max, std::size_t points) {
    if (points < 2 || !(omega_max > 0.0)) throw DomainError("grid needs omega_max > 0 and at least two points");
    std::vector<double> g(points);
    for (std::size_t k = 0; k < points; ++k) g[k] = omega_max * static_cast<double>(k) / static_cast<double>(points - 1);
    return g;
}

} // namespace spt
