#pragma once

// Batch front-end: JSON config in, CSV artifact plus one summary line out.
//
//   spt <command> --config <path|-> [--output <path>] [--threads N] [--seed S]
//
// Exit codes: 0 ok, 2 config parse, 3 physics range, 4 computation.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spt/detail/parallel.hpp"
#include "spt/dicke.hpp"
#include "spt/errors.hpp"
#include "spt/fields.hpp"
#include "spt/green.hpp"
#include "spt/quadratic.hpp"

namespace spt::cli {

using json = nlohmann::json;

inline constexpr int exit_ok = 0;
inline constexpr int exit_parse = 2;
inline constexpr int exit_range = 3;
inline constexpr int exit_compute = 4;

inline const std::vector<std::string>& commands() {
    static const std::vector<std::string> c = {"polariton-sweep", "gauge-check", "dicke-sweep", "projection-check",
                                               "green-poles"};
    return c;
}

/// Failure carrying its process exit code.
class Failure : public std::runtime_error {
public:
    Failure(int code, const std::string& what) : std::runtime_error(what), exit_code(code) {}
    int exit_code;
};

struct RunConfig {
    std::string command;
    json parameters = json::object();
    std::optional<std::string> output_path;
    std::uint64_t seed = 42;
    unsigned threads = detail::default_thread_count();
};

// ---------------------------------------------------------------------------
// Parameter access with strict key checking

class Params {
public:
    Params(const json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
        if (!obj_.is_object()) fail(where_ + ": expected an object");
    }

    double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
        const json* v = get(key, fallback.has_value());
        if (!v) return *fallback;
        if (!v->is_number()) fail(path(key) + ": expected a number");
        return v->get<double>();
    }

    long integer(const std::string& key, std::optional<long> fallback = std::nullopt) {
        const json* v = get(key, fallback.has_value());
        if (!v) return *fallback;
        if (!v->is_number_integer()) fail(path(key) + ": expected an integer");
        return v->get<long>();
    }

    bool boolean(const std::string& key, std::optional<bool> fallback = std::nullopt) {
        const json* v = get(key, fallback.has_value());
        if (!v) return *fallback;
        if (!v->is_boolean()) fail(path(key) + ": expected true or false");
        return v->get<bool>();
    }

    std::string choice(const std::string& key, const std::vector<std::string>& allowed,
                       std::optional<std::string> fallback = std::nullopt) {
        const json* v = get(key, fallback.has_value());
        if (!v) return *fallback;
        if (!v->is_string()) fail(path(key) + ": expected a string");
        const auto s = v->get<std::string>();
        if (std::find(allowed.begin(), allowed.end(), s) == allowed.end()) {
            std::string list;
            for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
            fail(path(key) + ": unknown value \"" + s + "\" (expected one of " + list + ")");
        }
        return s;
    }

    std::optional<std::string> optional_string(const std::string& key) {
        const json* v = get(key, true);
        if (!v) return std::nullopt;
        if (!v->is_string()) fail(path(key) + ": expected a string");
        return v->get<std::string>();
    }

    const json* raw(const std::string& key, bool optional) { return get(key, optional); }
    bool has(const std::string& key) const { return obj_.contains(key); }
    std::string path(const std::string& key) const { return where_ + "." + key; }

    /// Rejects every key that was never asked for.
    void finish() const {
        for (auto it = obj_.begin(); it != obj_.end(); ++it)
            if (!seen_.count(it.key())) fail(path(it.key()) + ": unknown key");
    }

    [[noreturn]] static void fail(const std::string& msg) { throw Failure(exit_parse, "config error: " + msg); }

private:
    const json* get(const std::string& key, bool optional) {
        seen_.insert(key);
        if (!obj_.contains(key)) {
            if (optional) return nullptr;
            fail(path(key) + ": required key missing");
        }
        return &obj_.at(key);
    }

    const json& obj_;
    std::string where_;
    std::set<std::string> seen_;
};

// ---------------------------------------------------------------------------
// Formatting

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string row(std::initializer_list<std::string> cells) {
    std::string s;
    for (const auto& c : cells) s += (s.empty() ? "" : ",") + c;
    return s + "\n";
}

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit draw; unlike
/// the standard distributions this is identical across standard libraries.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// ---------------------------------------------------------------------------
// Per-command settings, validated at parse time

struct LambdaGrid {
    double lo = 0.0;
    double hi = 2.0;
    long steps = 100;
    std::vector<double> points() const {
        std::vector<double> p(static_cast<std::size_t>(steps) + 1);
        for (long k = 0; k <= steps; ++k) p[static_cast<std::size_t>(k)] = steps == 0 ? lo : lo + (hi - lo) * k / steps;
        return p;
    }
};

inline LambdaGrid read_grid(Params& p, const std::string& lo_key, const std::string& hi_key, double lo, double hi,
                            long steps) {
    LambdaGrid g{p.number(lo_key, lo), p.number(hi_key, hi), p.integer("steps", steps)};
    if (g.steps < 0 || g.steps > 1000000) throw DomainError(p.path("steps") + " must lie in [0, 1e6]");
    if (!(g.hi >= g.lo) || !std::isfinite(g.lo) || !std::isfinite(g.hi))
        throw DomainError(p.path(hi_key) + " must be finite and >= " + lo_key);
    return g;
}

inline Gauge parse_gauge(const std::string& s) {
    if (s == "coulomb") return Gauge::Coulomb;
    if (s == "dipole") return Gauge::Dipole;
    return Gauge::Longitudinal;
}

inline std::size_t dicke_dimension_guard() {
    if (const char* env = std::getenv("SPT_MAX_DIM")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end == env || *end != '\0' || v == 0)
            throw Failure(exit_parse, std::string("config error: SPT_MAX_DIM must be a positive integer, got \"") + env + "\"");
        return static_cast<std::size_t>(v);
    }
    return default_max_dimension;
}

/// Damping defaults to 1e-3 omega0 so real-axis evaluation stays finite.
inline LorentzModel read_lorentz(Params& p) {
    LorentzModel m;
    m.strength = p.number("strength");
    m.omega0 = p.number("omega0");
    m.gamma = p.number("gamma", 1e-3 * m.omega0);
    return m;
}

inline Material parse_material(const json& j, const std::string& where) {
    if (j.is_string()) {
        if (j.get<std::string>() == "vacuum") return Material::vacuum();
        Params::fail(where + ": unknown material \"" + j.get<std::string>() + "\"");
    }
    Params p(j, where);
    if (p.has("constant")) {
        const double eps = p.number("constant");
        p.finish();
        return Material::constant(eps);
    }
    const json* l = p.raw("lorentz", false);
    p.finish();
    Params q(*l, where + ".lorentz");
    const LorentzModel m = read_lorentz(q);
    q.finish();
    return Material::lorentz_medium(m);
}

struct GreenSetup {
    DispersionFunction function;
    Region region;
};

inline GreenSetup parse_green(Params& p) {
    const json* stack_j = p.raw("layers", true);
    const json* bulk_j = p.raw("bulk", true);
    const std::string boundary = p.choice("boundary", {"mirrors", "open"}, "mirrors");
    const json* region_j = p.raw("region", false);
    if ((stack_j != nullptr) == (bulk_j != nullptr)) Params::fail(p.path("layers") + ": give exactly one of layers or bulk");

    if (!region_j->is_array() || region_j->size() != 4)
        Params::fail(p.path("region") + ": expected [re_min, re_max, im_min, im_max]");
    for (const auto& v : *region_j)
        if (!v.is_number()) Params::fail(p.path("region") + ": expected numbers");
    Region region{(*region_j)[0].get<double>(), (*region_j)[1].get<double>(), (*region_j)[2].get<double>(),
                  (*region_j)[3].get<double>()};
    region.validate();

    if (stack_j) {
        if (!stack_j->is_array()) Params::fail(p.path("layers") + ": expected an array");
        LayerStack stack;
        stack.boundary = boundary == "open" ? Boundary::Open : Boundary::PerfectMirrors;
        for (std::size_t k = 0; k < stack_j->size(); ++k) {
            const std::string where = p.path("layers") + "[" + std::to_string(k) + "]";
            Params lp((*stack_j)[k], where);
            const double thickness = lp.number("thickness");
            const json* mat = lp.raw("material", false);
            lp.finish();
            stack.layers.push_back({thickness, parse_material(*mat, where + ".material")});
        }
        stack.validate();
        return {DispersionFunction::of(stack), region};
    }

    Params bp(*bulk_j, p.path("bulk"));
    const LorentzModel m = read_lorentz(bp);
    const json* k_j = bp.raw("k", false);
    bp.finish();
    m.validate();
    std::vector<double> ks;
    if (k_j->is_number()) ks.push_back(k_j->get<double>());
    else if (k_j->is_array() && !k_j->empty()) {
        for (const auto& v : *k_j) {
            if (!v.is_number()) Params::fail(bp.path("k") + ": expected numbers");
            ks.push_back(v.get<double>());
        }
    } else {
        Params::fail(bp.path("k") + ": expected a number or a non-empty array");
    }
    std::vector<DispersionFunction> blocks;
    for (double k : ks) {
        if (!(k >= 0.0) || !std::isfinite(k)) throw DomainError(bp.path("k") + " must be non-negative");
        blocks.push_back(bulk_dispersion(m, k));
    }
    return {blocks.size() == 1 ? blocks[0] : product(blocks), region};
}

// ---------------------------------------------------------------------------
// Parsing

inline std::string locate_byte(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t k = 0; k < std::min(byte, text.size()); ++k) {
        if (text[k] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

/// Validates command-specific parameters by running the same reader that
/// execute() uses, without computing anything.
inline void validate_parameters(const RunConfig& cfg);

inline RunConfig parse_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Failure(exit_parse, "config error: malformed JSON at " + locate_byte(text, e.byte > 0 ? e.byte - 1 : 0) +
                                      ": " + e.what());
    }
    Params top(doc, "config");
    RunConfig cfg;
    cfg.command = top.choice("command", commands());
    if (const json* p = top.raw("parameters", true)) {
        if (!p->is_object()) Params::fail("config.parameters: expected an object");
        cfg.parameters = *p;
    }
    cfg.output_path = top.optional_string("output");
    if (const json* s = top.raw("seed", true)) {
        if (!s->is_number_unsigned()) Params::fail("config.seed: expected a non-negative integer");
        cfg.seed = s->get<std::uint64_t>();
    }
    top.finish();
    validate_parameters(cfg);
    return cfg;
}

// ---------------------------------------------------------------------------
// Commands

struct RunResult {
    std::string csv;
    std::string summary;
};

namespace detail_cmd {

struct Mode {
    double re, im;
};

inline RunResult polariton_sweep(const RunConfig& cfg, bool dry) {
    Params p(cfg.parameters, "parameters");
    ModeParams base{p.number("omega_a", 1.0), p.number("omega_c", 1.0), 0.0};
    const Gauge gauge = parse_gauge(p.choice("gauge", {"coulomb", "dipole", "longitudinal"}, "coulomb"));
    const TermFlags flags{p.boolean("quadratic_term", true)};
    const auto grid = read_grid(p, "lambda_min", "lambda_max", 0.0, 2.0, 100);
    p.finish();
    base.lam = grid.lo;
    base.validate();
    (void)build_quadratic(base, gauge, flags);
    if (dry) return {};

    const auto lams = grid.points();
    const auto reports = spt::detail::parallel_map(lams.size(), cfg.threads, [&](std::size_t k) {
        ModeParams m = base;
        m.lam = lams[k];
        return classify_stability(build_quadratic(m, gauge, flags));
    });
    RunResult r;
    r.csv = row({"lambda", "mode", "re_omega", "im_omega", "stability"});
    std::optional<double> first_unstable;
    for (std::size_t k = 0; k < lams.size(); ++k) {
        const auto& rep = reports[k];
        for (std::size_t m = 0; m < rep.frequencies.size(); ++m)
            r.csv += row({num(lams[k]), std::to_string(m), num(rep.frequencies[m].real()), num(rep.frequencies[m].imag()),
                          to_string(rep.status)});
        if (!first_unstable && rep.status == Stability::Unstable) first_unstable = lams[k];
    }
    r.summary = "polariton-sweep gauge=" + std::string(to_string(gauge)) + " points=" + std::to_string(lams.size()) +
                " first_unstable_lambda=" + (first_unstable ? num(*first_unstable) : std::string("none"));
    return r;
}

inline double relative_gap(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    double worst = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double scale = std::max(std::abs(a[k]), std::abs(b[k]));
        if (scale > 0.0) worst = std::max(worst, std::abs(a[k] - b[k]) / scale);
    }
    return worst;
}

inline RunResult gauge_check(const RunConfig& cfg, bool dry) {
    Params p(cfg.parameters, "parameters");
    ModeParams base{p.number("omega_a", 1.0), p.number("omega_c", 1.0), 0.0};
    const TermFlags flags{p.boolean("quadratic_term", true)};
    const auto grid = read_grid(p, "lambda_min", "lambda_max", 0.0, 2.0, 200);
    p.finish();
    base.lam = grid.lo;
    base.validate();
    if (dry) return {};

    const auto lams = grid.points();
    struct Pair {
        std::vector<cplx> coulomb, dipole;
    };
    const auto spectra = spt::detail::parallel_map(lams.size(), cfg.threads, [&](std::size_t k) {
        ModeParams m = base;
        m.lam = lams[k];
        return Pair{symplectic_spectrum(build_quadratic(m, Gauge::Coulomb, flags)),
                    symplectic_spectrum(build_quadratic(m, Gauge::Dipole, flags))};
    });
    RunResult r;
    r.csv = row({"lambda", "coulomb_lower_re", "coulomb_lower_im", "coulomb_upper_re", "coulomb_upper_im", "dipole_lower_re",
                 "dipole_lower_im", "dipole_upper_re", "dipole_upper_im", "rel_discrepancy"});
    double worst = 0.0;
    for (std::size_t k = 0; k < lams.size(); ++k) {
        const auto& c = spectra[k].coulomb;
        const auto& d = spectra[k].dipole;
        const double gap = relative_gap(c, d);
        worst = std::max(worst, gap);
        r.csv += row({num(lams[k]), num(c[0].real()), num(c[0].imag()), num(c[1].real()), num(c[1].imag()), num(d[0].real()),
                      num(d[0].imag()), num(d[1].real()), num(d[1].imag()), num(gap)});
    }
    r.summary = "max_rel_discrepancy=" + num(worst) + (worst < 1e-9 ? " < 1e-9" : " >= 1e-9");
    return r;
}

inline RunResult dicke_sweep(const RunConfig& cfg, bool dry) {
    Params p(cfg.parameters, "parameters");
    DickeConfig d;
    d.n_atoms = static_cast<int>(p.integer("n_atoms", 8));
    d.omega_a = p.number("omega_a", 1.0);
    d.omega_c = p.number("omega_c", 1.0);
    const auto form = p.choice("coupling_form", {"rotating-wave", "y", "x"}, "y");
    d.coupling_form = form == "rotating-wave" ? CouplingForm::RotatingWave
                    : form == "x"             ? CouplingForm::XCoupling
                                              : CouplingForm::YCoupling;
    const auto quad = p.choice("quad_term", {"none", "A2", "P2"}, "none");
    d.quad_term = quad == "A2" ? QuadTerm::A2 : quad == "P2" ? QuadTerm::P2 : QuadTerm::None;
    const bool fixed = p.has("fock_cutoff");
    d.fock_cutoff = static_cast<int>(p.integer("fock_cutoff", 1));
    d.levels = static_cast<int>(p.integer("levels", 4));
    const auto grid = read_grid(p, "g_min", "g_max", 0.0, 1.0, 20);
    p.finish();
    d.max_dimension = dicke_dimension_guard();
    if (d.n_atoms < 1 || d.n_atoms > 100000) throw DomainError("parameters.n_atoms must lie in [1, 1e5]");
    if (grid.lo < 0.0) throw DomainError("parameters.g_min must be non-negative");
    DickeConfig probe = d;
    probe.g = grid.hi;
    if (!fixed) probe.fock_cutoff = initial_fock_cutoff(probe);
    probe.validate();
    if (dry) return {};

    const auto gs = grid.points();
    const auto rows = sweep_order_parameter(d, gs, {!fixed, cfg.threads});
    RunResult r;
    r.csv = row({"g", "photon_density", "ground_energy_per_atom", "gap", "parity_gap", "field_quadrature", "parity",
                 "fock_cutoff", "converged"});
    int unconverged = 0;
    double best_gap = std::numeric_limits<double>::infinity(), best_g = 0.0;
    for (const auto& w : rows) {
        const auto& s = w.result;
        r.csv += row({num(w.g), num(s.photon_density), num(s.ground_energy_per_atom), num(s.gap), num(s.parity_gap),
                      num(s.field_quadrature), num(s.parity), std::to_string(s.fock_cutoff), s.converged ? "1" : "0"});
        if (!s.converged) ++unconverged;
        if (s.parity_gap < best_gap) {
            best_gap = s.parity_gap;
            best_g = w.g;
        }
    }
    r.summary = "dicke-sweep N=" + std::to_string(d.n_atoms) + " rows=" + std::to_string(rows.size()) +
                " unconverged=" + std::to_string(unconverged) + " parity_gap_min_at_g=" + num(best_g);
    return r;
}

inline RunResult projection_check(const RunConfig& cfg, bool dry) {
    Params p(cfg.parameters, "parameters");
    const GridSpec g{static_cast<int>(p.integer("L", 16)), p.number("spacing", 1.0)};
    const long count = p.integer("fields", 100);
    const auto snapshot = p.optional_string("snapshot_path");
    p.finish();
    g.validate();
    if (count < 1 || count > 100000) throw DomainError("parameters.fields must lie in [1, 1e5]");
    if (dry) return {};

    // Fields are drawn sequentially so that the stream does not depend on
    // the thread count; the decompositions then run in parallel.
    std::mt19937_64 rng(cfg.seed);
    std::vector<VectorField3D> fields;
    fields.reserve(static_cast<std::size_t>(count));
    for (long f = 0; f < count; ++f) {
        VectorField3D v(g);
        for (double& x : v.values) x = 2.0 * unit_uniform(rng) - 1.0;
        fields.push_back(std::move(v));
    }
    if (snapshot) write_field(fields.front(), *snapshot);

    struct Residuals {
        double completeness, orthogonality, parseval;
    };
    const auto res = spt::detail::parallel_map(fields.size(), cfg.threads, [&](std::size_t k) {
        const auto& f = fields[k];
        const auto d = helmholtz_decompose(f);
        const double full = inner_product(f, f);
        return Residuals{(d.transverse + d.longitudinal - f).max_abs(),
                         std::abs(inner_product(d.transverse, d.longitudinal)) / full,
                         std::abs(full - inner_product(d.transverse, d.transverse) -
                                  inner_product(d.longitudinal, d.longitudinal)) /
                             full};
    });
    RunResult r;
    r.csv = row({"field", "completeness_residual", "orthogonality_residual", "parseval_residual"});
    double worst = 0.0;
    for (std::size_t k = 0; k < res.size(); ++k) {
        r.csv += row({std::to_string(k), num(res[k].completeness), num(res[k].orthogonality), num(res[k].parseval)});
        worst = std::max({worst, res[k].completeness, res[k].orthogonality, res[k].parseval});
    }
    r.summary = "projection-check L=" + std::to_string(g.L) + " fields=" + std::to_string(count) +
                " max_residual=" + num(worst) + (worst < 1e-12 ? " < 1e-12" : " >= 1e-12");
    return r;
}

inline RunResult green_poles(const RunConfig& cfg, bool dry) {
    Params p(cfg.parameters, "parameters");
    auto setup = parse_green(p);
    p.finish();
    if (dry) return {};

    LocateOptions opt;
    opt.winding.threads = cfg.threads;
    const auto census = locate_poles(setup.function, setup.region, opt);
    RunResult r;
    r.csv = row({"re_omega", "im_omega", "abs_D", "phase_D"});
    int unrefined = 0;
    for (const auto& pole : census.poles) {
        const cplx v = setup.function(pole.omega);
        for (int m = 0; m < pole.multiplicity; ++m)
            r.csv += row({num(pole.omega.real()), num(pole.omega.imag()), num(std::abs(v)), num(std::arg(v))});
        if (!pole.refined) ++unrefined;
    }
    r.summary = "green-poles winding=" + std::to_string(census.winding) + " poles=" + std::to_string(census.poles.size()) +
                " unrefined=" + std::to_string(unrefined);
    return r;
}

inline RunResult dispatch(const RunConfig& cfg, bool dry) {
    if (cfg.command == "polariton-sweep") return polariton_sweep(cfg, dry);
    if (cfg.command == "gauge-check") return gauge_check(cfg, dry);
    if (cfg.command == "dicke-sweep") return dicke_sweep(cfg, dry);
    if (cfg.command == "projection-check") return projection_check(cfg, dry);
    if (cfg.command == "green-poles") return green_poles(cfg, dry);
    throw Failure(exit_parse, "config error: unknown command " + cfg.command);
}

inline const char* module_of(const std::string& command) {
    if (command == "polariton-sweep" || command == "gauge-check") return "quadratic";
    if (command == "dicke-sweep") return "dicke";
    if (command == "projection-check") return "fields";
    return "green";
}

} // namespace detail_cmd

inline void validate_parameters(const RunConfig& cfg) {
    try {
        (void)detail_cmd::dispatch(cfg, true);
    } catch (const Failure&) {
        throw;
    } catch (const DomainError& e) {
        throw Failure(exit_range, std::string("range error: ") + e.what());
    } catch (const ConfigurationError& e) {
        throw Failure(exit_range, std::string("range error: ") + e.what());
    } catch (const std::exception& e) {
        throw Failure(exit_range, std::string("range error: ") + e.what());
    }
}

/// Runs a validated configuration; module failures become exit code 4.
inline RunResult execute(const RunConfig& cfg) {
    try {
        return detail_cmd::dispatch(cfg, false);
    } catch (const Failure&) {
        throw;
    } catch (const std::exception& e) {
        throw Failure(exit_compute, std::string("computation error [") + detail_cmd::module_of(cfg.command) + "]: " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Entry point

inline int main_entry(int argc, char** argv, std::istream& in = std::cin, std::ostream& out = std::cout,
                      std::ostream& err = std::cerr) {
    CLI::App app{"Stability checks for light-matter Hamiltonians", "spt"};
    std::string command, config_path, output_path;
    unsigned threads = 0;
    std::uint64_t seed = 0;
    app.add_option("command", command, "One of: polariton-sweep, gauge-check, dicke-sweep, projection-check, green-poles")
        ->required();
    app.add_option("--config", config_path, "JSON config file, or - for standard input")->required();
    auto* out_opt = app.add_option("--output", output_path, "CSV destination (default: standard output)");
    auto* threads_opt = app.add_option("--threads", threads, "Worker threads (default: hardware parallelism)")
                            ->check(CLI::PositiveNumber);
    auto* seed_opt = app.add_option("--seed", seed, "Seed for randomized checks (default 42)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_parse;
    }

    try {
        if (std::find(commands().begin(), commands().end(), command) == commands().end())
            throw Failure(exit_parse, "config error: unknown command " + command);
        std::string text;
        if (config_path == "-") {
            std::ostringstream s;
            s << in.rdbuf();
            text = s.str();
        } else {
            std::ifstream f(config_path);
            if (!f) throw Failure(exit_parse, "config error: cannot read " + config_path);
            std::ostringstream s;
            s << f.rdbuf();
            text = s.str();
        }

        RunConfig cfg = parse_config(text);
        if (cfg.command != command)
            throw Failure(exit_parse, "config error: config.command is \"" + cfg.command + "\" but the command line asks for \"" +
                                          command + "\"");
        if (*out_opt) cfg.output_path = output_path;
        if (*threads_opt) cfg.threads = threads;
        if (*seed_opt) cfg.seed = seed;

        const RunResult r = execute(cfg);
        if (cfg.output_path) {
            std::ofstream f(*cfg.output_path, std::ios::binary);
            if (!f) throw Failure(exit_compute, "computation error [cli]: cannot write " + *cfg.output_path);
            f << r.csv;
            if (!f) throw Failure(exit_compute, "computation error [cli]: failed writing " + *cfg.output_path);
            out << r.summary << "\n";
        } else {
            out << r.csv;
            err << r.summary << "\n";
        }
        return exit_ok;
    } catch (const Failure& e) {
        err << e.what() << "\n";
        return e.exit_code;
    }
}

} // namespace spt::cli
