#pragma once

// Finite-N Dicke model in the maximal collective-spin sector j = N/2,
// truncated photon Fock space, optional A^2 or P^2 term.
//
// Basis |n> (x) |j, m = e - N/2>, photon number n in [0, n_max], atomic
// excitations e in [0, N]; flat index n * (N + 1) + e. Photon-major ordering
// keeps every term within a band of half-width 2 (N + 1).

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "spt/detail/band_eigen.hpp"
#include "spt/detail/parallel.hpp"
#include "spt/errors.hpp"
#include "spt/model.hpp"

namespace spt {

enum class CouplingForm {
    RotatingWave, // i g / sqrt(N) sum (a^dag s - s^dag a)
    YCoupling,    // g / sqrt(N) sum s^y (a + a^dag)        (Coulomb gauge)
    XCoupling,    // -i g / sqrt(N) sum s^x (a - a^dag)     (electric-dipole gauge)
};

enum class QuadTerm { None, A2, P2 };

inline const char* to_string(CouplingForm c) {
    switch (c) {
        case CouplingForm::RotatingWave: return "rotating-wave";
        case CouplingForm::YCoupling: return "y";
        case CouplingForm::XCoupling: return "x";
    }
    return "?";
}

inline const char* to_string(QuadTerm q) {
    switch (q) {
        case QuadTerm::None: return "none";
        case QuadTerm::A2: return "A2";
        case QuadTerm::P2: return "P2";
    }
    return "?";
}

inline constexpr std::size_t default_max_dimension = 200000;

struct DickeConfig {
    int n_atoms = 1;
    int fock_cutoff = 10;
    double omega_a = 1.0;
    double omega_c = 1.0;
    double g = 0.0;
    CouplingForm coupling_form = CouplingForm::YCoupling;
    QuadTerm quad_term = QuadTerm::None;
    std::size_t max_dimension = default_max_dimension;
    int levels = 4; // eigenvalues kept per parity sector

    std::size_t dimension() const {
        return static_cast<std::size_t>(n_atoms + 1) * static_cast<std::size_t>(fock_cutoff + 1);
    }

    void validate() const {
        if (n_atoms < 1) throw DomainError("n_atoms must be >= 1");
        if (fock_cutoff < 1) throw DomainError("fock_cutoff must be >= 1");
        if (!(omega_a > 0.0)) throw DomainError("omega_a must be positive");
        if (!(omega_c > 0.0)) throw DomainError("omega_c must be positive");
        if (!(g >= 0.0) || !std::isfinite(g)) throw DomainError("coupling g must be non-negative and finite");
        if (levels < 1) throw DomainError("levels must be >= 1");
        if (dimension() > max_dimension)
            throw ConfigurationError("Dicke dimension " + std::to_string(dimension()) + " exceeds the guard " +
                                     std::to_string(max_dimension));
    }

    std::size_t index(int photons, int excitations) const {
        return static_cast<std::size_t>(photons) * (n_atoms + 1) + excitations;
    }
};

using SparseC = Eigen::SparseMatrix<cplx>;

namespace detail {

// Collective J+ on |e> -> |e + 1> : sqrt((N - e)(e + 1)).
inline Eigen::MatrixXcd raising(int n_atoms) {
    Eigen::MatrixXcd jp = Eigen::MatrixXcd::Zero(n_atoms + 1, n_atoms + 1);
    for (int e = 0; e < n_atoms; ++e) jp(e + 1, e) = std::sqrt(static_cast<double>(n_atoms - e) * (e + 1));
    return jp;
}

// Truncated annihilation operator a |n> = sqrt(n) |n - 1>.
inline Eigen::MatrixXcd annihilation(int cutoff) {
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(cutoff + 1, cutoff + 1);
    for (int n = 1; n <= cutoff; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

// Projection of (a + a^dag)^2 onto the truncated space (not the square of
// the truncated operator), so that ground energies are variational in n_max.
inline Eigen::MatrixXcd projected_position_squared(int cutoff) {
    Eigen::MatrixXcd x2 = Eigen::MatrixXcd::Zero(cutoff + 1, cutoff + 1);
    for (int n = 0; n <= cutoff; ++n) {
        x2(n, n) = 2.0 * n + 1.0;
        if (n + 2 <= cutoff) {
            const double v = std::sqrt((n + 1.0) * (n + 2.0));
            x2(n, n + 2) = v;
            x2(n + 2, n) = v;
        }
    }
    return x2;
}

// photon (x) spin with photon-major flat indexing.
inline void add_kron(std::vector<Eigen::Triplet<cplx>>& out, cplx c, const Eigen::MatrixXcd& photon,
                     const Eigen::MatrixXcd& spin) {
    const auto ns = spin.rows();
    for (Eigen::Index p = 0; p < photon.rows(); ++p)
        for (Eigen::Index q = 0; q < photon.cols(); ++q) {
            const cplx ph = photon(p, q);
            if (ph == cplx(0.0, 0.0)) continue;
            for (Eigen::Index s = 0; s < ns; ++s)
                for (Eigen::Index t = 0; t < ns; ++t) {
                    const cplx sp = spin(s, t);
                    if (sp == cplx(0.0, 0.0)) continue;
                    out.emplace_back(p * ns + s, q * ns + t, c * ph * sp);
                }
        }
}

} // namespace detail

/// Hermitian Hamiltonian matrix (hbar = 1) of dimension (N + 1)(n_max + 1).
inline SparseC build_dicke(const DickeConfig& cfg) {
    cfg.validate();
    const int na = cfg.n_atoms;
    const int nc = cfg.fock_cutoff;
    const double sqrt_n = std::sqrt(static_cast<double>(na));
    const cplx i(0.0, 1.0);

    const Eigen::MatrixXcd jp = detail::raising(na);
    const Eigen::MatrixXcd jm = jp.adjoint();
    const Eigen::MatrixXcd jx2 = (jp + jm) * (jp + jm); // (sum sigma^x)^2
    const Eigen::MatrixXcd a = detail::annihilation(nc);
    const Eigen::MatrixXcd ad = a.adjoint();
    const Eigen::MatrixXcd spin_id = Eigen::MatrixXcd::Identity(na + 1, na + 1);
    const Eigen::MatrixXcd photon_id = Eigen::MatrixXcd::Identity(nc + 1, nc + 1);

    std::vector<Eigen::Triplet<cplx>> t;
    for (int n = 0; n <= nc; ++n)
        for (int e = 0; e <= na; ++e) {
            const auto k = static_cast<Eigen::Index>(cfg.index(n, e));
            t.emplace_back(k, k, cfg.omega_c * n + cfg.omega_a * (e - 0.5 * na));
        }

    const double g = cfg.g;
    if (g != 0.0) {
        switch (cfg.coupling_form) {
            case CouplingForm::RotatingWave:
                detail::add_kron(t, i * g / sqrt_n, ad, jm);
                detail::add_kron(t, -i * g / sqrt_n, a, jp);
                break;
            case CouplingForm::YCoupling:
                // sum sigma^y = i (J- - J+)
                detail::add_kron(t, g / sqrt_n, a + ad, i * (jm - jp));
                break;
            case CouplingForm::XCoupling:
                detail::add_kron(t, -i * g / sqrt_n, a - ad, jp + jm);
                break;
        }
        if (cfg.quad_term == QuadTerm::A2)
            detail::add_kron(t, g * g / cfg.omega_a, detail::projected_position_squared(nc), spin_id);
        else if (cfg.quad_term == QuadTerm::P2)
            detail::add_kron(t, g * g / (na * cfg.omega_c), photon_id, jx2);
    }

    const auto dim = static_cast<Eigen::Index>(cfg.dimension());
    SparseC h(dim, dim);
    h.setFromTriplets(t.begin(), t.end());
    h.prune(cplx(0.0, 0.0));
    return h;
}

/// Diagonal of Pi = exp(i pi (a^dag a + sum (sigma^z + 1) / 2)) = (-1)^(n + e).
inline Eigen::VectorXd parity_diagonal(const DickeConfig& cfg) {
    Eigen::VectorXd p(static_cast<Eigen::Index>(cfg.dimension()));
    for (int n = 0; n <= cfg.fock_cutoff; ++n)
        for (int e = 0; e <= cfg.n_atoms; ++e)
            p(static_cast<Eigen::Index>(cfg.index(n, e))) = ((n + e) % 2 == 0) ? 1.0 : -1.0;
    return p;
}

/// max |[H, Pi]_ij|
inline double parity_commutator_norm(const SparseC& h, const Eigen::VectorXd& parity) {
    double worst = 0.0;
    for (int k = 0; k < h.outerSize(); ++k)
        for (SparseC::InnerIterator it(h, k); it; ++it)
            worst = std::max(worst, std::abs(it.value()) * std::abs(parity(it.col()) - parity(it.row())));
    return worst;
}

struct SpectrumResult {
    std::vector<double> eigenvalues; // lowest levels of both parity sectors merged, ascending
    double ground_energy = 0.0;
    double ground_energy_per_atom = 0.0;
    double photon_density = 0.0;   // <a^dag a> / N
    double field_quadrature = 0.0; // <a + a^dag> / sqrt(N)
    double parity = 1.0;           // <Pi> in the ground state
    double gap = 0.0;              // E1 - E0 over the whole spectrum
    double parity_gap = 0.0;       // E1 - E0 within the ground-state parity sector
    int fock_cutoff = 0;
    bool converged = false;
};

namespace detail {

struct SectorSolution {
    std::vector<double> levels;
    Eigen::VectorXcd ground; // in full-space coordinates
};

struct DickeSolution {
    std::vector<double> levels;
    SectorSolution even;
    SectorSolution odd;
    bool ground_is_even = true;
    double ground() const { return levels.front(); }
};

inline SectorSolution solve_sector(const SparseC& h, const std::vector<Eigen::Index>& members, int levels) {
    const auto m = static_cast<Eigen::Index>(members.size());
    std::vector<Eigen::Index> local(static_cast<std::size_t>(h.rows()), -1);
    for (Eigen::Index k = 0; k < m; ++k) local[static_cast<std::size_t>(members[static_cast<std::size_t>(k)])] = k;

    std::vector<Eigen::Triplet<cplx>> t;
    for (int k = 0; k < h.outerSize(); ++k)
        for (SparseC::InnerIterator it(h, k); it; ++it) {
            const auto r = local[static_cast<std::size_t>(it.row())];
            const auto c = local[static_cast<std::size_t>(it.col())];
            if (r >= 0 && c >= 0) t.emplace_back(r, c, it.value());
        }
    SparseC sub(m, m);
    sub.setFromTriplets(t.begin(), t.end());

    const auto band = HermitianBand::from_sparse(sub);
    SectorSolution s;
    s.levels = lowest_eigenvalues(band, levels);
    const Eigen::VectorXcd v = eigenvector_near(band, s.levels.front());
    s.ground = Eigen::VectorXcd::Zero(h.rows());
    for (Eigen::Index k = 0; k < m; ++k) s.ground(members[static_cast<std::size_t>(k)]) = v(k);
    return s;
}

inline DickeSolution solve_dicke(const DickeConfig& cfg) {
    const SparseC h = build_dicke(cfg);
    const Eigen::VectorXd parity = parity_diagonal(cfg);
    std::vector<Eigen::Index> even, odd;
    for (Eigen::Index k = 0; k < parity.size(); ++k) (parity(k) > 0 ? even : odd).push_back(k);

    DickeSolution sol;
    sol.even = solve_sector(h, even, cfg.levels);
    sol.odd = solve_sector(h, odd, cfg.levels);
    sol.levels = sol.even.levels;
    sol.levels.insert(sol.levels.end(), sol.odd.levels.begin(), sol.odd.levels.end());
    std::sort(sol.levels.begin(), sol.levels.end());
    sol.levels.resize(std::min<std::size_t>(sol.levels.size(), static_cast<std::size_t>(cfg.levels)));
    sol.ground_is_even = sol.even.levels.front() <= sol.odd.levels.front();
    return sol;
}

inline SpectrumResult observables(const DickeConfig& cfg, const DickeSolution& sol) {
    const SectorSolution& sector = sol.ground_is_even ? sol.even : sol.odd;
    const Eigen::VectorXcd& psi = sector.ground;
    const int na = cfg.n_atoms;

    double photons = 0.0;
    cplx quad = 0.0;
    for (int n = 0; n <= cfg.fock_cutoff; ++n)
        for (int e = 0; e <= na; ++e) {
            const auto k = static_cast<Eigen::Index>(cfg.index(n, e));
            photons += n * std::norm(psi(k));
            if (n >= 1) {
                // <psi| a |psi> contribution: conj(psi(n-1, e)) sqrt(n) psi(n, e)
                quad += std::conj(psi(static_cast<Eigen::Index>(cfg.index(n - 1, e)))) * std::sqrt(double(n)) * psi(k);
            }
        }

    SpectrumResult r;
    r.eigenvalues = sol.levels;
    r.ground_energy = sol.ground();
    r.ground_energy_per_atom = r.ground_energy / na;
    r.photon_density = photons / na;
    r.field_quadrature = 2.0 * quad.real() / std::sqrt(static_cast<double>(na));
    r.parity = sol.ground_is_even ? 1.0 : -1.0;
    r.gap = sol.levels.size() > 1 ? sol.levels[1] - sol.levels[0] : 0.0;
    r.parity_gap = sector.levels.size() > 1 ? sector.levels[1] - sector.levels[0] : 0.0;
    r.fock_cutoff = cfg.fock_cutoff;
    return r;
}

inline bool energies_agree(double coarse, double fine) {
    return std::abs(fine - coarse) < 1e-8 * std::max(1.0, std::abs(fine));
}

} // namespace detail

/// Ground-state observables at cfg.fock_cutoff; `converged` reports whether
/// doubling the cutoff moves the ground energy by less than 1e-8 (relative).
inline SpectrumResult ground_observables(const DickeConfig& cfg) {
    cfg.validate();
    const auto sol = detail::solve_dicke(cfg);
    SpectrumResult r = detail::observables(cfg, sol);
    DickeConfig doubled = cfg;
    doubled.fock_cutoff = 2 * cfg.fock_cutoff;
    if (doubled.dimension() <= doubled.max_dimension)
        r.converged = detail::energies_agree(r.ground_energy, detail::solve_dicke(doubled).ground());
    return r;
}

/// Initial cutoff of the doubling policy: ceil(10 + 4 g^2 N / omega_c^2).
inline int initial_fock_cutoff(const DickeConfig& cfg) {
    return static_cast<int>(std::ceil(10.0 + 4.0 * cfg.g * cfg.g * cfg.n_atoms / (cfg.omega_c * cfg.omega_c)));
}

/// Ground observables with the cutoff doubled from initial_fock_cutoff until
/// the ground energy is stable; reports the last verified cutoff.
inline SpectrumResult converged_observables(DickeConfig cfg) {
    cfg.fock_cutoff = initial_fock_cutoff(cfg);
    cfg.validate();
    auto coarse = detail::solve_dicke(cfg);
    for (;;) {
        DickeConfig finer = cfg;
        finer.fock_cutoff = 2 * cfg.fock_cutoff;
        if (finer.dimension() > finer.max_dimension) {
            SpectrumResult r = detail::observables(cfg, coarse);
            r.converged = false;
            return r;
        }
        auto fine = detail::solve_dicke(finer);
        if (detail::energies_agree(coarse.ground(), fine.ground())) {
            SpectrumResult r = detail::observables(cfg, coarse);
            r.converged = true;
            return r;
        }
        cfg = finer;
        coarse = std::move(fine);
    }
}

struct SweepRow {
    double g;
    SpectrumResult result;
};

struct SweepOptions {
    bool auto_cutoff = true; // doubling policy; otherwise template.fock_cutoff is used as is
    unsigned threads = 1;
};

/// One row per coupling on an ascending grid, in grid order.
inline std::vector<SweepRow> sweep_order_parameter(const DickeConfig& tmpl, const std::vector<double>& g_grid,
                                                   SweepOptions opt = {}) {
    if (!std::is_sorted(g_grid.begin(), g_grid.end())) throw DomainError("g grid must be ascending");
    return detail::parallel_map(g_grid.size(), opt.threads, [&](std::size_t k) {
        DickeConfig cfg = tmpl;
        cfg.g = g_grid[k];
        return SweepRow{cfg.g, opt.auto_cutoff ? converged_observables(cfg) : ground_observables(cfg)};
    });
}

/// 1 - <[b, b^dag]> for b = N^{-1/2} sum_l sigma_l, in the symmetric Dicke
/// state with n excitations. Built explicitly in the 2^N product space.
inline double commutator_deviation(int n_atoms, int excitations) {
    if (n_atoms < 1) throw DomainError("N must be >= 1");
    if (excitations < 0 || excitations > n_atoms) throw DomainError("excitation count must lie in [0, N]");
    if (n_atoms > 20) throw ConfigurationError("product-space construction limited to N <= 20");

    const Eigen::Index dim = Eigen::Index{1} << n_atoms;
    // sum_l sigma_l: bit l set = atom l excited; lowering clears it.
    std::vector<Eigen::Triplet<double>> t;
    for (Eigen::Index s = 0; s < dim; ++s)
        for (int l = 0; l < n_atoms; ++l)
            if (s & (Eigen::Index{1} << l)) t.emplace_back(s & ~(Eigen::Index{1} << l), s, 1.0);
    Eigen::SparseMatrix<double> lower(dim, dim);
    lower.setFromTriplets(t.begin(), t.end());
    const Eigen::SparseMatrix<double> b = lower / std::sqrt(static_cast<double>(n_atoms));
    const Eigen::SparseMatrix<double> bd = b.transpose();
    const Eigen::SparseMatrix<double> comm = b * bd - bd * b;

    Eigen::VectorXd dicke_state = Eigen::VectorXd::Zero(dim);
    for (Eigen::Index s = 0; s < dim; ++s)
        if (std::popcount(static_cast<std::uint64_t>(s)) == excitations) dicke_state(s) = 1.0;
    dicke_state.normalize();

    return 1.0 - dicke_state.dot(comm * dicke_state);
}

} // namespace spt
