#pragma once

// Transverse / longitudinal decomposition of vector fields on periodic
// L x L x L grids, energy integrals, and rasterized dipole lattices.
//
// Storage: site (i, j, k) -> flat index (i * L + j) * L + k, three doubles
// per site (x, y, z). Position of site (i, j, k) is spacing * (i, j, k).

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <fftw3.h>

#include "spt/errors.hpp"

namespace spt {

struct GridSpec {
    int L = 32;
    double spacing = 1.0;

    void validate() const {
        if (L < 2 || !std::has_single_bit(static_cast<unsigned>(L)))
            throw ConfigurationError("grid size L must be a power of two >= 2, got " + std::to_string(L));
        if (!(spacing > 0.0) || !std::isfinite(spacing)) throw DomainError("grid spacing must be positive");
    }
    std::size_t sites() const { return static_cast<std::size_t>(L) * L * L; }
    double box() const { return L * spacing; }
    double cell_volume() const { return spacing * spacing * spacing; }
};

struct VectorField3D {
    GridSpec grid;
    std::vector<double> values; // 3 * L^3

    VectorField3D() = default;
    explicit VectorField3D(GridSpec g) : grid(g), values(3 * g.sites(), 0.0) {}

    std::size_t site(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * grid.L + j) * grid.L + k;
    }
    Eigen::Map<Eigen::Vector3d> at(std::size_t s) { return Eigen::Map<Eigen::Vector3d>(values.data() + 3 * s); }
    Eigen::Map<const Eigen::Vector3d> at(std::size_t s) const {
        return Eigen::Map<const Eigen::Vector3d>(values.data() + 3 * s);
    }

    void validate() const {
        grid.validate();
        if (values.size() != 3 * grid.sites()) throw ContractViolation("field storage does not match the grid");
        for (double v : values)
            if (!std::isfinite(v)) throw DomainError("field contains non-finite values");
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : values) m = std::max(m, std::abs(v));
        return m;
    }
};

inline VectorField3D operator+(const VectorField3D& a, const VectorField3D& b) {
    VectorField3D r = a;
    for (std::size_t k = 0; k < r.values.size(); ++k) r.values[k] += b.values[k];
    return r;
}

inline VectorField3D operator-(const VectorField3D& a, const VectorField3D& b) {
    VectorField3D r = a;
    for (std::size_t k = 0; k < r.values.size(); ++k) r.values[k] -= b.values[k];
    return r;
}

/// Grid-measure integral of a . b.
inline double inner_product(const VectorField3D& a, const VectorField3D& b) {
    if (a.values.size() != b.values.size()) throw ContractViolation("fields live on different grids");
    double s = 0.0;
    for (std::size_t k = 0; k < a.values.size(); ++k) s += a.values[k] * b.values[k];
    return s * a.grid.cell_volume();
}

struct Decomposition {
    VectorField3D transverse;
    VectorField3D longitudinal;
};

namespace detail {

// FFTW's planner is not thread-safe; execution of distinct plans is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

// Wavenumber of DFT index n. The Nyquist index gets 0 so that the projector
// at n and at its conjugate partner coincide (keeps the outputs real).
inline double wavenumber(int n, const GridSpec& g) {
    const int L = g.L;
    if (2 * n == L) return 0.0;
    const int signed_n = (n <= L / 2) ? n : n - L;
    return 2.0 * M_PI * signed_n / g.box();
}

} // namespace detail

/// Longitudinal part (k k / k^2) . F and transverse part (1 - k k / k^2) . F;
/// the uniform k = 0 component is assigned to the transverse part.
inline Decomposition helmholtz_decompose(const VectorField3D& field) {
    field.validate();
    const GridSpec g = field.grid;
    const int L = g.L;
    const int half = L / 2 + 1;
    const std::size_t n_real = g.sites();
    const std::size_t n_spec = static_cast<std::size_t>(L) * L * half;

    double* real = fftw_alloc_real(n_real);
    fftw_complex* spec[3] = {fftw_alloc_complex(n_spec), fftw_alloc_complex(n_spec), fftw_alloc_complex(n_spec)};
    fftw_plan forward{};
    fftw_plan backward{};
    {
        std::lock_guard lock(detail::fftw_planner_mutex());
        forward = fftw_plan_dft_r2c_3d(L, L, L, real, spec[0], FFTW_ESTIMATE);
        backward = fftw_plan_dft_c2r_3d(L, L, L, spec[0], real, FFTW_ESTIMATE);
    }

    for (int c = 0; c < 3; ++c) {
        for (std::size_t s = 0; s < n_real; ++s) real[s] = field.values[3 * s + c];
        fftw_execute_dft_r2c(forward, real, spec[c]);
    }

    // Longitudinal spectrum in place: F_L = k (k . F) / k^2.
    for (int i = 0; i < L; ++i) {
        const double kx = detail::wavenumber(i, g);
        for (int j = 0; j < L; ++j) {
            const double ky = detail::wavenumber(j, g);
            for (int k = 0; k < half; ++k) {
                const double kz = detail::wavenumber(k, g);
                const std::size_t m = (static_cast<std::size_t>(i) * L + j) * half + k;
                const double k2 = kx * kx + ky * ky + kz * kz;
                if (k2 == 0.0) {
                    for (auto& s : spec) s[m][0] = s[m][1] = 0.0;
                    continue;
                }
                const double re = (kx * spec[0][m][0] + ky * spec[1][m][0] + kz * spec[2][m][0]) / k2;
                const double im = (kx * spec[0][m][1] + ky * spec[1][m][1] + kz * spec[2][m][1]) / k2;
                const double kv[3] = {kx, ky, kz};
                for (int c = 0; c < 3; ++c) {
                    spec[c][m][0] = kv[c] * re;
                    spec[c][m][1] = kv[c] * im;
                }
            }
        }
    }

    Decomposition out{VectorField3D(g), VectorField3D(g)};
    const double norm = 1.0 / static_cast<double>(n_real);
    for (int c = 0; c < 3; ++c) {
        fftw_execute_dft_c2r(backward, spec[c], real);
        for (std::size_t s = 0; s < n_real; ++s) {
            const double l = real[s] * norm;
            out.longitudinal.values[3 * s + c] = l;
            out.transverse.values[3 * s + c] = field.values[3 * s + c] - l;
        }
    }

    {
        std::lock_guard lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(forward);
        fftw_destroy_plan(backward);
    }
    fftw_free(real);
    for (auto* s : spec) fftw_free(s);
    return out;
}

struct EnergyIntegrals {
    double full = 0.0;         // integral of P^2
    double transverse = 0.0;   // integral of P_T^2
    double longitudinal = 0.0; // integral of P_L^2
};

inline EnergyIntegrals energy_integrals(const VectorField3D& field) {
    const auto d = helmholtz_decompose(field);
    return {inner_product(field, field), inner_product(d.transverse, d.transverse),
            inner_product(d.longitudinal, d.longitudinal)};
}

// ---------------------------------------------------------------------------
// Dipole lattices

/// Radial bump A (1 - r^2/R^2)^2 for r < R.
inline double bump_profile(double amplitude, double radius, double r) {
    if (r >= radius) return 0.0;
    const double u = 1.0 - (r * r) / (radius * radius);
    return amplitude * u * u;
}

struct DipoleSite {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Eigen::Vector3d orientation = Eigen::Vector3d::UnitZ(); // normalized on use
    double amplitude = 1.0;
    double radius = 1.0;
};

struct DipoleLattice {
    std::vector<DipoleSite> sites;
};

namespace detail {

inline Eigen::Vector3d minimum_image(Eigen::Vector3d d, double box) {
    for (int c = 0; c < 3; ++c) d[c] -= box * std::round(d[c] / box);
    return d;
}

inline void check_site(const DipoleSite& s, const GridSpec& g) {
    if (!(s.radius > 0.0) || !std::isfinite(s.radius)) throw DomainError("support radius must be positive");
    if (!(s.radius < 0.5 * g.box())) throw DomainError("support radius must be below half the box length");
    if (!(s.orientation.norm() > 0.0)) throw DomainError("dipole orientation must be non-zero");
    if (!s.position.allFinite() || !std::isfinite(s.amplitude)) throw DomainError("dipole site is not finite");
}

/// Sparse raster of one site: (site index, vector value), ascending index.
inline std::vector<std::pair<std::size_t, Eigen::Vector3d>> raster_site(const DipoleSite& s, const GridSpec& g) {
    check_site(s, g);
    const Eigen::Vector3d dir = s.orientation.normalized();
    const double h = g.spacing;
    const int L = g.L;
    int lo[3], hi[3];
    for (int c = 0; c < 3; ++c) {
        lo[c] = static_cast<int>(std::floor((s.position[c] - s.radius) / h));
        hi[c] = static_cast<int>(std::ceil((s.position[c] + s.radius) / h));
    }
    auto wrap = [L](int i) { return ((i % L) + L) % L; };
    std::vector<std::pair<std::size_t, Eigen::Vector3d>> out;
    for (int i = lo[0]; i <= hi[0]; ++i)
        for (int j = lo[1]; j <= hi[1]; ++j)
            for (int k = lo[2]; k <= hi[2]; ++k) {
                const Eigen::Vector3d r(i * h, j * h, k * h);
                const double p = bump_profile(s.amplitude, s.radius, (r - s.position).norm());
                if (p == 0.0) continue;
                const std::size_t idx = (static_cast<std::size_t>(wrap(i)) * L + wrap(j)) * L + wrap(k);
                out.emplace_back(idx, p * dir);
            }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    return out;
}

} // namespace detail

/// Throws ContractViolation if any two supports intersect (minimum image).
inline void require_disjoint(const DipoleLattice& lattice, const GridSpec& g) {
    const auto& s = lattice.sites;
    for (std::size_t a = 0; a < s.size(); ++a)
        for (std::size_t b = a + 1; b < s.size(); ++b) {
            const double d = detail::minimum_image(s[a].position - s[b].position, g.box()).norm();
            if (!(d > s[a].radius + s[b].radius))
                throw ContractViolation("dipole supports " + std::to_string(a) + " and " + std::to_string(b) + " overlap");
        }
}

/// Sum of the per-site bump profiles on the grid.
inline VectorField3D rasterize(const DipoleLattice& lattice, const GridSpec& g, bool disjoint = true) {
    g.validate();
    if (disjoint) require_disjoint(lattice, g);
    VectorField3D f(g);
    for (const auto& site : lattice.sites)
        for (const auto& [idx, v] : detail::raster_site(site, g)) f.at(idx) += v;
    return f;
}

/// O_ab = grid integral of P_a . P_b.
inline Eigen::MatrixXd overlap_matrix(const DipoleLattice& lattice, const GridSpec& g) {
    g.validate();
    const auto n = lattice.sites.size();
    std::vector<std::vector<std::pair<std::size_t, Eigen::Vector3d>>> rasters;
    rasters.reserve(n);
    for (const auto& s : lattice.sites) rasters.push_back(detail::raster_site(s, g));

    Eigen::MatrixXd o = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a; b < n; ++b) {
            double sum = 0.0;
            auto p = rasters[a].begin();
            auto q = rasters[b].begin();
            while (p != rasters[a].end() && q != rasters[b].end()) {
                if (p->first < q->first) ++p;
                else if (q->first < p->first) ++q;
                else {
                    sum += p->second.dot(q->second);
                    ++p;
                    ++q;
                }
            }
            o(a, b) = o(b, a) = sum * g.cell_volume();
        }
    return o;
}

/// Per-site self energies (diagonal of the overlap matrix).
inline Eigen::VectorXd self_energies(const DipoleLattice& lattice, const GridSpec& g) {
    g.validate();
    Eigen::VectorXd e(static_cast<Eigen::Index>(lattice.sites.size()));
    for (std::size_t a = 0; a < lattice.sites.size(); ++a) {
        double sum = 0.0;
        for (const auto& [idx, v] : detail::raster_site(lattice.sites[a], g)) sum += v.squaredNorm();
        e(static_cast<Eigen::Index>(a)) = sum * g.cell_volume();
    }
    return e;
}

// ---------------------------------------------------------------------------
// Flat binary snapshots: uint64 L, float64 spacing, then 3 L^3 float64 values,
// all little-endian.

namespace detail {

template <class T>
T to_little_endian(T v) {
    if constexpr (std::endian::native == std::endian::big) {
        unsigned char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        std::reverse(b, b + sizeof(T));
        std::memcpy(&v, b, sizeof(T));
    }
    return v;
}

} // namespace detail

inline void write_field(const VectorField3D& f, const std::string& path) {
    f.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path + " for writing");
    const auto L = detail::to_little_endian(static_cast<std::uint64_t>(f.grid.L));
    const auto h = detail::to_little_endian(f.grid.spacing);
    out.write(reinterpret_cast<const char*>(&L), sizeof L);
    out.write(reinterpret_cast<const char*>(&h), sizeof h);
    for (double v : f.values) {
        const double le = detail::to_little_endian(v);
        out.write(reinterpret_cast<const char*>(&le), sizeof le);
    }
    if (!out) throw Error("failed writing " + path);
}

inline VectorField3D read_field(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::uint64_t L = 0;
    double h = 0.0;
    in.read(reinterpret_cast<char*>(&L), sizeof L);
    in.read(reinterpret_cast<char*>(&h), sizeof h);
    if (!in) throw Error("truncated field header in " + path);
    L = detail::to_little_endian(L);
    h = detail::to_little_endian(h);
    if (L < 2 || L > 4096) throw ConfigurationError("implausible grid size in " + path);
    VectorField3D f(GridSpec{static_cast<int>(L), h});
    f.grid.validate();
    for (double& v : f.values) {
        in.read(reinterpret_cast<char*>(&v), sizeof v);
        v = detail::to_little_endian(v);
    }
    if (!in) throw Error("truncated field body in " + path);
    return f;
}

} // namespace spt
