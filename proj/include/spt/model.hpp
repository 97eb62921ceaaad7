#pragma once

// Parameter types and material response shared by every other module.
//
// Units: hbar = c = 1 internally, frequencies in units of the atomic
// transition frequency unless SI inputs are given explicitly through
// PhysicalInputs.

#include <cmath>
#include <complex>
#include <string>

#include "spt/errors.hpp"

namespace spt {

using cplx = std::complex<double>;

namespace si {
inline constexpr double hbar = 1.054571817e-34;     // J s
inline constexpr double epsilon0 = 8.8541878128e-12; // F / m
inline constexpr double c = 299792458.0;             // m / s
inline constexpr double debye = 3.33564095198152e-30; // C m
} // namespace si

/// (omega_a, omega_c, lambda) fixing one per-mode light-matter subsystem.
struct ModeParams {
    double omega_a = 1.0;
    double omega_c = 1.0;
    double lam = 0.0;

    void validate() const {
        if (!(omega_a > 0.0) || !std::isfinite(omega_a))
            throw DomainError("omega_a must be positive and finite");
        if (!(omega_c > 0.0) || !std::isfinite(omega_c))
            throw DomainError("omega_c must be positive and finite");
        if (!(lam >= 0.0) || !std::isfinite(lam))
            throw DomainError("coupling lambda must be non-negative and finite");
    }
};

/// SI description of an atomic ensemble coupled to one photon mode.
struct PhysicalInputs {
    double n_atoms = 1.0;
    double dipole_sq = 0.0;  // |d|^2 in C^2 m^2
    double volume = 1.0;     // m^3
    double wavenumber = 1.0; // 1 / m

    void validate() const {
        if (!(n_atoms >= 1.0)) throw DomainError("n_atoms must be >= 1");
        if (!(dipole_sq >= 0.0)) throw DomainError("dipole_sq must be non-negative");
        if (!(volume > 0.0)) throw DomainError("volume must be positive");
        if (!(wavenumber > 0.0)) throw DomainError("wavenumber must be positive");
    }
};

/// Dimensionless coupling sqrt(N |d|^2 / (2 hbar eps0 c |k| V)).
inline double coupling_from_physical(const PhysicalInputs& in) {
    in.validate();
    const double denom = 2.0 * si::hbar * si::epsilon0 * si::c * in.wavenumber * in.volume;
    return std::sqrt(in.n_atoms * in.dipole_sq / denom);
}

/// Damped Lorentz oscillator chi(w) = S / (w0^2 - w^2 - i gamma w).
///
/// S may be negative; S < -w0^2 makes the static dielectric constant
/// negative, which is how an "overcritical" medium is encoded.
struct LorentzModel {
    double strength = 1.0;
    double omega0 = 1.0;
    double gamma = 0.0;

    void validate() const {
        if (!(omega0 > 0.0)) throw DomainError("Lorentz omega0 must be positive");
        if (!(gamma >= 0.0)) throw DomainError("Lorentz gamma must be non-negative");
        if (!std::isfinite(strength)) throw DomainError("Lorentz strength must be finite");
    }

    /// Default damping used by frequency sweeps that touch the real axis.
    static constexpr double default_gamma_ratio = 1e-3;
};

inline cplx lorentz_chi(const LorentzModel& m, cplx omega) {
    const cplx denom = m.omega0 * m.omega0 - omega * omega - cplx(0.0, m.gamma) * omega;
    if (denom == cplx(0.0, 0.0)) {
        if (m.strength == 0.0) return {0.0, 0.0};
        throw PoleError("Lorentz susceptibility evaluated at its pole");
    }
    return m.strength / denom;
}

inline cplx lorentz_epsilon(const LorentzModel& m, cplx omega) {
    return 1.0 + lorentz_chi(m, omega);
}

} // namespace spt
