#pragma once

// Per-mode quadratic bosonic Hamiltonians, their symplectic (Bogoliubov)
// spectra, and stability classification of the normal ground state.
//
// A form with M modes x_1..x_M is stored as the 2M x 2M Hermitian matrix H
// with  Hamiltonian = 1/2 v^dag H v + offset,  v = (x_1..x_M, x_1^dag..x_M^dag).
// Normal modes are the eigenvalues of eta H, eta = diag(+1_M, -1_M).

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spt/errors.hpp"
#include "spt/model.hpp"

namespace spt {

enum class Gauge { Coulomb, Dipole, Longitudinal };

inline const char* to_string(Gauge g) {
    switch (g) {
        case Gauge::Coulomb: return "coulomb";
        case Gauge::Dipole: return "dipole";
        case Gauge::Longitudinal: return "longitudinal";
    }
    return "?";
}

/// A^2 term (Coulomb) or transverse P^2 term (dipole). The longitudinal
/// P^2 term is the whole coupling of the longitudinal mode and cannot be
/// switched off.
struct TermFlags {
    bool include_quadratic_term = true;
};

struct QuadraticForm {
    int dim = 0;
    Eigen::MatrixXcd matrix;
    double offset = 0.0;

    /// Throws ContractViolation unless H = H^dag and H = X H^T X to `tol`.
    void validate(double tol = 1e-12) const {
        if (matrix.rows() != 2 * dim || matrix.cols() != 2 * dim)
            throw ContractViolation("quadratic form matrix must be 2M x 2M");
        const double scale = std::max(1.0, matrix.cwiseAbs().maxCoeff());
        if ((matrix - matrix.adjoint()).cwiseAbs().maxCoeff() > tol * scale)
            throw ContractViolation("quadratic form matrix is not Hermitian");
        if ((matrix - swap_blocks(matrix.transpose())).cwiseAbs().maxCoeff() > tol * scale)
            throw ContractViolation("quadratic form violates the bosonic block symmetry");
    }

    /// X m X, X exchanging the mode and conjugate-mode blocks.
    Eigen::MatrixXcd swap_blocks(const Eigen::MatrixXcd& m) const {
        Eigen::MatrixXcd out(2 * dim, 2 * dim);
        out.topLeftCorner(dim, dim) = m.bottomRightCorner(dim, dim);
        out.bottomRightCorner(dim, dim) = m.topLeftCorner(dim, dim);
        out.topRightCorner(dim, dim) = m.bottomLeftCorner(dim, dim);
        out.bottomLeftCorner(dim, dim) = m.topRightCorner(dim, dim);
        return out;
    }

    Eigen::VectorXd eta() const {
        Eigen::VectorXd e(2 * dim);
        e.head(dim).setOnes();
        e.tail(dim).setConstant(-1.0);
        return e;
    }
};

/// Linear combination alpha * x_i + beta * x_i^dag of a single mode.
struct ModeOperator {
    int mode;
    cplx alpha; // coefficient of x
    cplx beta;  // coefficient of x^dag

    static ModeOperator annihilate(int i) { return {i, 1.0, 0.0}; }
    static ModeOperator position(int i) { return {i, 1.0, 1.0}; }      // x + x^dag
    static ModeOperator momentum(int i) { return {i, 1.0, -1.0}; }     // x - x^dag
};

/// Accumulates a Hermitian operator as normal-ordered pieces and emits the
/// corresponding QuadraticForm.
class QuadraticBuilder {
public:
    explicit QuadraticBuilder(int modes)
        : m_(modes),
          a_(Eigen::MatrixXcd::Zero(modes, modes)),
          b_create_(Eigen::MatrixXcd::Zero(modes, modes)),
          b_annihilate_(Eigen::MatrixXcd::Zero(modes, modes)) {}

    /// w x_i^dag x_i
    void add_number(int i, double w) { a_(i, i) += w; }

    /// c * (L1 L2), expanded and normal ordered.
    void add_product(cplx c, const ModeOperator& l1, const ModeOperator& l2) {
        const int i = l1.mode;
        const int j = l2.mode;
        // x_i x_j
        add_pair_annihilate(i, j, c * l1.alpha * l2.alpha);
        // x_i x_j^dag = x_j^dag x_i + delta_ij
        a_(j, i) += c * l1.alpha * l2.beta;
        if (i == j) constant_ += c * l1.alpha * l2.beta;
        // x_i^dag x_j
        a_(i, j) += c * l1.beta * l2.alpha;
        // x_i^dag x_j^dag
        add_pair_create(i, j, c * l1.beta * l2.beta);
    }

    QuadraticForm build() const {
        const double scale = std::max({1.0, a_.cwiseAbs().maxCoeff(), b_create_.cwiseAbs().maxCoeff()});
        const double tol = 1e-13 * scale;
        if ((a_ - a_.adjoint()).cwiseAbs().maxCoeff() > tol ||
            (b_create_ - b_annihilate_.conjugate()).cwiseAbs().maxCoeff() > tol ||
            std::abs(constant_.imag()) > tol)
            throw ContractViolation("accumulated operator is not Hermitian");

        QuadraticForm f;
        f.dim = m_;
        f.matrix.resize(2 * m_, 2 * m_);
        f.matrix.topLeftCorner(m_, m_) = a_;
        f.matrix.topRightCorner(m_, m_) = b_create_;
        f.matrix.bottomLeftCorner(m_, m_) = b_create_.conjugate();
        f.matrix.bottomRightCorner(m_, m_) = a_.conjugate();
        f.offset = constant_.real() - 0.5 * a_.trace().real();
        return f;
    }

private:
    // k x_i^dag x_j^dag is carried by B_ij and B_ji of the symmetric sum
    // 1/2 sum_pq B_pq x_p^dag x_q^dag (a diagonal entry thus gets 2k).
    void add_pair_create(int i, int j, cplx k) {
        b_create_(i, j) += k;
        b_create_(j, i) += k;
    }
    void add_pair_annihilate(int i, int j, cplx k) {
        b_annihilate_(i, j) += k;
        b_annihilate_(j, i) += k;
    }

    int m_;
    Eigen::MatrixXcd a_;
    Eigen::MatrixXcd b_create_;
    Eigen::MatrixXcd b_annihilate_;
    cplx constant_{0.0, 0.0};
};

/// Photon-matter coupling constants. Coulomb: g = omega_a lam, D = omega_a lam^2.
/// Dipole: g = omega_c lam, D = omega_c lam^2.
struct GaugeCouplings {
    double g;
    double quadratic;
};

inline GaugeCouplings gauge_couplings(const ModeParams& p, Gauge gauge) {
    switch (gauge) {
        case Gauge::Coulomb: return {p.omega_a * p.lam, p.omega_a * p.lam * p.lam};
        case Gauge::Dipole:
        case Gauge::Longitudinal: return {p.omega_c * p.lam, p.omega_c * p.lam * p.lam};
    }
    return {0.0, 0.0};
}

/// One (k, xi) block. Coulomb and Dipole act on modes (a, b) = (0, 1);
/// Longitudinal acts on the single matter mode b.
inline QuadraticForm build_quadratic(const ModeParams& p, Gauge gauge, TermFlags flags = {}) {
    p.validate();
    const auto [g, quad] = gauge_couplings(p, gauge);
    const cplx i(0.0, 1.0);

    if (gauge == Gauge::Longitudinal) {
        if (!flags.include_quadratic_term)
            throw ConfigurationError("longitudinal mode requires its P^2 term");
        QuadraticBuilder b(1);
        b.add_number(0, p.omega_a);
        b.add_product(quad, ModeOperator::position(0), ModeOperator::position(0));
        return b.build();
    }

    QuadraticBuilder b(2);
    b.add_number(0, p.omega_c);
    b.add_number(1, p.omega_a);
    if (gauge == Gauge::Coulomb) {
        // i g (a + a^dag)(b - b^dag) + D (a + a^dag)^2
        b.add_product(i * g, ModeOperator::position(0), ModeOperator::momentum(1));
        if (flags.include_quadratic_term)
            b.add_product(quad, ModeOperator::position(0), ModeOperator::position(0));
    } else {
        // -i g (a - a^dag)(b + b^dag) + D (b + b^dag)^2
        b.add_product(-i * g, ModeOperator::momentum(0), ModeOperator::position(1));
        if (flags.include_quadratic_term)
            b.add_product(quad, ModeOperator::position(1), ModeOperator::position(1));
    }
    return b.build();
}

/// Full single-wavevector block with two photon polarizations and three
/// atomic orientations, before splitting into transverse/longitudinal parts.
///
/// Mode order: a_1, a_2 (photon, polarized along x and y; k along z), then
/// b_1, b_2, b_3 with orientation vectors given by the columns of
/// `orientations` (orthonormal).
inline QuadraticForm build_wavevector_block(const ModeParams& p, Gauge gauge, TermFlags flags,
                                            const Eigen::Matrix3d& orientations) {
    p.validate();
    if (gauge == Gauge::Longitudinal)
        throw ConfigurationError("wavevector block needs a transverse gauge (coulomb or dipole)");
    if ((orientations.transpose() * orientations - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-12)
        throw ContractViolation("atomic orientations must be orthonormal");

    const auto [g, quad] = gauge_couplings(p, gauge);
    const double longitudinal = p.omega_c * p.lam * p.lam;
    const cplx i(0.0, 1.0);
    const Eigen::Matrix3d field_axes = Eigen::Matrix3d::Identity(); // e_{k,1}, e_{k,2}, k-hat

    QuadraticBuilder b(5);
    for (int eta = 0; eta < 2; ++eta) b.add_number(eta, p.omega_c);
    for (int xi = 0; xi < 3; ++xi) b.add_number(2 + xi, p.omega_a);

    for (int eta = 0; eta < 2; ++eta) {
        for (int xi = 0; xi < 3; ++xi) {
            const double overlap = orientations.col(xi).dot(field_axes.col(eta));
            if (overlap == 0.0) continue;
            if (gauge == Gauge::Coulomb)
                b.add_product(i * g * overlap, ModeOperator::position(eta), ModeOperator::momentum(2 + xi));
            else
                b.add_product(-i * g * overlap, ModeOperator::momentum(eta), ModeOperator::position(2 + xi));
        }
    }
    if (gauge == Gauge::Coulomb && flags.include_quadratic_term) {
        for (int eta = 0; eta < 2; ++eta)
            b.add_product(quad, ModeOperator::position(eta), ModeOperator::position(eta));
    }

    // Polarization-polarization terms: longitudinal axis always, transverse
    // axes only in the dipole gauge with the P^2 term on.
    for (int axis = 0; axis < 3; ++axis) {
        const bool transverse_axis = axis < 2;
        if (transverse_axis && !(gauge == Gauge::Dipole && flags.include_quadratic_term)) continue;
        const double coeff = transverse_axis ? quad : longitudinal;
        for (int xi = 0; xi < 3; ++xi) {
            const double u = orientations.col(xi).dot(field_axes.col(axis));
            if (u == 0.0) continue;
            for (int xj = 0; xj < 3; ++xj) {
                const double w = orientations.col(xj).dot(field_axes.col(axis));
                if (w == 0.0) continue;
                b.add_product(coeff * u * w, ModeOperator::position(2 + xi), ModeOperator::position(2 + xj));
            }
        }
    }
    return b.build();
}

/// Direct sum of independent forms; the result is block diagonal.
inline QuadraticForm assemble_block_diagonal(const std::vector<QuadraticForm>& parts) {
    int total = 0;
    for (const auto& f : parts) total += f.dim;
    QuadraticForm out;
    out.dim = total;
    out.matrix = Eigen::MatrixXcd::Zero(2 * total, 2 * total);
    int at = 0;
    for (const auto& f : parts) {
        const int m = f.dim;
        out.matrix.block(at, at, m, m) = f.matrix.topLeftCorner(m, m);
        out.matrix.block(at, total + at, m, m) = f.matrix.topRightCorner(m, m);
        out.matrix.block(total + at, at, m, m) = f.matrix.bottomLeftCorner(m, m);
        out.matrix.block(total + at, total + at, m, m) = f.matrix.bottomRightCorner(m, m);
        out.offset += f.offset;
        at += m;
    }
    return out;
}

namespace detail {

inline double form_scale(const QuadraticForm& f) {
    return std::max(1.0, f.matrix.cwiseAbs().maxCoeff());
}

// Number of exact zero modes: null space of the Hermitian H, which is
// resolved to machine precision (eigenvalues of eta H at a defective zero
// are only resolved to sqrt(eps)).
inline int null_dimension(const QuadraticForm& f) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(f.matrix, Eigen::EigenvaluesOnly);
    const double thr = 1e-12 * form_scale(f);
    int z = 0;
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
        if (std::abs(es.eigenvalues()(k)) <= thr) ++z;
    return z;
}

inline Eigen::MatrixXcd eta_times(const QuadraticForm& f) {
    Eigen::MatrixXcd m = f.matrix;
    m.bottomRows(f.dim) *= -1.0;
    return m;
}

} // namespace detail

/// All 2M eigenvalues of eta H (unordered multiset, exact zero modes snapped to 0).
inline std::vector<cplx> eta_spectrum(const QuadraticForm& f) {
    f.validate(1e-10);
    const int n = 2 * f.dim;
    std::vector<cplx> vals(n);

    Eigen::LLT<Eigen::MatrixXcd> llt(f.matrix);
    if (llt.info() == Eigen::Success) {
        // H = L L^dag  =>  eta H ~ L^dag eta L, Hermitian with real spectrum.
        const Eigen::MatrixXcd l = llt.matrixL();
        Eigen::MatrixXcd sym = l.adjoint() * f.eta().asDiagonal() * l;
        sym = 0.5 * (sym + sym.adjoint()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sym, Eigen::EigenvaluesOnly);
        for (int k = 0; k < n; ++k) vals[k] = es.eigenvalues()(k);
        return vals;
    }

    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> ces(detail::eta_times(f), false);
    for (int k = 0; k < n; ++k) vals[k] = ces.eigenvalues()(k);

    const int zeros = detail::null_dimension(f);
    if (zeros > 0) {
        std::vector<int> order(n);
        for (int k = 0; k < n; ++k) order[k] = k;
        std::sort(order.begin(), order.end(),
                  [&](int x, int y) { return std::abs(vals[x]) < std::abs(vals[y]); });
        for (int k = 0; k < std::min(n, 2 * zeros); ++k) vals[order[k]] = 0.0;
    }
    return vals;
}

/// The M normal-mode frequencies: eigenvalues of eta H with positive real
/// part (positive imaginary part on the imaginary axis), ascending by real part.
inline std::vector<cplx> symplectic_spectrum(const QuadraticForm& f) {
    std::vector<cplx> all = eta_spectrum(f);
    const double tau = 1e-10 * detail::form_scale(f);
    auto score = [tau](cplx z) {
        if (std::abs(z.real()) > tau) return z.real();
        if (z.imag() > 0.0) return 0.5 * tau;
        if (z.imag() < 0.0) return -0.5 * tau;
        return 0.0;
    };
    std::stable_sort(all.begin(), all.end(), [&](cplx x, cplx y) { return score(x) > score(y); });
    std::vector<cplx> out(all.begin(), all.begin() + f.dim);
    std::sort(out.begin(), out.end(), [](cplx x, cplx y) {
        if (x.real() != y.real()) return x.real() < y.real();
        return x.imag() < y.imag();
    });
    return out;
}

enum class Stability { Stable, Marginal, Unstable };

inline const char* to_string(Stability s) {
    switch (s) {
        case Stability::Stable: return "stable";
        case Stability::Marginal: return "marginal";
        case Stability::Unstable: return "unstable";
    }
    return "?";
}

struct StabilityReport {
    Stability status = Stability::Stable;
    std::vector<cplx> frequencies;
    double max_growth_rate = 0.0;
};

inline constexpr double default_stability_tol = 1e-8;

inline StabilityReport classify_stability(const QuadraticForm& f, double tol = default_stability_tol) {
    if (!(tol > 0.0)) throw DomainError("stability tolerance must be positive");
    StabilityReport r;
    r.frequencies = symplectic_spectrum(f);
    bool growing = false;
    bool soft = false;
    for (cplx w : r.frequencies) {
        r.max_growth_rate = std::max(r.max_growth_rate, std::abs(w.imag()));
        if (std::abs(w.imag()) > tol) growing = true;
        if (std::abs(w) <= tol) soft = true;
    }
    r.status = growing ? Stability::Unstable : (soft ? Stability::Marginal : Stability::Stable);
    return r;
}

struct CriticalSearch {
    double lambda_max = 10.0;
    double tolerance = 1e-6;
};

/// Smallest lambda at which the normal state stops being Stable, by
/// bisection; nullopt when stable on the whole range.
inline std::optional<double> critical_coupling(double omega_a, double omega_c, Gauge gauge, TermFlags flags,
                                               CriticalSearch search = {}) {
    auto stable_at = [&](double lam) {
        return classify_stability(build_quadratic({omega_a, omega_c, lam}, gauge, flags)).status ==
               Stability::Stable;
    };
    if (!(search.lambda_max > 0.0) || !(search.tolerance > 0.0))
        throw DomainError("critical coupling search needs positive range and tolerance");
    if (!stable_at(0.0)) throw ContractViolation("normal state is not stable at zero coupling");
    if (stable_at(search.lambda_max)) return std::nullopt;

    double lo = 0.0;
    double hi = search.lambda_max;
    while (hi - lo > search.tolerance) {
        const double mid = 0.5 * (lo + hi);
        (stable_at(mid) ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Normal-mode frequencies together with the Bogoliubov matrix T whose
/// columns are the eta-normalized mode vectors (positive-frequency modes
/// first, then their conjugate partners). Satisfies T eta T^dag = eta.
struct BogoliubovResult {
    std::vector<double> frequencies;
    Eigen::MatrixXcd transform;
};

inline BogoliubovResult bogoliubov_transform(const QuadraticForm& f) {
    f.validate(1e-10);
    const int m = f.dim;
    Eigen::LLT<Eigen::MatrixXcd> llt(f.matrix);
    if (llt.info() != Eigen::Success)
        throw ContractViolation("Bogoliubov transform requires a positive-definite form");

    const Eigen::MatrixXcd l = llt.matrixL();
    Eigen::MatrixXcd sym = l.adjoint() * f.eta().asDiagonal() * l;
    sym = 0.5 * (sym + sym.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sym);

    // Eigenvalues ascend: the last m are the positive frequencies.
    BogoliubovResult out;
    out.transform.resize(2 * m, 2 * m);
    const Eigen::MatrixXcd l_adj = l.adjoint();
    for (int k = 0; k < m; ++k) {
        const int col = m + k;
        const double w = es.eigenvalues()(col);
        // eta H v = w v with v = L^{-dag} u; v^dag eta v = 1 / w.
        Eigen::VectorXcd v = l_adj.triangularView<Eigen::Upper>().solve(es.eigenvectors().col(col));
        v *= std::sqrt(w);
        out.frequencies.push_back(w);
        out.transform.col(k) = v;
        Eigen::VectorXcd partner(2 * m);
        partner.head(m) = v.tail(m).conjugate();
        partner.tail(m) = v.head(m).conjugate();
        out.transform.col(m + k) = partner;
    }
    return out;
}

} // namespace spt
