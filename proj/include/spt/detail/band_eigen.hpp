#pragma once

// Hermitian band matrices and the two LAPACK routines the Dicke solver needs:
// selected lowest eigenvalues (zhbevx) and a single eigenvector by inverse
// iteration on a band LU factorization (zgbtrf / zgbtrs).

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#ifndef lapack_complex_float
#define lapack_complex_float std::complex<float>
#endif
#ifndef lapack_complex_double
#define lapack_complex_double std::complex<double>
#endif
#include <lapacke.h>

#include "spt/errors.hpp"

namespace spt::detail {

/// Upper band of a Hermitian matrix in LAPACK column-major layout:
/// element (i, j), i <= j, is stored at upper[(kd + i - j) + j * (kd + 1)].
struct HermitianBand {
    int n = 0;
    int kd = 0;
    std::vector<std::complex<double>> upper;

    std::complex<double>& at(int i, int j) { return upper[static_cast<std::size_t>(kd + i - j) + static_cast<std::size_t>(j) * (kd + 1)]; }
    std::complex<double> at(int i, int j) const { return upper[static_cast<std::size_t>(kd + i - j) + static_cast<std::size_t>(j) * (kd + 1)]; }

    static HermitianBand from_sparse(const Eigen::SparseMatrix<std::complex<double>>& m) {
        HermitianBand b;
        b.n = static_cast<int>(m.rows());
        for (int k = 0; k < m.outerSize(); ++k)
            for (Eigen::SparseMatrix<std::complex<double>>::InnerIterator it(m, k); it; ++it)
                b.kd = std::max(b.kd, static_cast<int>(std::abs(it.row() - it.col())));
        b.upper.assign(static_cast<std::size_t>(b.kd + 1) * b.n, {0.0, 0.0});
        for (int k = 0; k < m.outerSize(); ++k)
            for (Eigen::SparseMatrix<std::complex<double>>::InnerIterator it(m, k); it; ++it)
                if (it.row() <= it.col()) b.at(static_cast<int>(it.row()), static_cast<int>(it.col())) = it.value();
        return b;
    }
};

/// The `count` smallest eigenvalues, ascending.
inline std::vector<double> lowest_eigenvalues(const HermitianBand& band, int count) {
    count = std::min(count, band.n);
    if (count <= 0) return {};
    std::vector<std::complex<double>> ab = band.upper; // destroyed by LAPACK
    std::vector<double> w(band.n);
    std::vector<lapack_int> ifail(band.n);
    std::complex<double> dummy_q{0.0, 0.0};
    std::complex<double> dummy_z{0.0, 0.0};
    lapack_int found = 0;
    const lapack_int info = LAPACKE_zhbevx(LAPACK_COL_MAJOR, 'N', 'I', 'U', band.n, band.kd, ab.data(), band.kd + 1,
                                           &dummy_q, 1, 0.0, 0.0, 1, count, 2.0 * LAPACKE_dlamch('S'), &found,
                                           w.data(), &dummy_z, 1, ifail.data());
    if (info != 0) throw Error("zhbevx failed with info " + std::to_string(info));
    w.resize(static_cast<std::size_t>(found));
    return w;
}

/// Eigenvector for an (already accurate) eigenvalue by inverse iteration.
inline Eigen::VectorXcd eigenvector_near(const HermitianBand& band, double eigenvalue, int iterations = 4) {
    const int n = band.n;
    const int kd = band.kd;
    const int ldab = 3 * kd + 1;
    double scale = 1.0;
    for (const auto& v : band.upper) scale = std::max(scale, std::abs(v));

    // General band storage: (i, j) at row kl + ku + i - j of column j.
    std::vector<std::complex<double>> lu;
    std::vector<lapack_int> piv(n);
    lapack_int info = 1;
    double offset = 64.0 * std::numeric_limits<double>::epsilon() * scale;
    for (int attempt = 0; attempt < 8 && info > 0; ++attempt, offset *= 16.0) {
        const double shift = eigenvalue - offset;
        lu.assign(static_cast<std::size_t>(ldab) * n, {0.0, 0.0});
        for (int j = 0; j < n; ++j) {
            for (int i = std::max(0, j - kd); i <= std::min(n - 1, j + kd); ++i) {
                std::complex<double> v = (i <= j) ? band.at(i, j) : std::conj(band.at(j, i));
                if (i == j) v -= shift;
                lu[static_cast<std::size_t>(2 * kd + i - j) + static_cast<std::size_t>(j) * ldab] = v;
            }
        }
        info = LAPACKE_zgbtrf(LAPACK_COL_MAJOR, n, n, kd, kd, lu.data(), ldab, piv.data());
        if (info < 0) throw Error("zgbtrf failed with info " + std::to_string(info));
    }
    if (info > 0) throw Error("inverse iteration shift stays exactly singular");

    Eigen::VectorXcd x(n);
    // Deterministic, generic start vector.
    for (int k = 0; k < n; ++k) x(k) = std::complex<double>(1.0 + 0.37 * std::sin(1.3 * k + 0.2), 0.11 * std::cos(0.7 * k));
    x.normalize();
    for (int it = 0; it < iterations; ++it) {
        info = LAPACKE_zgbtrs(LAPACK_COL_MAJOR, 'N', n, kd, kd, 1, lu.data(), ldab, piv.data(), x.data(), n);
        if (info != 0) throw Error("zgbtrs failed with info " + std::to_string(info));
        const double norm = x.norm();
        if (!(norm > 0.0) || !std::isfinite(norm)) throw Error("inverse iteration diverged");
        x /= norm;
    }
    // Fix the global phase: largest component real positive.
    Eigen::Index at = 0;
    x.cwiseAbs().maxCoeff(&at);
    x *= std::abs(x(at)) / x(at);
    return x;
}

} // namespace spt::detail
