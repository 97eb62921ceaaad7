#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "oracles.hpp"
#include "spt/dicke.hpp"

using Catch::Approx;
using namespace spt;

namespace {

DickeConfig resonant(int n_atoms, int cutoff, double g, CouplingForm form = CouplingForm::YCoupling,
                     QuadTerm quad = QuadTerm::None) {
    DickeConfig c;
    c.n_atoms = n_atoms;
    c.fock_cutoff = cutoff;
    c.g = g;
    c.coupling_form = form;
    c.quad_term = quad;
    return c;
}

double max_asymmetry(const SparseC& h) {
    const Eigen::MatrixXcd d(h);
    return (d - d.adjoint()).cwiseAbs().maxCoeff();
}

} // namespace

TEST_CASE("decoupled spectrum", "[dicke]") {
    auto cfg = resonant(3, 6, 0.0);
    cfg.omega_a = 1.3;
    cfg.omega_c = 0.7;
    cfg.levels = 12;
    const auto r = ground_observables(cfg);

    std::vector<double> exact;
    for (int n = 0; n <= cfg.fock_cutoff; ++n)
        for (int e = 0; e <= cfg.n_atoms; ++e) exact.push_back(cfg.omega_c * n + cfg.omega_a * (e - 1.5));
    std::sort(exact.begin(), exact.end());

    REQUIRE(r.eigenvalues.size() == 12);
    for (std::size_t k = 0; k < r.eigenvalues.size(); ++k) REQUIRE(r.eigenvalues[k] == Approx(exact[k]).margin(1e-12));
    REQUIRE(r.ground_energy_per_atom == Approx(-0.65).margin(1e-14));
    REQUIRE(r.photon_density == Approx(0.0).margin(1e-14));
    REQUIRE(r.field_quadrature == Approx(0.0).margin(1e-14));
    REQUIRE(r.parity == 1.0);
}

TEST_CASE("single atom in the rotating-wave form", "[dicke]") {
    auto cfg = resonant(1, 1, 0.1, CouplingForm::RotatingWave);
    const SparseC h = build_dicke(cfg);
    REQUIRE(h.rows() == 4);

    // |n=0, g> is uncoupled; |0, e> and |1, g> mix by g.
    const Eigen::MatrixXcd d(h);
    REQUIRE(std::abs(d(cfg.index(0, 0), cfg.index(0, 1))) == 0.0);
    REQUIRE(std::abs(d(cfg.index(0, 1), cfg.index(1, 0))) == Approx(0.1).epsilon(1e-14));

    const auto r = ground_observables(cfg);
    REQUIRE(r.ground_energy == Approx(-0.5).margin(1e-13));
    REQUIRE(r.eigenvalues[1] == Approx(0.4).margin(1e-13));
}

TEST_CASE("Hamiltonian is Hermitian and parity-symmetric", "[dicke][property]") {
    for (auto form : {CouplingForm::RotatingWave, CouplingForm::YCoupling, CouplingForm::XCoupling})
        for (auto quad : {QuadTerm::None, QuadTerm::A2, QuadTerm::P2})
            for (int n_atoms : {1, 2, 5}) {
                auto cfg = resonant(n_atoms, 9, 0.83, form, quad);
                cfg.omega_a = 1.1;
                const SparseC h = build_dicke(cfg);
                REQUIRE(h.rows() == static_cast<Eigen::Index>((n_atoms + 1) * 10));
                REQUIRE(max_asymmetry(h) < 1e-12);
                REQUIRE(parity_commutator_norm(h, parity_diagonal(cfg)) < 1e-12);
            }
}

TEST_CASE("quadratic terms", "[dicke]") {
    const double g = 0.6;
    const auto base = build_dicke(resonant(2, 5, g));

    auto a2cfg = resonant(2, 5, g, CouplingForm::YCoupling, QuadTerm::A2);
    a2cfg.omega_a = 2.0;
    auto ref = a2cfg;
    ref.quad_term = QuadTerm::None;
    const Eigen::MatrixXcd a2 = Eigen::MatrixXcd(build_dicke(a2cfg)) - Eigen::MatrixXcd(build_dicke(ref));
    // (g^2 / omega_a) <n|(a + a^dag)^2|n> on |n=3, e=1>
    REQUIRE(a2(a2cfg.index(3, 1), a2cfg.index(3, 1)).real() == Approx(0.18 * 7.0).epsilon(1e-14));
    REQUIRE(a2(a2cfg.index(3, 1), a2cfg.index(5, 1)).real() == Approx(0.18 * std::sqrt(20.0)).epsilon(1e-14));
    // Projection keeps the top Fock level at 2 n_max + 1.
    REQUIRE(a2(a2cfg.index(5, 0), a2cfg.index(5, 0)).real() == Approx(0.18 * 11.0).epsilon(1e-14));

    auto p2cfg = resonant(2, 5, g, CouplingForm::YCoupling, QuadTerm::P2);
    p2cfg.omega_c = 3.0;
    ref = p2cfg;
    ref.quad_term = QuadTerm::None;
    const Eigen::MatrixXcd p2 = Eigen::MatrixXcd(build_dicke(p2cfg)) - Eigen::MatrixXcd(build_dicke(ref));
    // (sum sigma^x)^2 for two spins-1/2 in the triplet: diag {2, 4, 2}, <0|.|2> = 2.
    const double pre = g * g / (2.0 * 3.0);
    REQUIRE(p2(p2cfg.index(1, 0), p2cfg.index(1, 0)).real() == Approx(2.0 * pre).epsilon(1e-14));
    REQUIRE(p2(p2cfg.index(1, 1), p2cfg.index(1, 1)).real() == Approx(4.0 * pre).epsilon(1e-14));
    REQUIRE(p2(p2cfg.index(1, 0), p2cfg.index(1, 2)).real() == Approx(2.0 * pre).epsilon(1e-14));
    REQUIRE(base.nonZeros() > 0);
}

TEST_CASE("ground energy against a product-space dense oracle", "[dicke]") {
    auto cfg = resonant(4, 40, 1.0, CouplingForm::YCoupling, QuadTerm::A2);
    const auto r = ground_observables(cfg);
    REQUIRE(r.converged);

    const double reference = oracle::dicke_product_space_ground(4, 80, 1.0, 1.0, 1.0, /*a2=*/true);
    REQUIRE(r.ground_energy == Approx(reference).epsilon(1e-8));
}

TEST_CASE("finite-N parity forbids a field amplitude", "[dicke]") {
    for (auto form : {CouplingForm::YCoupling, CouplingForm::XCoupling})
        for (auto quad : {QuadTerm::None, QuadTerm::A2, QuadTerm::P2})
            for (double g : {0.3, 0.7, 1.5}) {
                const auto r = ground_observables(resonant(6, 40, g, form, quad));
                REQUIRE(std::abs(r.field_quadrature) < 1e-10);
                REQUIRE(std::abs(std::abs(r.parity) - 1.0) < 1e-8);
            }
}

TEST_CASE("cutoff is variational", "[dicke][property]") {
    for (auto quad : {QuadTerm::None, QuadTerm::A2, QuadTerm::P2}) {
        double previous = std::numeric_limits<double>::infinity();
        for (int cutoff = 2; cutoff <= 40; cutoff += 3) {
            const double e0 = ground_observables(resonant(5, cutoff, 0.9, CouplingForm::XCoupling, quad)).ground_energy;
            REQUIRE(e0 <= previous + 1e-12);
            previous = e0;
        }
    }
}

TEST_CASE("automatic cutoff", "[dicke]") {
    auto cfg = resonant(8, 1, 1.0);
    REQUIRE(initial_fock_cutoff(cfg) == 42);
    const auto r = converged_observables(cfg);
    REQUIRE(r.converged);
    REQUIRE(r.fock_cutoff >= 42);

    cfg.max_dimension = 500; // admits n_max = 42 but not its doubling
    REQUIRE_FALSE(converged_observables(cfg).converged);
}

TEST_CASE("photon density approaches mean field from below", "[dicke]") {
    const double mean_field = oracle::dicke_mean_field_density(1.0, 1.0, 1.0);
    // The minimizer is resolved to ~sqrt(eps) on a flat minimum.
    REQUIRE(mean_field == Approx(0.9375).epsilon(1e-7));

    double previous = 0.0;
    for (int n_atoms : {4, 8, 16}) {
        const auto r = converged_observables(resonant(n_atoms, 1, 1.0));
        REQUIRE(r.converged);
        REQUIRE(r.photon_density < mean_field);
        REQUIRE(r.photon_density > previous);
        previous = r.photon_density;
    }
    REQUIRE(mean_field - previous < 5e-3);
}

TEST_CASE("order-parameter sweep", "[dicke]") {
    SECTION("zero coupling only") {
        const auto rows = sweep_order_parameter(resonant(4, 1, 0.0), {0.0});
        REQUIRE(rows.size() == 1);
        REQUIRE(rows[0].result.photon_density == Approx(0.0).margin(1e-15));
    }

    SECTION("descending grid rejected") {
        REQUIRE_THROWS_AS(sweep_order_parameter(resonant(4, 1, 0.0), {0.5, 0.2}), DomainError);
    }

    SECTION("A2 suppresses the photon number pointwise") {
        std::vector<double> grid;
        for (int k = 0; k <= 30; ++k) grid.push_back(0.1 * k);
        for (int n_atoms : {4, 8}) {
            auto plain = resonant(n_atoms, 60, 0.0);
            auto with_a2 = resonant(n_atoms, 60, 0.0, CouplingForm::YCoupling, QuadTerm::A2);
            const auto a = sweep_order_parameter(plain, grid, {false, 2});
            const auto b = sweep_order_parameter(with_a2, grid, {false, 2});
            for (std::size_t k = 0; k < grid.size(); ++k) {
                REQUIRE(a[k].g == grid[k]);
                REQUIRE(b[k].result.photon_density <= a[k].result.photon_density + 1e-12);
            }
        }
    }

    SECTION("thread count does not change results") {
        const std::vector<double> grid{0.2, 0.4, 0.6, 0.8};
        const auto one = sweep_order_parameter(resonant(3, 1, 0.0), grid, {true, 1});
        const auto four = sweep_order_parameter(resonant(3, 1, 0.0), grid, {true, 4});
        for (std::size_t k = 0; k < grid.size(); ++k) {
            REQUIRE(one[k].result.ground_energy == four[k].result.ground_energy);
            REQUIRE(one[k].result.photon_density == four[k].result.photon_density);
        }
    }
}

TEST_CASE("bosonization commutator", "[dicke]") {
    REQUIRE(commutator_deviation(5, 0) == Approx(0.0).margin(1e-14));
    REQUIRE(commutator_deviation(6, 6) == Approx(2.0).margin(1e-12));
    REQUIRE(commutator_deviation(4, 1) == Approx(0.5).margin(1e-12));
    for (int n_atoms = 1; n_atoms <= 8; ++n_atoms)
        for (int n = 0; n <= n_atoms; ++n)
            REQUIRE(std::abs(commutator_deviation(n_atoms, n) - 2.0 * n / n_atoms) < 1e-12);

    REQUIRE_THROWS_AS(commutator_deviation(4, 5), DomainError);
    REQUIRE_THROWS_AS(commutator_deviation(4, -1), DomainError);
}

TEST_CASE("Dicke configuration errors", "[dicke]") {
    REQUIRE_THROWS_AS(build_dicke(resonant(0, 4, 0.1)), DomainError);
    REQUIRE_THROWS_AS(build_dicke(resonant(2, 0, 0.1)), DomainError);
    auto cfg = resonant(2, 4, -0.1);
    REQUIRE_THROWS_AS(build_dicke(cfg), DomainError);
    cfg = resonant(100, 3000, 0.1);
    REQUIRE_THROWS_AS(build_dicke(cfg), ConfigurationError);
    cfg.max_dimension = 400000;
    REQUIRE_NOTHROW(cfg.validate());
}
