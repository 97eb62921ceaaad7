#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "spt/green.hpp"

using Catch::Approx;
using namespace spt;

namespace {

LayerStack mirrored(std::vector<Layer> layers) { return {std::move(layers), Boundary::PerfectMirrors}; }

// Roots of sqrt(eps(w)) w L = n pi on an interval where the left side increases.
double cavity_root(const LorentzModel& m, double length, int n, double lo, double hi) {
    return oracle::bisect(
        [&](double w) {
            const double eps = 1.0 + m.strength / (m.omega0 * m.omega0 - w * w);
            return std::sqrt(eps) * w * length - n * M_PI;
        },
        lo, hi);
}

} // namespace

TEST_CASE("vacuum transfer matrix", "[green]") {
    const double d = 1.7;
    const cplx w(0.83, 0.21);
    const auto m = transfer_matrix(mirrored({{d, Material::vacuum()}}), w);
    REQUIRE(std::abs(m(0, 0) - std::cos(w * d)) < 1e-14);
    REQUIRE(std::abs(m(0, 1) - std::sin(w * d) / w) < 1e-14);
    REQUIRE(std::abs(m(1, 0) + w * std::sin(w * d)) < 1e-14);
    REQUIRE(std::abs(m(1, 1) - std::cos(w * d)) < 1e-14);

    const auto small = transfer_matrix(mirrored({{d, Material::vacuum()}}), 1e-9);
    REQUIRE(std::abs(small(0, 0) - 1.0) < 1e-12);
    REQUIRE(std::abs(small(0, 1) - d) < 1e-12);
    REQUIRE(std::abs(small(1, 0)) < 1e-12);
    REQUIRE(std::abs(small.determinant() - 1.0) < 1e-12);

    const auto split = transfer_matrix(mirrored({{0.4, Material::vacuum()}, {1.3, Material::vacuum()}}), w);
    REQUIRE((split - m).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("transfer matrix determinant", "[green][property]") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
        LayerStack s;
        const int layers = 1 + static_cast<int>(u(rng) * 4);
        for (int l = 0; l < layers; ++l) {
            const double pick = u(rng);
            Material mat = pick < 0.3 ? Material::vacuum()
                         : pick < 0.6 ? Material::constant(0.5 + 4 * u(rng))
                                      : Material::lorentz_medium({3 * u(rng) - 1, 0.5 + u(rng), 0.3 * u(rng)});
            s.layers.push_back({0.1 + 1.5 * u(rng), mat});
        }
        const cplx w(4 * u(rng) - 2, 2 * u(rng) - 0.5);
        // ad - bc cancels: rounding grows like |M|^2, so the bound is 1e-10 for
        // O(1) matrices and relative beyond that.
        const auto m = transfer_matrix(s, w);
        const double size = m.cwiseAbs().maxCoeff();
        REQUIRE(std::abs(m.determinant() - 1.0) < 1e-10 * std::max(1.0, size * size));
    }
}

TEST_CASE("stack validation and material poles", "[green]") {
    REQUIRE_THROWS_AS(transfer_matrix(LayerStack{}, 1.0), DomainError);
    REQUIRE_THROWS_AS(transfer_matrix(mirrored({{0.0, Material::vacuum()}}), 1.0), DomainError);
    REQUIRE_THROWS_AS(transfer_matrix(mirrored({{1.0, Material::constant(0.0)}}), 1.0), DomainError);
    const auto lossless = mirrored({{1.0, Material::lorentz_medium({1.0, 1.0, 0.0})}});
    REQUIRE_THROWS_AS(transfer_matrix(lossless, 1.0), PoleError);
    REQUIRE_THROWS_AS(dispersion(lossless, -1.0), PoleError);
}

TEST_CASE("mirrored cavity modes on the real axis", "[green]") {
    SECTION("empty cavity") {
        const double length = 2.3;
        const auto f = DispersionFunction::of(mirrored({{length, Material::vacuum()}}));
        const auto roots = real_axis_roots(f, 0.05, 10.0, 4000);
        REQUIRE(roots.size() == 7);
        for (std::size_t n = 0; n < roots.size(); ++n) REQUIRE(roots[n] == Approx((n + 1) * M_PI / length).epsilon(1e-12));
    }

    SECTION("constant permittivity 4 halves the frequencies") {
        const double length = 1.0;
        const auto f = DispersionFunction::of(mirrored({{0.6, Material::constant(4.0)}, {0.4, Material::constant(4.0)}}));
        const auto roots = real_axis_roots(f, 0.05, 7.0, 4000);
        REQUIRE(roots.size() == 4);
        for (std::size_t n = 0; n < roots.size(); ++n) REQUIRE(roots[n] == Approx((n + 1) * M_PI / (2 * length)).epsilon(1e-12));
    }

    SECTION("Lorentz-filled cavity: two polaritons per order") {
        const LorentzModel m{1.0, 1.0, 0.0};
        const double length = M_PI;
        const auto f = DispersionFunction::of(mirrored({{length, Material::lorentz_medium(m)}}));
        const auto roots = real_axis_roots(f, 0.01, 4.0, 20000);
        const double upper_edge = std::sqrt(2.0);
        for (int n = 1; n <= 3; ++n) {
            const double lower = cavity_root(m, length, n, 1e-9, 1.0 - 1e-12);
            const double upper = cavity_root(m, length, n, upper_edge + 1e-12, 50.0);
            REQUIRE(lower < m.omega0);
            REQUIRE(upper > m.omega0);
            auto found = [&](double r) {
                return std::any_of(roots.begin(), roots.end(), [&](double x) { return std::abs(x - r) < 1e-9; });
            };
            REQUIRE(found(lower));
            REQUIRE(found(upper));
            REQUIRE(std::abs(dispersion(mirrored({{length, Material::lorentz_medium(m)}}), lower)) < 1e-9);
        }
        // No modes in the reststrahlen band where eps < 0.
        for (double r : roots) REQUIRE_FALSE((r > 1.0 + 1e-6 && r < upper_edge - 1e-6));
    }
}

TEST_CASE("empty cavity mode count", "[green][property]") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
        const double length = 0.5 + 3 * u(rng);
        double omega = 1.0 + 12 * u(rng);
        if (std::abs(std::remainder(omega * length / M_PI, 1.0)) < 1e-3) omega += 1e-2;
        const auto f = DispersionFunction::of(mirrored({{length, Material::vacuum()}}));
        const auto roots = real_axis_roots(f, 1e-3, omega, 20000);
        REQUIRE(static_cast<long>(roots.size()) == static_cast<long>(std::floor(omega * length / M_PI)));
    }
}

TEST_CASE("conjugate symmetry", "[green][property]") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto boundary : {Boundary::PerfectMirrors, Boundary::Open})
        for (int trial = 0; trial < 100; ++trial) {
            LayerStack s{{{0.3 + u(rng), Material::constant(1 + 3 * u(rng))},
                          {0.2 + u(rng), Material::lorentz_medium({2 * u(rng), 0.5 + u(rng), 0.2 * u(rng)})},
                          {0.5, Material::vacuum()}},
                         boundary};
            const cplx w(5 * u(rng) - 2.5, 3 * u(rng));
            const cplx a = dispersion(s, -std::conj(w));
            const cplx b = std::conj(dispersion(s, w));
            REQUIRE(std::abs(a - b) <= 1e-10 * std::max(1.0, std::abs(b)));
        }
}

TEST_CASE("open slab", "[green]") {
    SECTION("vacuum slab has no modes") {
        const double d = 1.4;
        const cplx w(0.7, 0.3);
        const cplx expected = -2.0 * cplx(0, 1) * w * std::exp(-cplx(0, 1) * w * d);
        REQUIRE(std::abs(dispersion({{{d, Material::vacuum()}}, Boundary::Open}, w) - expected) < 1e-13);
    }

    SECTION("dielectric slab quasi-normal modes decay") {
        // index n = 2, thickness 1: w_m = (m pi - i ln 3) / 2
        const LayerStack slab{{{1.0, Material::constant(4.0)}}, Boundary::Open};
        for (int m = 1; m <= 3; ++m) {
            const cplx w(m * M_PI / 2, -std::log(3.0) / 2);
            REQUIRE(std::abs(dispersion(slab, w)) < 1e-12);
        }
        REQUIRE(winding_count(DispersionFunction::of(slab), {0.01, 10, 1e-6, 5}) == 0);
    }
}

TEST_CASE("winding count", "[green]") {
    SECTION("passive mirrored Lorentz cavity") {
        for (double gamma : {0.0, 1e-3, 0.1}) {
            const LayerStack s = mirrored({{M_PI, Material::lorentz_medium({1.0, 1.0, gamma})}});
            REQUIRE(winding_count(DispersionFunction::of(s), {0.01, 10, 1e-6, 5}) == 0);
        }
        // Every mode of the lossless cavity sits on the real axis.
        const LayerStack lossless = mirrored({{M_PI, Material::lorentz_medium({1.0, 1.0, 0.0})}});
        const auto f = DispersionFunction::of(lossless);
        const auto roots = real_axis_roots(f, 0.01, 10.0, 20000);
        REQUIRE(roots.size() >= 10);
        for (double r : roots) REQUIRE(std::abs(f(r)) < 1e-8);
    }

    SECTION("overcritical bulk medium") {
        const LorentzModel over{-2.0, 1.0, 0.0};
        const auto f = bulk_dispersion(over, 0.2);
        REQUIRE(winding_count(f, {-2, 2, 1e-6, 0.5}) == 1);
        // The quartic has a second imaginary-axis root, kappa ~ 0.957.
        REQUIRE(winding_count(f, {-2, 2, 1e-6, 5}) == 2);
    }

    SECTION("high-frequency strip") {
        const LayerStack s = mirrored({{1.0, Material::constant(2.0)}, {0.5, Material::vacuum()}});
        REQUIRE(winding_count(DispersionFunction::of(s), {20, 30, 0.1, 1}) == 0);
        REQUIRE(winding_count(bulk_dispersion({-2.0, 1.0, 0.0}, 0.2), {20, 30, 0.1, 1}) == 0);
    }

    SECTION("zeros of a known polynomial") {
        const auto f = DispersionFunction::plain([](cplx w) { return (w - cplx(0.3, 0.4)) * (w - cplx(-1, 2)) * (w - cplx(0, -1)); });
        REQUIRE(winding_count(f, {-2, 2, 1e-6, 3}) == 2);
        REQUIRE(winding_count(f, {0, 1, 0.1, 1}) == 1);
    }

    SECTION("contour zero triggers a retry") {
        const auto f = DispersionFunction::plain([](cplx w) { return w - cplx(0.5, 0.5); });
        const auto r = winding_details(f, {0, 1, 0.5, 1});
        REQUIRE(r.attempts > 1);
        REQUIRE(r.winding == (r.region.contains({0.5, 0.5}) ? 1 : 0));
        const auto zero = DispersionFunction::plain([](cplx) { return cplx(0.0, 0.0); });
        REQUIRE_THROWS_AS(winding_count(zero, {0, 1, 0.5, 1}), ContourError);
    }

    SECTION("region below the contour floor") {
        const auto f = DispersionFunction::plain([](cplx w) { return w; });
        REQUIRE_THROWS_AS(winding_count(f, {0, 1, 0.0, 1}), DomainError);
        REQUIRE_THROWS_AS(winding_count(f, {1, 0, 0.1, 1}), DomainError);
    }
}

TEST_CASE("causality: passive stacks have no upper-half-plane modes", "[green][property]") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 24; ++trial) {
        LayerStack s;
        s.boundary = trial % 2 ? Boundary::Open : Boundary::PerfectMirrors;
        const int layers = 1 + static_cast<int>(u(rng) * 3);
        for (int l = 0; l < layers; ++l) {
            const double pick = u(rng);
            const double gamma = u(rng) < 0.3 ? 0.0 : 0.2 * u(rng);
            Material mat = pick < 0.3 ? Material::vacuum()
                         : pick < 0.6 ? Material::constant(1.0 + 5 * u(rng))
                                      : Material::lorentz_medium({0.1 + 2 * u(rng), 0.5 + u(rng), gamma});
            s.layers.push_back({0.2 + 1.5 * u(rng), mat});
        }
        const double re_lo = 0.01 + 2 * u(rng);
        const Region region{re_lo, re_lo + 0.5 + 4 * u(rng), 1e-6 + 0.2 * u(rng) * u(rng), 0.5 + 3 * u(rng)};
        INFO("trial " << trial);
        REQUIRE(winding_count(DispersionFunction::of(s), region) == 0);
    }
}

TEST_CASE("pole location", "[green]") {
    const LorentzModel over{-2.0, 1.0, 0.0};

    SECTION("stable stack") {
        const auto census = locate_poles(DispersionFunction::of(mirrored({{M_PI, Material::lorentz_medium({1, 1, 0.05})}})),
                                         {0.01, 10, 1e-6, 5});
        REQUIRE(census.winding == 0);
        REQUIRE(census.poles.empty());
    }

    SECTION("overcritical bulk") {
        const auto census = locate_poles(bulk_dispersion(over, 0.2), {-2, 2, 1e-6, 0.5});
        REQUIRE(census.winding == 1);
        REQUIRE(census.poles.size() == 1);
        const auto& p = census.poles[0];
        REQUIRE(p.refined);
        REQUIRE(p.abs_D < 1e-9);
        REQUIRE(std::abs(p.omega.real()) < 1e-8);
        REQUIRE(std::abs(p.omega.imag() - oracle::bulk_growth_rate(-2.0, 1.0, 0.2)) < 1e-8);
    }

    SECTION("two independent overcritical blocks") {
        const auto census = locate_poles(product({bulk_dispersion(over, 0.2), bulk_dispersion(over, 0.3)}), {-2, 2, 1e-6, 0.5});
        REQUIRE(census.winding == 2);
        REQUIRE(census.poles.size() == 2);
        int total = 0;
        for (const auto& p : census.poles) {
            REQUIRE(p.refined);
            total += p.multiplicity;
        }
        REQUIRE(total == census.winding);
        REQUIRE(std::abs(census.poles[0].omega - cplx(0, oracle::bulk_growth_rate(-2.0, 1.0, 0.2))) < 1e-8);
        REQUIRE(std::abs(census.poles[1].omega - cplx(0, oracle::bulk_growth_rate(-2.0, 1.0, 0.3))) < 1e-8);
    }

    SECTION("census multiplicities add up to the winding") {
        const auto f = DispersionFunction::plain([](cplx w) {
            return (w - cplx(0.3, 0.4)) * (w - cplx(0.3, 0.4)) * (w - cplx(-1, 2)) * (w - cplx(1.5, 0.2));
        });
        const auto census = locate_poles(f, {-2, 2, 1e-6, 3});
        REQUIRE(census.winding == 4);
        int total = 0;
        for (const auto& p : census.poles) total += p.multiplicity;
        REQUIRE(total == 4);
    }
}

TEST_CASE("Kramers-Kronig residual", "[green]") {
    const LorentzModel m{1.0, 1.0, 0.1};
    REQUIRE(kk_residual(m, uniform_grid(50.0, 10000)) < 1e-2);

    double previous = std::numeric_limits<double>::infinity();
    for (std::size_t n : {2500u, 5000u, 10000u, 20000u}) {
        const double r = kk_residual(m, uniform_grid(50.0, n));
        REQUIRE(r < previous);
        previous = r;
    }

    REQUIRE(kk_residual({0.0, 1.0, 0.1}, uniform_grid(50.0, 1000)) == 0.0);
    REQUIRE_THROWS_AS(kk_residual({1.0, 1.0, 0.0}, uniform_grid(50.0, 1000)), DomainError);
    std::vector<double> uneven = uniform_grid(50.0, 100);
    uneven[40] += 0.01;
    REQUIRE_THROWS_AS(kk_residual(m, uneven), DomainError);
}
