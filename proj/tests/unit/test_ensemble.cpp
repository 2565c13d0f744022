#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "prethermal/ensemble.hpp"
#include "prethermal/error.hpp"

using namespace prethermal;
using namespace prethermal::ensemble;

namespace {

/// Integral of g(A) over the unit sphere with Gauss-Legendre in cos(theta) and
/// a uniform rule in phi.
template <class F>
double sphere_integral(F g, int n_theta = 64, int n_phi = 64) {
    const auto [x, w] = oracle::gauss_legendre(n_theta);
    double total = 0.0;
    for (int i = 0; i < n_theta; ++i) {
        const double st = std::sqrt(1.0 - x[i] * x[i]);
        for (int j = 0; j < n_phi; ++j) {
            const double phi = 2.0 * std::numbers::pi * (j + 0.5) / n_phi;
            const Vec3 d(st * std::cos(phi), st * std::sin(phi), x[i]);
            total += w[i] * (2.0 * std::numbers::pi / n_phi) * g(angular_factor(d));
        }
    }
    return total;
}

}  // namespace

TEST_CASE("angular factor at the poles and equator") {
    CHECK(angular_factor(Vec3(0, 0, 1)) == doctest::Approx(2.0));
    CHECK(angular_factor(Vec3(1, 0, 0)) == doctest::Approx(-1.0));
    CHECK_THROWS_AS(angular_factor(Vec3(0, 0, 2)), Error);
}

TEST_CASE("sphere average of the angular factor cancels") {
    CHECK(std::abs(sphere_integral([](double a) { return a; })) < 1e-12);
    CHECK(sphere_integral([](double a) { return a * a; }) == doctest::Approx(0.8 * 4.0 * std::numbers::pi).epsilon(1e-10));
}

TEST_CASE("pair coupling") {
    const Vec3 a(0, 0, 0), b(0, 0, 1.0), c(1.0, 0, 0);
    CHECK(pair_coupling(a, b) == doctest::Approx(2.0 * kJ0));
    CHECK(pair_coupling(a, c) == doctest::Approx(-kJ0));
    const Vec3 p(0.3, -1.2, 0.77), q(-0.9, 0.4, 0.1);
    CHECK(pair_coupling(p, q) == pair_coupling(q, p));
    try {
        pair_coupling(a, Vec3(0.1, 0, 0));
        FAIL("expected degenerate_pair");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::degenerate_pair);
    }
}

TEST_CASE("local energy scale matches the cutoff integral") {
    const double rho = ppm_to_density(0.7);
    CHECK(rho == doctest::Approx(0.7e-6 * 176.0));
    // J^2 integrated over r >= rho^{-1/3}: substitute u = a / r on (0, 1].
    const double a = std::cbrt(1.0 / rho);
    const auto [x, w] = oracle::gauss_legendre(40);
    double radial = 0.0;
    for (int i = 0; i < 40; ++i) {
        const double u = 0.5 * (x[i] + 1.0);
        radial += 0.5 * w[i] * u * u;  // int r^2 dr / r^6 = a^{-3} int u^2 du
    }
    radial /= a * a * a;
    const double angular = sphere_integral([](double v) { return v * v; });
    const double numeric = std::sqrt(rho * kJ0 * kJ0 * angular * radial);
    CHECK(local_energy_scale(rho) == doctest::Approx(numeric).epsilon(1e-6));
    CHECK(local_energy_scale(rho) == doctest::Approx(std::sqrt(16.0 * std::numbers::pi / 15.0) * kJ0 * rho));
}

TEST_CASE("cluster geometry") {
    const double rho = ppm_to_density(0.7);
    const double r = cluster_radius(9, rho);
    CHECK(4.0 / 3.0 * std::numbers::pi * r * r * r == doctest::Approx(8.0 / rho));
    CHECK(std::pow(box_edge(9, rho), 3) == doctest::Approx(9.0 / rho));
}

TEST_CASE("sampled ensembles honour geometry, cutoff and seed") {
    const double rho = ppm_to_density(0.7);
    const SpinEnsemble e = sample_ensemble(9, rho, Geometry::central_spin_sphere, 42);
    REQUIRE(e.size() == 9);
    CHECK(e.positions[0].norm() == 0.0);
    const double r = cluster_radius(9, rho);
    for (std::size_t i = 0; i < e.size(); ++i) {
        CHECK(e.positions[i].norm() <= r);
        for (std::size_t j = i + 1; j < e.size(); ++j) CHECK((e.positions[i] - e.positions[j]).norm() >= kCutoffRadius);
    }
    const SpinEnsemble again = sample_ensemble(9, rho, Geometry::central_spin_sphere, 42);
    CHECK(again.positions == e.positions);
    const SpinEnsemble other = sample_ensemble(9, rho, Geometry::central_spin_sphere, 43);
    CHECK(other.positions != e.positions);

    const SpinEnsemble box = sample_ensemble(6, DensitySpec{1.0}, Geometry::uniform_box, 1);
    const double half = 0.5 * box_edge(6, ppm_to_density(1.0));
    for (const Vec3& p : box.positions) CHECK(p.cwiseAbs().maxCoeff() <= half);

    const SpinEnsemble single = sample_ensemble(1, rho, Geometry::uniform_box, 5);
    CHECK(single.positions[0].norm() == 0.0);
}

TEST_CASE("overpacked ensembles fail") {
    try {
        sample_ensemble(40, 100.0, Geometry::uniform_box, 3);
        FAIL("expected density_too_high");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::density_too_high);
    }
    CHECK_THROWS_AS(sample_ensemble(0, 1e-4, Geometry::uniform_box, 3), Error);
    CHECK_THROWS_AS(sample_ensemble(3, -1.0, Geometry::uniform_box, 3), Error);
}

TEST_CASE("coupling table and moments") {
    const SpinEnsemble e = sample_ensemble(5, ppm_to_density(2.0), Geometry::central_spin_sphere, 11);
    const CouplingTable t = CouplingTable::from_ensemble(e);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) {
            if (i == j) continue;
            CHECK(t(i, j) == t(j, i));
            CHECK(t(i, j) == pair_coupling(e.positions[i], e.positions[j]));
        }
    const CouplingMoments m = coupling_moments(e, 200000, 9);
    const double j_at_r = kJ0 / std::pow(m.radius, 3);
    CHECK(std::abs(m.mean) < 0.02 * j_at_r);
    CHECK(m.rms == doctest::Approx(std::sqrt(0.8) * j_at_r).epsilon(0.02));
    CHECK(m.radial_rms == doctest::Approx(local_energy_scale(e.density)).epsilon(0.02));
}

TEST_CASE("ensemble JSON round trip") {
    const SpinEnsemble e = sample_ensemble(4, ppm_to_density(1.0), Geometry::uniform_box, 77);
    const SpinEnsemble back = ensemble_from_json(to_json(e));
    CHECK(back.seed == 77);
    CHECK(back.geometry == Geometry::uniform_box);
    for (std::size_t i = 0; i < 4; ++i) CHECK((back.positions[i] - e.positions[i]).norm() < 1e-6 * e.positions[i].norm() + 1e-12);
    CHECK(geometry_from_string(to_string(Geometry::central_spin_sphere)) == Geometry::central_spin_sphere);
    CHECK_THROWS_AS(geometry_from_string("torus"), Error);
}
