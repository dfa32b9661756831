#include <doctest.h>

#include <cmath>

#include "grw/fiber.hpp"

using namespace grw;

namespace {

ScalarField torus_mode(const FiberGrid& g, int kx, int ky) {
    ScalarField s(g);
    const double L = g.length();
    for (int i = 0; i < g.nx(); ++i)
        for (int j = 0; j < g.ny(); ++j)
            s(i, j) = std::sin(2.0 * M_PI * kx * g.x_of(i) / L) *
                      std::cos(2.0 * M_PI * ky * g.y_of(j) / L);
    return s;
}

}  // namespace

TEST_CASE("grid construction and constants") {
    const auto t = FiberGrid::torus(16, 16, 2.0);
    CHECK(t.ricci_const() == 0.0);
    CHECK(t.scalar_const() == 0.0);
    CHECK(t.universal_cover_parabolic());
    CHECK(t.is_compact());
    CHECK(t.scalar_const() == doctest::Approx(t.dim() * t.ricci_const()));

    const auto s = FiberGrid::sphere(16, 32, 2.0);
    CHECK(s.ricci_const() == doctest::Approx(0.25));
    CHECK(s.scalar_const() == doctest::Approx(0.5));
    CHECK(s.scalar_const() == doctest::Approx(s.dim() * s.ricci_const()));
    CHECK(s.is_compact());
    CHECK_FALSE(s.universal_cover_parabolic());
    CHECK(s.sect_lower_bound() == doctest::Approx(0.25));

    CHECK_THROWS_AS(FiberGrid::sphere(16, 31, 1.0), error);  // odd n_phi
    CHECK_THROWS_AS(FiberGrid::torus(2, 16, 1.0), error);
}

TEST_CASE("gradient of a constant is exactly zero") {
    for (const auto& g : {FiberGrid::torus(12, 12, 1.0), FiberGrid::sphere(12, 24, 1.0)}) {
        const ScalarField c(g, 3.7);
        const auto grad = grad_F(g, c);
        for (double v : grad.x) CHECK(v == 0.0);
        for (double v : grad.y) CHECK(v == 0.0);
    }
}

TEST_CASE("torus gradient converges at second order") {
    std::vector<double> hs, errs;
    for (int n : {32, 64, 128}) {
        const auto g = FiberGrid::torus(n, n, 1.0);
        const auto phi = torus_mode(g, 1, 0);
        const auto grad = grad_F(g, phi);
        double err = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double exact = 2.0 * M_PI * std::cos(2.0 * M_PI * g.x_of(i));
                err = std::max(err, std::abs(grad.vx(i, j) - exact));
            }
        hs.push_back(g.hx());
        errs.push_back(err);
    }
    CHECK(fit_order(hs, errs) > 1.9);
}

TEST_CASE("sphere gradient of the z-coordinate") {
    // phi = cos(theta): |grad phi|^2 = (1 - phi^2)/r^2
    std::vector<double> hs, errs;
    for (int n : {16, 32, 64}) {
        const auto g = FiberGrid::sphere(n, 2 * n, 1.0);
        ScalarField phi(g);
        for (int i = 0; i < g.nx(); ++i)
            for (int j = 0; j < g.ny(); ++j) phi(i, j) = std::cos(g.x_of(i));
        const auto n2 = norm2_F(g, grad_F(g, phi));
        double err = 0.0;
        for (int i = 0; i < g.nx(); ++i)
            for (int j = 0; j < g.ny(); ++j)
                err = std::max(err, std::abs(n2(i, j) - (1.0 - sq(phi(i, j)))));
        hs.push_back(g.hx());
        errs.push_back(err);
    }
    CHECK(errs.back() < 1e-3);
    CHECK(fit_order(hs, errs) > 1.9);
}

TEST_CASE("divergence: analytic modes and the divergence theorem") {
    const auto g = FiberGrid::torus(64, 64, 1.0);
    const auto phi = torus_mode(g, 2, 1);

    SUBCASE("div of zero field is zero") {
        const VectorField zero(g);
        const auto d = div_F(g, zero);
        for (double v : d.v) CHECK(v == 0.0);
    }

    SUBCASE("div(grad(mode)) approximates the flat Laplacian") {
        const auto lap = div_F(g, grad_F(g, phi));
        const double k2 = sq(2.0 * M_PI * 2.0) + sq(2.0 * M_PI * 1.0);
        double err = 0.0;
        for (int i = 0; i < g.nx(); ++i)
            for (int j = 0; j < g.ny(); ++j)
                err = std::max(err, std::abs(lap(i, j) + k2 * phi(i, j)));
        CHECK(err < 0.05 * k2);  // coarse sanity; order checked elsewhere
    }

    SUBCASE("divergence theorem on the torus is exact to roundoff") {
        VectorField X(g);
        for (int i = 0; i < g.nx(); ++i)
            for (int j = 0; j < g.ny(); ++j) {
                X.vx(i, j) = std::sin(2 * M_PI * g.x_of(i)) + 0.3 * std::cos(2 * M_PI * g.y_of(j));
                X.vy(i, j) = std::cos(2 * M_PI * (g.x_of(i) + g.y_of(j)));
            }
        CHECK(std::abs(integrate(g, div_F(g, X))) < 1e-10);
    }
}

TEST_CASE("divergence theorem holds on the sphere too") {
    // the pole-ghost closure cancels under the half-turn shift, so the grid
    // sum of a divergence is exact to roundoff, not merely O(h^2)
    for (int n : {16, 32, 64}) {
        const auto g = FiberGrid::sphere(n, 2 * n, 1.0);
        ScalarField phi(g);
        for (int i = 0; i < g.nx(); ++i)
            for (int j = 0; j < g.ny(); ++j) {
                const double th = g.x_of(i), ph = g.y_of(j);
                phi(i, j) = std::sin(th) * std::cos(ph) + 2.0 * std::cos(th);
            }
        const auto X = grad_F(g, phi);
        CHECK(std::abs(integrate(g, div_F(g, X))) < 1e-10);
    }
}

TEST_CASE("norm2 basics") {
    const auto g = FiberGrid::torus(8, 8, 1.0);
    VectorField X(g);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) X.vx(i, j) = 1.0;
    const auto n2 = norm2_F(g, X);
    for (double v : n2.v) CHECK(v == 1.0);

    const auto s = FiberGrid::sphere(16, 32, 1.5);
    VectorField Y(s);
    for (int i = 0; i < s.nx(); ++i)
        for (int j = 0; j < s.ny(); ++j) Y.vy(i, j) = 1.0;
    const auto m2 = norm2_F(s, Y);
    for (int i = 0; i < s.nx(); ++i)
        CHECK(m2(i, 0) == doctest::Approx(sq(1.5 * std::sin(s.x_of(i)))).epsilon(1e-13));
}

TEST_CASE("integrate: areas and parity") {
    const auto g = FiberGrid::torus(32, 32, 2.5);
    CHECK(integrate(g, ScalarField(g, 1.0)) == doctest::Approx(2.5 * 2.5).epsilon(1e-13));

    const auto one_mode = torus_mode(g, 1, 0);
    CHECK(std::abs(integrate(g, one_mode)) < 1e-10);

    const auto s = FiberGrid::sphere(48, 96, 1.0);
    CHECK(integrate(s, ScalarField(s, 1.0)) == doctest::Approx(4.0 * M_PI).epsilon(1e-12));

    // cos^2(theta) integrates to 4 pi / 3 on the unit sphere
    ScalarField c2(s);
    for (int i = 0; i < s.nx(); ++i)
        for (int j = 0; j < s.ny(); ++j) c2(i, j) = sq(std::cos(s.x_of(i)));
    CHECK(integrate(s, c2) == doctest::Approx(4.0 * M_PI / 3.0).epsilon(1e-3));  // midpoint rule, O(h^2)
}

TEST_CASE("summation by parts") {
    SUBCASE("torus: exact to roundoff") {
        const auto g = FiberGrid::torus(48, 48, 1.0);
        const auto phi = torus_mode(g, 1, 2);
        VectorField X(g);
        for (int i = 0; i < g.nx(); ++i)
            for (int j = 0; j < g.ny(); ++j) {
                X.vx(i, j) = std::cos(2 * M_PI * g.y_of(j));
                X.vy(i, j) = std::sin(2 * M_PI * g.x_of(i)) * std::cos(2 * M_PI * g.y_of(j));
            }
        const double a = integrate(g, [&] {
            ScalarField p(g);
            const auto d = div_F(g, X);
            for (int i = 0; i < g.nx(); ++i)
                for (int j = 0; j < g.ny(); ++j) p(i, j) = phi(i, j) * d(i, j);
            return p;
        }());
        const double b = integrate(g, inner_F(g, grad_F(g, phi), X));
        CHECK(std::abs(a + b) < 1e-11);
    }

    SUBCASE("sphere: O(h^2)") {
        std::vector<double> hs, errs;
        double mag = 0.0;
        for (int n : {16, 32, 64}) {
            const auto g = FiberGrid::sphere(n, 2 * n, 1.0);
            ScalarField phi(g), psi(g);
            for (int i = 0; i < g.nx(); ++i)
                for (int j = 0; j < g.ny(); ++j) {
                    const double th = g.x_of(i), ph = g.y_of(j);
                    phi(i, j) = std::cos(th) + 0.4 * sq(std::sin(th)) * std::cos(2.0 * ph);
                    psi(i, j) = std::cos(th) + std::sin(th) * std::sin(ph) + 0.3 * sq(std::cos(th));
                }
            const auto X = grad_F(g, psi);
            ScalarField p(g);
            const auto d = div_F(g, X);
            for (int i = 0; i < g.nx(); ++i)
                for (int j = 0; j < g.ny(); ++j) p(i, j) = phi(i, j) * d(i, j);
            const double a = integrate(g, p);
            const double b = integrate(g, inner_F(g, grad_F(g, phi), X));
            mag = std::max(std::abs(a), std::abs(b));
            hs.push_back(g.hx());
            errs.push_back(std::abs(a + b) + 1e-18);
        }
        CHECK(mag > 0.1);  // the pairing itself is O(1), not a hidden symmetry
        CHECK(fit_order(hs, errs) > 1.5);
    }
}

TEST_CASE("shape mismatch raises dimension errors") {
    const auto g1 = FiberGrid::torus(8, 8, 1.0);
    const auto g2 = FiberGrid::torus(16, 16, 1.0);
    const ScalarField s(g2);
    CHECK_THROWS_AS(grad_F(g1, s), dimension_error);
    const VectorField X(g2);
    CHECK_THROWS_AS(div_F(g1, X), dimension_error);
    CHECK_THROWS_AS(norm2_F(g1, X), dimension_error);
    CHECK_THROWS_AS(integrate(g1, s), dimension_error);
}

TEST_CASE("fiber operator convergence orders over three refinements") {
    // grad and div on a resolved torus mode, measured jointly
    std::vector<double> hs, ge, de;
    for (int n : {32, 64, 128}) {
        const auto g = FiberGrid::torus(n, n, 1.0);
        const auto phi = torus_mode(g, 1, 1);
        const auto grad = grad_F(g, phi);
        const auto lap = div_F(g, grad);
        const double k = 2.0 * M_PI;
        double eg = 0.0, ed = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double gx = k * std::cos(k * g.x_of(i)) * std::cos(k * g.y_of(j));
                eg = std::max(eg, std::abs(grad.vx(i, j) - gx));
                ed = std::max(ed, std::abs(lap(i, j) + 2.0 * k * k * phi(i, j)));
            }
        hs.push_back(g.hx());
        ge.push_back(eg);
        de.push_back(ed);
    }
    CHECK(fit_order(hs, ge) > 1.9);
    CHECK(fit_order(hs, de) > 1.9);
}
