#include <doctest.h>

#include <cmath>

#include "grw/warping.hpp"

using namespace grw;

namespace {

WarpingFunction cosh_warping() {
    return WarpingFunction::make_custom([](double t) { return std::cosh(t); },
                                        [](double t) { return std::sinh(t); },
                                        [](double t) { return std::cosh(t); }, Interval::all(), 0.0);
}

}  // namespace

TEST_CASE("interval invariants") {
    CHECK_THROWS_AS(Interval(1.0, 1.0), error);
    CHECK_THROWS_AS(Interval(2.0, -1.0), error);
    Interval I(-1.0, 1.0);
    CHECK(I.contains(0.0));
    CHECK_FALSE(I.contains(1.0));  // open interval
    CHECK(Interval::all().contains(1e12));
}

TEST_CASE("eval closed forms") {
    const auto c = WarpingFunction::make(WarpingFamily::constant, {3.0}, Interval::all());
    for (double t : {-2.0, 0.0, 5.0}) {
        const auto e = c.eval(t);
        CHECK(e.f == 3.0);
        CHECK(e.fp == 0.0);
        CHECK(e.fpp == 0.0);
        CHECK(e.logfpp == 0.0);
    }

    // exponential families have (log f)'' = 0 identically
    const auto ex = WarpingFunction::make(WarpingFamily::exponential, {2.0, 0.7}, Interval::all());
    for (double t : {-3.0, 0.1, 4.0}) CHECK(std::abs(ex.eval(t).logfpp) < 1e-14);

    const auto ch = cosh_warping();
    const auto e0 = ch.eval(0.0);
    CHECK(e0.f == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(e0.fp == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(e0.fpp == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(e0.logfpp == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("eval errors") {
    const auto a = WarpingFunction::make(WarpingFamily::affine, {1.0, 0.0}, Interval(0.0, 10.0), 1.0);
    CHECK_THROWS_AS(a.eval(-1.0), eval_range_error);
    CHECK_THROWS_AS(a.eval(10.0), eval_range_error);
    // f = t on (0,10) crosses zero only at the boundary, fine; but on (-1,1) it is invalid
    CHECK_THROWS_AS(
        WarpingFunction::make(WarpingFamily::affine, {1.0, 0.0}, Interval(-1.0, 1.0), 0.5),
        invalid_warping_error);
}

TEST_CASE("derivatives match centered finite differences at O(h^2)") {
    const auto families = std::vector<WarpingFunction>{
        WarpingFunction::make(WarpingFamily::exponential, {1.3, -0.6}, Interval::all()),
        WarpingFunction::make(WarpingFamily::cosh_type, {0.8, 1.1, 0.4}, Interval::all()),
        WarpingFunction::make(WarpingFamily::affine, {0.5, 2.0}, Interval(-3.0, 30.0), 0.0),
        WarpingFunction::make(WarpingFamily::trigonometric, {1.0, 0.3, 0.9}, Interval(-1.0, 1.0)),
        cosh_warping()};
    for (const auto& w : families) {
        for (double t : {-0.4, 0.2, 0.7}) {
            std::vector<double> hs, e1, e2, e3;
            for (double h : {1e-2, 5e-3, 2.5e-3}) {
                const double fd1 = (w.f(t + h) - w.f(t - h)) / (2 * h);
                const double fd2 = (w.f(t + h) - 2 * w.f(t) + w.f(t - h)) / (h * h);
                const double fd3 = (std::log(w.f(t + h)) - 2 * std::log(w.f(t)) +
                                    std::log(w.f(t - h))) / (h * h);
                const auto e = w.eval(t);
                hs.push_back(h);
                e1.push_back(std::abs(fd1 - e.fp) + 1e-18);
                e2.push_back(std::abs(fd2 - e.fpp) + 1e-18);
                e3.push_back(std::abs(fd3 - e.logfpp) + 1e-18);
            }
            // fit an order only where the error starts well above roundoff;
            // exact cases (affine, exponential log f) must stay at roundoff
            auto check_seq = [&](const std::vector<double>& errs) {
                if (errs.front() > 1e-9)
                    CHECK(fit_order(hs, errs) > 1.9);
                else
                    CHECK(errs.back() < 1e-8);
            };
            check_seq(e1);
            check_seq(e2);
            check_seq(e3);
        }
    }
}

TEST_CASE("primitive_G closed forms and quadrature") {
    const auto c = WarpingFunction::make(WarpingFamily::constant, {1.5}, Interval::all(), 0.0);
    CHECK(c.primitive_G(2.0) == doctest::Approx(3.0).epsilon(1e-14));

    const auto ex = WarpingFunction::make(WarpingFamily::exponential, {1.0, 1.0}, Interval::all(), 0.0);
    CHECK(ex.primitive_G(1.0) == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-13));

    // quadrature path for the custom family, checked against sinh
    const auto ch = cosh_warping();
    CHECK(ch.primitive_G(1.0) == doctest::Approx(1.1752011936438014).epsilon(1e-11));
    CHECK(ch.primitive_G(-1.0) == doctest::Approx(-1.1752011936438014).epsilon(1e-11));
    CHECK(ch.primitive_G(0.0) == 0.0);
}

TEST_CASE("G is strictly increasing and differentiates back to f") {
    const auto w = WarpingFunction::make(WarpingFamily::trigonometric, {2.0, 0.5, 0.8},
                                         Interval(-1.2, 1.2), 0.0);
    double prev = w.primitive_G(-1.1);
    for (double t = -1.0; t <= 1.1; t += 0.1) {
        const double g = w.primitive_G(t);
        CHECK(g > prev);
        prev = g;
    }
    std::vector<double> hs, errs;
    for (double h : {1e-2, 5e-3, 2.5e-3}) {
        const double fd = (w.primitive_G(0.3 + h) - w.primitive_G(0.3 - h)) / (2 * h);
        hs.push_back(h);
        errs.push_back(std::abs(fd - w.f(0.3)) + 1e-18);
    }
    CHECK(fit_order(hs, errs) > 1.9);
}

TEST_CASE("custom family rejects inconsistent derivative callbacks") {
    CHECK_THROWS_AS(WarpingFunction::make_custom([](double t) { return std::cosh(t); },
                                                 [](double t) { return std::cosh(t); },  // wrong
                                                 [](double t) { return std::cosh(t); },
                                                 Interval(-2.0, 2.0), 0.0),
                    invalid_warping_error);
}

TEST_CASE("einstein families: table rows") {
    // row 4 is the constant
    const auto f4 = make_einstein_family(4, 2, 0.0, 0.0, {3.0});
    CHECK(f4.eval(1.7).f == 3.0);

    // row 2 with n = 3, cbar = 3 gives b = 1, so f = e^t
    const auto f2 = make_einstein_family(2, 3, 3.0, 0.0, {1.0, 1.0});
    CHECK(f2.eval(1.0).f == doctest::Approx(std::exp(1.0)).epsilon(1e-14));

    // row 1 with a = 1/2, cbar = n, c = n-1 reproduces cosh t
    const auto f1 = make_einstein_family(1, 2, 2.0, 1.0, {0.5});
    for (double t : {-1.0, 0.0, 0.8})
        CHECK(f1.eval(t).f == doctest::Approx(std::cosh(t)).epsilon(1e-14));

    // row 6 amplitude identity: n=2, cbar=-2, c=-1 requires a1^2 + a2^2 = 1
    CHECK_NOTHROW(make_einstein_family(6, 2, -2.0, -1.0, {1.0, 0.0}));
    CHECK_THROWS_AS(make_einstein_family(6, 2, -2.0, -1.0, {2.0, 0.0}), family_constraint_error);
    try {
        make_einstein_family(6, 2, -2.0, -1.0, {2.0, 0.0});
    } catch (const family_constraint_error& e) {
        CHECK(e.residual > 1.0);  // (4 - 1)/1
    }
}

TEST_CASE("einstein families: sign-pattern rejection") {
    CHECK_THROWS_AS(make_einstein_family(1, 2, 2.0, -1.0, {1.0}), invalid_family_error);
    CHECK_THROWS_AS(make_einstein_family(1, 2, 2.0, 0.0, {1.0}), invalid_family_error);
    CHECK_THROWS_AS(make_einstein_family(2, 2, -1.0, 0.0, {1.0, 1.0}), invalid_family_error);
    CHECK_THROWS_AS(make_einstein_family(3, 2, 1.0, 1.0, {1.0}), invalid_family_error);
    CHECK_THROWS_AS(make_einstein_family(5, 2, 0.0, 1.0, {1.0, 1.0}), invalid_family_error);
    CHECK_THROWS_AS(make_einstein_family(6, 2, 1.0, -1.0, {1.0, 0.0}), invalid_family_error);
    CHECK_THROWS_AS(make_einstein_family(0, 2, 0.0, 0.0, {}), invalid_family_error);
    CHECK_THROWS_AS(make_einstein_family(1, 1, 2.0, 1.0, {1.0}), invalid_family_error);
}

TEST_CASE("einstein residuals vanish on all six rows, n in {2,3}") {
    struct Row {
        int id;
        double cbar, c;
        std::vector<double> params;
    };
    for (int n : {2, 3}) {
        const double amp = std::sqrt(0.5 * (-1.5) * n / (-1.0 * (n - 1)));
        const std::vector<Row> rows = {
            {1, 2.0, 1.5, {0.8}},
            {2, 3.0, 0.0, {1.2, -1.0}},
            {3, 2.5, -1.0, {1.1}},
            {4, 0.0, 0.0, {2.4}},
            {5, 0.0, -2.0, {0.7, 1.0}},
            {6, -1.0, -1.5, {amp * 0.6, amp * 0.8}},
        };
        for (const auto& row : rows) {
            std::vector<double> params = row.params;
            if (row.id == 6) {
                // regenerate the amplitude identity for this n
                const double want = row.c * n / (row.cbar * (n - 1));
                const double r = std::sqrt(want);
                params = {r * 0.6, r * 0.8};
            }
            const auto w = make_einstein_family(row.id, n, row.cbar, row.c, params);
            const auto ts = uniform_samples(w, 100);
            const auto res = einstein_residuals(w, n, row.cbar, row.c, ts);
            CAPTURE(row.id);
            CAPTURE(n);
            CHECK(res.r1 < 1e-10);
            CHECK(res.r2 < 1e-10);
        }
    }
}

TEST_CASE("einstein residuals: de Sitter values and a non-member") {
    const auto ch = cosh_warping();
    const auto ts = uniform_samples(ch, 100);
    const auto res = einstein_residuals(ch, 2, 2.0, 1.0, ts);
    CHECK(res.r1 < 1e-10);
    CHECK(res.r2 < 1e-10);

    // f = t^2 + 2 on (-1, 1) is no Einstein warping for cbar = c = 0
    const auto w = WarpingFunction::make_custom([](double t) { return t * t + 2.0; },
                                                [](double t) { return 2.0 * t; },
                                                [](double) { return 2.0; }, Interval(-1.0, 1.0), 0.0);
    const auto res2 = einstein_residuals(w, 2, 0.0, 0.0, uniform_samples(w, 100));
    CHECK(res2.r1 > 0.5);
}

TEST_CASE("case 3 positivity domain is computed and enforced") {
    const auto w = make_einstein_family(3, 2, 2.0, -1.0, {1.0});
    const double b = 1.0;  // sqrt(2/2)
    const double d = -1.0 * 2.0 / (4.0 * 1.0 * 2.0 * 1.0);
    const double tstar = std::log(-d / 1.0) / (2.0 * b);
    CHECK(w.domain().lo == doctest::Approx(tstar));
    CHECK(std::isinf(w.domain().hi));
    CHECK(w.eval(tstar + 0.5).f > 0.0);
    CHECK_THROWS_AS(w.eval(tstar - 0.1), eval_range_error);
}
