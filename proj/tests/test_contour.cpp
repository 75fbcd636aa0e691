#include "doctest.h"
#include "qw/contour.hpp"

#include <cmath>

using namespace qw;

TEST_CASE("closed integrals by residues") {
    auto unit = Contour::circle(0.0, 1.0);
    CHECK(std::abs(integrate_closed([](cplx z) { return 1.0 / z; }, unit) - 1.0) < 1e-14);
    cplx v = integrate_closed([](cplx z) { return std::exp(2.0 * z) / (z * z * z); }, unit);
    CHECK(std::abs(v - 2.0) < 1e-13);
    cplx e = integrate_closed([](cplx z) { return std::exp(z) * std::cos(z); }, Contour::circle(0.3, 0.7));
    CHECK(std::abs(e) < 1e-12);
}

TEST_CASE("non-finite integrand is an error") {
    CHECK_THROWS(integrate_closed([](cplx z) { return 1.0 / (z - 1.0); }, Contour::circle(0.0, 1.0, 8)));
}

TEST_CASE("extended precision retry on a steep integrand") {
    // e^{40 z} / z^30 on the circle of radius 3: the integrand reaches 1e37
    // while the residue 40^29/29! is about 3e15
    auto f = [](const auto& z) {
        using std::exp;
        auto p = z;
        for (int i = 1; i < 30; ++i) p *= z;
        return decltype(z)(exp(40.0 * z) / p);
    };
    auto c = Contour::circle(0.0, 3.0, 256);
    auto r = integrate_closed_checked(f, c, 1e-10);
    double expect = std::exp(29 * std::log(40.0) - std::lgamma(30.0));
    CHECK(r.extended);
    CHECK(std::abs(r.value - expect) / expect < 1e-9);
}

TEST_CASE("product integrals factorise") {
    auto fam = build_nested_circles(0.5, {1.0, 1.0}, 2, 0.1);
    auto f1 = [](cplx z) { return std::exp(-z) / ((z - 1.0) * (z - 1.0)); };
    auto f2 = [](cplx z) { return z * z / (z - 1.0); };
    cplx prod = integrate_product([&](std::span<const cplx> z) { return f1(z[0]) * f2(z[1]); }, fam);
    cplx sep = integrate_closed(f1, fam.contours[0]) * integrate_closed(f2, fam.contours[1]);
    CHECK(std::abs(prod - sep) < 1e-13);
}

TEST_CASE("moment-type integral with one residue") {
    auto fam = build_nested_circles(0.5, {1.0}, 1, 0.5);
    const double q = 0.5, gamma = 2.0;
    cplx v = integrate_product(
        [&](std::span<const cplx> z) { return -std::exp(gamma * z[0] * (q - 1)) / (z[0] - 1.0) * -1.0 / z[0]; }, fam);
    // (-1)^{1} V^2 / z * (-a/(z-a)) * e^{gamma z (q-1)} with residue e^{gamma(q-1)}
    CHECK(std::abs(v - std::exp(-1.0)) < 1e-12);
}

TEST_CASE("node doubling convergence on an analytic integrand") {
    auto fam = build_nested_circles(0.5, {1.0, 1.0}, 2, 0.1);
    auto f = [](std::span<const cplx> z) {
        return std::exp(z[0] * z[1]) / ((z[0] - 1.0) * (z[0] - 1.0) * (z[1] - 1.0));
    };
    cplx a = integrate_product(f, fam, {64, 64});
    cplx b = integrate_product(f, fam, {128, 128});
    CHECK(std::abs(a - b) < 1e-10);
}

TEST_CASE("nested circle construction") {
    auto fam = build_nested_circles(0.5, {1.0, 1.0}, 2, 0.1);
    REQUIRE(fam.contours.size() == 2);
    CHECK(fam.contours[0].radius == doctest::Approx(0.6));
    CHECK(fam.contours[1].radius == doctest::Approx(0.1));
    CHECK(check_certificate(fam).empty());
    auto one = build_nested_circles(0.5, {0.9, 1.1}, 1, 0.3);
    CHECK(one.contours.size() == 1);
    CHECK(check_certificate(one).empty());
    for (double q : {0.9, 0.99, 0.999}) {
        auto f = build_nested_circles(q, {1.0}, 3, 0.1, 0.01);
        CHECK(check_certificate(f).empty());
        CHECK(f.contours[0].radius < 1.0);
    }
    CHECK_THROWS(build_nested_circles(0.2, {1.0}, 4, 0.5, 0.2));
}

TEST_CASE("certificate checker detects a false claim") {
    ContourFamily fam;
    fam.contours = {Contour::circle(1.0, 0.2), Contour::circle(1.0, 0.5)};
    fam.nesting = {{0, 1, 0.5}};
    CHECK_FALSE(check_certificate(fam).empty());
}

TEST_CASE("half-line quadrature") {
    CHECK(std::abs(integrate_halfline([](double) { return 1.0; }, 1.0) - 1.0) < 1e-13);
    CHECK(std::abs(integrate_halfline([](double x) { return x * x * x * x; }, 1.0) - 24.0) < 1e-11);
    cplx v = integrate_halfline([](double y) { return (2.0 - y) * y; }, 1.0);
    CHECK(std::abs(v) < 1e-12);
    CHECK(std::abs(integrate_halfline([](double x) { return x; }, 2.5) - 1 / 6.25) < 1e-14);
}

TEST_CASE("Gauss rules integrate polynomials exactly") {
    const auto& g = gauss_legendre(20);
    double s = 0;
    for (std::size_t i = 0; i < g.x.size(); ++i) s += g.w[i] * std::pow(g.x[i], 10);
    CHECK(s == doctest::Approx(2.0 / 11).epsilon(1e-14));
    const auto& l = gauss_laguerre(128);
    double t = 0;
    for (std::size_t i = 0; i < l.x.size(); ++i) t += l.w[i] * std::pow(l.x[i], 6);
    CHECK(t == doctest::Approx(720.0).epsilon(1e-12));
}

TEST_CASE("sine arc maps to the chord") {
    auto c = Contour::sine_arc(0.3, 0.8, 201);
    auto r = c.rule();
    double s = 0;
    for (auto w : r.w) s += w.real();
    CHECK(s == doctest::Approx(M_PI).epsilon(1e-14));
    for (auto z : r.z) {
        CHECK(z.real() == doctest::Approx(0.3));
        CHECK(std::fabs(z.imag()) <= 0.8);
    }
}
