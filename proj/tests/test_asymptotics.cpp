#include "doctest.h"
#include "qw/asymptotics.hpp"
#include "qw/largetime.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>

#include <cmath>

using namespace qw;

namespace {

const double euler = 0.57721566490153286061;

struct Quad {
    double d, a, c, b;
};

const Quad grid[] = {{1, 0.3, 0.7, 0.6}, {1, 0.5, 0.5, 0.5}, {1, 0.2, 0.8, 0.3},  {1, 0.4, 0.9, 0.4},
                     {1, 0.6, 0.6, 0.2}, {1, 0.7, 0.8, 0.5}, {1, 0.5, 1.0, 0.3},  {1, 0.3, 0.5, 0.8},
                     {1, 0.9, 0.5, 0.1}, {1, 0.95, 0.9, 0.5}};

// 4 int_0^inf e^{-l (R1 - R2)} J0(I1 l) J0(I2 l) dl, truncated where the exponential is negligible
double bessel_form(const Quad& q) {
    const cplx o1 = omega(q.d, q.a), o2 = omega(q.c, q.b);
    const double gap = o1.real() - o2.real();
    const double top = 40.0 / gap;
    auto f = [&](double l) {
        return std::exp(-l * gap) * boost::math::cyl_bessel_j(0, o1.imag() * l) * boost::math::cyl_bessel_j(0, o2.imag() * l);
    };
    double s = 0;
    for (double x = 0; x < top; x += 1.0)
        s += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, x, x + 1.0, 0, 1e-13);
    return 4 * s;
}

// point (c, b) at distance gap from Omega(d, a), moved radially inward
Quad merged(double d, double a, double gap) {
    const cplx o1 = omega(d, a);
    const cplx o2 = o1 * (1 - gap / std::abs(o1));
    const double c = std::abs(o2);
    return {d, a, c, 0.5 * (1 - o2.real() / c)};
}

}  // namespace

TEST_CASE("Omega points") {
    CHECK(std::abs(omega(1, 0.5) - cplx(0, 1)) < 1e-15);
    for (int i = 1; i <= 9; ++i) {
        const double b = 0.1 * i;
        CHECK(std::abs(omega(1, b)) == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(omega(1, b).imag() > 0);
        CHECK(std::abs(omega(2.5, b) - 2.5 * omega(1, b)) < 1e-15);
    }
}

TEST_CASE("chord integral equals the elliptic form") {
    for (const Quad& q : grid) {
        CAPTURE(q.a);
        CAPTURE(q.c);
        CAPTURE(q.b);
        const double e = limit_covariance_elliptic(q.d, q.a, q.c, q.b);
        const double i = limit_covariance_integral(q.d, q.a, q.c, q.b);
        CHECK(std::abs(i - e) < 1e-6);
        CHECK(e > 0);
    }
    CHECK_THROWS_AS(limit_covariance_integral(1, 0.3, 1, 0.3), std::domain_error);
    CHECK_THROWS_AS(limit_covariance_elliptic(0.5, 0.3, 1, 0.3), std::invalid_argument);
}

TEST_CASE("limit covariance scales inversely with the size") {
    const double v = limit_covariance_integral(1, 0.3, 0.7, 0.6);
    CHECK(limit_covariance_integral(2, 0.3, 1.4, 0.6) == doctest::Approx(v / 2).epsilon(1e-10));
    // the elliptic form is symmetric in the two points
    CHECK(elliptic_kappa(1, 0.3, 0.7, 0.6) == doctest::Approx(elliptic_kappa(1 / 0.7, 0.6, 1, 0.3)).epsilon(1e-14));
    // swapping the points (rescaled so the outer level stays the larger one)
    CHECK(limit_covariance_integral(1 / 0.7, 0.6, 1, 0.3) == doctest::Approx(0.7 * v).epsilon(1e-8));
}

TEST_CASE("Bessel representation") {
    const Quad q{1, 0.3, 0.7, 0.6};
    CHECK(std::abs(bessel_form(q) - limit_covariance_elliptic(q.d, q.a, q.c, q.b)) < 1e-4);
    const Quad r{1, 0.2, 0.8, 0.3};
    const double truth = bessel_form(r);
    CHECK(std::abs(truth - limit_covariance_elliptic(r.d, r.a, r.c, r.b)) < 1e-4);
    // kappa built from real parts fails the same comparison
    const cplx o1 = omega(r.d, r.a), o2 = omega(r.c, r.b);
    const double kr = elliptic_kappa_real_part(r.d, r.a, r.c, r.b);
    const double wrong = 4 * kr / (M_PI * std::sqrt(o1.imag() * o2.imag())) * elliptic_K(kr);
    CHECK(std::abs(wrong - truth) > 0.1);
    // and gives zero when both real parts vanish
    CHECK(elliptic_kappa_real_part(1, 0.5, 0.5, 0.5) == 0.0);
    CHECK(limit_covariance_integral(1, 0.5, 0.5, 0.5) > 1);
}

TEST_CASE("logarithmic short-distance law") {
    double lo = 1e300, hi = -1e300;
    for (double gap : {1e-1, 1e-2, 1e-3}) {
        const Quad q = merged(1, 0.3, gap);
        const double rest = limit_covariance_elliptic(q.d, q.a, q.c, q.b) - log_correlation_prediction(q.d, q.a, q.c, q.b);
        lo = std::min(lo, rest);
        hi = std::max(hi, rest);
        CHECK(log_correlation_prediction(q.d, q.a, q.c, q.b) > 0);
    }
    CHECK((hi - lo) < 0.25 * std::max(std::abs(hi), std::abs(lo)));
    const Quad q = merged(1, 0.3, 0.1);
    CHECK(limit_covariance_integral(q.d, q.a, q.c, q.b) ==
          doctest::Approx(limit_covariance_elliptic(q.d, q.a, q.c, q.b)).epsilon(1e-6));
}

TEST_CASE("kappa tends to one quadratically in the gap") {
    double prev = 0;
    for (double gap : {1e-2, 1e-3, 1e-4}) {
        const Quad q = merged(1, 0.4, gap);
        const double k = elliptic_kappa(q.d, q.a, q.c, q.b);
        const double ratio = (1 - k * k) / (gap * gap);
        CHECK(k < 1);
        if (prev > 0) CHECK(ratio == doctest::Approx(prev).epsilon(0.03));
        prev = ratio;
    }
}

TEST_CASE("special functions") {
    CHECK(elliptic_K(0) == doctest::Approx(M_PI / 2).epsilon(1e-15));
    double prev = 1;
    for (double e : {1e-2, 1e-4, 1e-6}) {
        const double k = std::sqrt(1 - e);
        const double diff = std::abs(elliptic_K(k) - std::log(4 / std::sqrt(1 - k * k)));
        CHECK(diff < prev);
        prev = diff;
    }
    CHECK(prev < 1e-5);
    for (double x : {1e-3, 1e-5, 1e-7}) CHECK(std::abs(incomplete_gamma0(x) + euler + std::log(x)) < 2 * x);
    auto tail = [](double t) { return std::exp(-t) / t; };
    boost::math::quadrature::exp_sinh<double> es;
    const double g01 = es.integrate([&](double u) { return tail(1 + u); }, 0.0, std::numeric_limits<double>::infinity());
    CHECK(incomplete_gamma0(1.0) == doctest::Approx(g01).epsilon(1e-10));
    // power series oracles
    for (double x : {0.3, 2.0, 5.5}) {
        double j = 0, i = 0, term = 1;
        for (int k = 0; k < 60; ++k) {
            if (k > 0) term *= (x * x / 4) / (k * k);
            j += (k % 2 ? -term : term);
            i += term;
        }
        CHECK(bessel_J0(x) == doctest::Approx(j).epsilon(1e-10));
        CHECK(bessel_I0(x) == doctest::Approx(i).epsilon(1e-12));
    }
    CHECK_THROWS_AS(elliptic_K(1.0), std::domain_error);
    CHECK_THROWS_AS(incomplete_gamma0(0.0), std::domain_error);
}

TEST_CASE("the C function") {
    CHECK(c_function(0) == doctest::Approx(std::log(2.0) - euler).epsilon(1e-12));
    CHECK(std::abs(c_function(1e-5) - c_function(0)) < 1e-9);
    for (double R : {5.0, 8.0}) CHECK(std::abs(c_function(R) - 2 * std::log(R)) < 1e-4);
    // 2 e^{-R^2/2} int l ln l e^{-l^2/2} I0(l R) dl
    const double R = 1.5;
    auto f = [&](double l) {
        return l > 0 ? 2 * l * std::log(l) * std::exp(-(l - R) * (l - R) / 2 - l * R) * boost::math::cyl_bessel_i(0, l * R) : 0.0;
    };
    double s = 0;
    for (double x = 0; x < 14; x += 0.5) s += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, x, x + 0.5, 0, 1e-14);
    CHECK(c_function(R) == doctest::Approx(s).epsilon(1e-6));
    CHECK(-g_tau_average(1.0, R) == doctest::Approx(c_function(R)).epsilon(1e-6));
}

TEST_CASE("G_tau") {
    for (double r : {0.3, 1.0, 2.2}) CHECK(g_tau(1.0, r) == doctest::Approx(-c_function(r)).epsilon(1e-12));
    for (double tau : {0.25, 0.5, 1.0})
        CHECK(g_tau(tau, 1e-5) == doctest::Approx(euler - std::log(2 * tau)).epsilon(1e-8));
    CHECK(std::abs(g_tau(0.5, 1.0) - g_tau_average(0.5, 1.0)) < 1e-6);
    CHECK_THROWS_AS(g_tau(0.5, 0.0), std::domain_error);
    CHECK_THROWS_AS(g_tau(1.5, 1.0), std::domain_error);
}

TEST_CASE("characteristic covariance and the EW field") {
    CharacteristicFrame f;
    f.d = 1.3;
    f.a = 0.35;
    f.T = 3.0;
    f.S = f.d * std::sqrt(f.a * (1 - f.a)) / 4;
    f.eta = {0.2, -0.4};
    f.lambda = {1.1, 0.5};
    f.mu = {-0.7, 0.3};
    f.nu = {0.4, 1.6};
    const double v = characteristic_covariance(f);
    CHECK(v == doctest::Approx(ew_covariance(f.tau(), 0.0, f.eta, f.lambda, f.mu, f.nu)).epsilon(1e-8));
    CharacteristicFrame g = f;
    std::swap(g.eta, g.lambda);
    CHECK(characteristic_covariance(g) == doctest::Approx(-v).epsilon(1e-14));
    CharacteristicFrame h = f;
    std::swap(h.eta, h.mu);
    std::swap(h.lambda, h.nu);
    CHECK(characteristic_covariance(h) == doctest::Approx(v).epsilon(1e-14));
    h.nu = h.mu;
    CHECK_THROWS_AS(characteristic_covariance(h), std::domain_error);

    const std::array<double, 2> x{0, 0}, y{1, 0}, xt{0.3, 0.8}, yt{-0.5, 1.2};
    const double gff = ew_covariance(1.0, 1.0, x, y, xt, yt);
    CHECK(std::abs(ew_covariance(1.0 + 1e-4, 1.0, x, y, xt, yt) - gff) < 1e-6);
    CHECK(ew_covariance(1.5, 1.0, y, x, xt, yt) == doctest::Approx(-ew_covariance(1.5, 1.0, x, y, xt, yt)).epsilon(1e-14));
    CHECK_THROWS_AS(ew_covariance(0.5, 1.0, x, y, xt, yt), std::domain_error);
}

TEST_CASE("log prediction agrees with the equal-time characteristic form") {
    const double a = 0.4, xi1 = 0.7, xi2 = -0.3;
    const double N = 1e10;
    const double c = 1 + xi1 * std::sqrt((1 - a) / N) + xi2 * std::sqrt(a / N);
    const double b = a + (xi2 * std::sqrt(1 - a) - xi1 * std::sqrt(a)) * std::sqrt(a * (1 - a) / N);
    const double s = std::sqrt(a * (1 - a));
    const double pred = c >= 1 ? log_correlation_prediction(c, b, 1, a) : log_correlation_prediction(1, a, c, b);
    const double lhs = pred - std::log(N) / (M_PI * s);
    CHECK(lhs == doctest::Approx(-std::log(xi1 * xi1 + xi2 * xi2) / (M_PI * s)).epsilon(1e-3));
}

TEST_CASE("propagator near the characteristic") {
    const double d = 1, a = 0.5, T = 2;
    double prev = 1;
    for (int N : {500, 1000, 2000}) {
        double worst = 0;
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j) {
                const PropagatorPoint p = propagator_scaling(d, a, T, -1 + 0.5 * i, -1 + 0.5 * j, N);
                const double ex = propagator_closed(1, T, p.k, p.n, p.kp, p.np);
                worst = std::max(worst, std::abs(ex / propagator_gaussian_asymptotic(d, a, T, p.s1, p.s2, N) - 1));
            }
        CHECK(worst < prev);
        prev = worst;
    }
    CHECK(prev < 0.05);
    // Gaussian mass in sigma space
    const int N = 800;
    double mass = 0;
    const double h = 0.05;
    for (double s1 = -8; s1 <= 8; s1 += h)
        for (double s2 = -8; s2 <= 8; s2 += h) mass += propagator_gaussian_asymptotic(d, a, T, s1, s2, N) * h * h;
    CHECK(mass * std::sqrt(a * (1 - a)) * d * N == doctest::Approx(1.0).epsilon(1e-8));
    const double top = propagator_gaussian_asymptotic(d, a, T, 0, 0, N);
    CHECK(top > propagator_gaussian_asymptotic(d, a, T, 0.1, 0, N));
    CHECK(top > propagator_gaussian_asymptotic(d, a, T, 0, -0.1, N));
}

TEST_CASE("slow manifold") {
    for (double b : {0.2, 0.5, 0.7}) {
        const cplx wc = omega(1, b);
        CHECK(std::abs(bulk_delta(b, wc)) < 1e-10);
        CHECK(std::abs(bulk_H(b, wc)) < 1e-10);
        const SlowManifoldState c = slow_manifold(b, std::arg(wc));
        CHECK(c.r == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(c.delta) < 1e-10);
        CHECK(std::abs(c.H) < 1e-10);
        double last = 0, last_phi = 0;
        for (int i = 1; i < 30; ++i) {
            const double phi = M_PI * i / 30, pc = std::arg(wc);
            const SlowManifoldState s = slow_manifold(b, phi);
            CHECK(std::abs(s.H.real()) < 1e-12);
            CHECK(s.r <= 1.0);
            CHECK(std::abs(bulk_F(b, s.W, s.Xp) + bulk_G(b, s.W, s.Up)) < 1e-12);
            CHECK(std::abs(bulk_F(b, s.W, s.Xm) + bulk_G(b, s.W, s.Um)) < 1e-12);
            // r increases up to the critical angle and decreases after it
            if (i > 1 && phi < pc) CHECK(s.r > last);
            if (i > 1 && last_phi > pc) CHECK(s.r < last);
            last = s.r;
            last_phi = phi;
        }
        for (cplx w : {cplx(0.4, 0.3), cplx(-0.2, 0.7), cplx(0.9, 0.1)})
            CHECK(std::abs(bulk_H(b, std::conj(w)) - std::conj(bulk_H(b, w))) < 1e-12);
    }
    CHECK_THROWS_AS(slow_manifold(0.5, 0.0), std::domain_error);
}

TEST_CASE("finite-N covariances approach a quarter of the stated limit") {
    for (const Quad& q : {grid[0], grid[2], grid[4]}) {
        const double f1 = finite_n_covariance(q.d, q.a, q.c, q.b, 100);
        const double f2 = finite_n_covariance(q.d, q.a, q.c, q.b, 200);
        const double limit = limit_covariance_elliptic(q.d, q.a, q.c, q.b);
        CHECK(4 * (2 * f2 - f1) == doctest::Approx(limit).epsilon(1e-3));
        CHECK(std::abs(4 * f2 - limit) < std::abs(4 * f1 - limit));
    }
}
