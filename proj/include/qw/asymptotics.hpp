#ifndef QW_ASYMPTOTICS_HPP
#define QW_ASYMPTOTICS_HPP

#include "qw/contour.hpp"

#include <array>

namespace qw {

// Omega(c, b) = c (1 - 2b + 2i sqrt(b (1 - b))), the bulk point of level cN
// at position (1 - b) cN.
cplx omega(double c, double b);

// The stated large-N limit of N Cov(zeta^{(dN)}_{(1-a)dN}(1), zeta^{(cN)}_{(1-b)cN}(1)).
// Exact finite-N covariances approach one quarter of this value.
// The integral form runs over the chords conj(Omega) -> Omega with the Z path
// right of the W path; each path is P(t) = Re + bow cos t + i Im sin t and a
// sine substitution in t removes the endpoint singularities.
double limit_covariance_integral(double d, double a, double c, double b, int order = 400);
double limit_covariance_elliptic(double d, double a, double c, double b);

// kappa = 2 sqrt(I1 I2) / sqrt((R1 - R2)^2 + (I1 + I2)^2), Omega_j = R_j + i I_j
double elliptic_kappa(double d, double a, double c, double b);
// the same with sqrt(R1 R2) in the numerator (NaN when R1 R2 < 0)
double elliptic_kappa_real_part(double d, double a, double c, double b);

// Leading short-distance term -(4/pi) ln|Omega1 - Omega2| / sqrt(I1 I2).
double log_correlation_prediction(double d, double a, double c, double b);

// N times the exact covariance at T = 1 with indices rounded to integers.
double finite_n_covariance(double d, double a, double c, double b, int N);

// ---- special functions (thin checked wrappers over Boost.Math) ----------------

double elliptic_K(double kappa);       // int_0^1 dx / sqrt((1 - x^2)(1 - kappa^2 x^2))
double incomplete_gamma0(double x);    // Gamma(0, x) = E_1(x)
double bessel_J0(double x);
double bessel_I0(double x);

// C(R) = Gamma(0, R^2 / 2) + ln R^2, with C(0) = ln 2 - gamma_Euler.
double c_function(double R);
// G_tau(r) = -Gamma(0, r^2 / (2 tau)) - ln r^2
double g_tau(double tau, double r);
// -int p_tau(s) ln|s - xi|^2 ds with |xi| = r by polar quadrature around xi
double g_tau_average(double tau, double r);

struct CharacteristicFrame {
    double d = 1, a = 0.5;
    double T = 2, S = 1;  // T > S > 0
    std::array<double, 2> eta{}, lambda{}, mu{}, nu{};
    double tau() const { return (T - S) / T; }
};

// Limit of Cov(zeta(T, eta) - zeta(T, lambda), zeta(S, mu) - zeta(S, nu)).
double characteristic_covariance(const CharacteristicFrame& f);

// Edwards-Wilkinson covariance of u(t, x) - u(t, y) and u(tt, xt) - u(tt, yt)
// for t >= tt; t == tt gives the free field form.
double ew_covariance(double t, double tt, const std::array<double, 2>& x, const std::array<double, 2>& y,
                     const std::array<double, 2>& xt, const std::array<double, 2>& yt);

// ---- propagator near the characteristic ------------------------------------------

// Gaussian form of [Y^1(T)]_{(k,n),(k',n')} in the variables sigma1, sigma2.
double propagator_gaussian_asymptotic(double d, double a, double T, double s1, double s2, int N);

struct PropagatorPoint {
    int k, n, kp, np;
    double s1, s2;  // sigma values of the rounded (k', n')
};

// Indices k = (1-a)dTN, n = dTN, k' = (1-a)dN + s1 sqrt((1-a)dN),
// n' = dN + s1 sqrt((1-a)dN) + s2 sqrt(adN), rounded to integers.
PropagatorPoint propagator_scaling(double d, double a, double T, double s1, double s2, int N);

// ---- slow manifold (c = 1) -------------------------------------------------------------

cplx bulk_F(double b, cplx W, cplx X);
cplx bulk_G(double b, cplx W, cplx U);
cplx bulk_delta(double b, cplx W);  // principal sqrt((1 - W)^2 + 4bW)
// H(W) = b ln((1 - W + D)/(1 - W - D)) + (1 - b) ln((1 + W + D)/(1 + W - D)) - D
cplx bulk_H(double b, cplx W);

struct SlowManifoldState {
    double b = 0, phi = 0, r = 0;
    cplx W, delta, Xp, Xm, Up, Um, H;
};

// Solves Re H(r e^{i phi}) = 0 for r in (0, 1] by bisection.
SlowManifoldState slow_manifold(double b, double phi);

}  // namespace qw

#endif
