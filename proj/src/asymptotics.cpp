#include "qw/asymptotics.hpp"

#include "qw/largetime.hpp"

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/ellint_1.hpp>
#include <boost/math/special_functions/expint.hpp>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace qw {

namespace {

constexpr double euler_gamma = 0.57721566490153286061;

void check_unit(double a, const char* who) {
    if (!(a > 0 && a < 1)) throw std::invalid_argument(std::string(who) + ": parameter must lie in (0, 1)");
}

void check_ab(double a, double b, const char* who) {
    check_unit(a, who);
    check_unit(b, who);
}

struct OmegaPair {
    double R1, I1, R2, I2;
};

OmegaPair omega_pair(double d, double a, double c, double b, const char* who) {
    check_ab(a, b, who);
    if (!(c > 0 && c <= d)) throw std::invalid_argument(std::string(who) + ": need 0 < c <= d");
    const cplx o1 = omega(d, a), o2 = omega(c, b);
    if (std::abs(o1 - o2) <= 1e-14 * d) throw std::domain_error(std::string(who) + ": coincident Omega points");
    return {o1.real(), o1.imag(), o2.real(), o2.imag()};
}

// nodes and weights of d P / sqrt((P - Omega)(P - conj Omega)) along
// P(t) = R + bow cos t + i I sin t, t = (pi / 2) sin psi
struct ChordRule {
    std::vector<cplx> p, w;
};

ChordRule chord_rule(double R, double I, double bow, int order) {
    const GaussRule& g = gauss_legendre(order);
    ChordRule out;
    for (std::size_t j = 0; j < g.x.size(); ++j) {
        const double psi = 0.5 * M_PI * g.x[j];
        const double t = 0.5 * M_PI * std::sin(psi);
        const double dt = 0.5 * M_PI * std::cos(psi) * 0.5 * M_PI * g.w[j];
        const double ct = std::cos(t), st = std::sin(t);
        const cplx dp(-bow * st, I * ct);
        // (P - Omega)(P - conj Omega) = cos t (cos t (bow^2 + I^2) + 2i bow I sin t);
        // principal roots keep it positive at the chord midpoint
        const cplx root = std::sqrt(ct) * std::sqrt(cplx(ct * (bow * bow + I * I), 2 * bow * I * st));
        out.p.push_back(cplx(R + bow * ct, I * st));
        out.w.push_back(dp / root * dt);
    }
    return out;
}

double g_average(double tau, double r) {
    // polar coordinates around xi; lambda = L u^2 absorbs the lambda ln lambda corner
    const double L = r + 14 * std::sqrt(tau);
    const GaussRule& g = gauss_legendre(160);
    const int m = 96;
    double total = 0;
    for (std::size_t j = 0; j < g.x.size(); ++j) {
        const double u = 0.5 * (g.x[j] + 1);
        const double lam = L * u * u;
        const double jac = 2 * L * u * 0.5 * g.w[j];
        double ring = 0;
        for (int i = 0; i < m; ++i) {
            const double th = 2 * M_PI * i / m;
            const double s2 = r * r + lam * lam + 2 * r * lam * std::cos(th);
            ring += std::exp(-s2 / (2 * tau));
        }
        ring *= 2 * M_PI / m;
        total += jac * lam * std::log(lam * lam) * ring;
    }
    return -total / (2 * M_PI * tau);
}

double dist(const std::array<double, 2>& p, const std::array<double, 2>& q) { return std::hypot(p[0] - q[0], p[1] - q[1]); }

}  // namespace

cplx omega(double c, double b) { return c * cplx(1 - 2 * b, 2 * std::sqrt(b * (1 - b))); }

double limit_covariance_integral(double d, double a, double c, double b, int order) {
    const OmegaPair o = omega_pair(d, a, c, b, "limit_covariance_integral");
    const double m = 0.1 * std::min(o.I1, o.I2);
    double bz = 0, bw = 0;
    if (o.R1 - o.R2 >= m) {
    } else if (o.R1 > o.R2) {
        bz = m;
    } else if (o.I1 > o.I2) {
        // Z passes around the upper and lower ends of the W chord, with a wider gap
        const double g = 5 * m;
        bz = (o.R2 - o.R1 + g) / std::sqrt(1 - std::pow(o.I2 / o.I1, 2));
    } else if (o.I2 > o.I1) {
        const double g = 5 * m;
        bw = (o.R2 - o.R1 + g) / std::sqrt(1 - std::pow(o.I1 / o.I2, 2));
    } else {
        throw std::domain_error("limit_covariance_integral: chords cannot be separated");
    }
    const ChordRule z = chord_rule(o.R1, o.I1, bz, order);
    const ChordRule w = chord_rule(o.R2, o.I2, -bw, order);
    cplx sum = 0;
    for (std::size_t j = 0; j < z.p.size(); ++j)
        for (std::size_t l = 0; l < w.p.size(); ++l) sum += z.w[j] * w.w[l] / (z.p[j] - w.p[l]);
    const cplx v = 16.0 / std::pow(cplx(0, 2 * M_PI), 2) * sum;
    if (std::abs(v.imag()) > 1e-8 * std::max(1.0, std::abs(v.real())))
        throw std::runtime_error("limit_covariance_integral: value is not real (quadrature failure)");
    return v.real();
}

double elliptic_kappa(double d, double a, double c, double b) {
    const OmegaPair o = omega_pair(d, a, c, b, "elliptic_kappa");
    return 2 * std::sqrt(o.I1 * o.I2) / std::hypot(o.R1 - o.R2, o.I1 + o.I2);
}

double elliptic_kappa_real_part(double d, double a, double c, double b) {
    const OmegaPair o = omega_pair(d, a, c, b, "elliptic_kappa_real_part");
    if (o.R1 * o.R2 < 0) return std::nan("");
    return 2 * std::sqrt(o.R1 * o.R2) / std::hypot(o.R1 - o.R2, o.I1 + o.I2);
}

double limit_covariance_elliptic(double d, double a, double c, double b) {
    const OmegaPair o = omega_pair(d, a, c, b, "limit_covariance_elliptic");
    const double k = elliptic_kappa(d, a, c, b);
    if (!(k < 1)) throw std::domain_error("limit_covariance_elliptic: kappa >= 1");
    return 4 * k / (M_PI * std::sqrt(o.I1 * o.I2)) * elliptic_K(k);
}

double log_correlation_prediction(double d, double a, double c, double b) {
    const OmegaPair o = omega_pair(d, a, c, b, "log_correlation_prediction");
    return -4 / M_PI * std::log(std::hypot(o.R1 - o.R2, o.I1 - o.I2)) / std::sqrt(o.I1 * o.I2);
}

double finite_n_covariance(double d, double a, double c, double b, int N) {
    check_ab(a, b, "finite_n_covariance");
    const int n1 = static_cast<int>(std::lround(d * N)), k1 = static_cast<int>(std::lround((1 - a) * d * N));
    const int n2 = static_cast<int>(std::lround(c * N)), k2 = static_cast<int>(std::lround((1 - b) * c * N));
    if (k1 < 1 || k2 < 1 || k1 > n1 || k2 > n2) throw std::invalid_argument("finite_n_covariance: N too small");
    return N * zeta_covariance(n1, k1, n2, k2, 1.0);
}

double elliptic_K(double kappa) {
    if (!(kappa >= 0 && kappa < 1)) throw std::domain_error("elliptic_K: need 0 <= kappa < 1");
    return boost::math::ellint_1(kappa);
}

double incomplete_gamma0(double x) {
    if (!(x > 0)) throw std::domain_error("incomplete_gamma0: need x > 0");
    return boost::math::expint(1, x);
}

double bessel_J0(double x) { return boost::math::cyl_bessel_j(0, x); }

double bessel_I0(double x) { return boost::math::cyl_bessel_i(0, x); }

double c_function(double R) {
    if (!(R >= 0)) throw std::domain_error("c_function: need R >= 0");
    const double x = 0.5 * R * R;
    if (x < 1e-3) {
        // Gamma(0, x) = -gamma - ln x - sum_k (-x)^k / (k k!)
        double s = 0, term = 1;
        for (int k = 1; k <= 8; ++k) {
            term *= -x / k;
            s -= term / k;
        }
        return std::log(2.0) - euler_gamma + s;
    }
    return incomplete_gamma0(x) + std::log(R * R);
}

double g_tau(double tau, double r) {
    if (!(tau > 0 && tau <= 1)) throw std::domain_error("g_tau: need tau in (0, 1]");
    if (!(r > 0)) throw std::domain_error("g_tau: r = 0 diverges");
    return -incomplete_gamma0(r * r / (2 * tau)) - std::log(r * r);
}

double g_tau_average(double tau, double r) {
    if (!(tau > 0 && tau <= 1)) throw std::domain_error("g_tau_average: need tau in (0, 1]");
    if (!(r >= 0)) throw std::domain_error("g_tau_average: need r >= 0");
    return g_average(tau, r);
}

double characteristic_covariance(const CharacteristicFrame& f) {
    check_unit(f.a, "characteristic_covariance");
    if (!(f.d > 0) || !(f.S > 0) || !(f.T > f.S)) throw std::domain_error("characteristic_covariance: need T > S > 0");
    const std::array<double, 2> pts[] = {f.eta, f.lambda, f.mu, f.nu};
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            if (dist(pts[i], pts[j]) == 0) throw std::domain_error("characteristic_covariance: coincident offsets");
    const double tau = f.tau();
    const double bracket = g_tau(tau, dist(f.eta, f.mu)) - g_tau(tau, dist(f.eta, f.nu)) -
                           g_tau(tau, dist(f.lambda, f.mu)) + g_tau(tau, dist(f.lambda, f.nu));
    return f.S / (M_PI * f.d * std::sqrt(f.a * (1 - f.a))) * bracket;
}

double ew_covariance(double t, double tt, const std::array<double, 2>& x, const std::array<double, 2>& y,
                     const std::array<double, 2>& xt, const std::array<double, 2>& yt) {
    if (!(t >= tt)) throw std::domain_error("ew_covariance: need t >= tt");
    const double r[4] = {dist(x, xt), dist(x, yt), dist(y, xt), dist(y, yt)};
    for (double v : r)
        if (v == 0) throw std::domain_error("ew_covariance: coincident points");
    if (t == tt) return -(std::log(r[0]) - std::log(r[1]) - std::log(r[2]) + std::log(r[3])) / (2 * M_PI);
    const double s = t - tt;
    return (g_tau(s, r[0]) - g_tau(s, r[1]) - g_tau(s, r[2]) + g_tau(s, r[3])) / (4 * M_PI);
}

double propagator_gaussian_asymptotic(double d, double a, double T, double s1, double s2, int N) {
    check_unit(a, "propagator_gaussian_asymptotic");
    if (!(T > 1) || !(d > 0) || N < 1) throw std::domain_error("propagator_gaussian_asymptotic: need T > 1, d > 0");
    const double v = (T - 1) / T;
    return std::exp(-(s1 * s1 + s2 * s2) / (2 * v)) / (2 * M_PI * v * std::sqrt(a * (1 - a)) * d * N);
}

PropagatorPoint propagator_scaling(double d, double a, double T, double s1, double s2, int N) {
    check_unit(a, "propagator_scaling");
    const double u = std::sqrt((1 - a) * d * N), v = std::sqrt(a * d * N);
    PropagatorPoint p;
    p.k = static_cast<int>(std::lround((1 - a) * d * T * N));
    p.n = static_cast<int>(std::lround(d * T * N));
    p.kp = static_cast<int>(std::lround((1 - a) * d * N + s1 * u));
    p.np = static_cast<int>(std::lround(d * N + s1 * u + s2 * v));
    p.s1 = (p.kp - (1 - a) * d * N) / u;
    p.s2 = (p.np - d * N - p.s1 * u) / v;
    return p;
}

cplx bulk_F(double b, cplx W, cplx X) { return b * std::log(X - W) + (1 - b) * std::log(X) - X; }

cplx bulk_G(double b, cplx W, cplx U) { return -b * std::log(U) - (1 - b) * std::log(W + U) + U + W; }

cplx bulk_delta(double b, cplx W) {
    // (1 - W)^2 + 4bW factors over its roots W_c, conj(W_c)
    const cplx wc = omega(1.0, b);
    return std::sqrt((W - wc) * (W - std::conj(wc)));
}

cplx bulk_H(double b, cplx W) {
    const cplx D = bulk_delta(b, W);
    return b * std::log((1.0 - W + D) / (1.0 - W - D)) + (1 - b) * std::log((1.0 + W + D) / (1.0 + W - D)) - D;
}

SlowManifoldState slow_manifold(double b, double phi) {
    check_unit(b, "slow_manifold");
    if (!(phi > 0 && phi < M_PI)) throw std::domain_error("slow_manifold: need phi in (0, pi)");
    auto reh = [&](double r) { return bulk_H(b, std::polar(r, phi)).real(); };
    double lo = 1e-12, hi = 1.0;
    double r;
    const double top = reh(hi);
    if (std::abs(top) < 1e-13) {
        r = 1.0;
    } else {
        if (!(reh(lo) > 0 && top < 0)) throw std::runtime_error("slow_manifold: no sign change on (0, 1]");
        for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
            const double mid = 0.5 * (lo + hi);
            (reh(mid) > 0 ? lo : hi) = mid;
        }
        r = 0.5 * (lo + hi);
    }
    SlowManifoldState s;
    s.b = b;
    s.phi = phi;
    s.r = r;
    s.W = std::polar(r, phi);
    // at the double critical point Delta behaves like sqrt(W - W_c), so snap rounding
    if (std::abs(s.W - omega(1.0, b)) < 1e-14) s.W = omega(1.0, b);
    s.delta = bulk_delta(b, s.W);
    s.Xp = 0.5 * (1.0 + s.W + s.delta);
    s.Xm = 0.5 * (1.0 + s.W - s.delta);
    s.Up = s.Xp - s.W;
    s.Um = s.Xm - s.W;
    s.H = bulk_H(b, s.W);
    return s;
}

}  // namespace qw
