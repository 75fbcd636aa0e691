#ifndef QW_CONTOUR_HPP
#define QW_CONTOUR_HPP

#include <boost/multiprecision/cpp_complex.hpp>

#include <complex>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace qw {

using cplx = std::complex<double>;
using mp_real = boost::multiprecision::cpp_bin_float_50;
using mp_cplx = boost::multiprecision::cpp_complex_50;

struct QuadRule {
    std::vector<cplx> z;
    std::vector<cplx> w;
};

struct Contour {
    enum class Kind { circle, segment, sine_arc };
    Kind kind = Kind::circle;
    cplx center{0, 0};
    double radius = 1.0;
    cplx from{0, 0}, to{0, 0};
    double half_height = 0.0;
    int nodes = 128;

    static Contour circle(cplx c, double r, int nodes = 128);
    static Contour segment(cplx a, cplx b, int nodes = 64);
    // W = center + i h sin(theta), theta in [-pi/2, pi/2]
    static Contour sine_arc(double center, double h, int nodes = 201);

    // For a circle: (1/2 pi i) closed integral = sum w_j f(z_j) (trapezoid).
    // For a segment: the line integral of f dz (Gauss-Legendre).
    // For a sine arc: nodes theta_j mapped to W, weights for the plain
    // theta-integral over [-pi/2, pi/2] (Gauss-Legendre).
    QuadRule rule() const { return rule(nodes); }
    QuadRule rule(int n) const;

    // Strict interior of a circle.
    bool encloses(cplx p) const;
    std::string to_json() const;
};

// Contour `outer` contains scale * contour `inner`.
struct NestingClaim {
    int outer;
    int inner;
    double scale;
};

struct ContourFamily {
    std::vector<Contour> contours;  // outermost first
    std::vector<NestingClaim> nesting;
    std::vector<cplx> must_enclose;
    std::vector<cplx> must_exclude;

    std::string to_json() const;
};

// Independent check of every claim of a family by sampling points of the
// (scaled) inner contours and testing them against the outer circle.
// Returns an empty string when all claims hold, else a description.
std::string check_certificate(const ContourFamily& fam, int samples = 512);

// Circles around the centre s of the a-cluster with radii
// rho_i = (1-q) s + q rho_{i+1} + margin, innermost radius inner_radius.
ContourFamily build_nested_circles(double q, const std::vector<double>& a, int levels, double inner_radius,
                                   double margin = 0.05);

struct GaussRule {
    std::vector<double> x, w;
};
// Nodes and weights on [-1, 1]; cached per order.
const GaussRule& gauss_legendre(int n);
// Nodes and weights for int_0^inf g(x) e^{-x} dx; cached per order.
const GaussRule& gauss_laguerre(int n);

struct QuadResult {
    cplx value;
    double error;
    bool extended;
};

namespace detail {

template <class F>
cplx closed_sum(F& f, const QuadRule& r) {
    cplx s = 0;
    for (std::size_t j = 0; j < r.z.size(); ++j) {
        cplx v = f(r.z[j]);
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw std::domain_error("integrate_closed: non-finite integrand value");
        s += r.w[j] * v;
    }
    return s;
}

template <class F>
mp_cplx closed_sum_mp(F& f, const Contour& c, int n) {
    // trapezoid on the circle carried out entirely in extended precision
    mp_real two_pi = 2 * boost::math::constants::pi<mp_real>();
    mp_cplx s(0);
    mp_cplx cen(c.center.real(), c.center.imag());
    for (int j = 0; j < n; ++j) {
        mp_real th = two_pi * j / n;
        mp_cplx e(cos(th), sin(th));
        mp_cplx z = cen + mp_real(c.radius) * e;
        s += (z - cen) * f(z);
    }
    return s / mp_real(n);
}

}  // namespace detail

// (1/2 pi i) closed integral over a circle with node-doubling check.  When
// the two estimates disagree beyond tol and f also accepts mp_cplx, the
// integral is recomputed in 50-digit arithmetic; otherwise an error is raised.
template <class F>
QuadResult integrate_closed_checked(F&& f, const Contour& c, double tol = 1e-10) {
    if (c.kind != Contour::Kind::circle) throw std::invalid_argument("integrate_closed: closed contours are circles");
    cplx a = detail::closed_sum(f, c.rule(c.nodes));
    cplx b = detail::closed_sum(f, c.rule(2 * c.nodes));
    double err = std::abs(a - b);
    if (err <= tol * std::max(1.0, std::abs(b))) return {b, err, false};
    if constexpr (std::is_invocable_v<F&, const mp_cplx&>) {
        mp_cplx x = detail::closed_sum_mp(f, c, 2 * c.nodes);
        mp_cplx y = detail::closed_sum_mp(f, c, 4 * c.nodes);
        cplx xv(static_cast<double>(x.real()), static_cast<double>(x.imag()));
        cplx yv(static_cast<double>(y.real()), static_cast<double>(y.imag()));
        double e2 = std::abs(xv - yv);
        if (e2 <= tol * std::max(1.0, std::abs(yv))) return {yv, e2, true};
        throw std::runtime_error("integrate_closed: no convergence under node doubling in extended precision");
    } else {
        throw std::runtime_error("integrate_closed: no convergence under node doubling");
    }
}

template <class F>
cplx integrate_closed(F&& f, const Contour& c, double tol = 1e-10) {
    return integrate_closed_checked(std::forward<F>(f), c, tol).value;
}

// Tensor-product trapezoid over the circles of `fam` (one variable per
// contour, at most four).  nodes[i] overrides the node count of axis i.
template <class F>
cplx integrate_product(F&& f, const ContourFamily& fam, const std::vector<int>& nodes = {}) {
    const std::size_t k = fam.contours.size();
    if (k == 0) return f(std::span<const cplx>());
    if (k > 4) throw std::invalid_argument("integrate_product: more than four variables");
    std::vector<QuadRule> rules;
    for (std::size_t i = 0; i < k; ++i) {
        const Contour& c = fam.contours[i];
        if (c.kind != Contour::Kind::circle) throw std::invalid_argument("integrate_product: circles only");
        rules.push_back(c.rule(i < nodes.size() && nodes[i] > 0 ? nodes[i] : c.nodes));
    }
    std::vector<std::size_t> idx(k, 0);
    std::vector<cplx> z(k);
    cplx total = 0;
    while (true) {
        cplx w = 1;
        for (std::size_t i = 0; i < k; ++i) {
            z[i] = rules[i].z[idx[i]];
            w *= rules[i].w[idx[i]];
        }
        cplx v = f(std::span<const cplx>(z));
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw std::domain_error("integrate_product: non-finite integrand value");
        total += w * v;
        std::size_t d = 0;
        while (d < k && ++idx[d] == rules[d].z.size()) idx[d++] = 0;
        if (d == k) break;
    }
    return total;
}

// int_0^inf f(x) e^{-rate x} dx by Gauss-Laguerre of the given order, with an
// order-doubling divergence check (relative tolerance tol).
template <class F>
cplx integrate_halfline(F&& f, double rate, int order = 64, double tol = 1e-8) {
    if (!(rate > 0)) throw std::invalid_argument("integrate_halfline: rate must be positive");
    auto eval = [&](int n) {
        const GaussRule& g = gauss_laguerre(n);
        cplx s = 0;
        for (std::size_t j = 0; j < g.x.size(); ++j) s += g.w[j] * cplx(f(g.x[j] / rate));
        return s / rate;
    };
    cplx a = eval(order);
    cplx b = eval(2 * order);
    if (std::abs(a - b) > tol * std::max(1.0, std::abs(b)))
        throw std::runtime_error("integrate_halfline: order doubling disagrees (integrand not of the declared decay)");
    return a;
}

}  // namespace qw

#endif
