#include "qw/contour.hpp"

#include <Eigen/Eigenvalues>

#include <map>
#include <mutex>
#include <sstream>

namespace qw {

Contour Contour::circle(cplx c, double r, int nodes) {
    if (!(r > 0)) throw std::invalid_argument("Contour: radius must be positive");
    if (nodes < 8) throw std::invalid_argument("Contour: at least 8 nodes");
    Contour k;
    k.kind = Kind::circle;
    k.center = c;
    k.radius = r;
    k.nodes = nodes;
    return k;
}

Contour Contour::segment(cplx a, cplx b, int nodes) {
    if (nodes < 8) throw std::invalid_argument("Contour: at least 8 nodes");
    Contour k;
    k.kind = Kind::segment;
    k.from = a;
    k.to = b;
    k.nodes = nodes;
    return k;
}

Contour Contour::sine_arc(double center, double h, int nodes) {
    if (!(h > 0)) throw std::invalid_argument("Contour: half-height must be positive");
    if (nodes < 8) throw std::invalid_argument("Contour: at least 8 nodes");
    Contour k;
    k.kind = Kind::sine_arc;
    k.center = cplx(center, 0);
    k.half_height = h;
    k.nodes = nodes;
    return k;
}

QuadRule Contour::rule(int n) const {
    QuadRule r;
    r.z.resize(n);
    r.w.resize(n);
    switch (kind) {
        case Kind::circle:
            for (int j = 0; j < n; ++j) {
                double th = 2 * M_PI * j / n;
                cplx e(std::cos(th), std::sin(th));
                r.z[j] = center + radius * e;
                r.w[j] = radius * e / static_cast<double>(n);
            }
            break;
        case Kind::segment: {
            const GaussRule& g = gauss_legendre(n);
            cplx half = (to - from) / 2.0;
            cplx mid = (to + from) / 2.0;
            for (int j = 0; j < n; ++j) {
                r.z[j] = mid + half * g.x[j];
                r.w[j] = half * g.w[j];
            }
            break;
        }
        case Kind::sine_arc: {
            const GaussRule& g = gauss_legendre(n);
            for (int j = 0; j < n; ++j) {
                double th = g.x[j] * M_PI / 2;
                r.z[j] = center + cplx(0, half_height * std::sin(th));
                r.w[j] = g.w[j] * M_PI / 2;
            }
            break;
        }
    }
    return r;
}

bool Contour::encloses(cplx p) const {
    if (kind != Kind::circle) throw std::logic_error("Contour::encloses: circles only");
    return std::abs(p - center) < radius;
}

std::string Contour::to_json() const {
    std::ostringstream os;
    os.precision(17);
    switch (kind) {
        case Kind::circle:
            os << "{\"kind\":\"circle\",\"center\":[" << center.real() << ',' << center.imag() << "],\"radius\":" << radius;
            break;
        case Kind::segment:
            os << "{\"kind\":\"segment\",\"from\":[" << from.real() << ',' << from.imag() << "],\"to\":[" << to.real()
               << ',' << to.imag() << ']';
            break;
        case Kind::sine_arc:
            os << "{\"kind\":\"sine_arc\",\"center\":" << center.real() << ",\"half_height\":" << half_height;
            break;
    }
    os << ",\"nodes\":" << nodes << '}';
    return os.str();
}

std::string ContourFamily::to_json() const {
    std::ostringstream os;
    os.precision(17);
    os << "{\"contours\":[";
    for (std::size_t i = 0; i < contours.size(); ++i) os << (i ? "," : "") << contours[i].to_json();
    os << "],\"nesting\":[";
    for (std::size_t i = 0; i < nesting.size(); ++i)
        os << (i ? "," : "") << "{\"outer\":" << nesting[i].outer << ",\"inner\":" << nesting[i].inner
           << ",\"scale\":" << nesting[i].scale << '}';
    os << "]}";
    return os.str();
}

std::string check_certificate(const ContourFamily& fam, int samples) {
    std::ostringstream err;
    for (const auto& c : fam.contours)
        if (c.kind != Contour::Kind::circle) return "certificate: only circle families are checked";
    for (const auto& claim : fam.nesting) {
        const Contour& out = fam.contours.at(claim.outer);
        const Contour& in = fam.contours.at(claim.inner);
        for (int j = 0; j < samples; ++j) {
            double th = 2 * M_PI * (j + 0.5) / samples;
            cplx p = claim.scale * (in.center + in.radius * cplx(std::cos(th), std::sin(th)));
            if (!out.encloses(p)) {
                err << "contour " << claim.outer << " does not contain " << claim.scale << " x contour " << claim.inner;
                return err.str();
            }
        }
    }
    for (std::size_t i = 0; i < fam.contours.size(); ++i) {
        for (cplx p : fam.must_enclose)
            if (!fam.contours[i].encloses(p)) {
                err << "contour " << i << " misses required point (" << p.real() << ',' << p.imag() << ')';
                return err.str();
            }
        for (cplx p : fam.must_exclude)
            if (fam.contours[i].encloses(p) || std::abs(std::abs(p - fam.contours[i].center) - fam.contours[i].radius) < 1e-12) {
                err << "contour " << i << " does not exclude (" << p.real() << ',' << p.imag() << ')';
                return err.str();
            }
    }
    return {};
}

ContourFamily build_nested_circles(double q, const std::vector<double>& a, int levels, double inner_radius,
                                   double margin) {
    if (a.empty() || levels < 1) throw std::invalid_argument("build_nested_circles: empty input");
    if (!(q > 0 && q < 1)) throw std::invalid_argument("build_nested_circles: q must lie in (0,1)");
    double lo = a[0], hi = a[0];
    for (double x : a) {
        if (!(x > 0)) throw std::invalid_argument("build_nested_circles: a must be positive");
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    const double s = (lo + hi) / 2;
    const double spread = (hi - lo) / 2;
    if (!(inner_radius > spread))
        throw std::domain_error("build_nested_circles: inner radius does not enclose the a-cluster");
    std::vector<double> rho(levels);
    rho[levels - 1] = inner_radius;
    for (int i = levels - 2; i >= 0; --i) rho[i] = (1 - q) * s + q * rho[i + 1] + margin;
    if (!(rho[0] < s))
        throw std::domain_error("build_nested_circles: outermost radius reaches 0 (exclusion of 0 violated)");
    ContourFamily fam;
    for (int i = 0; i < levels; ++i) fam.contours.push_back(Contour::circle(s, rho[i]));
    for (int i = 0; i < levels; ++i)
        for (int j = i + 1; j < levels; ++j) fam.nesting.push_back({i, j, q});
    for (double x : a) fam.must_enclose.push_back(x);
    fam.must_exclude.push_back(0.0);
    std::string bad = check_certificate(fam);
    if (!bad.empty()) throw std::domain_error("build_nested_circles: " + bad);
    return fam;
}

namespace {

std::mutex g_rule_mutex;

GaussRule make_legendre(int n) {
    GaussRule g;
    g.x.resize(n);
    g.w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        long double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        long double dp = 0;
        for (int it = 0; it < 100; ++it) {
            long double p0 = 1, p1 = x;
            for (int k = 2; k <= n; ++k) {
                long double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1;
            dp = n * (x * p1 - p0) / (x * x - 1);
            long double dx = p1 / dp;
            x -= dx;
            if (std::fabs(static_cast<double>(dx)) < 1e-19) break;
        }
        long double w = 2 / ((1 - x * x) * dp * dp);
        g.x[i] = -static_cast<double>(x);
        g.x[n - 1 - i] = static_cast<double>(x);
        g.w[i] = g.w[n - 1 - i] = static_cast<double>(w);
    }
    return g;
}

GaussRule make_laguerre(int n) {
    // Golub-Welsch for starting values, then Newton on L_n in long double.
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        J(i, i) = 2 * i + 1;
        if (i + 1 < n) J(i, i + 1) = J(i + 1, i) = i + 1;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    GaussRule g;
    g.x.resize(n);
    g.w.resize(n);
    for (int i = 0; i < n; ++i) {
        long double x = es.eigenvalues()(i);
        long double lnp1 = 0;
        for (int it = 0; it < 50; ++it) {
            long double p0 = 1, p1 = 1 - x;
            for (int k = 1; k < n; ++k) {
                long double p2 = ((2 * k + 1 - x) * p1 - k * p0) / (k + 1);
                p0 = p1;
                p1 = p2;
            }
            // p1 = L_n, p0 = L_{n-1}; L_n' = n (L_n - L_{n-1}) / x
            long double d = n * (p1 - p0) / x;
            long double dx = p1 / d;
            x -= dx;
            if (std::fabs(static_cast<double>(dx / x)) < 1e-19) break;
        }
        long double p0 = 1, p1 = 1 - x;
        for (int k = 1; k <= n; ++k) {
            long double p2 = ((2 * k + 1 - x) * p1 - k * p0) / (k + 1);
            p0 = p1;
            p1 = p2;
        }
        lnp1 = p1;  // L_{n+1}(x)
        g.x[i] = static_cast<double>(x);
        g.w[i] = static_cast<double>(x / ((n + 1.0L) * (n + 1.0L) * lnp1 * lnp1));
    }
    return g;
}

}  // namespace

const GaussRule& gauss_legendre(int n) {
    static std::map<int, GaussRule> cache;
    std::lock_guard<std::mutex> lock(g_rule_mutex);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, make_legendre(n)).first;
    return it->second;
}

const GaussRule& gauss_laguerre(int n) {
    static std::map<int, GaussRule> cache;
    std::lock_guard<std::mutex> lock(g_rule_mutex);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, make_laguerre(n)).first;
    return it->second;
}

}  // namespace qw
