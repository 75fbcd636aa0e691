#include "qw/moments.hpp"

#include <boost/math/constants/constants.hpp>

#include <algorithm>
#include <cmath>
#include <future>
#include <map>
#include <stdexcept>

namespace qw {

namespace {

struct Cluster {
    double c;  // centre of [min a, max a]
    double s;  // half width
};

Cluster cluster_of(const std::vector<double>& a, std::size_t count) {
    if (a.empty() || count == 0) throw std::invalid_argument("empty a-cluster");
    double lo = a[0], hi = a[0];
    for (std::size_t i = 0; i < count && i < a.size(); ++i) {
        if (!(a[i] > 0)) throw std::invalid_argument("a must be positive");
        lo = std::min(lo, a[i]);
        hi = std::max(hi, a[i]);
    }
    return {(lo + hi) / 2, (hi - lo) / 2};
}

int round_up8(double m) { return 8 * static_cast<int>(std::ceil(m / 8.0)); }

// nodes so that factor^M drops below 10^-digits
int nodes_for_factor(double factor, double digits, int lo, int hi) {
    if (!(factor < 1)) throw std::domain_error("contour geometry gives no trapezoid convergence");
    double m = digits * std::log(10.0) / -std::log(factor);
    return std::clamp(round_up8(m), lo, hi);
}

double sign_pow(int e) { return (e % 2 == 0) ? 1.0 : -1.0; }

double factorial(int k) {
    double f = 1;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

cplx pi_ratio_q(const ModelParams& p, cplx z) {
    const double q = p.q();
    if (p.is_plancherel()) return std::exp(p.gamma() * (q - 1) * z);
    cplx v = 1;
    for (double al : p.alpha()) v *= 1.0 - al * z;
    return v;
}

cplx pi_ratio_qinv(const ModelParams& p, cplx z) {
    const double q = p.q();
    if (p.is_plancherel()) return std::exp(p.gamma() * (1 / q - 1) * z);
    cplx v = 1;
    for (double al : p.alpha()) v /= 1.0 - al * z / q;
    return v;
}

void check_groups(const std::vector<int>& n_list, const std::vector<int>& r_list, int N) {
    if (n_list.size() != r_list.size() || n_list.empty())
        throw std::invalid_argument("moment: n_list and r_list must be non-empty and of equal length");
    int total = 0;
    for (std::size_t i = 0; i < n_list.size(); ++i) {
        if (n_list[i] < 1 || n_list[i] > N) throw std::invalid_argument("moment: n_i outside 1..N");
        if (i > 0 && n_list[i] > n_list[i - 1]) throw std::invalid_argument("moment: n_i must be non-increasing");
        if (r_list[i] < 0 || r_list[i] > n_list[i]) throw std::invalid_argument("moment: r_i outside 0..n_i");
        total += r_list[i];
    }
    if (total > 4) throw std::invalid_argument("moment: sum of r_i exceeds 4 (cost guard)");
}

// Expands the groups into one variable per z_{i,k} and integrates
//   prefactor * prod_vars single(g, z) / z^{r_g} * prod_{same group} (z - z')^2
//             * prod_{earlier group, later group} cross(z, z')
template <class Single, class Cross>
double grouped_integral(const std::vector<int>& r_list, const ContourFamily& fam, int nodes, bool inverse,
                        Single&& single, Cross&& cross) {
    if (fam.contours.size() != r_list.size()) throw std::invalid_argument("moment: one contour per group required");
    ContourFamily vars;
    std::vector<int> group_of;
    double pref = 1;
    for (std::size_t i = 0; i < r_list.size(); ++i) {
        const int r = r_list[i];
        if (r == 0) continue;
        pref /= factorial(r);
        pref *= inverse ? sign_pow(r * (r - 1) / 2) : sign_pow(r * (r + 1) / 2);
        for (int k = 0; k < r; ++k) {
            vars.contours.push_back(fam.contours[i]);
            group_of.push_back(static_cast<int>(i));
        }
    }
    if (group_of.empty()) return 1.0;
    const std::size_t V = group_of.size();
    auto f = [&](std::span<const cplx> z) {
        cplx v = 1;
        for (std::size_t a = 0; a < V; ++a) {
            const int ga = group_of[a];
            v *= single(ga, z[a]) / std::pow(z[a], r_list[ga]);
            for (std::size_t b = a + 1; b < V; ++b) {
                if (group_of[b] == ga) {
                    cplx d = z[a] - z[b];
                    v *= d * d;
                } else {
                    v *= cross(z[a], z[b]);
                }
            }
        }
        return v;
    };
    std::vector<int> nn(V, nodes);
    return pref * integrate_product(f, vars, nn).real();
}

}  // namespace

// ---- contours ------------------------------------------------------------------

ContourFamily moment_contours(double q, const std::vector<double>& a, int levels, double* factor) {
    if (levels < 1) throw std::invalid_argument("moment_contours: levels must be positive");
    const auto [c, s] = cluster_of(a, a.size());
    if (levels == 1) {
        double rho = std::max(0.5 * c, std::sqrt(s * c));
        if (factor) *factor = std::max(s / rho, rho / c);
        return build_nested_circles(q, a, 1, rho);
    }
    // worst of (inner singularity reach / radius, radius / outer singularity distance)
    auto worst = [&](const std::vector<double>& rho) {
        double w = 0;
        for (int i = 0; i < levels; ++i) {
            double in = (i == levels - 1) ? s : std::max(s, (1 - q) * c + q * rho[i + 1]);
            double out = (i == 0) ? c : std::min(c, (rho[i - 1] - (1 - q) * c) / q);
            w = std::max(w, std::max(in / rho[i], rho[i] / out));
        }
        return w;
    };
    const double lo = std::max(1.02 * s, 0.1 * c);
    if (!(lo < c)) throw std::domain_error("moment_contours: a-cluster too wide to exclude 0");
    double best = 2, best_in = 0, best_margin = 0;
    std::vector<double> rho(levels);
    for (int i = 1; i < 200; ++i) {
        rho[levels - 1] = lo + (c - lo) * i / 200.0;
        for (int j = 1; j < 200; ++j) {
            const double margin = c * j / 400.0;
            for (int l = levels - 2; l >= 0; --l) rho[l] = (1 - q) * c + q * rho[l + 1] + margin;
            if (!(rho[0] < c)) break;
            double w = worst(rho);
            if (w < best) {
                best = w;
                best_in = rho[levels - 1];
                best_margin = margin;
            }
        }
    }
    if (!(best < 1)) throw std::domain_error("moment_contours: no admissible nested circles (q too close to 1?)");
    if (factor) *factor = best;
    return build_nested_circles(q, a, levels, best_in, best_margin);
}

ContourFamily inverse_moment_contours(double q, const std::vector<double>& a, int levels, double alpha_max,
                                      double* factor) {
    if (levels < 1) throw std::invalid_argument("inverse_moment_contours: levels must be positive");
    if (!(q > 0 && q < 1)) throw std::invalid_argument("inverse_moment_contours: q must lie in (0,1)");
    const auto [c0, s0] = cluster_of(a, a.size());
    const double amin = c0 - s0, amax = c0 + s0;
    const double cap = alpha_max > 0 ? q / alpha_max : std::numeric_limits<double>::infinity();
    // Circle i spans [L, R_i] on the real axis, R_m = amax + d, R_i = R_{i+1} / q + d,
    // so that contour i contains q^{-1} times every later contour.
    auto radii = [&](double d) {
        std::vector<double> R(levels);
        R[levels - 1] = amax + d;
        for (int i = levels - 2; i >= 0; --i) R[i] = R[i + 1] / q + d;
        return R;
    };
    auto worst = [&](double L, const std::vector<double>& R) {
        double w = 0;
        for (int i = 0; i < levels; ++i) {
            const double c = (L + R[i]) / 2, rho = (R[i] - L) / 2;
            double in = std::max(std::abs(amin - c), std::abs(amax - c));
            if (i + 1 < levels) in = std::max({in, std::abs(L / q - c), std::abs(R[i + 1] / q - c)});
            double out = std::min(c, cap - c);
            for (int k = 0; k < i; ++k) {
                const double ck = q * (L + R[k]) / 2, rk = q * (R[k] - L) / 2;
                out = std::min(out, rk - std::abs(ck - c));
            }
            if (!(out > rho) || !(in < rho)) return 2.0;
            w = std::max({w, in / rho, rho / out});
        }
        return w;
    };
    double best = 2, bestL = 0, bestd = 0;
    for (int i = 1; i < 100; ++i) {
        const double L = amin * i / 100.0;
        for (int j = 1; j <= 200; ++j) {
            const double d = amax * j / 100.0;
            std::vector<double> R = radii(d);
            if (!(R[0] < cap)) break;
            double w = worst(L, R);
            if (w < best) {
                best = w;
                bestL = L;
                bestd = d;
            }
        }
    }
    if (!(best < 1))
        throw std::domain_error("inverse_moment_contours: no admissible contours (needs a_i alpha_j < q^m)");
    if (factor) *factor = best;
    std::vector<double> R = radii(bestd);
    ContourFamily fam;
    for (int i = 0; i < levels; ++i) fam.contours.push_back(Contour::circle((bestL + R[i]) / 2, (R[i] - bestL) / 2));
    for (int i = 0; i < levels; ++i)
        for (int j = i + 1; j < levels; ++j) fam.nesting.push_back({i, j, 1 / q});
    for (double x : a) fam.must_enclose.push_back(x);
    fam.must_exclude.push_back(0.0);
    if (alpha_max > 0) fam.must_exclude.push_back(cap);
    std::string bad = check_certificate(fam);
    if (!bad.empty()) throw std::domain_error("inverse_moment_contours: " + bad);
    return fam;
}

// ---- moments ---------------------------------------------------------------------

double q_moment_on(const std::vector<int>& n_list, const std::vector<int>& r_list, const ModelParams& params,
                   const ContourFamily& fam, int nodes) {
    check_groups(n_list, r_list, params.N());
    const double q = params.q();
    const std::vector<double>& a = params.a();
    auto single = [&](int g, cplx z) {
        cplx v = pi_ratio_q(params, z);
        for (int l = 0; l < n_list[g]; ++l) v *= -a[l] / (z - a[l]);
        return v;
    };
    auto cross = [&](cplx z, cplx w) { return q * (z - w) / (z - q * w); };
    return grouped_integral(r_list, fam, nodes, false, single, cross);
}

double q_moment(const std::vector<int>& n_list, const std::vector<int>& r_list, const ModelParams& params) {
    check_groups(n_list, r_list, params.N());
    std::vector<int> n, r;
    int total = 0;
    for (std::size_t i = 0; i < n_list.size(); ++i)
        if (r_list[i] > 0) {
            n.push_back(n_list[i]);
            r.push_back(r_list[i]);
            total += r_list[i];
        }
    if (total == 0) return 1.0;
    double factor = 0;
    ContourFamily fam = moment_contours(params.q(), params.a(), static_cast<int>(n.size()), &factor);
    int nodes = nodes_for_factor(factor, 13, 32, 256) + round_up8(n[0] + 2 * total);
    if (!params.is_plancherel()) nodes += round_up8(static_cast<double>(params.alpha().size()));
    return q_moment_on(n, r, params, fam, nodes);
}

double q_inverse_moment_on(const std::vector<int>& n_list, const std::vector<int>& r_list,
                           const ModelParams& params, const ContourFamily& fam, int nodes) {
    check_groups(n_list, r_list, params.N());
    const double q = params.q();
    const std::vector<double>& a = params.a();
    auto single = [&](int g, cplx z) {
        cplx v = pi_ratio_qinv(params, z);
        for (int l = 0; l < n_list[g]; ++l) v *= z / (z - a[l]);
        return v;
    };
    auto cross = [&](cplx z, cplx w) { return (z - w) / (z - w / q); };
    return grouped_integral(r_list, fam, nodes, true, single, cross);
}

double q_inverse_moment(const std::vector<int>& n_list, const std::vector<int>& r_list, const ModelParams& params) {
    check_groups(n_list, r_list, params.N());
    std::vector<int> n, r;
    int total = 0;
    for (std::size_t i = 0; i < n_list.size(); ++i)
        if (r_list[i] > 0) {
            n.push_back(n_list[i]);
            r.push_back(r_list[i]);
            total += r_list[i];
        }
    if (total == 0) return 1.0;
    const int m = static_cast<int>(n.size());
    double alpha_max = 0;
    if (!params.is_plancherel()) {
        for (double al : params.alpha()) alpha_max = std::max(alpha_max, al);
        const double qm = std::pow(params.q(), m);
        for (double x : params.a())
            if (!(x * alpha_max < qm)) throw std::domain_error("q_inverse_moment: requires a_i alpha_j < q^m");
    }
    double factor = 0;
    ContourFamily fam = inverse_moment_contours(params.q(), params.a(), m, alpha_max, &factor);
    int nodes = nodes_for_factor(factor, 13, 32, 256) + round_up8(n[0] + 2 * total);
    return q_inverse_moment_on(n, r, params, fam, nodes);
}

// ---- law of large numbers --------------------------------------------------------

LLNSpec LLNSpec::continuous(std::vector<double> a, double tau) {
    if (!(tau >= 0)) throw std::invalid_argument("LLNSpec: tau must be non-negative");
    LLNSpec s;
    s.a = std::move(a);
    s.plancherel = true;
    s.tau = tau;
    return s;
}

LLNSpec LLNSpec::discrete(std::vector<double> a, std::vector<double> alpha) {
    LLNSpec s;
    s.a = std::move(a);
    s.plancherel = false;
    s.alpha = std::move(alpha);
    return s;
}

bool LLNSpec::unit_a() const {
    return std::all_of(a.begin(), a.end(), [](double x) { return x == 1.0; });
}

LLNSpec LLNSpec::truncated(int t) const {
    if (plancherel || t < 0 || t > static_cast<int>(alpha.size()))
        throw std::invalid_argument("LLNSpec::truncated: needs a discrete spec and 0 <= t <= steps");
    return discrete(a, std::vector<double>(alpha.begin(), alpha.begin() + t));
}

namespace {

template <class R, class C>
struct CircleNodes {
    std::vector<C> z, w;
};

// trapezoid nodes with weights for (1 / 2 pi i) closed integral
template <class R, class C>
CircleNodes<R, C> circle_nodes(double c, double rho, int M) {
    using std::cos;
    using std::sin;
    CircleNodes<R, C> out;
    const R two_pi = 2 * boost::math::constants::pi<R>();
    for (int j = 0; j < M; ++j) {
        R th = two_pi * j / M;
        C d = C(R(rho) * cos(th), R(rho) * sin(th));
        out.z.push_back(C(R(c)) + d);
        out.w.push_back(d / C(R(M)));
    }
    return out;
}

template <class R, class C>
C lln_weight(const LLNSpec& sp, int n, const C& z) {
    using std::exp;
    C w(1);
    for (int l = 0; l < n; ++l) w *= C(R(sp.a[l])) / (C(R(sp.a[l])) - z);
    if (sp.plancherel)
        w *= exp(C(R(-sp.tau)) * z);
    else
        for (double al : sp.alpha) w *= C(1) - C(R(al)) * z;
    return w;
}

struct LLNGeometry {
    double c, rho;
    int nodes;
};

LLNGeometry lln_geometry(const LLNSpec& sp, int n, int r, double digits) {
    if (n < 1 || n > sp.N()) throw std::invalid_argument("lln: n outside 1..N");
    const auto [c, s] = cluster_of(sp.a, static_cast<std::size_t>(n));
    const double rho = std::max(0.5 * c, std::sqrt(s * c));
    const double factor = std::max(s / rho, rho / c);
    int M = nodes_for_factor(factor, digits, 32, 4096) + n + 2 * r;
    if (sp.plancherel)
        M += 4 * static_cast<int>(std::ceil(std::exp(1.0) * sp.tau * rho));
    else
        M += static_cast<int>(sp.alpha.size());
    return {c, rho, round_up8(M)};
}

// h_p = (1 / 2 pi i) closed integral of w(z) z^p dz for p in [pmin, pmax]
template <class R, class C>
std::vector<C> lln_moments(const LLNSpec& sp, int n, int pmin, int pmax, const LLNGeometry& geo, int M) {
    auto nodes = circle_nodes<R, C>(geo.c, geo.rho, M);
    std::vector<C> h(pmax - pmin + 1, C(0));
    for (int j = 0; j < M; ++j) {
        const C& z = nodes.z[j];
        C zp(1);
        if (pmin < 0)
            for (int i = 0; i < -pmin; ++i) zp /= z;
        else
            for (int i = 0; i < pmin; ++i) zp *= z;
        C f = nodes.w[j] * lln_weight<R, C>(sp, n, z);
        for (int p = pmin; p <= pmax; ++p) {
            h[p - pmin] += f * zp;
            zp *= z;
        }
    }
    return h;
}

mp_real mp_real_part(const mp_cplx& v) { return v.real(); }

// det[A(i-j)] with A(s) = -h_{s-1}
template <class C>
C toeplitz_from_moments(const std::vector<C>& h, int r) {
    // h indexed from p = -r
    std::vector<C> m(r * r);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) m[i * r + j] = -h[(i - j - 1) + r];
    return lu_det(std::move(m), r);
}

// (-1)^{r(r+1)/2} det[h_{i+j-2-r}] (discrete Andreief form of the r-fold product rule)
template <class C>
C andreief_from_moments(const std::vector<C>& h, int r) {
    std::vector<C> m(r * r);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) m[i * r + j] = h[i + j];
    C d = lu_det(std::move(m), r);
    return (r * (r + 1) / 2) % 2 ? -d : d;
}

mp_real lln_toeplitz_mp(int n, int r, const LLNSpec& sp) {
    LLNGeometry geo = lln_geometry(sp, n, r, 45);
    auto h = lln_moments<mp_real, mp_cplx>(sp, n, -r, r - 2, geo, geo.nodes);
    return mp_real_part(toeplitz_from_moments(h, r));
}

double lln_toeplitz_double(int n, int r, const LLNSpec& sp) {
    LLNGeometry geo = lln_geometry(sp, n, r, 16);
    auto h1 = lln_moments<double, cplx>(sp, n, -r, r - 2, geo, geo.nodes);
    auto h2 = lln_moments<double, cplx>(sp, n, -r, r - 2, geo, 2 * geo.nodes);
    double scale = 0, diff = 0;
    for (std::size_t i = 0; i < h1.size(); ++i) {
        scale = std::max(scale, std::abs(h2[i]));
        diff = std::max(diff, std::abs(h1[i] - h2[i]));
    }
    Eigen::MatrixXd A(r, r);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) A(i, j) = -h2[(i - j - 1) + r].real();
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
    const double det = lu.determinant();
    const double cond = A.lpNorm<Eigen::Infinity>() * lu.inverse().lpNorm<Eigen::Infinity>();
    const double est = std::numeric_limits<double>::epsilon() * r * cond + (scale > 0 ? diff / scale : 0) * cond;
    if (std::isfinite(det) && std::isfinite(est) && est < 1e-11) return det;
    // ill-conditioned or unresolved coefficients: 50-digit retry
    return static_cast<double>(lln_toeplitz_mp(n, r, sp));
}

mp_real lln_contour_mp(int n, int r, const LLNSpec& sp) {
    LLNGeometry geo = lln_geometry(sp, n, r, 30);
    if (r >= 3) {
        auto h = lln_moments<mp_real, mp_cplx>(sp, n, -r, r - 2, geo, geo.nodes);
        return mp_real_part(andreief_from_moments(h, r));
    }
    // plain product trapezoid of the r-fold integrand
    auto nodes = circle_nodes<mp_real, mp_cplx>(geo.c, geo.rho, geo.nodes);
    const int M = geo.nodes;
    std::vector<mp_cplx> f(M);
    for (int j = 0; j < M; ++j) {
        mp_cplx zr(1);
        for (int i = 0; i < r; ++i) zr *= nodes.z[j];
        f[j] = nodes.w[j] * lln_weight<mp_real, mp_cplx>(sp, n, nodes.z[j]) / zr;
    }
    mp_cplx total(0);
    if (r == 1) {
        for (int j = 0; j < M; ++j) total += f[j];
        return -total.real();
    }
    for (int j = 0; j < M; ++j)
        for (int k = 0; k < M; ++k) {
            mp_cplx d = nodes.z[j] - nodes.z[k];
            total += f[j] * f[k] * d * d;
        }
    // (-1)^{3} / 2!
    return -total.real() / 2;
}

mp_real binomial_mp(int top, int k) {
    if (k < 0 || top < k) return mp_real(0);
    mp_real b = 1;
    for (int j = 1; j <= k; ++j) b = b * (top - k + j) / j;
    return b;
}

mp_real lln_explicit_mp(int n, int r, const LLNSpec& sp) {
    if (!sp.unit_a()) throw std::invalid_argument("lln_exp_sum: the explicit method requires a == 1");
    std::vector<mp_real> m(r * r);
    if (sp.plancherel) {
        mp_real tau(sp.tau);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j) m[i * r + j] = g_poly_tau(r, tau, n + 1 - r + j - i);
        return exp(-tau * r) * lu_det(std::move(m), r);
    }
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) m[i * r + j] = g_poly_alpha(r, sp.alpha, n + 1 - r + j - i);
    return lu_det(std::move(m), r);
}

void check_lln_args(int n, int r, const LLNSpec& sp) {
    if (n < 1 || n > sp.N() || r < 1 || r > n) throw std::invalid_argument("lln_exp_sum: need 1 <= r <= n <= N");
}

}  // namespace

std::vector<mp_real> lln_weight_moments(const LLNSpec& spec, int n, int pmin, int pmax) {
    if (pmin > pmax) throw std::invalid_argument("lln_weight_moments: empty range");
    LLNGeometry geo = lln_geometry(spec, n, std::max(std::abs(pmin), std::abs(pmax)), 45);
    auto h = lln_moments<mp_real, mp_cplx>(spec, n, pmin, pmax, geo, geo.nodes);
    std::vector<mp_real> out;
    for (const auto& v : h) out.push_back(v.real());
    return out;
}

std::vector<mp_real> e_coefficients(const std::vector<double>& b, const std::vector<double>& c) {
    if (b.size() != c.size()) throw std::invalid_argument("e_coefficients: length mismatch");
    std::vector<mp_real> e{mp_real(1)};
    for (std::size_t i = 0; i < b.size(); ++i) {
        std::vector<mp_real> next(e.size() + 1, mp_real(0));
        for (std::size_t k = 0; k < e.size(); ++k) {
            next[k] += e[k] * mp_real(b[i]);
            next[k + 1] += e[k] * mp_real(c[i]);
        }
        e.swap(next);
    }
    return e;
}

mp_real g_poly_tau(int r, const mp_real& tau, int m) {
    if (m <= 0) return mp_real(0);
    mp_real sum = 0, term = 1;  // term = tau^i / i!
    for (int i = 0; i <= m - 1; ++i) {
        if (i > 0) term = term * tau / i;
        const int b = m - 1 - i;
        sum += term * binomial_mp(r + b - 1, b);
    }
    return sum;
}

mp_real g_poly_alpha(int r, const std::vector<double>& alpha, int m) {
    if (m <= 0) return mp_real(0);
    std::vector<double> one_minus(alpha.size());
    for (std::size_t i = 0; i < alpha.size(); ++i) one_minus[i] = 1 - alpha[i];
    std::vector<mp_real> e = e_coefficients(one_minus, alpha);
    mp_real sum = 0;
    for (int i = 0; i < static_cast<int>(e.size()) && i <= m - 1; ++i) {
        const int b = m - 1 - i;
        sum += e[i] * binomial_mp(r + b - 1, b);
    }
    return sum;
}

mp_real lln_exp_sum_mp(int n, int r, const LLNSpec& spec, LLNMethod method) {
    check_lln_args(n, r, spec);
    switch (method) {
        case LLNMethod::contour: return lln_contour_mp(n, r, spec);
        case LLNMethod::toeplitz: return lln_toeplitz_mp(n, r, spec);
        case LLNMethod::explicit_poly: return lln_explicit_mp(n, r, spec);
    }
    throw std::invalid_argument("lln_exp_sum: unknown method");
}

double lln_exp_sum(int n, int r, const LLNSpec& spec, LLNMethod method) {
    check_lln_args(n, r, spec);
    if (method == LLNMethod::toeplitz) return lln_toeplitz_double(n, r, spec);
    return static_cast<double>(lln_exp_sum_mp(n, r, spec, method));
}

double LLNProfile::x_at(int n, int k) const {
    if (k <= 0) return std::numeric_limits<double>::infinity();
    if (n <= 0 || k > n) return 0.0;
    return x[InterlacingArray::flat_index(n, k)];
}

double LLNProfile::y_at(int n, int k) const {
    if (k <= 0) return 0.0;
    if (n <= 0 || k > n) return 1.0;
    return y[InterlacingArray::flat_index(n, k)];
}

LLNProfile lln_profile(const LLNSpec& spec) {
    const int N = spec.N();
    if (N < 1) throw std::invalid_argument("lln_profile: empty a");
    const bool explicit_path = spec.unit_a();
    auto level = [&](int n) {
        std::vector<mp_real> S(n + 1);
        S[0] = 1;
        if (explicit_path) {
            for (int r = 1; r <= n; ++r) S[r] = lln_explicit_mp(n, r, spec);
        } else {
            LLNGeometry geo = lln_geometry(spec, n, n, 45);
            auto h = lln_moments<mp_real, mp_cplx>(spec, n, -n, n - 2, geo, geo.nodes);
            for (int r = 1; r <= n; ++r) {
                // moments for size r sit at offset n - r of the size-n table
                std::vector<mp_cplx> sub(h.begin() + (n - r), h.begin() + (n - r) + 2 * r - 1);
                S[r] = mp_real_part(toeplitz_from_moments(sub, r));
            }
        }
        return S;
    };
    std::vector<std::future<std::vector<mp_real>>> jobs;
    for (int n = 1; n <= N; ++n) jobs.push_back(std::async(std::launch::async, level, n));
    LLNProfile p;
    p.N = N;
    p.spec = spec;
    p.x.assign(static_cast<std::size_t>(N) * (N + 1) / 2, 0.0);
    p.y.assign(p.x.size(), 1.0);
    for (int n = 1; n <= N; ++n) {
        std::vector<mp_real> S = jobs[n - 1].get();
        for (int k = 1; k <= n; ++k) {
            const mp_real& num = S[n - k + 1];
            const mp_real& den = S[n - k];
            if (!(den > 0) || !(num > 0))
                throw std::domain_error("lln_profile: non-positive determinant at n=" + std::to_string(n) +
                                        ", k=" + std::to_string(k));
            mp_real y = num / den;
            p.y[InterlacingArray::flat_index(n, k)] = static_cast<double>(y);
            p.x[InterlacingArray::flat_index(n, k)] = static_cast<double>(-log(y));
        }
    }
    return p;
}

double pushblock_ode_rhs(const LLNProfile& p, int n, int k) {
    const double an = p.spec.a.at(n - 1);
    const double ynk = p.y_at(n, k);
    const double t1 = 1 - p.y_at(n - 1, k - 1) / ynk;
    const double t2 = 1 - ynk / p.y_at(n, k + 1);
    const double den = 1 - ynk / p.y_at(n - 1, k);
    if (k == n) return an * t1;  // t2 and den coincide
    return an * t1 * t2 / den;
}

double pushblock_ode_residual(const ProfileEvaluator& profile_at, int n, int k, double tau, double h) {
    if (!(h > 0) || !(tau - h > 0)) throw std::invalid_argument("pushblock_ode_residual: need 0 < h < tau");
    const double xp = profile_at(tau + h).x_at(n, k);
    const double xm = profile_at(tau - h).x_at(n, k);
    return (xp - xm) / (2 * h) - pushblock_ode_rhs(profile_at(tau), n, k);
}

double alpha_ode_residual(const LLNProfile& prev, const LLNProfile& cur, int n, int k, double a_n, double alpha_t) {
    const double y = cur.y_at(n, k);
    const double lhs = a_n * (1 - cur.y_at(n - 1, k - 1) / y) * (1 - y / cur.y_at(n, k + 1)) /
                       (1 - y / cur.y_at(n - 1, k));
    const double rhs = (1 / alpha_t) * (1 - y / prev.y_at(n, k)) * (1 - cur.y_at(n, k - 1) / y) /
                       (1 - prev.y_at(n, k - 1) / y);
    return lhs - rhs;
}

// ---- Toeplitz determinants -------------------------------------------------------

cplx ToeplitzSymbol::coefficient(int k) const {
    return integrate_closed([&](cplx z) { return phi(z) * std::pow(z, -k - 1); }, contour);
}

cplx ToeplitzSymbol::det(int r) const {
    if (r <= 0) return 1.0;
    std::vector<cplx> c(2 * r - 1);
    for (int k = -(r - 1); k <= r - 1; ++k) c[k + r - 1] = coefficient(k);
    std::vector<cplx> m(r * r);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) m[i * r + j] = c[(i - j) + r - 1];
    return lu_det(std::move(m), r);
}

std::pair<double, double> toeplitz_identity_residuals(const ToeplitzSymbol& sym, double gamma, int M) {
    if (M < 1) throw std::invalid_argument("toeplitz_identity_residuals: M >= 1 required");
    auto with = [&](std::function<cplx(cplx)> f) { return ToeplitzSymbol{std::move(f), sym.contour}; };
    const ToeplitzSymbol p = sym;
    const ToeplitzSymbol pg = with([&](cplx z) { return (1.0 + gamma * z) * sym.phi(z); });
    const ToeplitzSymbol pz = with([&](cplx z) { return z * sym.phi(z); });
    const ToeplitzSymbol pgz = with([&](cplx z) { return (1.0 + gamma * z) * sym.phi(z) / z; });
    auto rel = [](cplx t1, cplx t2, cplx t3) {
        double s = std::max({std::abs(t1), std::abs(t2), std::abs(t3), 1e-300});
        return std::abs(t1 - t2 + t3) / s;
    };
    const cplx a1 = p.det(M + 1) * pg.det(M);
    const cplx a2 = pg.det(M + 1) * p.det(M);
    const cplx a3 = gamma * pz.det(M + 1) * pgz.det(M);
    const cplx b1 = p.det(M + 1) * pg.det(M - 1);
    const cplx b2 = pg.det(M) * p.det(M);
    // no gamma here: the matrix identity behind it carries none
    const cplx b3 = pz.det(M) * pgz.det(M);
    return {rel(a1, a2, a3), rel(b1, b2, b3)};
}

std::pair<double, double> matrix_identity_residuals(const Eigen::MatrixXd& B, double gamma, int M) {
    if (M < 1 || B.rows() < M + 2 || B.cols() < M + 2)
        throw std::invalid_argument("matrix_identity_residuals: B must be at least (M+2) x (M+2)");
    Eigen::MatrixXd C(M + 1, M + 1);
    for (int i = 0; i <= M; ++i)
        for (int j = 0; j <= M; ++j) C(i, j) = B(i, j) + gamma * B(i, j + 1);
    // det of the size x size block starting at (r0, c0); size 0 gives 1
    auto det = [](const Eigen::MatrixXd& X, int r0, int c0, int size) {
        if (size == 0) return 1.0;
        return X.block(r0, c0, size, size).determinant();
    };
    auto rel = [](double t1, double t2, double t3) {
        double s = std::max({std::abs(t1), std::abs(t2), std::abs(t3), 1e-300});
        return std::abs(t1 - t2 + t3) / s;
    };
    const double a1 = det(B, 0, 0, M + 1) * det(C, 1, 1, M);
    const double a2 = det(C, 0, 0, M + 1) * det(B, 1, 1, M);
    const double a3 = gamma * det(B, 0, 1, M + 1) * det(C, 1, 0, M);
    const double b1 = det(B, 0, 0, M + 1) * det(C, 1, 1, M - 1);
    const double b2 = det(C, 0, 0, M) * det(B, 1, 1, M);
    const double b3 = det(B, 0, 1, M) * det(C, 1, 0, M);
    return {rel(a1, a2, a3), rel(b1, b2, b3)};
}

// ---- lattice paths -----------------------------------------------------------------

namespace {

struct ConfigSpace {
    int n, r;
    std::vector<std::vector<int>> cfg;
    std::map<std::vector<int>, std::size_t> index;

    ConfigSpace(int n_, int r_) : n(n_), r(r_) {
        std::vector<int> x(r);
        for (int i = 0; i < r; ++i) x[i] = i + 1;
        while (true) {
            index[x] = cfg.size();
            cfg.push_back(x);
            int i = r - 1;
            while (i >= 0 && x[i] == n - r + 1 + i) --i;
            if (i < 0) break;
            ++x[i];
            for (int j = i + 1; j < r; ++j) x[j] = x[j - 1] + 1;
        }
    }
    // upper bound for walker i given the others
    int limit(const std::vector<int>& x, int i) const { return i + 1 < r ? x[i + 1] - 1 : n; }
};

// one row of the square lattice: walker i moves right to x'_i with x_i <= x'_i < x_{i+1}
void row_transfer(const ConfigSpace& cs, const std::vector<double>& in, std::vector<double>& out) {
    std::fill(out.begin(), out.end(), 0.0);
    std::vector<int> y(cs.r);
    for (std::size_t s = 0; s < cs.cfg.size(); ++s) {
        if (in[s] == 0) continue;
        const std::vector<int>& x = cs.cfg[s];
        std::function<void(int)> rec = [&](int i) {
            if (i == cs.r) {
                out[cs.index.at(y)] += in[s];
                return;
            }
            for (int v = x[i]; v <= cs.limit(x, i); ++v) {
                y[i] = v;
                rec(i + 1);
            }
        };
        rec(0);
    }
}

std::vector<double> square_lattice_part(const ConfigSpace& cs) {
    std::vector<double> v(cs.cfg.size(), 0.0), w(cs.cfg.size());
    v[0] = 1.0;  // start (1, ..., r)
    for (int row = 0; row < cs.r; ++row) {
        row_transfer(cs, v, w);
        v.swap(w);
    }
    return v;
}

}  // namespace

std::vector<double> lattice_path_polynomial(int n, int r) {
    if (r < 1 || r > n) throw std::invalid_argument("lattice_path_polynomial: need 1 <= r <= n");
    ConfigSpace cs(n, r);
    std::vector<double> v = square_lattice_part(cs);
    std::vector<int> end(r);
    for (int i = 0; i < r; ++i) end[i] = n - r + 1 + i;
    const std::size_t e = cs.index.at(end);
    const int Kmax = r * (n - r);
    std::vector<double> coeff(Kmax + 1, 0.0);
    coeff[0] = v[e];
    // sequences of K single +1 jumps that keep the walkers apart; weight tau^K / K!
    double kfact = 1;
    std::vector<double> w(v.size());
    for (int K = 1; K <= Kmax; ++K) {
        std::fill(w.begin(), w.end(), 0.0);
        for (std::size_t s = 0; s < cs.cfg.size(); ++s) {
            if (v[s] == 0) continue;
            std::vector<int> x = cs.cfg[s];
            for (int i = 0; i < r; ++i) {
                if (x[i] + 1 > cs.limit(cs.cfg[s], i)) continue;
                ++x[i];
                w[cs.index.at(x)] += v[s];
                --x[i];
            }
        }
        v.swap(w);
        kfact *= K;
        coeff[K] = v[e] / kfact;
    }
    for (double c : coeff)
        if (c < 0) throw std::logic_error("lattice_path_polynomial: negative coefficient");
    return coeff;
}

double lattice_path_partition(int n, int r, double tau) {
    std::vector<double> c = lattice_path_polynomial(n, r);
    double v = 0;
    for (std::size_t i = c.size(); i-- > 0;) v = v * tau + c[i];
    return v;
}

double lattice_path_partition_alpha(int n, int r, const std::vector<double>& alpha) {
    if (r < 1 || r > n) throw std::invalid_argument("lattice_path_partition_alpha: need 1 <= r <= n");
    ConfigSpace cs(n, r);
    std::vector<double> v = square_lattice_part(cs);
    std::vector<double> w(v.size());
    for (double al : alpha) {
        std::fill(w.begin(), w.end(), 0.0);
        for (std::size_t s = 0; s < cs.cfg.size(); ++s) {
            if (v[s] == 0) continue;
            const std::vector<int>& x = cs.cfg[s];
            // each walker stays (weight 1 - alpha) or steps up-right (weight alpha)
            for (unsigned mask = 0; mask < (1u << r); ++mask) {
                std::vector<int> y = x;
                double wt = v[s];
                bool ok = true;
                for (int i = 0; i < r && ok; ++i) {
                    if (mask & (1u << i)) {
                        ++y[i];
                        wt *= al;
                    } else {
                        wt *= 1 - al;
                    }
                    if (y[i] > n || (i > 0 && y[i] <= y[i - 1])) ok = false;
                }
                if (ok) w[cs.index.at(y)] += wt;
            }
        }
        v.swap(w);
    }
    std::vector<int> end(r);
    for (int i = 0; i < r; ++i) end[i] = n - r + 1 + i;
    return v[cs.index.at(end)];
}

mp_real factorial_toeplitz_det(int n, int r) {
    if (r <= 0) return mp_real(1);
    std::vector<mp_real> inv_fact(n + r + 1);
    inv_fact[0] = 1;
    for (std::size_t k = 1; k < inv_fact.size(); ++k) inv_fact[k] = inv_fact[k - 1] / k;
    std::vector<mp_real> m(r * r);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) {
            int k = n - r + j - i;
            m[i * r + j] = k < 0 ? mp_real(0) : inv_fact[k];
        }
    return lu_det(std::move(m), r);
}

double desnanot_jacobi_check(int n, int r) {
    if (r < 2 || n < 2) throw std::invalid_argument("desnanot_jacobi_check: need n, r >= 2");
    mp_real lhs = factorial_toeplitz_det(n, r) * factorial_toeplitz_det(n - 2, r - 2);
    mp_real mid = factorial_toeplitz_det(n - 1, r - 1);
    mp_real rhs = mid * mid - factorial_toeplitz_det(n, r - 1) * factorial_toeplitz_det(n - 2, r - 1);
    mp_real scale = mid * mid;
    if (scale == 0) scale = 1;
    return static_cast<double>(abs(lhs - rhs) / scale);
}

}  // namespace qw
