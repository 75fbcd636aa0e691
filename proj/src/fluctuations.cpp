#include "qw/fluctuations.hpp"

#include "qw/dynamics.hpp"
#include "qw/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace qw {

namespace {

// Two concentric circles around the a-cluster, both leaving 0 outside; group
// one sits on the outer circle.
struct XiGeometry {
    double c, r_out, r_in;
    int m_out, m_in;
};

XiGeometry xi_geometry(const LLNSpec& sp, int n_max, int r_max, double digits) {
    double lo = sp.a.at(0), hi = sp.a.at(0);
    for (int i = 0; i < n_max; ++i) {
        if (!(sp.a.at(i) > 0)) throw std::invalid_argument("xi covariance: a must be positive");
        lo = std::min(lo, sp.a[i]);
        hi = std::max(hi, sp.a[i]);
    }
    const double c = (lo + hi) / 2, s = (hi - lo) / 2;
    const double rho = std::max(std::cbrt(s / c), 0.55);
    if (rho > 0.95) throw std::domain_error("xi covariance: a-cluster too wide for circles excluding 0");
    auto count = [&](double radius) {
        int m = static_cast<int>(std::ceil(digits * std::log(10.0) / -std::log(rho)));
        m += n_max + 2 * r_max;
        if (sp.plancherel)
            m += 2 * static_cast<int>(std::ceil(std::exp(1.0) * sp.tau * radius));
        else
            m += static_cast<int>(sp.alpha.size());
        return 8 * ((m + 7) / 8);
    };
    return {c, rho * c, rho * rho * c, count(rho * c), count(rho * rho * c)};
}

template <class R, class C>
C weight(const LLNSpec& sp, int n, const C& z) {
    using std::exp;
    C w(1);
    for (int l = 0; l < n; ++l) w *= C(R(sp.a[l])) / (C(R(sp.a[l])) - z);
    if (sp.plancherel)
        w *= exp(C(R(-sp.tau)) * z);
    else
        for (double al : sp.alpha) w *= C(1) - C(R(al)) * z;
    return w;
}

template <class R, class C>
void circle(double c, double radius, int m, std::vector<C>& z, std::vector<C>& w) {
    using std::cos;
    using std::sin;
    z.clear();
    w.clear();
    const R two_pi = 2 * boost::math::constants::pi<R>();
    for (int j = 0; j < m; ++j) {
        R th = two_pi * j / m;
        C d(R(radius) * cos(th), R(radius) * sin(th));
        z.push_back(C(R(c)) + d);
        w.push_back(d / C(R(m)));
    }
}

// Inverse of a small real matrix by Gauss-Jordan with partial pivoting.
std::vector<mp_real> mp_inverse(std::vector<mp_real> a, int r) {
    std::vector<mp_real> inv(r * r, mp_real(0));
    for (int i = 0; i < r; ++i) inv[i * r + i] = 1;
    for (int col = 0; col < r; ++col) {
        int p = col;
        for (int i = col + 1; i < r; ++i)
            if (abs(a[i * r + col]) > abs(a[p * r + col])) p = i;
        if (a[p * r + col] == 0) throw std::domain_error("xi covariance: singular Hankel matrix");
        for (int j = 0; j < r; ++j) {
            std::swap(a[col * r + j], a[p * r + j]);
            std::swap(inv[col * r + j], inv[p * r + j]);
        }
        mp_real piv = a[col * r + col];
        for (int j = 0; j < r; ++j) {
            a[col * r + j] /= piv;
            inv[col * r + j] /= piv;
        }
        for (int i = 0; i < r; ++i) {
            if (i == col || a[i * r + col] == 0) continue;
            mp_real f = a[i * r + col];
            for (int j = 0; j < r; ++j) {
                a[i * r + j] -= f * a[col * r + j];
                inv[i * r + j] -= f * inv[col * r + j];
            }
        }
    }
    return inv;
}

// Coefficients of v(z)^T H^{-1} v(z), v = (1, z, ..., z^{r-1}).
std::vector<mp_real> kernel_polynomial(const LLNSpec& sp, int n, int r) {
    std::vector<mp_real> h = lln_weight_moments(sp, n, -r, r - 2);
    std::vector<mp_real> H(r * r);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) H[i * r + j] = h[i + j];
    std::vector<mp_real> inv = mp_inverse(std::move(H), r);
    std::vector<mp_real> q(2 * r - 1, mp_real(0));
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) q[i + j] += inv[i * r + j];
    return q;
}

struct NodeSet {
    std::vector<mp_cplx> z, w;
    std::vector<cplx> zd, wd;
};

NodeSet make_nodes(double c, double radius, int m) {
    NodeSet s;
    circle<mp_real, mp_cplx>(c, radius, m, s.z, s.w);
    for (std::size_t j = 0; j < s.z.size(); ++j) {
        s.zd.emplace_back(static_cast<double>(s.z[j].real()), static_cast<double>(s.z[j].imag()));
        s.wd.emplace_back(static_cast<double>(s.w[j].real()), static_cast<double>(s.w[j].imag()));
    }
    return s;
}

// K(z) = z^{-r} w_n(z) q(z) on the nodes, with the check that it integrates to r.
struct KernelValues {
    std::vector<mp_cplx> v;
    std::vector<cplx> vd;
};

KernelValues kernel_on(const LLNSpec& sp, int n, int r, const NodeSet& ns) {
    std::vector<mp_real> q = kernel_polynomial(sp, n, r);
    KernelValues out;
    mp_cplx trace(0);
    for (std::size_t j = 0; j < ns.z.size(); ++j) {
        const mp_cplx& z = ns.z[j];
        mp_cplx poly(0);
        for (int m = static_cast<int>(q.size()) - 1; m >= 0; --m) poly = poly * z + mp_cplx(q[m]);
        mp_cplx zr(1);
        for (int i = 0; i < r; ++i) zr *= z;
        mp_cplx k = weight<mp_real, mp_cplx>(sp, n, z) * poly / zr;
        trace += ns.w[j] * k;
        out.v.push_back(k);
        out.vd.emplace_back(static_cast<double>(k.real()), static_cast<double>(k.imag()));
    }
    if (abs(trace - mp_cplx(r)) > 1e-8 * r)
        throw std::domain_error("xi covariance: kernel does not integrate to r (n=" + std::to_string(n) +
                                ", r=" + std::to_string(r) + ")");
    return out;
}

// -(1 / 2 pi i)^2 closed integrals of z / (z - w) K1(z) K2(w), z outside w
double kernel_pair(const NodeSet& zo, const KernelValues& k1, const NodeSet& wi, const KernelValues& k2) {
    cplx sum = 0;
    double mag = 0;
    for (std::size_t j = 0; j < zo.zd.size(); ++j) {
        cplx g = 0;
        for (std::size_t l = 0; l < wi.zd.size(); ++l) g += wi.wd[l] * k2.vd[l] / (zo.zd[j] - wi.zd[l]);
        cplx t = zo.wd[j] * zo.zd[j] * k1.vd[j] * g;
        sum += t;
        mag += std::abs(t);
    }
    if (mag <= 1e6 * std::max(1.0, std::abs(sum))) return -sum.real();
    // heavy cancellation: repeat in 50 digits
    mp_cplx s(0);
    for (std::size_t j = 0; j < zo.z.size(); ++j) {
        mp_cplx g(0);
        for (std::size_t l = 0; l < wi.z.size(); ++l) g += wi.w[l] * k2.v[l] / (zo.z[j] - wi.z[l]);
        s += zo.w[j] * zo.z[j] * k1.v[j] * g;
    }
    return -static_cast<double>(s.real());
}

void check_block_args(int n1, int r1, int n2, int r2, const LLNSpec& sp) {
    if (n1 < 1 || n2 < 1 || n1 > sp.N() || n2 > sp.N())
        throw std::invalid_argument("xi covariance: level outside 1..N");
    if (r1 < 0 || r1 > n1 || r2 < 0 || r2 > n2) throw std::invalid_argument("xi covariance: need 0 <= r <= n");
}

// group one must be the outer one: larger n, ties broken by larger r
bool needs_swap(int n1, int r1, int n2, int r2) { return n1 < n2 || (n1 == n2 && r1 < r2); }

double block_kernel(int n1, int r1, int n2, int r2, const LLNSpec& sp) {
    const int nmax = std::max(n1, n2), rmax = std::max(r1, r2);
    double prev = 0;
    for (double digits : {15.0, 30.0}) {
        XiGeometry g = xi_geometry(sp, nmax, rmax, digits);
        NodeSet zo = make_nodes(g.c, g.r_out, g.m_out), wi = make_nodes(g.c, g.r_in, g.m_in);
        double v = kernel_pair(zo, kernel_on(sp, n1, r1, zo), wi, kernel_on(sp, n2, r2, wi));
        if (digits > 15.0) {
            if (std::abs(v - prev) > 1e-9 * std::max(1.0, std::abs(v)))
                throw std::runtime_error("xi covariance: no convergence under refinement");
            return v;
        }
        prev = v;
    }
    return prev;
}

// All r-tuples of node indices with weight prod w g and the squared Vandermonde.
struct TupleSum {
    std::vector<std::vector<cplx>> pts;
    std::vector<cplx> wt;
    cplx total = 0;
};

TupleSum tuples(const std::vector<cplx>& z, const std::vector<cplx>& w, const std::vector<cplx>& g, int r) {
    TupleSum out;
    const std::size_t m = z.size();
    std::vector<std::size_t> idx(r, 0);
    while (true) {
        std::vector<cplx> p(r);
        cplx v = 1;
        for (int i = 0; i < r; ++i) {
            p[i] = z[idx[i]];
            v *= w[idx[i]] * g[idx[i]];
        }
        for (int i = 0; i < r; ++i)
            for (int j = i + 1; j < r; ++j) v *= (p[i] - p[j]) * (p[i] - p[j]);
        out.pts.push_back(std::move(p));
        out.wt.push_back(v);
        out.total += v;
        int d = 0;
        while (d < r && ++idx[d] == m) idx[d++] = 0;
        if (d == r) break;
    }
    return out;
}

double block_direct(int n1, int r1, int n2, int r2, const LLNSpec& sp) {
    if (r1 + r2 > 4) throw std::invalid_argument("xi covariance: direct method needs r1 + r2 <= 4");
    XiGeometry geo = xi_geometry(sp, std::max(n1, n2), std::max(r1, r2), 12);
    auto side = [&](double radius, int m, int n, int r) {
        std::vector<cplx> z, w, g;
        circle<double, cplx>(geo.c, radius, m, z, w);
        for (const cplx& x : z) g.push_back(weight<double, cplx>(sp, n, x) * std::pow(x, -r));
        return tuples(z, w, g, r);
    };
    TupleSum a = side(geo.r_out, std::min(geo.m_out, 96), n1, r1);
    TupleSum b = side(geo.r_in, std::min(geo.m_in, 96), n2, r2);
    cplx num = 0;
    for (std::size_t i = 0; i < a.wt.size(); ++i) {
        cplx row = 0;
        for (std::size_t j = 0; j < b.wt.size(); ++j) {
            cplx cr = 0;
            for (const cplx& z : a.pts[i])
                for (const cplx& w : b.pts[j]) cr -= z / (z - w);
            row += cr * b.wt[j];
        }
        num += a.wt[i] * row;
    }
    cplx den = a.total * b.total;
    if (std::abs(den) < 1e-290) throw std::domain_error("xi covariance: denominator underflow");
    return (num / den).real();
}

double block_value(int n1, int r1, int n2, int r2, const LLNSpec& sp, XiMethod method) {
    if (r1 == 0 || r2 == 0) return 0.0;
    if (needs_swap(n1, r1, n2, r2)) {
        std::swap(n1, n2);
        std::swap(r1, r2);
    }
    return method == XiMethod::kernel ? block_kernel(n1, r1, n2, r2, sp) : block_direct(n1, r1, n2, r2, sp);
}

}  // namespace

double xi_block_covariance(int n1, int r1, int n2, int r2, const LLNSpec& spec, XiMethod method) {
    check_block_args(n1, r1, n2, r2, spec);
    return block_value(n1, r1, n2, r2, spec, method);
}

double xi_covariance(int n1, int k1, int n2, int k2, const LLNSpec& spec) {
    if (k1 < 1 || k1 > n1 || k2 < 1 || k2 > n2) throw std::invalid_argument("xi_covariance: need 1 <= k <= n");
    const int r1 = n1 - k1 + 1, r2 = n2 - k2 + 1;
    check_block_args(n1, r1, n2, r2, spec);
    auto C = [&](int a, int b) { return block_value(n1, a, n2, b, spec, XiMethod::kernel); };
    return C(r1, r2) - C(r1 - 1, r2) - C(r1, r2 - 1) + C(r1 - 1, r2 - 1);
}

FluctuationCovariance xi_covariance_matrix(const LLNSpec& spec) {
    const int N = spec.N();
    if (N < 1) throw std::invalid_argument("xi_covariance_matrix: empty a");
    const int dim = N * (N + 1) / 2;
    auto table = [&](double digits) {
        XiGeometry g = xi_geometry(spec, N, N, digits);
        NodeSet zo = make_nodes(g.c, g.r_out, g.m_out), wi = make_nodes(g.c, g.r_in, g.m_in);
        std::vector<KernelValues> ko(dim), ki(dim);
        parallel_for(dim, 0, [&](int idx) {
            int n = 1;
            while (n * (n + 1) / 2 <= idx) ++n;
            const int r = idx - n * (n - 1) / 2 + 1;
            ko[idx] = kernel_on(spec, n, r, zo);
            ki[idx] = kernel_on(spec, n, r, wi);
        });
        Eigen::MatrixXd B(dim, dim);
        parallel_for(dim, 0, [&](int i) {
            int n1 = 1;
            while (n1 * (n1 + 1) / 2 <= i) ++n1;
            const int r1 = i - n1 * (n1 - 1) / 2 + 1;
            for (int j = 0; j < dim; ++j) {
                int n2 = 1;
                while (n2 * (n2 + 1) / 2 <= j) ++n2;
                const int r2 = j - n2 * (n2 - 1) / 2 + 1;
                B(i, j) = needs_swap(n1, r1, n2, r2) ? kernel_pair(zo, ko[j], wi, ki[i])
                                                     : kernel_pair(zo, ko[i], wi, ki[j]);
            }
        });
        return B;
    };
    Eigen::MatrixXd B = table(15.0);
    Eigen::MatrixXd B2 = table(30.0);
    if ((B - B2).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, B2.cwiseAbs().maxCoeff()))
        throw std::runtime_error("xi_covariance_matrix: no convergence under refinement");
    FluctuationCovariance out;
    out.N = N;
    out.tau = spec.tau;
    out.block = B2;
    auto blk = [&](int n1, int r1, int n2, int r2) {
        if (r1 == 0 || r2 == 0) return 0.0;
        return B2(InterlacingArray::flat_index(n1, r1), InterlacingArray::flat_index(n2, r2));
    };
    out.cov.resize(dim, dim);
    for (int n1 = 1; n1 <= N; ++n1)
        for (int k1 = 1; k1 <= n1; ++k1)
            for (int n2 = 1; n2 <= N; ++n2)
                for (int k2 = 1; k2 <= n2; ++k2) {
                    const int r1 = n1 - k1 + 1, r2 = n2 - k2 + 1;
                    out.cov(InterlacingArray::flat_index(n1, k1), InterlacingArray::flat_index(n2, k2)) =
                        blk(n1, r1, n2, r2) - blk(n1, r1 - 1, n2, r2) - blk(n1, r1, n2, r2 - 1) +
                        blk(n1, r1 - 1, n2, r2 - 1);
                }
    return out;
}

Eigen::MatrixXd symmetric_factor(const Eigen::MatrixXd& C) {
    Eigen::MatrixXd S = 0.5 * (C + C.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    Eigen::VectorXd ev = es.eigenvalues();
    const double floor = -1e-10 * std::abs(S.trace());
    for (int i = 0; i < ev.size(); ++i) {
        if (ev(i) < floor) throw std::domain_error("symmetric_factor: matrix is not positive semidefinite");
        ev(i) = std::sqrt(std::max(ev(i), 0.0));
    }
    return es.eigenvectors() * ev.asDiagonal();
}

// ---- SDE ---------------------------------------------------------------------------

SDECoefficients sde_coefficients(const LLNProfile& p, int n, int k) {
    if (!p.spec.unit_a()) throw std::invalid_argument("sde_coefficients: stated for a == 1 only");
    if (n < 1 || n > p.N || k < 1 || k > n) throw std::invalid_argument("sde_coefficients: index out of range");
    const double y = p.y_at(n, k);
    const double ydl = p.y_at(n - 1, k - 1);  // down-left
    const double ydown = p.y_at(n - 1, k);
    const double yright = p.y_at(n, k + 1);
    const double t1 = 1 - ydl / y;
    const double t2 = 1 - y / yright;
    const double den = 1 - y / ydown;
    if (!(den != 0) || !std::isfinite(den))
        throw std::domain_error("sde_coefficients: vanishing 1 - y^{(n)}_k / y^{(n-1)}_k");
    SDECoefficients c;
    c.sigma = std::sqrt(std::max(0.0, t1 * t2 / den));
    c.a = ydl / y * t2 / den;
    c.b = y / yright * t1 / den;
    c.c = y / ydown * t1 * t2 / (den * den);
    return c;
}

void xi_sde_matrices(const LLNProfile& p, Eigen::MatrixXd& D, Eigen::VectorXd& s) {
    const int N = p.N, dim = N * (N + 1) / 2;
    D.setZero(dim, dim);
    s.setZero(dim);
    for (int n = 1; n <= N; ++n)
        for (int k = 1; k <= n; ++k) {
            const SDECoefficients c = sde_coefficients(p, n, k);
            const auto i = InterlacingArray::flat_index(n, k);
            D(i, i) = -c.a + c.b - c.c;
            if (k >= 2) D(i, InterlacingArray::flat_index(n - 1, k - 1)) += c.a;
            if (k + 1 <= n) D(i, InterlacingArray::flat_index(n, k + 1)) -= c.b;
            if (k <= n - 1) D(i, InterlacingArray::flat_index(n - 1, k)) += c.c;
            s(i) = c.sigma;
        }
}

namespace {

struct Schedule {
    double h;
    std::vector<Eigen::MatrixXd> D;
    std::vector<Eigen::VectorXd> s;
};

Schedule make_schedule(int N, double tau0, double tau1, double dt, int workers) {
    if (!(tau0 > 0) || !(tau1 >= tau0)) throw std::invalid_argument("xi sde: need 0 < tau0 <= tau1");
    if (!(dt > 0)) throw std::invalid_argument("xi sde: dt must be positive");
    const int steps = std::max(0, static_cast<int>(std::ceil((tau1 - tau0) / dt - 1e-9)));
    Schedule sc;
    sc.h = steps > 0 ? (tau1 - tau0) / steps : 0.0;
    sc.D.resize(steps);
    sc.s.resize(steps);
    parallel_for(steps, workers, [&](int i) {
        LLNProfile p = lln_profile(LLNSpec::continuous(std::vector<double>(N, 1.0), tau0 + i * sc.h));
        xi_sde_matrices(p, sc.D[i], sc.s[i]);
    });
    return sc;
}

}  // namespace

SdeEnsemble simulate_xi_sde(int N, double tau0, double tau1, const std::vector<double>& sample_times, int replicas,
                            std::uint64_t seed, const SDEOptions& opt) {
    if (replicas < 1) throw std::invalid_argument("simulate_xi_sde: replicas must be positive");
    const Schedule sc = make_schedule(N, tau0, tau1, opt.dt, opt.workers);
    const int steps = static_cast<int>(sc.D.size());
    const int dim = N * (N + 1) / 2;
    std::vector<int> record;
    for (double t : sample_times) {
        if (t < tau0 - 1e-12 || t > tau1 + 1e-12) throw std::invalid_argument("simulate_xi_sde: sample time outside");
        record.push_back(steps > 0 ? static_cast<int>(std::lround((t - tau0) / sc.h)) : 0);
    }
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(dim, dim);
    if (opt.gaussian_init) L = symmetric_factor(xi_covariance_matrix(LLNSpec::continuous(std::vector<double>(N, 1.0), tau0)).cov);

    SdeEnsemble out;
    out.times = sample_times;
    out.samples.assign(sample_times.size(), Eigen::MatrixXd(replicas, dim));
    const double sq = std::sqrt(sc.h);
    parallel_for(replicas, opt.workers, [&](int r) {
        Rng rng(split_seed(seed, static_cast<std::uint64_t>(r)));
        Eigen::VectorXd g(dim), x(dim);
        for (int i = 0; i < dim; ++i) g(i) = standard_normal(rng);
        x = L * g;
        auto store = [&](int step) {
            for (std::size_t t = 0; t < record.size(); ++t)
                if (record[t] == step) out.samples[t].row(r) = x.transpose();
        };
        store(0);
        for (int step = 0; step < steps; ++step) {
            Eigen::VectorXd dx = sc.h * (sc.D[step] * x);
            if (opt.noise)
                for (int i = 0; i < dim; ++i) dx(i) += sq * sc.s[step](i) * standard_normal(rng);
            x += dx;
            if (!x.allFinite() || x.cwiseAbs().maxCoeff() > opt.blowup)
                throw std::runtime_error("simulate_xi_sde: unstable step (blow-up guard)");
            store(step + 1);
        }
    });
    return out;
}

Eigen::MatrixXd xi_em_covariance(int N, double tau0, double tau1, double dt, const Eigen::MatrixXd& init) {
    const Schedule sc = make_schedule(N, tau0, tau1, dt, 0);
    const int dim = N * (N + 1) / 2;
    if (init.rows() != dim || init.cols() != dim) throw std::invalid_argument("xi_em_covariance: dimension mismatch");
    Eigen::MatrixXd C = init;
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(dim, dim);
    for (std::size_t i = 0; i < sc.D.size(); ++i) {
        Eigen::MatrixXd P = I + sc.h * sc.D[i];
        C = P * C * P.transpose();
        C.diagonal() += sc.h * sc.s[i].cwiseAbs2();
    }
    return C;
}

Eigen::MatrixXd empirical_covariance(const Eigen::MatrixXd& samples, Eigen::MatrixXd* se) {
    const Eigen::Index R = samples.rows(), d = samples.cols();
    if (R < 2) throw std::invalid_argument("empirical_covariance: need at least two samples");
    Eigen::MatrixXd X = samples.rowwise() - samples.colwise().mean();
    Eigen::MatrixXd C = X.transpose() * X / static_cast<double>(R - 1);
    if (se) {
        se->resize(d, d);
        for (Eigen::Index i = 0; i < d; ++i)
            for (Eigen::Index j = 0; j <= i; ++j) {
                Eigen::ArrayXd prod = X.col(i).array() * X.col(j).array();
                const double m = prod.mean();
                const double var = (prod - m).square().sum() / static_cast<double>(R - 1);
                (*se)(i, j) = (*se)(j, i) = std::sqrt(var / static_cast<double>(R));
            }
    }
    return C;
}

Eigen::MatrixXd fluctuation_samples(const std::vector<InterlacingArray>& states, const LLNProfile& profile,
                                    double eps) {
    if (!(eps > 0)) throw std::invalid_argument("fluctuation_samples: eps must be positive");
    const int N = profile.N, dim = N * (N + 1) / 2;
    Eigen::MatrixXd S(static_cast<Eigen::Index>(states.size()), dim);
    const double scale = 1 / std::sqrt(eps);
    for (std::size_t r = 0; r < states.size(); ++r) {
        if (states[r].levels() != N) throw std::invalid_argument("fluctuation_samples: level count mismatch");
        for (int i = 0; i < dim; ++i)
            S(static_cast<Eigen::Index>(r), i) = scale * (eps * static_cast<double>(states[r].data()[i]) - profile.x[i]);
    }
    return S;
}

FluctuationCovariance mc_fluctuation_covariance(const std::vector<InterlacingArray>& states,
                                                const LLNProfile& profile, double eps) {
    if (states.size() < 100) throw std::invalid_argument("mc_fluctuation_covariance: fewer than 100 replicas");
    Eigen::MatrixXd S = fluctuation_samples(states, profile, eps);
    FluctuationCovariance out;
    out.N = profile.N;
    out.tau = profile.spec.tau;
    out.cov = empirical_covariance(S, &out.se);
    const Eigen::Index d = S.cols();
    const double R = static_cast<double>(S.rows());
    out.third_abs.resize(d);
    out.third_abs_se.resize(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        Eigen::ArrayXd z = S.col(i).array() - S.col(i).mean();
        z /= std::sqrt(out.cov(i, i));
        Eigen::ArrayXd t = z.abs().cube();
        const double m = t.mean();
        out.third_abs(i) = m;
        out.third_abs_se(i) = std::sqrt((t - m).square().sum() / (R - 1) / R);
    }
    return out;
}

std::vector<InterlacingArray> pushblock_ensemble(int N, double eps, double tau, int replicas, std::uint64_t seed,
                                                 int workers) {
    if (replicas < 1) throw std::invalid_argument("pushblock_ensemble: replicas must be positive");
    const double horizon = tau / eps;
    const ModelParams params = ModelParams::from_eps(eps, std::vector<double>(N, 1.0), Plancherel{horizon});
    std::vector<InterlacingArray> out(replicas);
    parallel_for(replicas, workers, [&](int r) {
        Rng rng(split_seed(seed, static_cast<std::uint64_t>(r)));
        Trajectory tr = simulate_pushblock_continuous(InterlacingArray(N), params, horizon, {horizon}, rng);
        out[r] = tr.states.back();
    });
    return out;
}

}  // namespace qw
