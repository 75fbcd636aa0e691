#include "qw/largetime.hpp"

#include "qw/parallel.hpp"

#include <boost/multiprecision/cpp_int.hpp>
#include <boost/numeric/odeint.hpp>

#include <cmath>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace qw {

using boost::multiprecision::cpp_int;

namespace {

int dim_of(int N) {
    if (N < 1) throw std::invalid_argument("zeta system: N must be positive");
    return N * (N + 1) / 2;
}

std::size_t idx(int n, int k) { return InterlacingArray::flat_index(n, k); }

double binom(int top, int k) {
    if (k < 0 || top < 0 || k > top) return 0.0;
    double b = 1;
    for (int j = 1; j <= k; ++j) b = b * (top - k + j) / j;
    return b;
}

void check_coord(int n, int k, const char* who) {
    if (n < 1 || k < 1 || k > n) throw std::invalid_argument(std::string(who) + ": need 1 <= k <= n");
}

// ---- exact evaluation --------------------------------------------------------

cpp_int factorial_int(int n) {
    cpp_int f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

// integer coefficients of p^n_k at T = 1
std::vector<cpp_int> p_coefficients(int n, int k) {
    std::vector<cpp_int> c(k + 1);
    for (int l = 0; l <= k; ++l) {
        cpp_int v = 1;
        for (int j = n - k; j <= n - 1 - l; ++j) v *= j;  // (n-1-l)! / (n-k-1)!
        cpp_int b = 1;
        for (int j = 1; j <= l; ++j) b = b * (k - l + j) / j;
        v *= b;
        c[l] = (l % 2 == 0) ? v : cpp_int(-v);
    }
    return c;
}

std::vector<cpp_int> square(const std::vector<cpp_int>& p) {
    std::vector<cpp_int> s(2 * p.size() - 1, cpp_int(0));
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = 0; j < p.size(); ++j) s[i + j] += p[i] * p[j];
    return s;
}

// a! [x^a] (e^x s(x)) = sum_j s_j a! / (a - j)!
cpp_int scaled_coefficient(const std::vector<cpp_int>& s, int a) {
    cpp_int sum = 0, fall = 1;
    for (int j = 0; j < static_cast<int>(s.size()) && j <= a; ++j) {
        if (j > 0) fall *= (a - j + 1);
        sum += s[j] * fall;
    }
    return sum;
}

// 1/(z - w) = sum_m w^m / z^{m+1} turns both contour integrals into
// coefficients; with n1 >= n2 only m < n2 contributes.
double covariance_polynomial(int n1, int k1, int n2, int k2, double T) {
    const int q1 = n1 - k1, q2 = n2 - k2;  // degrees of the two polynomials (r - 1)
    const auto s1 = square(p_coefficients(n1, q1));
    const auto s2 = square(p_coefficients(n2, q2));
    const int top = n1 + n2 - 1;
    cpp_int sum = 0, bin = 1;  // bin = C(top, n1 + m)
    bin = factorial_int(top) / (factorial_int(n1) * factorial_int(top - n1));
    for (int m = 0; m < n2; ++m) {
        if (m > 0) bin = bin * (top - (n1 + m) + 1) / (n1 + m);
        sum += scaled_coefficient(s1, n1 + m) * scaled_coefficient(s2, n2 - m - 1) * bin;
    }
    cpp_int num = sum * factorial_int(n1 - 1 - q1) * factorial_int(n2 - 1 - q2);
    cpp_int den = factorial_int(top) * factorial_int(q1) * factorial_int(q2);
    if ((q1 + q2) % 2 != 0) num = -num;
    // every power of T cancels except one
    return T * static_cast<double>(mp_real(num) / mp_real(den));
}

// ---- contour evaluations ---------------------------------------------------------

struct Ring {
    std::vector<cplx> z, w;
};

Ring ring(double radius, int m) {
    Ring r;
    for (int j = 0; j < m; ++j) {
        cplx e = std::polar(1.0, 2 * M_PI * j / m);
        r.z.push_back(radius * e);
        r.w.push_back(radius * e / static_cast<double>(m));
    }
    return r;
}

int ring_nodes(double T, double radius, int n, int r) {
    int m = static_cast<int>(std::ceil(std::exp(1.0) * T * radius)) + n + 2 * r + 64;
    return 8 * ((m + 7) / 8);
}

struct Tuples {
    std::vector<std::vector<cplx>> pts;
    std::vector<cplx> wt;
    cplx total = 0;
};

Tuples tuples(const Ring& ring, double T, int n, int r) {
    Tuples out;
    const std::size_t m = ring.z.size();
    std::vector<cplx> g(m);
    for (std::size_t j = 0; j < m; ++j) g[j] = ring.w[j] * std::exp(T * ring.z[j]) * std::pow(ring.z[j], -n);
    std::vector<std::size_t> id(r, 0);
    while (true) {
        std::vector<cplx> p(r);
        cplx v = 1;
        for (int i = 0; i < r; ++i) {
            p[i] = ring.z[id[i]];
            v *= g[id[i]];
        }
        for (int i = 0; i < r; ++i)
            for (int j = i + 1; j < r; ++j) v *= (p[j] - p[i]) * (p[j] - p[i]);
        out.pts.push_back(std::move(p));
        out.wt.push_back(v);
        out.total += v;
        int d = 0;
        while (d < r && ++id[d] == m) id[d++] = 0;
        if (d == r) break;
    }
    return out;
}

double block_multicontour(int n1, int r1, int n2, int r2, double T) {
    if (r1 == 0 || r2 == 0) return 0.0;
    if (r1 + r2 > 4) throw std::invalid_argument("zeta multicontour: needs r1 + r2 <= 4");
    const double rw = std::max(1, n2) / T;
    const double rz = 2 * std::max(rw, std::max(1, n1) / T);
    Tuples a = tuples(ring(rz, ring_nodes(T, rz, n1, r1)), T, n1, r1);
    Tuples b = tuples(ring(rw, ring_nodes(T, rw, n2, r2)), T, n2, r2);
    cplx num = 0;
    for (std::size_t i = 0; i < a.wt.size(); ++i) {
        cplx row = 0;
        for (std::size_t j = 0; j < b.wt.size(); ++j) {
            cplx cr = 0;
            for (const cplx& z : a.pts[i])
                for (const cplx& w : b.pts[j]) cr += 1.0 / (z - w);
            row += cr * b.wt[j];
        }
        num += a.wt[i] * row;
    }
    return (num / (a.total * b.total)).real();
}

// one factor of the T = 1 representation: the x (or y) integral times the
// u (or v) integral around w
cplx quadruple_factor(int n, int r, cplx w) {
    cplx xi = integrate_halfline(
        [&](double x) { return std::pow(w - x, r - 1) * std::pow(x, n - r); }, 1.0, std::max(32, n + 8));
    Contour small = Contour::circle(w, 0.5 * std::abs(w), 64);
    cplx ui = integrate_closed(
        [&](cplx u) { return std::exp(u) / (std::pow(w - u, r) * std::pow(u, n - r + 1)); }, small, 1e-12);
    return xi * ui;
}

double covariance_quadruple(int n1, int k1, int n2, int k2) {
    const int r1 = n1 - k1 + 1, r2 = n2 - k2 + 1;
    const double rw = std::max(1, n2);
    const double rz = 2 * std::max(rw, static_cast<double>(n1));
    Ring zr = ring(rz, ring_nodes(1.0, rz, n1, r1));
    Ring wr = ring(rw, ring_nodes(1.0, rw, n2, r2));
    std::vector<cplx> fz(zr.z.size()), fw(wr.z.size());
    for (std::size_t j = 0; j < zr.z.size(); ++j) fz[j] = quadruple_factor(n1, r1, zr.z[j]);
    for (std::size_t l = 0; l < wr.z.size(); ++l) fw[l] = quadruple_factor(n2, r2, wr.z[l]);
    cplx sum = 0;
    for (std::size_t j = 0; j < zr.z.size(); ++j)
        for (std::size_t l = 0; l < wr.z.size(); ++l) sum += zr.w[j] * wr.w[l] * fz[j] * fw[l] / (zr.z[j] - wr.z[l]);
    return sum.real();
}

}  // namespace

Eigen::MatrixXd zeta_drift_hat(int N) {
    const int d = dim_of(N);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d, d);
    for (int n = 1; n <= N; ++n)
        for (int k = 1; k <= n; ++k) {
            A(idx(n, k), idx(n, k)) = -(n - 1);
            if (k >= 2) A(idx(n, k), idx(n - 1, k - 1)) = k - 1;
            if (k <= n - 1) A(idx(n, k), idx(n - 1, k)) = n - k;
        }
    return A;
}

Eigen::MatrixXd zeta_drift(int N, double T) {
    if (!(T > 0)) throw std::invalid_argument("zeta_drift: T must be positive");
    return zeta_drift_hat(N) / T;
}

namespace {

// coefficient of (-T z)^l in p^n_k: C(k, l) (n-1-l)! / (n-1-k)!, exact for moderate n
double laguerre_coef(int n, int k, int l) {
    double c = binom(k, l);
    for (int m = n - k; m <= n - 1 - l; ++m) c *= m;
    return c;
}

template <class C>
C laguerre_eval(int n, int k, double T, const C& z) {
    C sum(0), pw(1);
    for (int l = 0; l <= k; ++l) {
        sum += C(laguerre_coef(n, k, l)) * pw;
        pw *= C(-T) * z;
    }
    return sum;
}

}  // namespace

cplx laguerre_poly(int n, int k, double T, cplx z) {
    if (k < 0 || k > n - 1) throw std::invalid_argument("laguerre_poly: need 0 <= k <= n - 1");
    return laguerre_eval(n, k, T, z);
}

double laguerre_norm(int n, int k, double T) {
    if (k < 0 || k > n - 1) throw std::invalid_argument("laguerre_norm: need 0 <= k <= n - 1");
    const double v = std::exp(std::lgamma(k + 1) - std::lgamma(n - k)) * std::pow(T, n - 1);
    return (k % 2 == 0) ? v : -v;
}

cplx laguerre_inner(int n, int k1, int k2, double T) {
    const double radius = std::max(1.0, n / T);
    Contour c = Contour::circle(0.0, radius, ring_nodes(T, radius, n, std::max(k1, k2)));
    if (k1 < 0 || k1 > n - 1 || k2 < 0 || k2 > n - 1) throw std::invalid_argument("laguerre_inner: need 0 <= k <= n - 1");
    // large cancellations on the ring; the mp overload takes over when doubles lose it
    return integrate_closed(
        [&](const auto& z) {
            using C = std::decay_t<decltype(z)>;
            return laguerre_eval(n, k1, T, z) * laguerre_eval(n, k2, T, z) * exp(C(T) * z) / pow(z, n);
        },
        c, 1e-12);
}

double zeta_covariance(int n1, int k1, int n2, int k2, double T, ZetaMethod method) {
    check_coord(n1, k1, "zeta_covariance");
    check_coord(n2, k2, "zeta_covariance");
    if (!(T > 0)) throw std::invalid_argument("zeta_covariance: T must be positive");
    // the outer contour belongs to the higher level; ties put the smaller k outside
    if (n1 < n2 || (n1 == n2 && k1 > k2)) {
        std::swap(n1, n2);
        std::swap(k1, k2);
    }
    switch (method) {
        case ZetaMethod::polynomial: return covariance_polynomial(n1, k1, n2, k2, T);
        case ZetaMethod::multicontour: {
            const int r1 = n1 - k1 + 1, r2 = n2 - k2 + 1;
            auto C = [&](int a, int b) { return block_multicontour(n1, a, n2, b, T); };
            return C(r1, r2) - C(r1 - 1, r2) - C(r1, r2 - 1) + C(r1 - 1, r2 - 1);
        }
        case ZetaMethod::quadruple: return T * covariance_quadruple(n1, k1, n2, k2);
    }
    throw std::invalid_argument("zeta_covariance: unknown method");
}

double zeta_block_covariance(int n1, int r1, int n2, int r2, double T, ZetaMethod method) {
    if (r1 < 0 || r1 > n1 || r2 < 0 || r2 > n2) throw std::invalid_argument("zeta_block_covariance: need 0 <= r <= n");
    if (method == ZetaMethod::multicontour) {
        if (n1 < n2) {
            std::swap(n1, n2);
            std::swap(r1, r2);
        }
        return block_multicontour(n1, r1, n2, r2, T);
    }
    double s = 0;
    for (int k1 = n1 - r1 + 1; k1 <= n1; ++k1)
        for (int k2 = n2 - r2 + 1; k2 <= n2; ++k2) s += zeta_covariance(n1, k1, n2, k2, T, method);
    return s;
}

Eigen::MatrixXd zeta_covariance_matrix(int N, double T) {
    const int d = dim_of(N);
    Eigen::MatrixXd C(d, d);
    parallel_for(d, 0, [&](int i) {
        int n1 = 1;
        while (n1 * (n1 + 1) / 2 <= i) ++n1;
        const int k1 = i - n1 * (n1 - 1) / 2 + 1;
        for (int n2 = 1; n2 <= N; ++n2)
            for (int k2 = 1; k2 <= n2; ++k2) C(i, idx(n2, k2)) = zeta_covariance(n1, k1, n2, k2, T);
    });
    return C;
}

double propagator_closed(double T0, double T, int k, int n, int kp, int np) {
    check_coord(n, k, "propagator_closed");
    check_coord(np, kp, "propagator_closed");
    if (!(T0 > 0) || !(T >= T0)) throw std::invalid_argument("propagator_closed: need 0 < T0 <= T");
    if (kp > k || np - kp > n - k) return 0.0;
    // from here on n' <= n
    if (n <= 150)
        return std::pow(T0 / T, n - 1) * std::pow((T - T0) / T0, n - np) * binom(k - 1, kp - 1) * binom(n - k, np - kp);
    if (T == T0) return n == np ? 1.0 : 0.0;
    auto lbinom = [](int top, int j) { return std::lgamma(top + 1.0) - std::lgamma(j + 1.0) - std::lgamma(top - j + 1.0); };
    return std::exp((n - 1) * std::log(T0 / T) + (n - np) * std::log((T - T0) / T0) + lbinom(k - 1, kp - 1) +
                    lbinom(n - k, np - kp));
}

Eigen::MatrixXd propagator_closed_matrix(int N, double T0, double T) {
    const int d = dim_of(N);
    Eigen::MatrixXd Y(d, d);
    for (int n = 1; n <= N; ++n)
        for (int k = 1; k <= n; ++k)
            for (int np = 1; np <= N; ++np)
                for (int kp = 1; kp <= np; ++kp) Y(idx(n, k), idx(np, kp)) = propagator_closed(T0, T, k, n, kp, np);
    return Y;
}

Eigen::MatrixXd propagator_numeric(int N, double T0, double T, double tol) {
    namespace ode = boost::numeric::odeint;
    const int d = dim_of(N);
    if (!(T0 > 0) || !(T >= T0)) throw std::invalid_argument("propagator_numeric: need 0 < T0 <= T");
    const Eigen::MatrixXd Ah = zeta_drift_hat(N);
    std::vector<double> y(d * d, 0.0);
    for (int i = 0; i < d; ++i) y[i * d + i] = 1;
    if (T == T0) return Eigen::MatrixXd::Identity(d, d);
    auto rhs = [&](const std::vector<double>& x, std::vector<double>& dx, double t) {
        Eigen::Map<const Eigen::MatrixXd> X(x.data(), d, d);
        Eigen::Map<Eigen::MatrixXd> D(dx.data(), d, d);
        D = (Ah * X) / t;
    };
    ode::integrate_adaptive(ode::make_controlled(tol, tol, ode::runge_kutta_dopri5<std::vector<double>>()), rhs, y,
                            T0, T, 1e-3 * (T - T0));
    Eigen::Map<Eigen::MatrixXd> Y(y.data(), d, d);
    if (!Y.allFinite()) throw std::runtime_error("propagator_numeric: step failure");
    return Y;
}

Eigen::MatrixXd exp_drift_hat(int N, double S) {
    if (!(S >= 0)) throw std::invalid_argument("exp_drift_hat: S must be non-negative");
    return propagator_closed_matrix(N, 1.0, std::exp(S));
}

Eigen::MatrixXd two_time_covariance(double T0, double T, const Eigen::MatrixXd& cov_T0) {
    const Eigen::Index d = cov_T0.rows();
    if (cov_T0.cols() != d) throw std::invalid_argument("two_time_covariance: covariance must be square");
    int N = 0;
    while (N * (N + 1) / 2 < d) ++N;
    if (N * (N + 1) / 2 != d) throw std::invalid_argument("two_time_covariance: dimension is not N(N+1)/2");
    return propagator_closed_matrix(N, T0, T) * cov_T0;
}

Eigen::MatrixXd lyapunov_covariance(int N, double T0, double T, double* min_eig_ratio) {
    namespace ode = boost::numeric::odeint;
    const int d = dim_of(N);
    if (!(T0 > 0) || !(T >= T0)) throw std::invalid_argument("lyapunov_covariance: need 0 < T0 <= T");
    const Eigen::MatrixXd Ah = zeta_drift_hat(N);
    Eigen::MatrixXd X0 = zeta_covariance_matrix(N, T0);
    std::vector<double> x(X0.data(), X0.data() + d * d);
    double worst = 1.0;
    auto monitor = [&](const std::vector<double>& s, double) {
        Eigen::Map<const Eigen::MatrixXd> X(s.data(), d, d);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (X + X.transpose()), Eigen::EigenvaluesOnly);
        worst = std::min(worst, es.eigenvalues().minCoeff() / X.trace());
    };
    auto rhs = [&](const std::vector<double>& s, std::vector<double>& ds, double t) {
        Eigen::Map<const Eigen::MatrixXd> X(s.data(), d, d);
        Eigen::Map<Eigen::MatrixXd> D(ds.data(), d, d);
        D = (Ah * X + X * Ah.transpose()) / t;
        D.diagonal().array() += 1.0;
    };
    if (T > T0)
        ode::integrate_adaptive(ode::make_controlled(1e-12, 1e-12, ode::runge_kutta_dopri5<std::vector<double>>()), rhs,
                                x, T0, T, 1e-3 * (T - T0), monitor);
    else
        monitor(x, T0);
    if (worst < -1e-8) throw std::runtime_error("lyapunov_covariance: covariance lost positivity");
    if (min_eig_ratio) *min_eig_ratio = worst;
    return Eigen::Map<Eigen::MatrixXd>(x.data(), d, d);
}

SdeEnsemble simulate_zeta_sde(int N, double T0, double T1, const std::vector<double>& sample_times, int replicas,
                              std::uint64_t seed, const SDEOptions& opt) {
    const int d = dim_of(N);
    if (!(T0 > 0) || !(T1 >= T0)) throw std::invalid_argument("simulate_zeta_sde: need 0 < T0 <= T1");
    if (replicas < 1 || !(opt.dt > 0)) throw std::invalid_argument("simulate_zeta_sde: bad replicas or dt");
    const int steps = std::max(0, static_cast<int>(std::ceil((T1 - T0) / opt.dt - 1e-9)));
    const double h = steps > 0 ? (T1 - T0) / steps : 0.0;
    std::vector<int> record;
    for (double t : sample_times) {
        if (t < T0 - 1e-12 || t > T1 + 1e-12) throw std::invalid_argument("simulate_zeta_sde: sample time outside");
        record.push_back(steps > 0 ? static_cast<int>(std::lround((t - T0) / h)) : 0);
    }
    // sparse rows of A_hat
    struct Entry {
        int row, col;
        double v;
    };
    std::vector<Entry> entries;
    const Eigen::MatrixXd Ah = zeta_drift_hat(N);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (Ah(i, j) != 0) entries.push_back({i, j, Ah(i, j)});
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(d, d);
    if (opt.gaussian_init) L = symmetric_factor(zeta_covariance_matrix(N, T0));

    SdeEnsemble out;
    out.times = sample_times;
    out.samples.assign(sample_times.size(), Eigen::MatrixXd(replicas, d));
    const double sq = std::sqrt(h);
    parallel_for(replicas, opt.workers, [&](int r) {
        Rng rng(split_seed(seed, static_cast<std::uint64_t>(r)));
        Eigen::VectorXd g(d), dx(d);
        for (int i = 0; i < d; ++i) g(i) = standard_normal(rng);
        Eigen::VectorXd x = L * g;
        auto store = [&](int step) {
            for (std::size_t t = 0; t < record.size(); ++t)
                if (record[t] == step) out.samples[t].row(r) = x.transpose();
        };
        store(0);
        for (int step = 0; step < steps; ++step) {
            const double t = T0 + step * h;
            dx.setZero();
            for (const Entry& e : entries) dx(e.row) += e.v * x(e.col);
            dx *= h / t;
            if (opt.noise)
                for (int i = 0; i < d; ++i) dx(i) += sq * standard_normal(rng);
            x += dx;
            if (!x.allFinite() || x.cwiseAbs().maxCoeff() > opt.blowup)
                throw std::runtime_error("simulate_zeta_sde: unstable step (blow-up guard)");
            store(step + 1);
        }
    });
    return out;
}

Eigen::MatrixXd cross_covariance(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, Eigen::MatrixXd* se) {
    const Eigen::Index R = X.rows();
    if (Y.rows() != R || R < 2) throw std::invalid_argument("cross_covariance: need matching rows, at least two");
    Eigen::MatrixXd Xc = X.rowwise() - X.colwise().mean();
    Eigen::MatrixXd Yc = Y.rowwise() - Y.colwise().mean();
    Eigen::MatrixXd C = Xc.transpose() * Yc / static_cast<double>(R - 1);
    if (se) {
        se->resize(X.cols(), Y.cols());
        for (Eigen::Index i = 0; i < X.cols(); ++i)
            for (Eigen::Index j = 0; j < Y.cols(); ++j) {
                Eigen::ArrayXd prod = Xc.col(i).array() * Yc.col(j).array();
                const double m = prod.mean();
                (*se)(i, j) = std::sqrt((prod - m).square().sum() / static_cast<double>(R - 1) / static_cast<double>(R));
            }
    }
    return C;
}

}  // namespace qw
