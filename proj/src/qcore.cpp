#include "qw/qcore.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <stdexcept>

namespace qw {

namespace {

void reject_nan(double x, const char* what) {
    if (std::isnan(x)) throw std::invalid_argument(std::string(what) + ": NaN input");
}

// Running product kept as log|P| plus a sign; sign 0 means P = 0.
struct LogProd {
    double log_abs = 0.0;
    int sign = 1;

    void mul(double f) {
        if (f == 0.0) {
            sign = 0;
            return;
        }
        if (f < 0) sign = -sign;
        log_abs += std::log(std::fabs(f));
    }
    void div(const LogProd& o) {
        if (o.sign == 0) throw std::domain_error("q-Hahn: vanishing normalisation");
        sign *= o.sign;
        log_abs -= o.log_abs;
    }
    void mul(const LogProd& o) {
        sign *= o.sign;
        log_abs += o.log_abs;
    }
    double value() const { return sign == 0 ? 0.0 : sign * std::exp(log_abs); }
};

// (x; q)_n with real x, q as a LogProd.
LogProd qpoch_log(double x, double q, long n) {
    LogProd p;
    double qi = 1.0;
    for (long i = 0; i < n; ++i) {
        double f = 1.0 - qi * x;
        // a factor that cancels to rounding level is an exact zero of the symbol
        if (std::fabs(f) < 64 * std::numeric_limits<double>::epsilon()) f = 0.0;
        p.mul(f);
        if (p.sign == 0) return p;
        qi *= q;
    }
    return p;
}

// 1 - q^e for integer e and q in (0,1), in LogProd form.
LogProd one_minus_qpow(double q, long e) {
    LogProd p;
    if (e == 0) {
        p.sign = 0;
    } else if (e > 0) {
        p.log_abs = std::log1p(-std::pow(q, static_cast<double>(e)));
    } else {
        p.sign = -1;
        p.log_abs = static_cast<double>(e) * std::log(q) + std::log1p(-std::pow(q, static_cast<double>(-e)));
    }
    return p;
}

// (Q^m; Q)_n with Q = 1/q, i.e. prod_{i<n} (1 - q^{-(m+i)}).
LogProd inv_qpoch_log(double q, long m, long n) {
    LogProd p;
    for (long i = 0; i < n; ++i) {
        p.mul(one_minus_qpow(q, -(m + i)));
        if (p.sign == 0) return p;
    }
    return p;
}

}  // namespace

double qpow(double q, std::int64_t d) {
    if (d >= kPlusInf / 2) return 0.0;
    return std::pow(q, static_cast<double>(d));
}

double q_pochhammer(double a, double q, long n) {
    reject_nan(a, "q_pochhammer");
    reject_nan(q, "q_pochhammer");
    if (n == kInfinite) return q_pochhammer_inf(a, q);
    if (n < 0) throw std::invalid_argument("q_pochhammer: negative n");
    double p = 1.0;
    double term = a;
    for (long i = 0; i < n; ++i) {
        if (std::fabs(term) < 1e-16 && std::fabs(q) < 1.0) break;
        p *= 1.0 - term;
        term *= q;
    }
    return p;
}

double log_q_pochhammer(double a, double q, long n) {
    if (!(a < 1.0) || !(q > 0 && q < 1)) throw std::domain_error("log_q_pochhammer: need a < 1 and q in (0,1)");
    double s = 0.0;
    double term = a;
    for (long i = 0; i < n; ++i) {
        if (std::fabs(term) < 1e-17) break;
        s += std::log1p(-term);
        term *= q;
    }
    return s;
}

double q_pochhammer_inf(double a, double q) {
    reject_nan(a, "q_pochhammer");
    reject_nan(q, "q_pochhammer");
    if (!(std::fabs(q) < 1.0)) throw std::invalid_argument("q_pochhammer: infinite product needs |q| < 1");
    double p = 1.0;
    double term = a;
    while (std::fabs(term) >= 1e-16) {
        p *= 1.0 - term;
        term *= q;
    }
    return p;
}

double g_integral(double a, double b) {
    reject_nan(a, "g_integral");
    reject_nan(b, "g_integral");
    if (a > 1.0) throw std::domain_error("g_integral: a > 1");
    if (b < 0.0) throw std::domain_error("g_integral: b < 0");
    if (a == 0.0 || b == 0.0) return 0.0;
    // tanh-sinh copes with the logarithmic endpoint singularity at s = 0 when a = 1.
    boost::math::quadrature::tanh_sinh<double> ts;
    auto f = [a](double s) { return std::log((1.0 - a) - a * std::expm1(-s)); };
    return ts.integrate(f, 0.0, b, 1e-14);
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(master + (index + 1) * 0x9E3779B97F4A7C15ULL);
}

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double exponential(Rng& rng, double rate) { return -std::log1p(-uniform01(rng)) / rate; }

double standard_normal(Rng& rng) {
    // Box-Muller, one variate per call
    double u1 = uniform01(rng);
    double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * M_PI * u2);
}

double q_geometric_pmf(double q, double alpha, long s) {
    if (s < 0) return 0.0;
    return std::pow(alpha, static_cast<double>(s)) * q_pochhammer_inf(alpha, q) / q_pochhammer(q, q, s);
}

long sample_q_geometric(double q, double alpha, Rng& rng) {
    if (!(q > 0 && q < 1) || !(alpha >= 0 && alpha < 1))
        throw std::domain_error("sample_q_geometric: parameters out of range");
    double u = uniform01(rng);
    double p = q_pochhammer_inf(alpha, q);
    double cum = p;
    long s = 0;
    double qs = 1.0;
    while (cum <= u && cum < 1.0 - 1e-15) {
        ++s;
        qs *= q;
        p *= alpha / (1.0 - qs);
        if (p == 0.0) break;
        cum += p;
    }
    return s;
}

double q_hahn_pmf(double q, double xi, double eta, long s, long c) {
    reject_nan(q, "q_hahn_pmf");
    reject_nan(xi, "q_hahn_pmf");
    reject_nan(eta, "q_hahn_pmf");
    if (s < 0) return 0.0;
    if (c != kInfinite && s > c) return 0.0;
    LogProd p;
    if (xi == 0.0) {
        if (s > 0) return 0.0;
    } else {
        p.mul(std::pow(xi, static_cast<double>(s)));
    }
    if (c == kInfinite) {
        if (!(std::fabs(q) < 1.0)) throw std::domain_error("q_hahn_pmf: c = inf needs |q| < 1");
        double ratio = (xi == 0.0) ? 0.0 : eta / xi;
        p.mul(qpoch_log(ratio, q, s));
        p.mul(q_pochhammer_inf(xi, q));
        LogProd den;
        den.mul(q_pochhammer_inf(eta, q));
        den.mul(qpoch_log(q, q, s));
        p.div(den);
    } else {
        double ratio = (xi == 0.0) ? 0.0 : eta / xi;
        p.mul(qpoch_log(ratio, q, s));
        p.mul(qpoch_log(xi, q, c - s));
        p.mul(qpoch_log(q, q, c));
        LogProd den = qpoch_log(eta, q, c);
        den.mul(qpoch_log(q, q, s));
        den.mul(qpoch_log(q, q, c - s));
        p.div(den);
    }
    double v = p.value();
    if (v < 0.0) throw std::domain_error("q_hahn_pmf: negative weight, parameters outside an admissible regime");
    return v;
}

std::vector<double> q_hahn_pmf_table(double q, double xi, double eta, long c) {
    std::vector<double> pmf;
    if (c == kInfinite) {
        double cum = 0.0;
        for (long s = 0; cum < 1.0 - 1e-15; ++s) {
            double v = q_hahn_pmf(q, xi, eta, s, c);
            pmf.push_back(v);
            cum += v;
            if (s > 100000) throw std::runtime_error("q_hahn_pmf_table: tail does not converge");
            if (v == 0.0 && s > 0 && pmf[s - 1] == 0.0 && cum > 0.5) break;
        }
        return pmf;
    }
    pmf.resize(c + 1);
    for (long s = 0; s <= c; ++s) pmf[s] = q_hahn_pmf(q, xi, eta, s, c);
    return pmf;
}

long sample_from_table(const std::vector<double>& pmf, Rng& rng) {
    double u = uniform01(rng);
    double cum = 0.0;
    for (std::size_t s = 0; s < pmf.size(); ++s) {
        cum += pmf[s];
        if (u < cum) return static_cast<long>(s);
    }
    // remainder of the truncated tail goes to the last atom with positive mass
    for (std::size_t s = pmf.size(); s-- > 0;)
        if (pmf[s] > 0) return static_cast<long>(s);
    throw std::runtime_error("sample_from_table: empty distribution");
}

long sample_q_hahn(double q, double xi, double eta, long c, Rng& rng) {
    return sample_from_table(q_hahn_pmf_table(q, xi, eta, c), rng);
}

std::vector<double> q_hahn_inverse_pmf_table(double q, long A, long B, long c) {
    if (!(q > 0 && q < 1)) throw std::domain_error("q_hahn_inverse: q must lie in (0,1)");
    if (A < 0 || c < 0) throw std::domain_error("q_hahn_inverse: negative parameter");
    if (B != kInfinite && (A > B || c > B))
        throw std::domain_error("q_hahn_inverse: need A, c <= B");
    // With Q = 1/q: xi = Q^{-A}, eta = Q^{-B}, eta/xi = Q^{A-B}.
    std::vector<double> pmf(c + 1, 0.0);
    LogProd qqc = inv_qpoch_log(q, 1, c);
    LogProd den_eta;
    if (B != kInfinite) den_eta = inv_qpoch_log(q, -B, c);
    for (long s = 0; s <= c; ++s) {
        LogProd p;
        p.log_abs = static_cast<double>(A) * static_cast<double>(s) * std::log(q);
        if (B != kInfinite) p.mul(inv_qpoch_log(q, A - B, s));
        p.mul(inv_qpoch_log(q, -A, c - s));
        p.mul(qqc);
        if (p.sign == 0) continue;
        LogProd den = den_eta;
        den.mul(inv_qpoch_log(q, 1, s));
        den.mul(inv_qpoch_log(q, 1, c - s));
        p.div(den);
        double v = p.value();
        if (v < -1e-14) throw std::domain_error("q_hahn_inverse: negative weight");
        pmf[s] = std::max(v, 0.0);
    }
    return pmf;
}

long sample_q_hahn_inverse(double q, long A, long B, long c, Rng& rng) {
    if (c == 0) return 0;
    return sample_from_table(q_hahn_inverse_pmf_table(q, A, B, c), rng);
}

std::int64_t Partition::weight() const {
    std::int64_t w = 0;
    for (auto x : parts) w += x;
    return w;
}

bool Partition::is_valid() const {
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (parts[i] < 0) return false;
        if (i > 0 && parts[i] > parts[i - 1]) return false;
    }
    return true;
}

bool interlaces(const Partition& nu, const Partition& mu) {
    if (!nu.is_valid() || !mu.is_valid()) return false;
    int len = std::max(nu.length(), mu.length());
    for (int i = 1; i <= len; ++i) {
        if (mu[i] > nu[i]) return false;
        if (nu[i + 1] > mu[i]) return false;
    }
    return true;
}

PhiPsi phi_psi_weights(const Partition& lam, const Partition& mu, double q) {
    if (!interlaces(lam, mu)) throw std::invalid_argument("phi_psi_weights: partitions do not interlace");
    int len = std::max(lam.length(), mu.length());
    double phi = 1.0;
    double psi = 1.0;
    for (int i = 1; i <= len; ++i) {
        phi *= q_pochhammer(q, q, mu[i] - mu[i + 1]) /
               (q_pochhammer(q, q, lam[i] - mu[i]) * q_pochhammer(q, q, mu[i] - lam[i + 1]));
        psi *= q_pochhammer(q, q, lam[i] - lam[i + 1]) /
               (q_pochhammer(q, q, lam[i] - mu[i]) * q_pochhammer(q, q, mu[i] - lam[i + 1]));
    }
    return {phi, psi};
}

InterlacingArray::InterlacingArray(int N) : N_(N), v_(static_cast<std::size_t>(N) * (N + 1) / 2, 0) {
    if (N < 1) throw std::invalid_argument("InterlacingArray: N must be positive");
}

Partition InterlacingArray::level(int n) const {
    std::vector<std::int64_t> p(n);
    for (int k = 1; k <= n; ++k) p[k - 1] = at(n, k);
    return Partition(std::move(p));
}

void InterlacingArray::set_level(int n, const Partition& p) {
    if (p.length() != n) throw std::invalid_argument("set_level: length mismatch");
    for (int k = 1; k <= n; ++k) at(n, k) = p[k];
}

bool validate_interlacing(const InterlacingArray& arr) {
    for (int n = 1; n <= arr.levels(); ++n) {
        for (int k = 1; k <= n; ++k) {
            if (arr.at(n, k) < 0) return false;
            if (n >= 2 && k <= n - 1) {
                if (arr.get(n, k + 1) > arr.get(n - 1, k)) return false;
                if (arr.get(n - 1, k) > arr.get(n, k)) return false;
            }
        }
    }
    return true;
}

ModelParams::ModelParams(double eps, double q, std::vector<double> a, std::variant<Plancherel, Alpha> spec)
    : eps_(eps), q_(q), a_(std::move(a)), spec_(std::move(spec)) {
    if (!(eps_ > 0)) throw std::invalid_argument("ModelParams: eps must be positive");
    if (a_.empty()) throw std::invalid_argument("ModelParams: empty speed vector");
    for (double x : a_)
        if (!(x > 0)) throw std::invalid_argument("ModelParams: speeds must be positive");
    if (auto* p = std::get_if<Plancherel>(&spec_)) {
        if (!(p->gamma > 0)) throw std::invalid_argument("ModelParams: gamma must be positive");
    } else {
        for (double al : std::get<Alpha>(spec_).alpha) {
            if (!(al > 0)) throw std::invalid_argument("ModelParams: alpha must be positive");
            for (double x : a_)
                if (!(x * al < 1.0)) throw std::domain_error("ModelParams: inadmissible alpha (a_i alpha_j >= 1)");
        }
    }
}

ModelParams ModelParams::from_eps(double eps, std::vector<double> a, std::variant<Plancherel, Alpha> spec) {
    return ModelParams(eps, std::exp(-eps), std::move(a), std::move(spec));
}

ModelParams ModelParams::from_q(double q, std::vector<double> a, std::variant<Plancherel, Alpha> spec) {
    if (!(q > 0 && q < 1)) throw std::invalid_argument("ModelParams: q must lie in (0,1)");
    return ModelParams(-std::log(q), q, std::move(a), std::move(spec));
}

double ModelParams::gamma() const {
    if (!is_plancherel()) throw std::logic_error("ModelParams: not a Plancherel specialization");
    return std::get<Plancherel>(spec_).gamma;
}

const std::vector<double>& ModelParams::alpha() const {
    if (is_plancherel()) throw std::logic_error("ModelParams: not an alpha specialization");
    return std::get<Alpha>(spec_).alpha;
}

double ModelParams::pi(double u) const {
    if (is_plancherel()) return std::exp(gamma() * u);
    double p = 1.0;
    for (double al : alpha()) p /= q_pochhammer_inf(al * u, q_);
    return p;
}

}  // namespace qw
