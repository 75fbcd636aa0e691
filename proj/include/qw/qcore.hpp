#ifndef QW_QCORE_HPP
#define QW_QCORE_HPP

#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace qw {

// Sentinel used for lambda^{(n)}_k with k <= 0.  Never stored in an array.
inline constexpr std::int64_t kPlusInf = std::numeric_limits<std::int64_t>::max() / 4;
// Marks an infinite upper index for q-Pochhammer symbols and q-Hahn supports.
inline constexpr long kInfinite = -1;

// q^d for an integer gap d, with q^{+inf} = 0.
double qpow(double q, std::int64_t d);

double q_pochhammer(double a, double q, long n);
double q_pochhammer_inf(double a, double q);
// ln (a;q)_n for a < 1, q in (0,1); avoids underflow for long products.
double log_q_pochhammer(double a, double q, long n);

double g_integral(double a, double b);

using Rng = std::mt19937_64;

// Seed of replica `index` derived from a master seed.  The mix is splitmix64
// applied to master + (index + 1) * golden-ratio increment.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t split_seed(std::uint64_t master, std::uint64_t index);

// Uniform in [0,1) from the top 53 bits; exponential by inversion.  Both are
// defined here rather than through <random> distributions so that samples are
// identical across standard library implementations.
double uniform01(Rng& rng);
double exponential(Rng& rng, double rate);
double standard_normal(Rng& rng);

double q_geometric_pmf(double q, double alpha, long s);
long sample_q_geometric(double q, double alpha, Rng& rng);

// phi_{q,xi,eta}(s|c) with real parameters; c may be kInfinite (requires
// q < 1).  Products are accumulated in log-modulus form with a sign so that
// q > 1 does not overflow.  A negative weight raises std::domain_error.
double q_hahn_pmf(double q, double xi, double eta, long s, long c);
std::vector<double> q_hahn_pmf_table(double q, double xi, double eta, long c);
long sample_q_hahn(double q, double xi, double eta, long c, Rng& rng);

// The inverse-parameter law phi_{1/q, q^A, q^B}(s|c) for q in (0,1) and
// integers A, c <= B.  B = kInfinite means q^B = 0.  Exponents are kept as
// integers so that vanishing factors are detected exactly.
std::vector<double> q_hahn_inverse_pmf_table(double q, long A, long B, long c);
long sample_q_hahn_inverse(double q, long A, long B, long c, Rng& rng);

// Inverse-CDF draw from a finite pmf table.
long sample_from_table(const std::vector<double>& pmf, Rng& rng);

struct Partition {
    std::vector<std::int64_t> parts;

    Partition() = default;
    explicit Partition(std::vector<std::int64_t> p) : parts(std::move(p)) {}
    int length() const { return static_cast<int>(parts.size()); }
    // 1-based, zero past the end
    std::int64_t operator[](int i) const {
        return (i >= 1 && i <= length()) ? parts[i - 1] : 0;
    }
    std::int64_t weight() const;
    bool is_valid() const;
};

// nu interlaces with mu (nu "succeeds" mu): nu_{i+1} <= mu_i <= nu_i.
bool interlaces(const Partition& nu, const Partition& mu);

struct PhiPsi {
    double phi;
    double psi;
};
PhiPsi phi_psi_weights(const Partition& lam, const Partition& mu, double q);

class InterlacingArray {
public:
    InterlacingArray() = default;
    explicit InterlacingArray(int N);

    int levels() const { return N_; }
    std::size_t size() const { return v_.size(); }

    // Row-major by level: (n,k) -> n(n-1)/2 + k - 1.
    static std::size_t flat_index(int n, int k) {
        return static_cast<std::size_t>(n) * (n - 1) / 2 + (k - 1);
    }

    std::int64_t& at(int n, int k) { return v_[flat_index(n, k)]; }
    std::int64_t at(int n, int k) const { return v_[flat_index(n, k)]; }

    // Value with the boundary conventions: +inf (kPlusInf) for k <= 0,
    // 0 for k > n, and 0 on level n = 0.
    std::int64_t get(int n, int k) const {
        if (k <= 0) return kPlusInf;
        if (n <= 0 || k > n) return 0;
        return v_[flat_index(n, k)];
    }

    Partition level(int n) const;
    void set_level(int n, const Partition& p);
    const std::vector<std::int64_t>& data() const { return v_; }

    bool operator==(const InterlacingArray& o) const { return N_ == o.N_ && v_ == o.v_; }

private:
    int N_ = 0;
    std::vector<std::int64_t> v_;
};

bool validate_interlacing(const InterlacingArray& arr);

struct Plancherel {
    double gamma;
};
struct Alpha {
    std::vector<double> alpha;
};

class ModelParams {
public:
    static ModelParams from_eps(double eps, std::vector<double> a, std::variant<Plancherel, Alpha> spec);
    static ModelParams from_q(double q, std::vector<double> a, std::variant<Plancherel, Alpha> spec);

    double q() const { return q_; }
    double eps() const { return eps_; }
    const std::vector<double>& a() const { return a_; }
    int N() const { return static_cast<int>(a_.size()); }
    bool is_plancherel() const { return std::holds_alternative<Plancherel>(spec_); }
    double gamma() const;
    const std::vector<double>& alpha() const;
    const std::variant<Plancherel, Alpha>& spec() const { return spec_; }

    // Pi(u; rho) for real u: e^{gamma u} or prod_j 1/(alpha_j u; q)_inf.
    double pi(double u) const;

private:
    ModelParams(double eps, double q, std::vector<double> a, std::variant<Plancherel, Alpha> spec);
    double eps_;
    double q_;
    std::vector<double> a_;
    std::variant<Plancherel, Alpha> spec_;
};

}  // namespace qw

#endif
