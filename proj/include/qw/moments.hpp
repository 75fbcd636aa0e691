#ifndef QW_MOMENTS_HPP
#define QW_MOMENTS_HPP

#include "qw/contour.hpp"
#include "qw/qcore.hpp"

#include <Eigen/Dense>

#include <functional>
#include <limits>
#include <utility>
#include <vector>

namespace qw {

// ---- finite q moments ------------------------------------------------------

// Nested circles (outermost first, one per group) with the inner radius and
// the margin chosen to minimise the slowest geometric convergence factor of
// the trapezoid rule over all contours.  That factor is returned in *factor.
ContourFamily moment_contours(double q, const std::vector<double>& a, int levels, double* factor = nullptr);

// Circles for the negative moments: every contour encloses the a-cluster and
// contour i contains q^{-1} times every later contour; for alpha all of them
// stay inside |z| < q / alpha_max (pass alpha_max = 0 for Plancherel).
ContourFamily inverse_moment_contours(double q, const std::vector<double>& a, int levels, double alpha_max,
                                      double* factor = nullptr);

// E[prod_i q^{lambda^{(n_i)}_{n_i} + ... + lambda^{(n_i)}_{n_i-r_i+1}}]
// with N >= n_1 >= ... >= n_m >= 1, 0 <= r_i <= n_i and sum r_i <= 4.
double q_moment(const std::vector<int>& n_list, const std::vector<int>& r_list, const ModelParams& params);

// The same integral on a caller supplied family (contour i for group i).
double q_moment_on(const std::vector<int>& n_list, const std::vector<int>& r_list, const ModelParams& params,
                   const ContourFamily& fam, int nodes);

// E[prod_i q^{-lambda^{(n_i)}_1 - ... - lambda^{(n_i)}_{r_i}}]
double q_inverse_moment(const std::vector<int>& n_list, const std::vector<int>& r_list, const ModelParams& params);

double q_inverse_moment_on(const std::vector<int>& n_list, const std::vector<int>& r_list, const ModelParams& params,
                           const ContourFamily& fam, int nodes);

// ---- law of large numbers --------------------------------------------------

// Either continuous time tau (weight e^{-tau z}) or the alpha steps
// alpha_1..alpha_t (weight prod (1 - alpha_i z)).
struct LLNSpec {
    std::vector<double> a;
    bool plancherel = true;
    double tau = 0.0;
    std::vector<double> alpha;

    static LLNSpec continuous(std::vector<double> a, double tau);
    static LLNSpec discrete(std::vector<double> a, std::vector<double> alpha);
    int N() const { return static_cast<int>(a.size()); }
    bool unit_a() const;
    // the first t steps of a discrete spec
    LLNSpec truncated(int t) const;
};

enum class LLNMethod { contour, toeplitz, explicit_poly };

// e^{-(x^{(n)}_n + ... + x^{(n)}_{n-r+1})}.  The explicit method needs a == 1.
double lln_exp_sum(int n, int r, const LLNSpec& spec, LLNMethod method);
mp_real lln_exp_sum_mp(int n, int r, const LLNSpec& spec, LLNMethod method);

// h_p = (1 / 2 pi i) closed integral of w_n(z) z^p dz for pmin <= p <= pmax,
// w_n(z) = prod_{l <= n} a_l / (a_l - z) times e^{-tau z} or prod (1 - alpha_i z),
// on a circle around a_1..a_n that leaves out 0.  The moments are real.
std::vector<mp_real> lln_weight_moments(const LLNSpec& spec, int n, int pmin, int pmax);

// G_{r,tau}(m) and G_{r,t}(m); zero for m <= 0.
mp_real g_poly_tau(int r, const mp_real& tau, int m);
mp_real g_poly_alpha(int r, const std::vector<double>& alpha, int m);
// e_i(b; c) from prod_i (b_i + c_i z) = sum_i e_i z^i
std::vector<mp_real> e_coefficients(const std::vector<double>& b, const std::vector<double>& c);

struct LLNProfile {
    int N = 0;
    LLNSpec spec;
    std::vector<double> x;  // flat index as InterlacingArray
    std::vector<double> y;

    // boundary conventions: x = +inf, y = 0 for k <= 0; x = 0, y = 1 for k > n
    double x_at(int n, int k) const;
    double y_at(int n, int k) const;
};

// y^{(n)}_k = S(n, n-k+1) / S(n, n-k) with S(n, r) = lln_exp_sum(n, r), all in
// 50-digit arithmetic (explicit polynomials when a == 1, Toeplitz otherwise).
LLNProfile lln_profile(const LLNSpec& spec);

using ProfileEvaluator = std::function<LLNProfile(double)>;

// Right-hand side of the push-block ODE for x^{(n)}_k on a given profile.
double pushblock_ode_rhs(const LLNProfile& p, int n, int k);
// Central difference of x^{(n)}_k at tau minus the right-hand side.
double pushblock_ode_residual(const ProfileEvaluator& profile_at, int n, int k, double tau, double h);

// LHS - RHS of the discrete critical point equation between times t-1 and t.
double alpha_ode_residual(const LLNProfile& prev, const LLNProfile& cur, int n, int k, double a_n, double alpha_t);

// ---- Toeplitz determinants ---------------------------------------------------

struct ToeplitzSymbol {
    std::function<cplx(cplx)> phi;
    Contour contour;

    // phi_k = (1 / 2 pi i) closed integral of phi(z) z^{-k-1} dz
    cplx coefficient(int k) const;
    // D_r = det[phi_{i-j}], D_0 = 1
    cplx det(int r) const;
};

// Relative residuals of the two Toeplitz determinant identities relating
// phi, (1 + gamma z) phi, z phi and (1 + gamma z) phi / z.
std::pair<double, double> toeplitz_identity_residuals(const ToeplitzSymbol& sym, double gamma, int M);

// The underlying matrix identities for C_{ij} = B_{ij} + gamma B_{i,j+1}.
// B must be at least (M+2) x (M+2).
std::pair<double, double> matrix_identity_residuals(const Eigen::MatrixXd& B, double gamma, int M);

// ---- lattice paths -----------------------------------------------------------

// Coefficients (index = power of tau) of p^n_r(tau) = det[G_{r,tau}(n+1-r+j-i)]
// counted as weighted non-intersecting paths.  Throws on a negative coefficient.
std::vector<double> lattice_path_polynomial(int n, int r);
double lattice_path_partition(int n, int r, double tau);
// det[G_{r,t}(n+1-r+j-i)] as a non-intersecting path partition function.
double lattice_path_partition_alpha(int n, int r, const std::vector<double>& alpha);

// M(n, r) = det[1 / (n-r+j-i)!]_{r x r}, M(n, 0) = 1.
mp_real factorial_toeplitz_det(int n, int r);
// M(n,r) M(n-2,r-2) - M(n-1,r-1)^2 + M(n,r-1) M(n-2,r-1), relative to M(n-1,r-1)^2.
double desnanot_jacobi_check(int n, int r);

// ---- linear algebra helpers --------------------------------------------------

// Determinant by Gaussian elimination with partial pivoting; `a` is row-major r x r.
template <class T>
T lu_det(std::vector<T> a, int r) {
    using std::abs;
    T det(1);
    for (int c = 0; c < r; ++c) {
        int p = c;
        auto best = abs(a[c * r + c]);
        for (int i = c + 1; i < r; ++i) {
            auto v = abs(a[i * r + c]);
            if (v > best) {
                best = v;
                p = i;
            }
        }
        if (best == 0) return T(0);
        if (p != c) {
            for (int j = 0; j < r; ++j) std::swap(a[c * r + j], a[p * r + j]);
            det = -det;
        }
        const T piv = a[c * r + c];
        det *= piv;
        for (int i = c + 1; i < r; ++i) {
            T f = a[i * r + c] / piv;
            if (f == T(0)) continue;
            for (int j = c + 1; j < r; ++j) a[i * r + j] -= f * a[c * r + j];
        }
    }
    return det;
}

}  // namespace qw

#endif
