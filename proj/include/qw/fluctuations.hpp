#ifndef QW_FLUCTUATIONS_HPP
#define QW_FLUCTUATIONS_HPP

#include "qw/moments.hpp"
#include "qw/qcore.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace qw {

enum class XiMethod { kernel, direct };

// C(n1, r1; n2, r2): covariance of xi^{(n1)}_{n1} + ... + xi^{(n1)}_{n1-r1+1}
// with the analogous sum on level n2.  Zero when r1 or r2 is zero.
//
// kernel: only one variable per group talks to the other group, so each group
// collapses to its one-point kernel K(z) = f(z) v(z)^T H^{-1} v(z), with H the
// Hankel matrix of moments of f; the result is a double contour integral.
// direct: the full (r1 + r2)-fold integral, r1 + r2 <= 4.
double xi_block_covariance(int n1, int r1, int n2, int r2, const LLNSpec& spec, XiMethod method = XiMethod::kernel);

// Cov(xi^{(n1)}_{k1}, xi^{(n2)}_{k2}) as a second difference of block values.
double xi_covariance(int n1, int k1, int n2, int k2, const LLNSpec& spec);

struct FluctuationCovariance {
    int N = 0;
    double tau = 0.0;
    Eigen::MatrixXd cov;    // single coordinates, InterlacingArray flat index
    Eigen::MatrixXd se;     // standard errors; empty for formula values
    Eigen::MatrixXd block;  // C(n, r; n', r') at flat_index(n, r), flat_index(n', r')
    // Monte Carlo only: E|Z|^3 / sd^3 per coordinate and its standard error
    Eigen::VectorXd third_abs, third_abs_se;
};

FluctuationCovariance xi_covariance_matrix(const LLNSpec& spec);

// Symmetric square root factor L (C = L L^T) from the eigen-decomposition.
// Eigenvalues down to -1e-10 * trace are clipped to zero, lower ones throw.
Eigen::MatrixXd symmetric_factor(const Eigen::MatrixXd& C);

// ---- SDE ---------------------------------------------------------------------

struct SDECoefficients {
    double sigma, a, b, c;
};

// Coefficients of d xi^{(n)}_k on a profile with a == 1.
SDECoefficients sde_coefficients(const LLNProfile& p, int n, int k);

// d xi = D xi dtau + diag(s) dW on the flat index.
void xi_sde_matrices(const LLNProfile& p, Eigen::MatrixXd& D, Eigen::VectorXd& s);

struct SDEOptions {
    double dt = 1e-3;
    bool noise = true;
    bool gaussian_init = true;  // otherwise start from 0
    int workers = 0;            // 0: hardware concurrency
    double blowup = 1e6;
};

struct SdeEnsemble {
    std::vector<double> times;
    std::vector<Eigen::MatrixXd> samples;  // per time: replicas x dim
};

// Euler-Maruyama from tau0 > 0 on a uniform grid; each sample time is
// recorded at the nearest grid point.  Replica i uses split_seed(seed, i).
SdeEnsemble simulate_xi_sde(int N, double tau0, double tau1, const std::vector<double>& sample_times, int replicas,
                            std::uint64_t seed, const SDEOptions& opt = {});

// Exact covariance of the Euler-Maruyama chain from `init` at tau0.
Eigen::MatrixXd xi_em_covariance(int N, double tau0, double tau1, double dt, const Eigen::MatrixXd& init);

// Sample covariance (divisor R - 1) and, if requested, per-entry standard errors.
Eigen::MatrixXd empirical_covariance(const Eigen::MatrixXd& samples, Eigen::MatrixXd* se = nullptr);

// ---- fluctuations of the particle system ---------------------------------------

// Rows eps^{-1/2} (eps lambda^{(n)}_k - x^{(n)}_k(tau)) of a set of states.
Eigen::MatrixXd fluctuation_samples(const std::vector<InterlacingArray>& states, const LLNProfile& profile,
                                    double eps);

FluctuationCovariance mc_fluctuation_covariance(const std::vector<InterlacingArray>& states,
                                                const LLNProfile& profile, double eps);

// Push-block states at time tau / eps from packed initial data, a == 1,
// q = e^{-eps}.
std::vector<InterlacingArray> pushblock_ensemble(int N, double eps, double tau, int replicas, std::uint64_t seed,
                                                 int workers = 0);

}  // namespace qw

#endif
