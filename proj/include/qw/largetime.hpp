#ifndef QW_LARGETIME_HPP
#define QW_LARGETIME_HPP

#include "qw/contour.hpp"
#include "qw/fluctuations.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace qw {

// The zeta system lives on {(k, n): 1 <= k <= n <= N}, linearised with
// InterlacingArray::flat_index(n, k) (level by level).

// A_hat with A(T) = A_hat / T.
Eigen::MatrixXd zeta_drift_hat(int N);
Eigen::MatrixXd zeta_drift(int N, double T);

// p^n_k(z) and <p^n_k, p^n_k>_n for 0 <= k <= n - 1.
cplx laguerre_poly(int n, int k, double T, cplx z);
double laguerre_norm(int n, int k, double T);
// <f, g>_n = (1 / 2 pi i) closed integral of f g e^{Tz} / z^n around 0
cplx laguerre_inner(int n, int k1, int k2, double T);

enum class ZetaMethod { polynomial, multicontour, quadruple };

// Cov(zeta^{(n1)}_{k1}(T), zeta^{(n2)}_{k2}(T)).
// polynomial: the orthogonal polynomial form, evaluated exactly in integer
//   arithmetic (the closed contours reduce to finitely many coefficients).
// multicontour: second differences of the block integrals, r1 + r2 <= 4.
// quadruple: the x, y, u, v representation at T = 1, times T.
double zeta_covariance(int n1, int k1, int n2, int k2, double T, ZetaMethod method = ZetaMethod::polynomial);

// Covariance of the sums zeta^{(n)}_n + ... + zeta^{(n)}_{n-r+1}.
double zeta_block_covariance(int n1, int r1, int n2, int r2, double T,
                             ZetaMethod method = ZetaMethod::polynomial);

Eigen::MatrixXd zeta_covariance_matrix(int N, double T);

// [Y^{T0}(T)]_{(k,n),(k',n')}; binomials out of range are 0.
double propagator_closed(double T0, double T, int k, int n, int kp, int np);
Eigen::MatrixXd propagator_closed_matrix(int N, double T0, double T);
// dY/dT = A(T) Y, Y(T0) = I by adaptive Dormand-Prince.
Eigen::MatrixXd propagator_numeric(int N, double T0, double T, double tol = 1e-12);
// exp(S A_hat) = Y^{1}(e^S)
Eigen::MatrixXd exp_drift_hat(int N, double S);

// Cov(zeta(T), zeta(T0)) = Y^{T0}(T) Cov(T0), for T >= T0.
Eigen::MatrixXd two_time_covariance(double T0, double T, const Eigen::MatrixXd& cov_T0);

// dXi/dT = A Xi + Xi A^T + I from Xi(T0) = zeta covariance at T0.  The
// smallest eigenvalue relative to the trace along the way is reported.
Eigen::MatrixXd lyapunov_covariance(int N, double T0, double T, double* min_eig_ratio = nullptr);

// Euler-Maruyama for the zeta system from a Gaussian draw at T0 > 0.
SdeEnsemble simulate_zeta_sde(int N, double T0, double T1, const std::vector<double>& sample_times, int replicas,
                              std::uint64_t seed, const SDEOptions& opt = {});

// Empirical Cov(X_i, Y_j) with standard errors for paired rows.
Eigen::MatrixXd cross_covariance(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, Eigen::MatrixXd* se = nullptr);

}  // namespace qw

#endif
