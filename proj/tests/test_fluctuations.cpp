#include "doctest.h"
#include "qw/fluctuations.hpp"

#include <cmath>

using namespace qw;

namespace {

LLNSpec ones(int N, double tau) { return LLNSpec::continuous(std::vector<double>(N, 1.0), tau); }

double min_eig_ratio(const Eigen::MatrixXd& C) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (C + C.transpose()));
    return es.eigenvalues().minCoeff() / C.trace();
}

}  // namespace

TEST_CASE("variance of the first coordinate is tau") {
    for (double tau : {0.05, 0.3, 1.0, 2.5, 6.0}) {
        CHECK(xi_block_covariance(1, 1, 1, 1, ones(3, tau)) == doctest::Approx(tau).epsilon(1e-8));
        CHECK(xi_covariance(1, 1, 1, 1, ones(3, tau)) == doctest::Approx(tau).epsilon(1e-8));
    }
    CHECK(xi_block_covariance(1, 1, 1, 1, ones(2, 1.0), XiMethod::direct) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("empty sums give zero") {
    CHECK(xi_block_covariance(3, 0, 2, 1, ones(3, 1.0)) == 0.0);
    CHECK(xi_block_covariance(3, 2, 2, 0, ones(3, 1.0), XiMethod::direct) == 0.0);
    CHECK_THROWS_AS(xi_block_covariance(2, 3, 1, 1, ones(3, 1.0)), std::invalid_argument);
    CHECK_THROWS_AS(xi_block_covariance(4, 1, 1, 1, ones(3, 1.0)), std::invalid_argument);
    CHECK_THROWS_AS(xi_block_covariance(3, 3, 2, 2, ones(3, 1.0), XiMethod::direct), std::invalid_argument);
}

TEST_CASE("kernel reduction agrees with the full multiple integral") {
    struct Case {
        int n1, r1, n2, r2;
    };
    const Case cases[] = {{2, 1, 1, 1}, {2, 2, 1, 1}, {3, 2, 2, 2}, {3, 3, 1, 1}, {2, 1, 2, 2}, {3, 1, 3, 3}};
    for (double tau : {0.4, 1.0, 2.0}) {
        for (const auto& c : cases) {
            LLNSpec sp = ones(3, tau);
            double k = xi_block_covariance(c.n1, c.r1, c.n2, c.r2, sp);
            double d = xi_block_covariance(c.n1, c.r1, c.n2, c.r2, sp, XiMethod::direct);
            CHECK(k == doctest::Approx(d).epsilon(1e-7));
        }
    }
    LLNSpec general = LLNSpec::continuous({0.8, 1.1, 1.3}, 0.7);
    for (const auto& c : cases)
        CHECK(xi_block_covariance(c.n1, c.r1, c.n2, c.r2, general) ==
              doctest::Approx(xi_block_covariance(c.n1, c.r1, c.n2, c.r2, general, XiMethod::direct)).epsilon(1e-7));
}

TEST_CASE("block covariance is symmetric, including equal levels") {
    LLNSpec sp = ones(4, 1.3);
    CHECK(xi_block_covariance(3, 1, 3, 2, sp) == doctest::Approx(xi_block_covariance(3, 2, 3, 1, sp)).epsilon(1e-10));
    CHECK(xi_block_covariance(4, 2, 2, 1, sp) == doctest::Approx(xi_block_covariance(2, 1, 4, 2, sp)).epsilon(1e-12));
}

TEST_CASE("covariance matrix: differencing, symmetry, positivity") {
    for (double tau : {0.05, 1.0, 3.0}) {
        LLNSpec sp = ones(4, tau);
        FluctuationCovariance fc = xi_covariance_matrix(sp);
        REQUIRE(fc.cov.rows() == 10);
        CHECK((fc.cov - fc.cov.transpose()).cwiseAbs().maxCoeff() < 1e-10 * fc.cov.trace());
        CHECK(min_eig_ratio(fc.cov) > -1e-8);
        CHECK(fc.cov(0, 0) == doctest::Approx(tau).epsilon(1e-8));
        // single calls go through independent second differences
        CHECK(fc.cov(InterlacingArray::flat_index(3, 2), InterlacingArray::flat_index(2, 1)) ==
              doctest::Approx(xi_covariance(3, 2, 2, 1, sp)).epsilon(1e-8));
        CHECK(fc.cov(InterlacingArray::flat_index(4, 1), InterlacingArray::flat_index(4, 4)) ==
              doctest::Approx(xi_covariance(4, 1, 4, 4, sp)).epsilon(1e-8));
        // summing single coordinates rebuilds the block values
        for (int n1 = 1; n1 <= 4; ++n1)
            for (int r1 = 1; r1 <= n1; ++r1)
                for (int n2 = 1; n2 <= 4; ++n2)
                    for (int r2 = 1; r2 <= n2; ++r2) {
                        double s = 0;
                        for (int k1 = n1 - r1 + 1; k1 <= n1; ++k1)
                            for (int k2 = n2 - r2 + 1; k2 <= n2; ++k2)
                                s += fc.cov(InterlacingArray::flat_index(n1, k1), InterlacingArray::flat_index(n2, k2));
                        CHECK(s == doctest::Approx(fc.block(InterlacingArray::flat_index(n1, r1),
                                                            InterlacingArray::flat_index(n2, r2)))
                                       .epsilon(1e-9));
                    }
    }
}

TEST_CASE("sde coefficients") {
    for (double tau : {0.2, 1.0, 4.0}) {
        LLNProfile p = lln_profile(ones(1, tau));
        SDECoefficients c = sde_coefficients(p, 1, 1);
        const double y = std::exp(-tau);
        CHECK(c.sigma == doctest::Approx(1.0));
        CHECK(c.a == 0.0);
        CHECK(c.b == doctest::Approx(y / (1 - y)));
        CHECK(c.c == doctest::Approx(y / (1 - y)));
        Eigen::MatrixXd D;
        Eigen::VectorXd s;
        xi_sde_matrices(p, D, s);
        CHECK(std::abs(D(0, 0)) < 1e-12);
    }
    LLNProfile p4 = lln_profile(ones(4, 1.0));
    for (int n = 1; n <= 4; ++n)
        for (int k = 1; k <= n; ++k) {
            SDECoefficients c = sde_coefficients(p4, n, k);
            CHECK(c.sigma > 0);
            CHECK(std::isfinite(c.sigma));
            CHECK(std::isfinite(c.a));
            CHECK(std::isfinite(c.b));
            CHECK(std::isfinite(c.c));
        }
    CHECK_THROWS_AS(sde_coefficients(lln_profile(LLNSpec::continuous({1.0, 1.2}, 1.0)), 2, 1), std::invalid_argument);
}

TEST_CASE("sde coefficients at large time") {
    const double tau = 200;
    LLNProfile p = lln_profile(ones(4, tau));
    for (int n = 1; n <= 4; ++n)
        for (int k = 1; k <= n; ++k) {
            SDECoefficients c = sde_coefficients(p, n, k);
            CAPTURE(n);
            CAPTURE(k);
            CHECK(c.sigma == doctest::Approx(1.0).epsilon(0.05));
            if (k > 1) CHECK(tau * c.a == doctest::Approx(k - 1).epsilon(0.05));
            if (k == 1) CHECK(c.a == 0.0);
            if (k < n) CHECK(tau * c.c == doctest::Approx(n - k).epsilon(0.05));
            CHECK(tau * tau * c.b < 4.0 * n);
        }
}

TEST_CASE("covariance of the Euler-Maruyama chain converges to the formula") {
    // the SDE coefficients come from the dynamics, the formula from the
    // contour integrals; the chain's covariance must approach it at rate dt
    const int N = 3;
    const double t0 = 0.05, t1 = 1.0;
    Eigen::MatrixXd c0 = xi_covariance_matrix(ones(N, t0)).cov;
    Eigen::MatrixXd c1 = xi_covariance_matrix(ones(N, t1)).cov;
    Eigen::MatrixXd e1 = xi_em_covariance(N, t0, t1, 4e-3, c0);
    Eigen::MatrixXd e2 = xi_em_covariance(N, t0, t1, 2e-3, c0);
    const double err1 = (e1 - c1).cwiseAbs().maxCoeff();
    const double err2 = (e2 - c1).cwiseAbs().maxCoeff();
    CHECK(err2 < 5e-3);
    CHECK(err1 / err2 == doctest::Approx(2.0).epsilon(0.1));
    Eigen::MatrixXd rich = 2 * e2 - e1;
    CHECK((rich - c1).cwiseAbs().maxCoeff() < 0.05 * err2);
    CHECK(min_eig_ratio(e2) > -1e-8);
}

TEST_CASE("xi sde simulation") {
    SDEOptions quiet;
    quiet.noise = false;
    quiet.gaussian_init = false;
    quiet.dt = 5e-3;
    SdeEnsemble z = simulate_xi_sde(3, 0.05, 0.5, {0.2, 0.5}, 4, 1, quiet);
    CHECK(z.samples[0].cwiseAbs().maxCoeff() == 0.0);
    CHECK(z.samples[1].cwiseAbs().maxCoeff() == 0.0);

    SDEOptions opt;
    opt.dt = 2e-3;
    opt.workers = 1;
    SdeEnsemble e = simulate_xi_sde(2, 0.05, 1.0, {0.05, 0.5, 1.0}, 4000, 11, opt);
    for (std::size_t t = 0; t < e.times.size(); ++t) {
        Eigen::MatrixXd se;
        Eigen::MatrixXd C = empirical_covariance(e.samples[t], &se);
        Eigen::MatrixXd F = xi_covariance_matrix(ones(2, e.times[t])).cov;
        CHECK(min_eig_ratio(C) > -1e-8);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) CHECK(std::abs(C(i, j) - F(i, j)) < 4 * se(i, j));
        CHECK(std::abs(C(0, 0) - e.times[t]) < 4 * se(0, 0));
    }
    opt.workers = 3;
    SdeEnsemble e3 = simulate_xi_sde(2, 0.05, 1.0, {0.05, 0.5, 1.0}, 4000, 11, opt);
    CHECK(e3.samples[2] == e.samples[2]);
}

TEST_CASE("symmetric factor") {
    Eigen::MatrixXd C(3, 3);
    C << 2, 0.5, 0.1, 0.5, 1, 0.2, 0.1, 0.2, 0.7;
    Eigen::MatrixXd L = symmetric_factor(C);
    CHECK((L * L.transpose() - C).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::MatrixXd bad = C;
    bad(0, 0) = -1;
    CHECK_THROWS_AS(symmetric_factor(bad), std::domain_error);
}

TEST_CASE("particle system fluctuations") {
    const int N = 2;
    const double eps = 0.01, tau = 1.0;
    auto states = pushblock_ensemble(N, eps, tau, 3000, 2024, 1);
    LLNProfile p = lln_profile(ones(N, tau));
    FluctuationCovariance mc = mc_fluctuation_covariance(states, p, eps);
    FluctuationCovariance f = xi_covariance_matrix(ones(N, tau));
    CHECK((mc.cov - mc.cov.transpose()).cwiseAbs().maxCoeff() == 0.0);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) CHECK(std::abs(mc.cov(i, j) - f.cov(i, j)) < 4 * mc.se(i, j));
        // Gaussian E|Z|^3 = 2 sqrt(2 / pi)
        CHECK(std::abs(mc.third_abs(i) - 2 * std::sqrt(2 / M_PI)) < 4 * mc.third_abs_se(i));
    }
    std::vector<InterlacingArray> few(states.begin(), states.begin() + 50);
    CHECK_THROWS_AS(mc_fluctuation_covariance(few, p, eps), std::invalid_argument);
}
