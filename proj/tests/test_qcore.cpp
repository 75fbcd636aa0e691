#include "doctest.h"
#include "qw/qcore.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>
#include <map>

using namespace qw;

TEST_CASE("q_pochhammer basic values") {
    CHECK(q_pochhammer(0.7, 0.5, 0) == 1.0);
    CHECK(q_pochhammer(0.5, 0.5, 2) == doctest::Approx(0.375).epsilon(1e-15));
    CHECK(q_pochhammer(0.0, 0.9, kInfinite) == 1.0);
}

TEST_CASE("q_pochhammer splits over index sums") {
    for (double a : {0.3, -0.4, 0.9})
        for (double q : {0.2, 0.5, 0.95})
            for (long m : {0L, 1L, 4L, 9L})
                for (long n : {0L, 3L, 7L}) {
                    double lhs = q_pochhammer(a, q, m + n);
                    double rhs = q_pochhammer(a, q, m) * q_pochhammer(a * std::pow(q, m), q, n);
                    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-13));
                }
}

TEST_CASE("q_pochhammer rejects NaN") {
    CHECK_THROWS(q_pochhammer(std::nan(""), 0.5, 2));
}

TEST_CASE("g_integral trivial cases") {
    CHECK(g_integral(0.0, 3.0) == 0.0);
    CHECK(g_integral(0.4, 0.0) == 0.0);
    CHECK_THROWS(g_integral(1.5, 1.0));
}

// dilogarithm form of the integral: -sum_k a^k (1 - e^{-kb}) / k^2
static double li2_series(double x) {
    double s = 0;
    for (int k = 1; k < 100000; ++k) {
        double t = std::pow(x, k) / (double(k) * k);
        s += t;
        if (t < 1e-20) break;
    }
    return s;
}
// Li2(a e^{-b}) - Li2(a), with Li2(1) = pi^2/6
static double g_series(double a, double b) {
    double li2a = (a == 1.0) ? M_PI * M_PI / 6 : li2_series(a);
    return li2_series(a * std::exp(-b)) - li2a;
}

TEST_CASE("g_integral agrees with the series oracle") {
    CHECK(g_integral(0.5, 1.0) == doctest::Approx(g_series(0.5, 1.0)).epsilon(1e-12));
    CHECK(g_integral(0.9, 2.5) == doctest::Approx(g_series(0.9, 2.5)).epsilon(1e-12));
    CHECK(g_integral(1.0, 1.0) == doctest::Approx(g_series(1.0, 1.0)).epsilon(1e-12));
}

TEST_CASE("eps-scaled log q-Pochhammer approaches g") {
    double a = 0.6, b = 1.3;
    double exact = g_integral(a, b);
    double prev = 1e9;
    for (double eps : {1e-2, 1e-3, 1e-4}) {
        long n = static_cast<long>(std::floor(b / eps));
        double val = eps * log_q_pochhammer(a, std::exp(-eps), n);
        double err = std::fabs(val - exact);
        CHECK(err < prev);
        prev = err;
    }
}

TEST_CASE("q-geometric pmf sums to one and reduces to geometric at q -> 0") {
    double s = 0;
    for (long k = 0; k < 400; ++k) s += q_geometric_pmf(0.7, 0.6, k);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    for (long k = 0; k < 6; ++k)
        CHECK(q_geometric_pmf(1e-12, 0.4, k) == doctest::Approx(std::pow(0.4, k) * 0.6).epsilon(1e-9));
}

TEST_CASE("q-geometric sampler chi-square") {
    Rng rng(12345);
    const double q = 0.6, al = 0.5;
    const int draws = 1000000;
    std::map<long, long> counts;
    for (int i = 0; i < draws; ++i) counts[sample_q_geometric(q, al, rng)]++;
    double chi2 = 0;
    int bins = 0;
    double tail_p = 1.0;
    long tail_c = draws;
    for (long s = 0;; ++s) {
        double p = q_geometric_pmf(q, al, s);
        if (p * draws < 20) break;
        double e = p * draws;
        chi2 += (counts[s] - e) * (counts[s] - e) / e;
        tail_p -= p;
        tail_c -= counts[s];
        ++bins;
    }
    double e = tail_p * draws;
    chi2 += (tail_c - e) * (tail_c - e) / e;
    boost::math::chi_squared dist(bins);
    double pval = 1 - boost::math::cdf(dist, chi2);
    CHECK(pval > 0.001);
}

TEST_CASE("q-geometric alpha -> 0 is a point mass") {
    Rng rng(7);
    for (int i = 0; i < 1000; ++i) CHECK(sample_q_geometric(0.5, 0.0, rng) == 0);
}

TEST_CASE("q-Hahn pmf properties") {
    for (long s = 1; s <= 4; ++s) CHECK(q_hahn_pmf(0.5, 0.3, 0.3, s, 4) == 0.0);
    CHECK(q_hahn_pmf(0.5, 0.3, 0.3, 0, 4) == doctest::Approx(1.0));
    double tot = 0;
    for (long s = 0; s <= 3; ++s) tot += q_hahn_pmf(0.5, 0.4, 0.2, s, 3);
    CHECK(tot == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(q_hahn_pmf(0.5, 0.4, 0.2, 5, 3) == 0.0);
    auto inf = q_hahn_pmf_table(0.5, 0.4, 0.2, kInfinite);
    double ti = 0;
    for (double v : inf) ti += v;
    CHECK(ti == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("inverse-parameter q-Hahn sums to one and respects its support") {
    for (double q : {0.3, 0.5, 0.95})
        for (long B : {3L, 6L, 12L})
            for (long A = 0; A <= B; A += 2)
                for (long c = 0; c <= B; c += 3) {
                    auto pmf = q_hahn_inverse_pmf_table(q, A, B, c);
                    double t = 0;
                    for (std::size_t s = 0; s < pmf.size(); ++s) {
                        CHECK(pmf[s] >= 0);
                        if (long(s) > B - A || c - long(s) > A) CHECK(pmf[s] == 0.0);
                        t += pmf[s];
                    }
                    CHECK(t == doctest::Approx(1.0).epsilon(1e-12));
                }
    auto pmf = q_hahn_inverse_pmf_table(0.5, 2, kInfinite, 5);
    double t = 0;
    for (double v : pmf) t += v;
    CHECK(t == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("inverse q-Hahn agrees with the real-parameter product formula") {
    double q = 0.7;
    long A = 2, B = 5, c = 4;
    auto pmf = q_hahn_inverse_pmf_table(q, A, B, c);
    for (long s = 0; s <= c; ++s)
        CHECK(pmf[s] == doctest::Approx(q_hahn_pmf(1 / q, std::pow(q, A), std::pow(q, B), s, c)).epsilon(1e-10));
}

TEST_CASE("q-Hahn negative weight is a regime error") {
    CHECK_THROWS_AS(q_hahn_pmf(0.5, 0.2, 0.6, 1, 3), std::domain_error);
}

static double qq(double q, long m) {
    double p = 1;
    for (long i = 1; i <= m; ++i) p *= 1 - std::pow(q, i);
    return p;
}

TEST_CASE("phi/psi weights") {
    Partition z({0, 0, 0});
    auto w = phi_psi_weights(z, Partition({0, 0}), 0.5);
    CHECK(w.phi == doctest::Approx(1.0));
    CHECK(w.psi == doctest::Approx(1.0));
    CHECK_THROWS(phi_psi_weights(Partition({1, 0}), Partition({2}), 0.5));

    Rng rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        int n = 1 + trial % 4;
        std::vector<std::int64_t> mu(n - 1), lam(n);
        // random interlacing pair built from the top down
        std::int64_t hi = 8;
        for (int i = 0; i < n; ++i) {
            lam[i] = static_cast<std::int64_t>(uniform01(rng) * (hi + 1));
            if (i < n - 1) {
                mu[i] = static_cast<std::int64_t>(lam[i] * uniform01(rng));
                hi = mu[i];
            }
        }
        for (int i = 0; i + 1 < n; ++i) {
            mu[i] = std::max(mu[i], lam[i + 1]);
            mu[i] = std::min(mu[i], lam[i]);
        }
        Partition L(lam), M(mu);
        REQUIRE(interlaces(L, M));
        double q = 0.4;
        double phi = 1, psi = 1;
        for (int i = 1; i <= n; ++i) {
            phi *= qq(q, M[i] - M[i + 1]) / (qq(q, L[i] - M[i]) * qq(q, M[i] - L[i + 1]));
            psi *= qq(q, L[i] - L[i + 1]) / (qq(q, L[i] - M[i]) * qq(q, M[i] - L[i + 1]));
        }
        auto r = phi_psi_weights(L, M, q);
        CHECK(r.phi == doctest::Approx(phi).epsilon(1e-13));
        CHECK(r.psi == doctest::Approx(psi).epsilon(1e-13));
        CHECK(r.phi > 0);
        CHECK(r.psi > 0);
    }
}

TEST_CASE("interlacing arrays and conventions") {
    InterlacingArray a(3);
    CHECK(validate_interlacing(a));
    CHECK(a.get(2, 0) == kPlusInf);
    CHECK(a.get(2, 3) == 0);
    CHECK(a.get(0, 1) == 0);
    a.at(1, 1) = 2;
    CHECK_FALSE(validate_interlacing(a));
    a.at(2, 1) = 2;
    a.at(3, 1) = 2;
    CHECK(validate_interlacing(a));
    CHECK(InterlacingArray::flat_index(3, 2) == 4);
}

TEST_CASE("model params") {
    auto p = ModelParams::from_eps(0.1, {1, 1}, Plancherel{2.0});
    CHECK(p.q() == doctest::Approx(std::exp(-0.1)).epsilon(1e-16));
    CHECK_THROWS(ModelParams::from_q(0.5, {2.0}, Alpha{{0.6}}));
    auto pa = ModelParams::from_q(0.5, {1.0}, Alpha{{0.3}});
    CHECK(pa.pi(1.0) == doctest::Approx(1 / q_pochhammer_inf(0.3, 0.5)));
}

TEST_CASE("seed splitting is deterministic and distinct") {
    CHECK(split_seed(1, 0) == split_seed(1, 0));
    CHECK(split_seed(1, 0) != split_seed(1, 1));
    CHECK(split_seed(1, 0) != split_seed(2, 0));
}
