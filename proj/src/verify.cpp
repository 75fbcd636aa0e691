#include "qw/asymptotics.hpp"
#include "qw/dynamics.hpp"
#include "qw/fluctuations.hpp"
#include "qw/harness.hpp"
#include "qw/largetime.hpp"
#include "qw/moments.hpp"

#include "pipeline_util.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace qw {

using namespace detail;

namespace {

using CheckFn = void (*)(const ExperimentConfig&, Report&);

double zthr(const ExperimentConfig& cfg) { return cfg.tol("z", 4.0); }

int replicas(const ExperimentConfig& cfg, int fallback) { return cfg.replicas ? cfg.replicas : fallback; }

// E q^{lambda^{(n)}_n + ... + lambda^{(n)}_{n-r+1}}
double top_sum(const InterlacingArray& s, int n, int r) {
    double t = 0;
    for (int k = n - r + 1; k <= n; ++k) t += static_cast<double>(s.at(n, k));
    return t;
}

void poisson_corner(const ExperimentConfig& cfg, Report& r) {
    const double q = model_q(cfg, 0.5), gamma = get_double(cfg.model, "gamma", 2.0);
    const auto p = ModelParams::from_q(q, {1.0}, Plancherel{gamma});
    const double m = std::exp(gamma * (q - 1)), mi = std::exp(gamma * (1 / q - 1));
    r.add_abs("contour E q^lambda (n=1, r=1)", m, q_moment({1}, {1}, p), cfg.tol("exact", 1e-10));
    r.add_abs("contour E q^-lambda (n=1, r=1)", mi, q_inverse_moment({1}, {1}, p), cfg.tol("exact", 1e-10));
    ReplicaTask task = [&](std::uint64_t s, int) {
        Rng rng(s);
        const auto tr = simulate_pushblock_continuous(InterlacingArray(1), p, gamma, {gamma}, rng);
        const double l = static_cast<double>(tr.states.back().at(1, 1));
        Eigen::VectorXd v(2);
        v << std::pow(q, l), std::pow(q, -l);
        return v;
    };
    const EnsembleStats st = ensemble_run(task, replicas(cfg, 100000), cfg.workers, cfg.require_seed());
    const Eigen::VectorXd se = st.mean_se();
    r.add_z("MC E q^lambda", m, st.mean(0), se(0), zthr(cfg));
    r.add_z("MC E q^-lambda", mi, st.mean(1), se(1), zthr(cfg));
}

void moment_crosscheck(const ExperimentConfig& cfg, Report& r) {
    const double q = model_q(cfg, 0.5), gamma = get_double(cfg.model, "gamma", 1.0);
    std::vector<std::pair<int, int>> pairs;
    if (cfg.params.contains("pairs")) {
        for (const auto& x : cfg.params["pairs"]) pairs.emplace_back(x.at(0).get<int>(), x.at(1).get<int>());
    } else {
        pairs = {{2, 1}, {2, 2}, {3, 2}};
    }
    int N = 1;
    for (auto [n, k] : pairs) N = std::max(N, n);
    const auto p = ModelParams::from_q(q, std::vector<double>(N, 1.0), Plancherel{gamma});
    ReplicaTask task = [&](std::uint64_t s, int) {
        Rng rng(s);
        const auto st = simulate_pushblock_continuous(InterlacingArray(N), p, gamma, {gamma}, rng).states.back();
        Eigen::VectorXd v(pairs.size());
        for (std::size_t i = 0; i < pairs.size(); ++i) v(i) = std::pow(q, top_sum(st, pairs[i].first, pairs[i].second));
        return v;
    };
    const EnsembleStats st = ensemble_run(task, replicas(cfg, 100000), cfg.workers, cfg.require_seed());
    const Eigen::VectorXd se = st.mean_se();
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto [n, rr] = pairs[i];
        r.add_z(label("moment (n=", n, ", r=", rr, ") vs push-block"), q_moment({n}, {rr}, p), st.mean(i), se(i), zthr(cfg));
    }
}

void dynamics_equivalence(const ExperimentConfig& cfg, Report& r) {
    const double q = model_q(cfg, 0.5), gamma = get_double(cfg.model, "gamma", 1.0);
    const int N = model_N(cfg, 2);
    const int n = get_int(cfg.params, "n", 2), k = get_int(cfg.params, "k", 2);
    const auto p = ModelParams::from_q(q, std::vector<double>(N, 1.0), Plancherel{gamma});
    const std::uint64_t seed = cfg.require_seed();
    const ContinuousDynamics kinds[] = {ContinuousDynamics::pushblock, ContinuousDynamics::rsk, ContinuousDynamics::rightpush};
    double mean[3], se[3];
    for (int d = 0; d < 3; ++d) {
        ReplicaTask task = [&](std::uint64_t s, int) {
            Rng rng(s);
            const auto st = simulate_continuous(kinds[d], InterlacingArray(N), p, gamma, {gamma}, rng).states.back();
            Eigen::VectorXd v(1);
            v(0) = std::pow(q, static_cast<double>(st.at(n, k)));
            return v;
        };
        const EnsembleStats st = ensemble_run(task, replicas(cfg, 40000), cfg.workers, split_seed(seed, 1000 + d));
        mean[d] = st.mean(0);
        se[d] = st.mean_se()(0);
    }
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            r.add_z(label(dynamics_name(kinds[i]), " vs ", dynamics_name(kinds[j]), " E q^lambda(", n, ",", k, ")"), mean[j],
                    mean[i], std::hypot(se[i], se[j]), zthr(cfg));
    if (k == n) {
        const double f = q_moment({n}, {1}, p);
        for (int d = 0; d < 3; ++d) r.add_z(label(dynamics_name(kinds[d]), " vs moment formula"), f, mean[d], se[d], zthr(cfg));
    }
}

void lln_ode(const ExperimentConfig& cfg, Report& r) {
    const int N = model_N(cfg, 4);
    const std::vector<double> a = model_a(cfg, N);
    const double tau = get_double(cfg.model, "tau", 1.0), h = get_double(cfg.params, "h", 1e-4);
    const double floor = get_double(cfg.params, "roundoff_floor", 1e-11);
    ProfileEvaluator at = [&](double t) { return lln_profile(LLNSpec::continuous(a, t)); };
    for (int n = 1; n <= N; ++n)
        for (int k = 1; k <= n; ++k) {
            const double r1 = std::abs(pushblock_ode_residual(at, n, k, tau, h));
            r.add_max(label("push-block ODE residual (", n, ",", k, ") h=", h), r1, cfg.tol("residual", 1e-6));
            const double r2 = std::abs(pushblock_ode_residual(at, n, k, tau, h / 2));
            if (r1 > floor)
                r.add_min(label("residual ratio h/(h/2) at (", n, ",", k, ")"), r1 / r2, cfg.tol("ratio", 3.5));
            else
                r.add_info(label("residual at roundoff level, ratio not defined at (", n, ",", k, ")"), r1);
        }
    const std::vector<double> al = get_doubles(cfg.model, "alpha", {0.3, 0.5, 0.2, 0.4});
    const LLNSpec spec = LLNSpec::discrete(a, al);
    for (int t = 1; t <= static_cast<int>(al.size()); ++t) {
        const LLNProfile prev = lln_profile(spec.truncated(t - 1)), cur = lln_profile(spec.truncated(t));
        double worst = 0;
        // coordinates with k > t have not moved yet
        for (int n = 1; n <= N; ++n)
            for (int k = 1; k <= std::min(n, t); ++k)
                worst = std::max(worst, std::abs(alpha_ode_residual(prev, cur, n, k, a[n - 1], al[t - 1])));
        r.add_max(label("alpha critical point residual, step ", t), worst, cfg.tol("alpha", 1e-8));
    }
}

void scaled_convergence(const ExperimentConfig& cfg, Report& r) {
    const int N = model_N(cfg, 5);
    const std::vector<double> a = model_a(cfg, N);
    const double tau = get_double(cfg.model, "tau", 1.0);
    const std::vector<double> epss = get_doubles(cfg.params, "eps", {0.1, 0.05, 0.02});
    const double mult = cfg.tol("height", 5.0);
    const LLNProfile prof = lln_profile(LLNSpec::continuous(a, tau));
    const std::uint64_t seed = cfg.require_seed();
    Table& t = r.add_table("deviation", {"eps", "mean_sup", "se_sup", "mean_abs", "se_abs", "bound"});
    std::vector<double> sups;
    for (std::size_t e = 0; e < epss.size(); ++e) {
        const double eps = epss[e];
        const auto p = ModelParams::from_eps(eps, a, Plancherel{tau / eps});
        ReplicaTask task = [&](std::uint64_t s, int) {
            Rng rng(s);
            const auto st = simulate_pushblock_continuous(InterlacingArray(N), p, tau / eps, {tau / eps}, rng).states.back();
            double sup = 0, sum = 0;
            for (int n = 1; n <= N; ++n)
                for (int k = 1; k <= n; ++k) {
                    const double d = std::abs(eps * static_cast<double>(st.at(n, k)) - prof.x_at(n, k));
                    sup = std::max(sup, d);
                    sum += d;
                }
            Eigen::VectorXd v(2);
            v << sup, sum / (N * (N + 1) / 2);
            return v;
        };
        const EnsembleStats st = ensemble_run(task, replicas(cfg, 200), cfg.workers, split_seed(seed, e));
        const Eigen::VectorXd se = st.mean_se();
        t.rows.push_back({eps, st.mean(0), se(0), st.mean(1), se(1), mult * std::sqrt(eps)});
        sups.push_back(st.mean(0));
        r.add_info(label("mean sup |eps lambda - x| at eps=", eps), st.mean(0));
    }
    bool dec = true;
    for (std::size_t i = 1; i < sups.size(); ++i) dec = dec && sups[i] < sups[i - 1];
    r.add_flag("mean sup deviation decreases in eps", dec);
    r.add_max(label("mean sup deviation at eps=", epss.back(), " vs 5 sqrt(eps)"), sups.back(), mult * std::sqrt(epss.back()));
}

void fluctuation_covariance(const ExperimentConfig& cfg, Report& r) {
    const int N = model_N(cfg, 3);
    const double tau = get_double(cfg.model, "tau", 1.0), eps = model_eps(cfg, 0.005);
    const LLNSpec spec = LLNSpec::continuous(std::vector<double>(N, 1.0), tau);
    r.add_abs("formula Var xi(1,1) = tau", tau, xi_covariance(1, 1, 1, 1, spec), cfg.tol("variance", 1e-8));
    const FluctuationCovariance f = xi_covariance_matrix(spec);
    const auto states = pushblock_ensemble(N, eps, tau, replicas(cfg, 10000), cfg.require_seed(), cfg.workers);
    const FluctuationCovariance mc = mc_fluctuation_covariance(states, lln_profile(spec), eps);
    for (int i = 0; i < f.cov.rows(); ++i)
        for (int j = i; j < f.cov.cols(); ++j) {
            int n1, k1, n2, k2;
            flat_to_nk(i, n1, k1);
            flat_to_nk(j, n2, k2);
            r.add_z(label("Cov xi(", n1, ",", k1, ") xi(", n2, ",", k2, ")"), f.cov(i, j), mc.cov(i, j), mc.se(i, j), zthr(cfg));
        }
}

void orthogonal_polynomials(const ExperimentConfig& cfg, Report& r) {
    const int nmax = get_int(cfg.params, "nmax", 8);
    const double tol = cfg.tol("orthogonality", 1e-10);
    for (double T : get_doubles(cfg.grid, "taus", {0.5, 1.0, 2.0}))
        for (int n = 1; n <= nmax; ++n) {
            double off = 0, norm = 0;
            for (int j = 0; j < n; ++j) {
                // (-1)^j j! T^{n-1} / (n-1-j)!
                double expect = std::pow(T, n - 1);
                for (int i = 2; i <= j; ++i) expect *= i;
                for (int i = 2; i <= n - 1 - j; ++i) expect /= i;
                if (j % 2) expect = -expect;
                const cplx v = laguerre_inner(n, j, j, T);
                norm = std::max(norm, std::abs(v - expect) / std::abs(expect));
                for (int k = j + 1; k < n; ++k) off = std::max(off, std::abs(laguerre_inner(n, j, k, T)));
            }
            r.add_max(label("max |<p_j, p_k>|, j != k, n=", n, " T=", T), off, tol);
            r.add_max(label("max relative norm error, n=", n, " T=", T), norm, tol);
        }
}

void zeta_covariance_check(const ExperimentConfig& cfg, Report& r) {
    const int nmax = get_int(cfg.params, "nmax", 6), rmax = get_int(cfg.params, "rmax", 3);
    const double T = get_double(cfg.model, "tau", 1.0), tol = cfg.tol("methods", 1e-6);
    for (double t : {0.5, 1.0, 2.0}) {
        r.add_abs(label("Var zeta(1,1) at T=", t), t, zeta_covariance(1, 1, 1, 1, t), cfg.tol("variance", 1e-10));
        r.add_info(label("Var zeta(1,1) multicontour at T=", t), zeta_covariance(1, 1, 1, 1, t, ZetaMethod::multicontour), t);
        r.add_info(label("Var zeta(1,1) quadruple at T=", t), zeta_covariance(1, 1, 1, 1, t, ZetaMethod::quadruple), t);
    }
    std::map<std::array<int, 4>, double> quad;
    auto single = [&](int n1, int k1, int n2, int k2) {
        const std::array<int, 4> key{n1, k1, n2, k2};
        auto it = quad.find(key);
        if (it != quad.end()) return it->second;
        return quad[key] = zeta_covariance(n1, k1, n2, k2, T, ZetaMethod::quadruple);
    };
    double worst_q = 0, worst_m = 0;
    for (int n1 = 1; n1 <= nmax; ++n1)
        for (int r1 = 1; r1 <= std::min(rmax, n1); ++r1)
            for (int n2 = 1; n2 <= n1; ++n2)
                for (int r2 = 1; r2 <= std::min(rmax, n2); ++r2) {
                    if (n2 == n1 && r2 > r1) continue;
                    const double poly = zeta_block_covariance(n1, r1, n2, r2, T);
                    double qd = 0;
                    for (int k1 = n1 - r1 + 1; k1 <= n1; ++k1)
                        for (int k2 = n2 - r2 + 1; k2 <= n2; ++k2) qd += single(n1, k1, n2, k2);
                    const std::string at = label(" block (", n1, ",", r1, ")x(", n2, ",", r2, ")");
                    r.add_abs("quadruple vs polynomial" + at, poly, qd, tol);
                    worst_q = std::max(worst_q, std::abs(qd - poly));
                    // the ring sum carries r1 + r2 contour variables
                    if (r1 + r2 <= 4) {
                        const double mc = zeta_block_covariance(n1, r1, n2, r2, T, ZetaMethod::multicontour);
                        r.add_abs("multicontour vs polynomial" + at, poly, mc, tol);
                        worst_m = std::max(worst_m, std::abs(mc - poly));
                    }
                }
    r.add_info("worst quadruple deviation", worst_q);
    r.add_info("worst multicontour deviation", worst_m);
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

void propagator_check(const ExperimentConfig& cfg, Report& r) {
    const int N = model_N(cfg, 6);
    const double T0 = get_double(cfg.params, "T0", 1.0), T = get_double(cfg.params, "T", 2.5);
    const double Tm = get_double(cfg.params, "T_mid", 1.7);
    const int d = N * (N + 1) / 2;
    const Eigen::MatrixXd Y = propagator_closed_matrix(N, T0, T);
    r.add_max("max |closed - ODE|", max_abs(Y - propagator_numeric(N, T0, T)), cfg.tol("ode", 1e-6));
    r.add_max("max |Y(T0, T0) - I|", max_abs(propagator_closed_matrix(N, T0, T0) - Eigen::MatrixXd::Identity(d, d)),
              cfg.tol("identity", 1e-14));
    r.add_max("max |row sum - 1|", (Y.rowwise().sum().array() - 1).abs().maxCoeff(), cfg.tol("rows", 1e-10));
    r.add_min("min entry", Y.minCoeff(), 0.0);
    const Eigen::MatrixXd a = propagator_closed_matrix(N, T0, Tm), b = propagator_closed_matrix(N, Tm, T);
    r.add_max("max |Y(Tm, T) Y(T0, Tm) - Y(T0, T)|", max_abs(b * a - Y), cfg.tol("semigroup", 1e-8));
}

void two_time(const ExperimentConfig& cfg, Report& r) {
    const int N = model_N(cfg, 6);
    const double T0 = get_double(cfg.params, "T0", 1.0), T = get_double(cfg.params, "T", 2.0);
    SDEOptions opt;
    opt.dt = get_double(cfg.params, "dt", 1e-3);
    opt.workers = cfg.workers;
    const SdeEnsemble e = simulate_zeta_sde(N, T0, T, {T0, T}, replicas(cfg, 10000), cfg.require_seed(), opt);
    Eigen::MatrixXd se;
    const Eigen::MatrixXd X = cross_covariance(e.samples[1], e.samples[0], &se);
    const Eigen::MatrixXd G = two_time_covariance(T0, T, zeta_covariance_matrix(N, T0));
    r.add_abs("Brownian coordinate Cov(zeta1(T), zeta1(T0)) = T0", T0, G(0, 0), cfg.tol("brownian", 1e-14));
    for (int i = 0; i < G.rows(); ++i)
        for (int j = 0; j < G.cols(); ++j) {
            int n1, k1, n2, k2;
            flat_to_nk(i, n1, k1);
            flat_to_nk(j, n2, k2);
            r.add_z(label("Cov(zeta(", n1, ",", k1, ")(T), zeta(", n2, ",", k2, ")(T0))"), G(i, j), X(i, j), se(i, j), zthr(cfg));
        }
}

void limit_covariance(const ExperimentConfig& cfg, Report& r) {
    const auto pts = asympt_points(cfg);
    std::vector<int> sizes = get_ints(cfg.grid, "sizes", {50, 100, 200});
    std::sort(sizes.begin(), sizes.end());
    const double tol = cfg.tol("limit", 1e-6), ext = cfg.tol("extrapolation", 0.02);
    const int need = get_int(cfg.params, "min_points", 8);
    int good = 0, trend = 0;
    std::vector<double> ratios;
    for (const auto& p : pts) {
        const std::string at = label(" at (", p[0], ",", p[1], ",", p[2], ",", p[3], ")");
        const double el = limit_covariance_elliptic(p[0], p[1], p[2], p[3]);
        r.add_abs("integral vs elliptic" + at, el, limit_covariance_integral(p[0], p[1], p[2], p[3]), tol);
        std::vector<double> f;
        bool dec = true;
        for (int n : sizes) {
            f.push_back(finite_n_covariance(p[0], p[1], p[2], p[3], n));
            r.add_info(label("N Cov, N=", n, at), f.back(), el);
            if (f.size() > 1) dec = dec && std::abs(f.back() - el) < std::abs(f[f.size() - 2] - el);
        }
        // first-order extrapolation from the two largest sizes (O(1/N) corrections)
        const double n1 = sizes[sizes.size() - 2], n2 = sizes.back();
        const double rich = (n2 * f.back() - n1 * f[f.size() - 2]) / (n2 - n1);
        const double rel = std::abs(rich - el) / std::abs(el);
        r.add_info("error decreasing in N" + at, dec ? 1.0 : 0.0);
        r.add_info("extrapolated N Cov" + at, rich, el);
        r.add_info("limit / extrapolated N Cov" + at, el / rich);
        ratios.push_back(el / rich);
        trend += dec;
        if (dec && rel <= ext) ++good;
    }
    std::sort(ratios.begin(), ratios.end());
    r.add_info("summary: points with decreasing |N Cov - limit|", trend, need);
    r.add_info("summary: smallest limit / extrapolated N Cov", ratios.front());
    r.add_info("summary: largest limit / extrapolated N Cov", ratios.back());
    r.add_min("grid points where N Cov approaches the limit", good, need);
}

// the point (c, b) at distance gap from Omega(d, a), moved radially inward
std::array<double, 4> merged(double d, double a, double gap) {
    const cplx o1 = omega(d, a);
    const cplx o2 = o1 * (1 - gap / std::abs(o1));
    const double c = std::abs(o2);
    return {d, a, c, 0.5 * (1 - o2.real() / c)};
}

void log_law(const ExperimentConfig& cfg, Report& r) {
    const double d = get_double(cfg.params, "d", 1.0), a = get_double(cfg.params, "a", 0.3);
    double lo = 1e300, hi = -1e300;
    for (double gap : get_doubles(cfg.grid, "gaps", {1e-1, 1e-2, 1e-3})) {
        const auto q = merged(d, a, gap);
        const double rest = limit_covariance_elliptic(q[0], q[1], q[2], q[3]) - log_correlation_prediction(q[0], q[1], q[2], q[3]);
        r.add_info(label("limit + (4/pi) ln(gap)/sqrt(Im Im) at gap=", gap), rest);
        lo = std::min(lo, rest);
        hi = std::max(hi, rest);
    }
    r.add_max("relative variation of the remainder", (hi - lo) / std::max(std::abs(hi), std::abs(lo)), cfg.tol("variation", 0.25));
}

void ew_matching(const ExperimentConfig& cfg, Report& r) {
    const double euler = 0.57721566490153286061;
    r.add_abs("C(0) = ln 2 - gamma_Euler", std::log(2.0) - euler, c_function(0.0), cfg.tol("c0", 1e-10));
    for (double tau : {0.25, 0.5, 1.0})
        for (double rad : {0.5, 1.0, 2.0})
            r.add_abs(label("G_tau closed vs quadrature, tau=", tau, " r=", rad), g_tau(tau, rad), g_tau_average(tau, rad),
                      cfg.tol("g_tau", 1e-6));
    CharacteristicFrame f;
    f.d = get_double(cfg.params, "d", 1.3);
    f.a = get_double(cfg.params, "a", 0.35);
    f.T = get_double(cfg.params, "T", 3.0);
    f.S = f.d * std::sqrt(f.a * (1 - f.a)) / 4;
    f.eta = {0.2, -0.4};
    f.lambda = {1.1, 0.5};
    f.mu = {-0.7, 0.3};
    f.nu = {0.4, 1.6};
    r.add_rel("characteristic covariance vs EW (t = tau, t~ = 0)", ew_covariance(f.tau(), 0.0, f.eta, f.lambda, f.mu, f.nu),
              characteristic_covariance(f), cfg.tol("ew", 1e-8));
}

void propagator_asymptotics(const ExperimentConfig& cfg, Report& r) {
    const double d = get_double(cfg.params, "d", 1.0), a = get_double(cfg.params, "a", 0.5), T = get_double(cfg.params, "T", 2.0);
    const int N = get_int(cfg.params, "N", 2000);
    const std::vector<double> sig = get_doubles(cfg.grid, "sigma", {-1.0, -0.5, 0.0, 0.5, 1.0});
    for (double s1 : sig)
        for (double s2 : sig) {
            const PropagatorPoint p = propagator_scaling(d, a, T, s1, s2, N);
            const double ratio = propagator_closed(1, T, p.k, p.n, p.kp, p.np) / propagator_gaussian_asymptotic(d, a, T, p.s1, p.s2, N);
            r.add_rel(label("closed / asymptotic at sigma=(", s1, ",", s2, ")"), 1.0, ratio, cfg.tol("ratio", 0.05));
        }
}

void positivity(const ExperimentConfig& cfg, Report& r) {
    const int nmax = get_int(cfg.params, "nmax", 6);
    for (int n = 1; n <= nmax; ++n)
        for (int k = 1; k <= n; ++k) {
            const auto c = lattice_path_polynomial(n, k);
            r.add_min(label("min coefficient of p^", n, "_", k), *std::min_element(c.begin(), c.end()), 0.0);
        }
    for (double tau : get_doubles(cfg.grid, "taus", {0.5, 1.0, 2.0})) {
        double worst = 0;
        for (int n = 1; n <= nmax; ++n)
            for (int k = 1; k <= n; ++k) {
                const double paths = std::exp(-tau * k) * lattice_path_partition(n, k, tau);
                const double det = lln_exp_sum(n, k, LLNSpec::continuous(std::vector<double>(n, 1.0), tau), LLNMethod::explicit_poly);
                worst = std::max(worst, std::abs(paths - det) / std::max(1.0, std::abs(det)));
            }
        r.add_max(label("max |path sum - G determinant| at tau=", tau), worst, cfg.tol("lgv", 1e-12));
    }
}

const std::vector<std::pair<std::string, CheckFn>>& registry() {
    static const std::vector<std::pair<std::string, CheckFn>> reg = {
        {"poisson-corner", poisson_corner},
        {"moment-crosscheck", moment_crosscheck},
        {"dynamics-equivalence", dynamics_equivalence},
        {"lln-agreement", run_lln},
        {"lln-ode", lln_ode},
        {"scaled-convergence", scaled_convergence},
        {"fluctuation-covariance", fluctuation_covariance},
        {"orthogonal-polynomials", orthogonal_polynomials},
        {"zeta-covariance", zeta_covariance_check},
        {"propagator", propagator_check},
        {"two-time", two_time},
        {"limit-covariance", limit_covariance},
        {"log-law", log_law},
        {"ew-matching", ew_matching},
        {"propagator-asymptotics", propagator_asymptotics},
        {"positivity", positivity},
    };
    return reg;
}

}  // namespace

const std::vector<std::string>& verify_checks() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& [name, fn] : registry()) v.push_back(name);
        return v;
    }();
    return names;
}

void run_verify(const ExperimentConfig& cfg, Report& r) {
    for (const auto& [name, fn] : registry())
        if (name == cfg.check) return fn(cfg, r);
    throw ConfigError("config: check: unknown check '" + cfg.check + "'");
}

}  // namespace qw
