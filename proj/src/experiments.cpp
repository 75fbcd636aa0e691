#include "qw/asymptotics.hpp"
#include "qw/fluctuations.hpp"
#include "qw/harness.hpp"
#include "qw/largetime.hpp"
#include "qw/moments.hpp"

#include "pipeline_util.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qw {

using namespace detail;

namespace {

void covariance_rows(Report& r, const std::string& tag, const Eigen::MatrixXd& formula, const Eigen::MatrixXd& mc,
                     const Eigen::MatrixXd& se, double thr, bool upper_only) {
    for (int i = 0; i < formula.rows(); ++i)
        for (int j = upper_only ? i : 0; j < formula.cols(); ++j) {
            int n1, k1, n2, k2;
            flat_to_nk(i, n1, k1);
            flat_to_nk(j, n2, k2);
            r.add_z(label(tag, " (", n1, ",", k1, ")x(", n2, ",", k2, ")"), formula(i, j), mc(i, j), se(i, j), thr);
        }
}

void psd_rows(Report& r, const std::string& tag, const Eigen::MatrixXd& C) {
    r.add_max(tag + " asymmetry / norm", (C - C.transpose()).norm() / C.norm(), 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (C + C.transpose()));
    r.add_min(tag + " min eigenvalue / trace", es.eigenvalues().minCoeff() / C.trace(), -1e-10);
}

}  // namespace

void run_simulate(const ExperimentConfig& cfg, Report& r) {
    const int N = model_N(cfg, 20);
    const std::vector<double> a = model_a(cfg, N);
    const double eps = model_eps(cfg, 0.01);
    const ContinuousDynamics kind = parse_dynamics(get_string(cfg.model, "dynamics", "pushblock"));
    std::vector<double> taus = get_doubles(cfg.grid, "taus", {1.0, 10.0});
    std::sort(taus.begin(), taus.end());
    const std::vector<double> check_taus = get_doubles(cfg.params, "check_taus", {taus.front()});
    const int R = cfg.replicas ? cfg.replicas : 4;
    const std::uint64_t seed = cfg.require_seed();

    const auto params = ModelParams::from_eps(eps, a, Plancherel{taus.back() / eps});
    std::vector<double> raw;
    std::vector<LLNProfile> lln;
    for (double t : taus) {
        raw.push_back(t / eps);
        lln.push_back(lln_profile(LLNSpec::continuous(a, t)));
    }
    const int dim = N * (N + 1) / 2, nt = static_cast<int>(taus.size());
    auto run_one = [&](std::uint64_t s) {
        Rng rng(s);
        return simulate_continuous(kind, InterlacingArray(N), params, raw.back(), raw, rng);
    };
    // per time: the eps-scaled heights, then the sup deviation from the LLN profile
    ReplicaTask task = [&](std::uint64_t s, int) {
        const Trajectory tr = run_one(s);
        Eigen::VectorXd out(nt * (dim + 1));
        for (int t = 0; t < nt; ++t) {
            double sup = 0;
            for (int i = 0; i < dim; ++i) {
                int n, k;
                flat_to_nk(i, n, k);
                const double h = eps * static_cast<double>(tr.states[t].at(n, k));
                out(t * (dim + 1) + i) = h;
                sup = std::max(sup, std::abs(h - lln[t].x_at(n, k)));
            }
            out(t * (dim + 1) + dim) = sup;
        }
        return out;
    };
    const EnsembleStats st = ensemble_run(task, R, cfg.workers, seed);
    const Eigen::VectorXd se = st.mean_se();

    Table& heights = r.add_table("heights", {"tau", "n", "k", "lln", "mean", "se"});
    Table& sup = r.add_table("sup_deviation", {"tau", "mean", "se", "bound"});
    const double mult = cfg.tol("height", 5.0);
    for (int t = 0; t < nt; ++t) {
        for (int i = 0; i < dim; ++i) {
            int n, k;
            flat_to_nk(i, n, k);
            heights.rows.push_back({taus[t], double(n), double(k), lln[t].x_at(n, k), st.mean(t * (dim + 1) + i),
                                    se(t * (dim + 1) + i)});
        }
        const double m = st.mean(t * (dim + 1) + dim);
        sup.rows.push_back({taus[t], m, se(t * (dim + 1) + dim), mult * std::sqrt(eps)});
        if (std::find(check_taus.begin(), check_taus.end(), taus[t]) != check_taus.end())
            r.add_max(label("mean sup |eps lambda - x| at tau=", taus[t], " (", dynamics_name(kind), ")"), m,
                      mult * std::sqrt(eps));
        else
            r.add_info(label("mean sup |eps lambda - x| at tau=", taus[t]), m);
    }
    std::ostringstream bin;
    write_trajectory_binary(run_one(split_seed(seed, 0)), bin);
    r.attachments["trajectory_0.bin"] = bin.str();
}

void run_lln(const ExperimentConfig& cfg, Report& r) {
    const int N = model_N(cfg, 6);
    const std::vector<double> a = model_a(cfg, N);
    const double tol = cfg.tol("lln", 1e-8);
    std::vector<std::pair<double, LLNSpec>> specs;
    if (cfg.model.contains("alpha")) {
        const LLNSpec full = LLNSpec::discrete(a, get_doubles(cfg.model, "alpha", {}));
        for (int t = 0; t <= static_cast<int>(full.alpha.size()); ++t) specs.emplace_back(t, full.truncated(t));
    } else {
        for (double tau : get_doubles(cfg.grid, "taus", {0.5, 1.0, 2.0})) specs.emplace_back(tau, LLNSpec::continuous(a, tau));
    }
    Table& prof = r.add_table("profile", {cfg.model.contains("alpha") ? "t" : "tau", "n", "k", "x", "y"});
    Table& sums = r.add_table("exp_sums", {"time", "n", "r", "contour", "toeplitz", "explicit"});
    const bool unit = all_ones(a);
    for (const auto& [time, spec] : specs) {
        const LLNProfile p = lln_profile(spec);
        for (int n = 1; n <= N; ++n)
            for (int k = 1; k <= n; ++k) prof.rows.push_back({time, double(n), double(k), p.x_at(n, k), p.y_at(n, k)});
        if (!spec.plancherel && spec.alpha.empty()) continue;
        for (int n = 1; n <= N; ++n)
            for (int rr = 1; rr <= n; ++rr) {
                const double c = lln_exp_sum(n, rr, spec, LLNMethod::contour);
                const double t = lln_exp_sum(n, rr, spec, LLNMethod::toeplitz);
                const double e = unit ? lln_exp_sum(n, rr, spec, LLNMethod::explicit_poly) : t;
                sums.rows.push_back({time, double(n), double(rr), c, t, e});
                const std::string at = label(" n=", n, " r=", rr, " at ", time);
                if (unit) {
                    r.add_abs("contour vs explicit" + at, e, c, tol);
                    r.add_abs("toeplitz vs explicit" + at, e, t, tol);
                } else {
                    r.add_abs("contour vs toeplitz" + at, t, c, tol);
                }
            }
    }
}

void run_cov(const ExperimentConfig& cfg, Report& r) {
    const std::string process = get_string(cfg.params, "process", "xi");
    const int N = model_N(cfg, 3);
    const std::vector<double> a = model_a(cfg, N);
    const double tau = get_double(cfg.model, "tau", 1.0);
    Eigen::MatrixXd C;
    if (process == "xi") {
        C = xi_covariance_matrix(LLNSpec::continuous(a, tau)).cov;
    } else if (process == "zeta") {
        if (!all_ones(a)) throw ConfigError("config: model.a: the zeta process has unit rates");
        C = zeta_covariance_matrix(N, tau);
    } else {
        throw ConfigError("config: params.process: expected xi or zeta");
    }
    Table& t = r.add_table("covariance", {"n1", "k1", "n2", "k2", "cov"});
    for (int i = 0; i < C.rows(); ++i)
        for (int j = i; j < C.cols(); ++j) {
            int n1, k1, n2, k2;
            flat_to_nk(i, n1, k1);
            flat_to_nk(j, n2, k2);
            t.rows.push_back({double(n1), double(k1), double(n2), double(k2), C(i, j)});
        }
    psd_rows(r, process, C);
    r.add_rel(process + " variance of (1,1)", a[0] * tau, C(0, 0), cfg.tol("variance", 1e-8));

    if (cfg.params.value("mc", false)) {
        if (process != "xi" || !all_ones(a)) throw ConfigError("config: params.mc: only for xi with unit rates");
        const double eps = model_eps(cfg, 0.01);
        const int R = cfg.replicas ? cfg.replicas : 2000;
        const auto states = pushblock_ensemble(N, eps, tau, R, cfg.require_seed(), cfg.workers);
        const FluctuationCovariance mc = mc_fluctuation_covariance(states, lln_profile(LLNSpec::continuous(a, tau)), eps);
        covariance_rows(r, "mc xi", C, mc.cov, mc.se, cfg.tol("z", 4.0), true);
        Table& m = r.add_table("mc_covariance", {"n1", "k1", "n2", "k2", "formula", "mc", "se"});
        for (int i = 0; i < C.rows(); ++i)
            for (int j = i; j < C.cols(); ++j) {
                int n1, k1, n2, k2;
                flat_to_nk(i, n1, k1);
                flat_to_nk(j, n2, k2);
                m.rows.push_back({double(n1), double(k1), double(n2), double(k2), C(i, j), mc.cov(i, j), mc.se(i, j)});
            }
    }
}

void run_sde(const ExperimentConfig& cfg, Report& r) {
    const std::string process = get_string(cfg.params, "process", "zeta");
    const int N = model_N(cfg, 4);
    if (!all_ones(model_a(cfg, N))) throw ConfigError("config: model.a: the SDE pipelines use unit rates");
    const double t0 = get_double(cfg.params, "T0", 1.0), t1 = get_double(cfg.params, "T1", 2.0);
    std::vector<double> times = get_doubles(cfg.grid, "times", {t0, t1});
    std::sort(times.begin(), times.end());
    const int R = cfg.replicas ? cfg.replicas : 2000;
    SDEOptions opt;
    opt.dt = get_double(cfg.params, "dt", 1e-3);
    opt.workers = cfg.workers;
    const double thr = cfg.tol("z", 4.0);
    const std::uint64_t seed = cfg.require_seed();

    SdeEnsemble e;
    if (process == "zeta") e = simulate_zeta_sde(N, t0, t1, times, R, seed, opt);
    else if (process == "xi") e = simulate_xi_sde(N, t0, t1, times, R, seed, opt);
    else throw ConfigError("config: params.process: expected xi or zeta");

    Table& tab = r.add_table("covariance", {"time", "time2", "i", "j", "formula", "estimate", "se"});
    auto table_rows = [&](double ta, double tb, const Eigen::MatrixXd& F, const Eigen::MatrixXd& M, const Eigen::MatrixXd& S) {
        for (int i = 0; i < F.rows(); ++i)
            for (int j = 0; j < F.cols(); ++j) tab.rows.push_back({ta, tb, double(i), double(j), F(i, j), M(i, j), S(i, j)});
    };
    for (std::size_t s = 0; s < times.size(); ++s) {
        Eigen::MatrixXd se;
        const Eigen::MatrixXd M = empirical_covariance(e.samples[s], &se);
        const Eigen::MatrixXd F = process == "zeta" ? zeta_covariance_matrix(N, times[s])
                                                    : xi_covariance_matrix(LLNSpec::continuous(std::vector<double>(N, 1.0), times[s])).cov;
        covariance_rows(r, label(process, " cov at ", times[s]), F, M, se, thr, true);
        table_rows(times[s], times[s], F, M, se);
    }
    if (process == "zeta" && times.size() >= 2 && times.back() > times.front()) {
        Eigen::MatrixXd se;
        const Eigen::MatrixXd M = cross_covariance(e.samples.back(), e.samples.front(), &se);
        const Eigen::MatrixXd F = two_time_covariance(times.front(), times.back(), zeta_covariance_matrix(N, times.front()));
        covariance_rows(r, label("zeta two-time ", times.back(), "|", times.front()), F, M, se, thr, false);
        table_rows(times.back(), times.front(), F, M, se);
    }
}

void run_asympt(const ExperimentConfig& cfg, Report& r) {
    const auto pts = asympt_points(cfg);
    const std::vector<int> sizes = get_ints(cfg.grid, "sizes", {50, 100, 200});
    const double tol = cfg.tol("limit", 1e-6);
    Table& lim = r.add_table("limit", {"d", "a", "c", "b", "integral", "elliptic", "kappa", "log_prediction"});
    Table& fin = r.add_table("finite_n", {"d", "a", "c", "b", "N", "n_cov", "limit", "limit_over_n_cov"});
    for (const auto& p : pts) {
        const double in = limit_covariance_integral(p[0], p[1], p[2], p[3]);
        const double el = limit_covariance_elliptic(p[0], p[1], p[2], p[3]);
        lim.rows.push_back({p[0], p[1], p[2], p[3], in, el, elliptic_kappa(p[0], p[1], p[2], p[3]),
                            log_correlation_prediction(p[0], p[1], p[2], p[3])});
        r.add_abs(label("integral vs elliptic at (", p[0], ",", p[1], ",", p[2], ",", p[3], ")"), el, in, tol);
        for (int n : sizes) {
            const double f = finite_n_covariance(p[0], p[1], p[2], p[3], n);
            fin.rows.push_back({p[0], p[1], p[2], p[3], double(n), f, el, el / f});
        }
    }
}

}  // namespace qw
