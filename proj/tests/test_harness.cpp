#include "doctest.h"
#include "qw/dynamics.hpp"
#include "qw/harness.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

using namespace qw;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

json small_poisson() {
    return json::parse(R"({"kind": "verify", "check": "poisson-corner", "seed": 99, "replicas": 2000})");
}

// N = 1 push-block: lambda(gamma) is Poisson(gamma)
Eigen::VectorXd poisson_replica(std::uint64_t seed, double gamma) {
    static const auto p = ModelParams::from_q(0.5, {1.0}, Plancherel{1.0});
    Rng rng(seed);
    const auto tr = simulate_pushblock_continuous(InterlacingArray(1), p, gamma, {gamma}, rng);
    Eigen::VectorXd v(2);
    const double l = static_cast<double>(tr.states.back().at(1, 1));
    v << l, l * l;
    return v;
}

}  // namespace

TEST_CASE("config parsing and defaults") {
    const ExperimentConfig c = parse_config(json::parse(R"({"kind": "lln"})"));
    CHECK(c.name == "lln");
    CHECK(c.workers == 0);
    CHECK(c.replicas == 0);
    CHECK(c.out == "out");
    CHECK(!c.seed);
    CHECK(c.tol("lln", 1e-8) == 1e-8);

    const ExperimentConfig v = parse_config(small_poisson());
    CHECK(v.name == "poisson-corner");
    CHECK(*v.seed == 99);
    CHECK(is_stochastic(v));

    json big = small_poisson();
    big["seed"] = "0xFFFFFFFFFFFFFFFF";
    CHECK(*parse_config(big).seed == std::numeric_limits<std::uint64_t>::max());
    big["tolerances"] = {{"z", 3.5}};
    CHECK(parse_config(big).tol("z", 4) == 3.5);
}

TEST_CASE("config schema violations") {
    auto bad = [](const char* text) { return parse_config(json::parse(text)); };
    CHECK_THROWS_AS(bad(R"({"kind": "lln", "colour": 1})"), ConfigError);
    CHECK_THROWS_AS(bad(R"({"kind": "dance"})"), ConfigError);
    CHECK_THROWS_AS(bad(R"({"name": "x"})"), ConfigError);
    // a seed is mandatory for stochastic runs
    CHECK_THROWS_AS(bad(R"({"kind": "sde"})"), ConfigError);
    CHECK_THROWS_AS(bad(R"({"kind": "verify", "check": "two-time"})"), ConfigError);
    CHECK_THROWS_AS(bad(R"({"kind": "cov", "params": {"mc": true}})"), ConfigError);
    CHECK_NOTHROW(bad(R"({"kind": "cov"})"));
    CHECK_THROWS_AS(bad(R"({"kind": "verify"})"), ConfigError);
    CHECK_THROWS_AS(bad(R"({"kind": "verify", "check": "nope"})"), ConfigError);
    CHECK_THROWS_AS(bad(R"({"kind": "lln", "check": "positivity"})"), ConfigError);
    CHECK_THROWS_AS(bad(R"({"kind": "sde", "seed": -3})"), ConfigError);
    CHECK_THROWS_AS(bad(R"({"kind": "sde", "seed": "12abc"})"), ConfigError);
    CHECK_THROWS_AS(bad(R"({"kind": "lln", "workers": -1})"), ConfigError);
    CHECK_THROWS_AS(bad(R"({"kind": "lln", "replicas": 1})"), ConfigError);
    CHECK_THROWS_AS(bad(R"({"kind": "lln", "model": {"q": 0.5, "eps": 0.1}})"), ConfigError);
    CHECK_THROWS_AS(bad(R"({"kind": "lln", "model": {"q": 1.5}})"), ConfigError);
    CHECK_THROWS_AS(bad(R"({"kind": "lln", "model": {"N": 3, "a": [1, 1]}})"), ConfigError);
    CHECK_THROWS_AS(bad(R"({"kind": "lln", "model": {"dynamics": "teleport"}})"), ConfigError);
    CHECK_THROWS_AS(bad(R"({"kind": "lln", "grid": {"points": [[1, 2, 3]]}})"), ConfigError);
    CHECK_THROWS_AS(bad(R"({"kind": "lln", "tolerances": {"z": -1}})"), ConfigError);
    CHECK_THROWS_AS(bad(R"({"kind": "lln", "name": "a/b"})"), ConfigError);
    CHECK_THROWS_AS(get_int(json::parse(R"({"n": "two"})"), "n", 1), ConfigError);
    CHECK(get_int(json::object(), "n", 7) == 7);
}

TEST_CASE("every shipped config is valid and there is one per check") {
    std::vector<std::string> checks;
    for (const auto& e : fs::directory_iterator(fs::path(QW_CONFIG_DIR) / "verify")) {
        const ExperimentConfig c = load_config(e.path().string());
        CHECK(c.kind == "verify");
        checks.push_back(c.check);
    }
    std::sort(checks.begin(), checks.end());
    std::vector<std::string> all = verify_checks();
    std::sort(all.begin(), all.end());
    CHECK(checks == all);
    CHECK(all.size() == 16);
    for (const auto& e : fs::directory_iterator(fs::path(QW_CONFIG_DIR) / "examples"))
        CHECK_NOTHROW(load_config(e.path().string()));
}

TEST_CASE("Welford merge matches a single pass") {
    Rng rng(5);
    Eigen::MatrixXd X(100, 3);
    for (int i = 0; i < 100; ++i) {
        const double g = standard_normal(rng);
        X.row(i) << g, 2 * g + standard_normal(rng), std::exp(standard_normal(rng));
    }
    EnsembleStats whole, left, right;
    for (int i = 0; i < 100; ++i) (i < 37 ? left : right).add(X.row(i).transpose());
    for (int i = 0; i < 100; ++i) whole.add(X.row(i).transpose());
    left.merge(right);
    // two-pass oracle
    const Eigen::RowVectorXd mu = X.colwise().mean();
    const Eigen::MatrixXd Xc = X.rowwise() - mu;
    const Eigen::MatrixXd cov = Xc.transpose() * Xc / 99.0;
    CHECK(left.count == 100);
    CHECK((left.mean - mu.transpose()).norm() < 1e-13);
    CHECK((left.covariance() - cov).norm() < 1e-12 * cov.norm());
    CHECK((whole.covariance() - cov).norm() < 1e-12 * cov.norm());
    EnsembleStats empty;
    empty.merge(left);
    CHECK(empty.covariance() == left.covariance());
    CHECK_THROWS(EnsembleStats{}.covariance());
}

TEST_CASE("ensemble_run is invariant to the worker count") {
    ReplicaTask task = [](std::uint64_t s, int) { return poisson_replica(s, 3.0); };
    const EnsembleStats a = ensemble_run(task, 500, 1, 42, 16);
    const EnsembleStats b = ensemble_run(task, 500, 4, 42, 16);
    CHECK(a.count == 500);
    CHECK(a.mean == b.mean);
    CHECK(a.m2 == b.m2);
    // replica i sees split_seed(master, i)
    EnsembleStats manual;
    for (int i = 0; i < 500; ++i) manual.add(poisson_replica(split_seed(42, i), 3.0));
    CHECK((manual.mean - a.mean).norm() < 1e-12);
    CHECK(a.mean(0) == doctest::Approx(3.0).epsilon(0.1));
    CHECK_THROWS_AS(ensemble_run(task, 1, 1, 42), std::invalid_argument);
}

TEST_CASE("standard error falls like one over root replicas") {
    ReplicaTask task = [](std::uint64_t s, int) { return poisson_replica(s, 2.0); };
    std::vector<double> lx, ly;
    for (int R : {200, 800, 3200, 12800}) {
        const EnsembleStats st = ensemble_run(task, R, 0, 7);
        lx.push_back(std::log(R));
        ly.push_back(std::log(st.mean_se()(0)));
    }
    const double mx = (lx[0] + lx[1] + lx[2] + lx[3]) / 4, my = (ly[0] + ly[1] + ly[2] + ly[3]) / 4;
    double sxy = 0, sxx = 0;
    for (int i = 0; i < 4; ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    CHECK(std::abs(sxy / sxx + 0.5) < 0.05);
}

TEST_CASE("a failing replica aborts with its index") {
    ReplicaTask task = [](std::uint64_t s, int i) -> Eigen::VectorXd {
        if (i == 77) throw std::runtime_error("boom");
        return poisson_replica(s, 1.0);
    };
    try {
        ensemble_run(task, 200, 2, 1);
        FAIL("no exception");
    } catch (const EnsembleError& e) {
        CHECK(std::string(e.what()).find("replica 77") != std::string::npos);
        CHECK(std::string(e.what()).find("boom") != std::string::npos);
    }
}

TEST_CASE("report rows and JSON round trip") {
    Report r;
    r.kind = "verify";
    r.name = "demo";
    r.run_id = "demo-0";
    r.config = {{"kind", "verify"}};
    r.add_z("mean", 1.0, 1.1, 0.05, 4);
    r.add_z("far", 1.0, 2.0, 0.05, 4);
    r.add_abs("exact", 0.1, 0.1 + 1e-12, 1e-10);
    r.add_rel("rel", 2.0, 2.2, 0.05);
    r.add_info("nan info", std::numeric_limits<double>::quiet_NaN());
    r.add_info("inf info", -std::numeric_limits<double>::infinity());
    Table& t = r.add_table("grid", {"x", "y"});
    t.rows.push_back({1.0 / 3, 2e-300});
    CHECK(r.rows[0].pass);
    CHECK(r.rows[0].z == doctest::Approx(2.0));
    CHECK(!r.rows[1].pass);
    CHECK(r.rows[2].pass);
    CHECK(!r.rows[3].pass);
    CHECK(!r.passed());

    const Report back = report_from_json(json::parse(report_to_json(r).dump()));
    CHECK(back.rows.size() == r.rows.size());
    CHECK(std::isnan(back.rows[4].estimate));
    // NaN never compares equal, so compare the rest field by field
    Report a = r, b = back;
    a.rows[4].estimate = b.rows[4].estimate = 0;
    CHECK(a == b);
    CHECK(report_to_json(r)["schema"] == kReportSchema);
    json wrong = report_to_json(r);
    wrong["schema"] = "qwhit.report/0";
    CHECK_THROWS(report_from_json(wrong));
}

TEST_CASE("CSV layout") {
    Report r;
    r.add_abs("tenth, with comma", 0.1, 0.1, 1e-10);
    std::ostringstream os;
    write_checks_csv(r, os);
    std::istringstream in(os.str());
    std::string header, line;
    std::getline(in, header);
    std::getline(in, line);
    CHECK(header == "quantity,mode,formula,estimate,se,z,error,threshold,pass");
    CHECK(line == "\"tenth, with comma\",abs,0.10000000000000001,0.10000000000000001,0,0,0,1e-10,true");
    Table t{"t", {"a", "b"}, {{1.0 / 3, 1}}};
    std::ostringstream ts;
    write_table_csv(t, ts);
    CHECK(ts.str() == "a,b\n0.33333333333333331,1\n");
}

TEST_CASE("run_experiment: Poisson corner, artifacts and determinism") {
    const ExperimentConfig c = parse_config(small_poisson());
    const Report r = run_experiment(c);
    REQUIRE(r.rows.size() == 4);
    CHECK(r.passed());
    for (const auto& row : r.rows)
        if (row.mode == "z") CHECK(std::abs(row.z) < 4);
    CHECK(r.run_id == run_id(c));
    CHECK(r.run_id.rfind("poisson-corner-", 0) == 0);

    const std::string out = std::string(QW_OUT_DIR) + "/det";
    fs::remove_all(out);
    const auto files = export_report(r, ExportFormat::csv, out);
    REQUIRE(files.size() == 1);
    CHECK(fs::path(files[0]).parent_path() == fs::path(out) / r.run_id);
    const std::string first = slurp(files[0]);

    // same config and seed, different worker count
    json j = small_poisson();
    j["workers"] = 3;
    const Report again = run_experiment(parse_config(j));
    CHECK(again.run_id == r.run_id);
    const auto files2 = export_report(again, ExportFormat::csv, out);
    CHECK(slurp(files2[0]) == first);

    const auto jf = export_report(r, ExportFormat::json, out);
    REQUIRE(jf.size() == 1);
    const Report parsed = report_from_json(json::parse(slurp(jf[0])));
    CHECK(parsed.rows == r.rows);
    CHECK(parsed.config == r.config);

    // a new seed gives a new run id
    json k = small_poisson();
    k["seed"] = 100;
    CHECK(run_id(parse_config(k)) != r.run_id);
}

TEST_CASE("pipeline errors become an error row") {
    // zeta covariances need unit rates
    const ExperimentConfig c =
        parse_config(json::parse(R"({"kind": "cov", "model": {"N": 2, "a": [1, 2]}, "params": {"process": "zeta"}})"));
    const Report r = run_experiment(c);
    REQUIRE(!r.rows.empty());
    CHECK(r.rows.back().mode == "error");
    CHECK(!r.passed());
}

TEST_CASE("simulate pipeline writes tables and a trajectory snapshot") {
    const ExperimentConfig c = parse_config(json::parse(
        R"({"kind": "simulate", "seed": 3, "replicas": 2, "model": {"N": 3, "eps": 0.05}, "grid": {"taus": [1.0, 2.0]}})"));
    const Report r = run_experiment(c);
    CHECK(r.passed());
    REQUIRE(r.tables.size() == 2);
    CHECK(r.tables[0].rows.size() == 12);
    REQUIRE(r.attachments.count("trajectory_0.bin") == 1);
    std::istringstream in(r.attachments.at("trajectory_0.bin"));
    const Trajectory tr = read_trajectory_binary(in);
    CHECK(tr.states.size() == 2);
    CHECK(tr.states[0].levels() == 3);
}
