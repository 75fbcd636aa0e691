#include "qw/harness.hpp"

#include "qw/parallel.hpp"
#include "qw/qcore.hpp"

#include <Eigen/Core>
#include <boost/version.hpp>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

namespace qw {

namespace {

const std::set<std::string> kTopKeys = {"kind",  "name",  "check", "seed",   "workers",   "replicas",
                                        "out",   "model", "grid",  "params", "tolerances"};
const std::set<std::string> kStochasticChecks = {"poisson-corner",      "moment-crosscheck",    "dynamics-equivalence",
                                                 "scaled-convergence", "fluctuation-covariance", "two-time"};

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw ConfigError("config: " + where + ": " + what);
}

void need_number_array(const json& v, const std::string& where) {
    if (!v.is_array()) fail(where, "expected an array of numbers");
    for (const auto& x : v)
        if (!x.is_number()) fail(where, "expected an array of numbers");
}

void need_positive(const json& v, const std::string& where) {
    if (!v.is_number() || !(v.get<double>() > 0)) fail(where, "expected a positive number");
}

void validate_model(const json& m) {
    if (!m.is_object()) fail("model", "expected an object");
    for (auto it = m.begin(); it != m.end(); ++it) {
        const std::string& k = it.key();
        const json& v = it.value();
        const std::string where = "model." + k;
        if (k == "N") {
            if (!v.is_number_integer() || v.get<long>() < 1) fail(where, "expected an integer >= 1");
        } else if (k == "a") {
            need_number_array(v, where);
            for (const auto& x : v)
                if (!(x.get<double>() > 0)) fail(where, "rates must be positive");
        } else if (k == "eps" || k == "gamma" || k == "tau") {
            need_positive(v, where);
        } else if (k == "q") {
            if (!v.is_number() || !(v.get<double>() > 0 && v.get<double>() < 1)) fail(where, "expected 0 < q < 1");
        } else if (k == "alpha") {
            need_number_array(v, where);
            for (const auto& x : v)
                if (!(x.get<double>() >= 0)) fail(where, "alpha steps must be non-negative");
        } else if (k == "dynamics") {
            if (!v.is_string()) fail(where, "expected a string");
            const std::string s = v.get<std::string>();
            if (s != "pushblock" && s != "rightpush" && s != "rsk") fail(where, "expected pushblock, rightpush or rsk");
        } else {
            fail(where, "unknown key");
        }
    }
    if (m.contains("eps") && m.contains("q")) fail("model", "give eps or q, not both");
    if (m.contains("a") && m.contains("N") && m["a"].size() != m["N"].get<std::size_t>())
        fail("model.a", "length must equal N");
}

void validate_grid(const json& g) {
    if (!g.is_object()) fail("grid", "expected an object");
    for (auto it = g.begin(); it != g.end(); ++it) {
        const std::string& k = it.key();
        const json& v = it.value();
        const std::string where = "grid." + k;
        if (k == "taus" || k == "gaps") {
            need_number_array(v, where);
            for (const auto& x : v)
                if (!(x.get<double>() > 0)) fail(where, "values must be positive");
        } else if (k == "times" || k == "sigma") {
            need_number_array(v, where);
        } else if (k == "sizes") {
            if (!v.is_array()) fail(where, "expected an array of integers");
            for (const auto& x : v)
                if (!x.is_number_integer() || x.get<long>() < 1) fail(where, "expected integers >= 1");
        } else if (k == "points") {
            if (!v.is_array()) fail(where, "expected an array of [d, a, c, b]");
            for (const auto& p : v) {
                need_number_array(p, where);
                if (p.size() != 4) fail(where, "each point is [d, a, c, b]");
            }
        } else {
            fail(where, "unknown key");
        }
    }
}

std::uint64_t parse_seed(const json& v) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
        if (v.get<std::int64_t>() < 0) fail("seed", "must be non-negative");
        return static_cast<std::uint64_t>(v.get<std::int64_t>());
    }
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        try {
            std::size_t used = 0;
            const auto x = std::stoull(s, &used, 0);
            if (used == s.size() && !s.empty() && s[0] != '-') return x;
        } catch (const std::exception&) {
        }
        fail("seed", "cannot parse '" + s + "' as an unsigned 64-bit integer");
    }
    fail("seed", "expected an unsigned integer or a numeric string");
}

// non-finite values are spelled out so that they survive JSON
json num(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return x;
}

double unnum(const json& v) {
    if (v.is_number()) return v.get<double>();
    const std::string s = v.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw std::invalid_argument("report json: bad number '" + s + "'");
}

std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

// ---- config ---------------------------------------------------------------------

const std::vector<std::string>& experiment_kinds() {
    static const std::vector<std::string> k = {"simulate", "lln", "cov", "sde", "asympt", "verify"};
    return k;
}

bool is_stochastic(const ExperimentConfig& cfg) {
    if (cfg.kind == "simulate" || cfg.kind == "sde") return true;
    if (cfg.kind == "cov") return cfg.params.value("mc", false);
    if (cfg.kind == "verify") return kStochasticChecks.count(cfg.check) > 0;
    return false;
}

ExperimentConfig parse_config(const json& j) {
    if (!j.is_object()) fail("<root>", "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!kTopKeys.count(it.key())) fail(it.key(), "unknown key");
    ExperimentConfig c;
    if (!j.contains("kind") || !j["kind"].is_string()) fail("kind", "required string");
    c.kind = j["kind"].get<std::string>();
    const auto& kinds = experiment_kinds();
    if (std::find(kinds.begin(), kinds.end(), c.kind) == kinds.end()) fail("kind", "unknown kind '" + c.kind + "'");
    if (j.contains("check")) {
        if (!j["check"].is_string()) fail("check", "expected a string");
        c.check = j["check"].get<std::string>();
    }
    if (c.kind == "verify") {
        const auto& names = verify_checks();
        if (c.check.empty()) fail("check", "required for verify");
        if (std::find(names.begin(), names.end(), c.check) == names.end()) fail("check", "unknown check '" + c.check + "'");
    } else if (!c.check.empty()) {
        fail("check", "only verify takes a check");
    }
    if (j.contains("name")) {
        if (!j["name"].is_string() || j["name"].get<std::string>().empty()) fail("name", "expected a non-empty string");
        c.name = j["name"].get<std::string>();
        for (char ch : c.name)
            if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.'))
                fail("name", "use letters, digits, '-', '_' and '.'");
    } else {
        c.name = c.kind == "verify" ? c.check : c.kind;
    }
    if (j.contains("seed")) c.seed = parse_seed(j["seed"]);
    if (j.contains("workers")) {
        if (!j["workers"].is_number_integer() || j["workers"].get<long>() < 0) fail("workers", "expected an integer >= 0");
        c.workers = j["workers"].get<int>();
    }
    if (j.contains("replicas")) {
        const json& r = j["replicas"];
        if (!r.is_number_integer() || r.get<long>() < 0 || r.get<long>() == 1 || r.get<long>() > 100000000)
            fail("replicas", "expected 0 (default) or an integer in [2, 1e8]");
        c.replicas = r.get<int>();
    }
    if (j.contains("out")) {
        if (!j["out"].is_string() || j["out"].get<std::string>().empty()) fail("out", "expected a non-empty string");
        c.out = j["out"].get<std::string>();
    }
    if (j.contains("model")) {
        validate_model(j["model"]);
        c.model = j["model"];
    }
    if (j.contains("grid")) {
        validate_grid(j["grid"]);
        c.grid = j["grid"];
    }
    if (j.contains("params")) {
        if (!j["params"].is_object()) fail("params", "expected an object");
        c.params = j["params"];
    }
    if (j.contains("tolerances")) {
        const json& t = j["tolerances"];
        if (!t.is_object()) fail("tolerances", "expected an object");
        for (auto it = t.begin(); it != t.end(); ++it) {
            need_positive(it.value(), "tolerances." + it.key());
            c.tolerances[it.key()] = it.value().get<double>();
        }
    }
    if (is_stochastic(c) && !c.seed) fail("seed", "required for a stochastic run");
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    json j;
    try {
        j = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError("config: " + path + ": " + e.what());
    }
    return parse_config(j);
}

json ExperimentConfig::echo() const {
    json j;
    j["kind"] = kind;
    j["name"] = name;
    if (!check.empty()) j["check"] = check;
    if (seed) j["seed"] = *seed;
    j["replicas"] = replicas;
    j["model"] = model;
    j["grid"] = grid;
    j["params"] = params;
    j["tolerances"] = tolerances;
    return j;
}

double ExperimentConfig::tol(const std::string& key, double fallback) const {
    auto it = tolerances.find(key);
    return it == tolerances.end() ? fallback : it->second;
}

std::uint64_t ExperimentConfig::require_seed() const {
    if (!seed) throw ConfigError("config: seed: required for a stochastic run");
    return *seed;
}

int get_int(const json& obj, const std::string& key, int fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number_integer()) throw ConfigError("config: " + key + ": expected an integer");
    return obj[key].get<int>();
}

double get_double(const json& obj, const std::string& key, double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number()) throw ConfigError("config: " + key + ": expected a number");
    return obj[key].get<double>();
}

std::vector<double> get_doubles(const json& obj, const std::string& key, std::vector<double> fallback) {
    if (!obj.contains(key)) return fallback;
    need_number_array(obj[key], key);
    return obj[key].get<std::vector<double>>();
}

std::vector<int> get_ints(const json& obj, const std::string& key, std::vector<int> fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_array()) throw ConfigError("config: " + key + ": expected an array of integers");
    for (const auto& x : obj[key])
        if (!x.is_number_integer()) throw ConfigError("config: " + key + ": expected an array of integers");
    return obj[key].get<std::vector<int>>();
}

std::string get_string(const json& obj, const std::string& key, const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_string()) throw ConfigError("config: " + key + ": expected a string");
    return obj[key].get<std::string>();
}

// ---- report -------------------------------------------------------------------------

bool Report::passed() const {
    for (const CheckRow& r : rows)
        if (!r.pass) return false;
    return true;
}

CheckRow& Report::add_z(const std::string& quantity, double formula, double estimate, double se, double threshold) {
    CheckRow r{quantity, "z", formula, estimate, se};
    r.error = std::abs(estimate - formula);
    r.z = se > 0 ? (estimate - formula) / se : (r.error == 0 ? 0.0 : std::numeric_limits<double>::infinity());
    r.threshold = threshold;
    r.pass = std::abs(r.z) <= threshold;
    rows.push_back(r);
    return rows.back();
}

CheckRow& Report::add_abs(const std::string& quantity, double formula, double estimate, double threshold) {
    CheckRow r{quantity, "abs", formula, estimate};
    r.error = std::abs(estimate - formula);
    r.threshold = threshold;
    r.pass = r.error <= threshold;
    rows.push_back(r);
    return rows.back();
}

CheckRow& Report::add_rel(const std::string& quantity, double formula, double estimate, double threshold) {
    CheckRow r{quantity, "rel", formula, estimate};
    r.error = std::abs(estimate - formula) / std::abs(formula);
    r.threshold = threshold;
    r.pass = r.error <= threshold;
    rows.push_back(r);
    return rows.back();
}

CheckRow& Report::add_max(const std::string& quantity, double estimate, double threshold) {
    CheckRow r{quantity, "max", 0, estimate};
    r.threshold = threshold;
    r.pass = estimate <= threshold;
    rows.push_back(r);
    return rows.back();
}

CheckRow& Report::add_min(const std::string& quantity, double estimate, double threshold) {
    CheckRow r{quantity, "min", 0, estimate};
    r.threshold = threshold;
    r.pass = estimate >= threshold;
    rows.push_back(r);
    return rows.back();
}

CheckRow& Report::add_flag(const std::string& quantity, bool ok) {
    CheckRow r{quantity, "flag", 1, ok ? 1.0 : 0.0};
    r.pass = ok;
    rows.push_back(r);
    return rows.back();
}

CheckRow& Report::add_info(const std::string& quantity, double estimate, double formula) {
    CheckRow r{quantity, "info", formula, estimate};
    r.pass = true;
    rows.push_back(r);
    return rows.back();
}

CheckRow& Report::add_error(const std::string& message) {
    CheckRow r{message, "error"};
    r.pass = false;
    rows.push_back(r);
    return rows.back();
}

Table& Report::add_table(const std::string& name, std::vector<std::string> columns) {
    tables.push_back(Table{name, std::move(columns), {}});
    return tables.back();
}

json report_to_json(const Report& r) {
    json j;
    j["schema"] = r.schema;
    j["kind"] = r.kind;
    j["name"] = r.name;
    j["run_id"] = r.run_id;
    j["passed"] = r.passed();
    j["config"] = r.config;
    j["environment"] = r.environment;
    json rows = json::array();
    for (const CheckRow& c : r.rows)
        rows.push_back({{"quantity", c.quantity}, {"mode", c.mode},     {"formula", num(c.formula)},
                        {"estimate", num(c.estimate)}, {"se", num(c.se)}, {"z", num(c.z)},
                        {"error", num(c.error)},       {"threshold", num(c.threshold)}, {"pass", c.pass}});
    j["rows"] = rows;
    json tables = json::array();
    for (const Table& t : r.tables) {
        json data = json::array();
        for (const auto& row : t.rows) {
            json line = json::array();
            for (double x : row) line.push_back(num(x));
            data.push_back(line);
        }
        tables.push_back({{"name", t.name}, {"columns", t.columns}, {"rows", data}});
    }
    j["tables"] = tables;
    return j;
}

Report report_from_json(const json& j) {
    Report r;
    r.schema = j.at("schema").get<std::string>();
    if (r.schema != kReportSchema) throw std::invalid_argument("report json: unsupported schema " + r.schema);
    r.kind = j.at("kind").get<std::string>();
    r.name = j.at("name").get<std::string>();
    r.run_id = j.at("run_id").get<std::string>();
    r.config = j.at("config");
    r.environment = j.at("environment");
    for (const json& c : j.at("rows")) {
        CheckRow row;
        row.quantity = c.at("quantity").get<std::string>();
        row.mode = c.at("mode").get<std::string>();
        row.formula = unnum(c.at("formula"));
        row.estimate = unnum(c.at("estimate"));
        row.se = unnum(c.at("se"));
        row.z = unnum(c.at("z"));
        row.error = unnum(c.at("error"));
        row.threshold = unnum(c.at("threshold"));
        row.pass = c.at("pass").get<bool>();
        r.rows.push_back(row);
    }
    for (const json& t : j.at("tables")) {
        Table tab{t.at("name").get<std::string>(), t.at("columns").get<std::vector<std::string>>(), {}};
        for (const json& line : t.at("rows")) {
            std::vector<double> row;
            for (const json& x : line) row.push_back(unnum(x));
            tab.rows.push_back(row);
        }
        r.tables.push_back(tab);
    }
    return r;
}

json environment_fingerprint(int workers) {
    json e;
#if defined(__clang__)
    e["compiler"] = std::string("clang ") + __clang_version__;
#elif defined(__GNUC__)
    e["compiler"] = std::string("gcc ") + __VERSION__;
#else
    e["compiler"] = "unknown";
#endif
    e["cplusplus"] = static_cast<long>(__cplusplus);
    e["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                 std::to_string(EIGEN_MINOR_VERSION);
    e["boost"] = BOOST_LIB_VERSION;
    e["json"] = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                std::to_string(NLOHMANN_JSON_VERSION_PATCH);
#ifdef NDEBUG
    e["assertions"] = false;
#else
    e["assertions"] = true;
#endif
    e["hardware_threads"] = std::thread::hardware_concurrency();
    e["workers"] = resolve_workers(workers);
    e["rng"] = "mt19937_64; replica seed splitmix64(master + (index + 1) * 0x9E3779B97F4A7C15)";
    return e;
}

std::string run_id(const ExperimentConfig& cfg) {
    // FNV-1a over the canonical dump (object keys are sorted)
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : cfg.echo().dump()) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    std::ostringstream os;
    os << cfg.name << '-' << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

void write_checks_csv(const Report& r, std::ostream& os) {
    os << kChecksHeader << '\n';
    for (const CheckRow& c : r.rows)
        os << csv_field(c.quantity) << ',' << c.mode << ',' << fmt(c.formula) << ',' << fmt(c.estimate) << ','
           << fmt(c.se) << ',' << fmt(c.z) << ',' << fmt(c.error) << ',' << fmt(c.threshold) << ','
           << (c.pass ? "true" : "false") << '\n';
}

void write_table_csv(const Table& t, std::ostream& os) {
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << csv_field(t.columns[i]);
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << fmt(row[i]);
        os << '\n';
    }
}

std::vector<std::string> export_report(const Report& r, ExportFormat format, const std::string& out_dir) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::path(out_dir) / r.run_id;
    fs::create_directories(dir);
    std::vector<std::string> written;
    auto open = [&](const fs::path& p) {
        std::ofstream f(p, std::ios::binary);
        if (!f) throw std::runtime_error("export: cannot write " + p.string());
        written.push_back(p.string());
        return f;
    };
    if (format == ExportFormat::json) {
        auto f = open(dir / "report.json");
        f << report_to_json(r).dump(2) << '\n';
        if (!f) throw std::runtime_error("export: write failed for report.json");
        return written;
    }
    {
        auto f = open(dir / "checks.csv");
        write_checks_csv(r, f);
        if (!f) throw std::runtime_error("export: write failed for checks.csv");
    }
    for (const Table& t : r.tables) {
        auto f = open(dir / (t.name + ".csv"));
        write_table_csv(t, f);
        if (!f) throw std::runtime_error("export: write failed for " + t.name + ".csv");
    }
    for (const auto& [file, bytes] : r.attachments) {
        auto f = open(dir / file);
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!f) throw std::runtime_error("export: write failed for " + file);
    }
    return written;
}

// ---- ensembles ------------------------------------------------------------------------

void EnsembleStats::add(const Eigen::VectorXd& x) {
    if (count == 0) {
        mean = Eigen::VectorXd::Zero(x.size());
        m2 = Eigen::MatrixXd::Zero(x.size(), x.size());
    } else if (x.size() != mean.size()) {
        throw std::invalid_argument("EnsembleStats: dimension changed");
    }
    ++count;
    const Eigen::VectorXd delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean).transpose();
}

void EnsembleStats::merge(const EnsembleStats& o) {
    if (o.count == 0) return;
    if (count == 0) {
        *this = o;
        return;
    }
    if (o.mean.size() != mean.size()) throw std::invalid_argument("EnsembleStats: dimension mismatch in merge");
    const double na = static_cast<double>(count), nb = static_cast<double>(o.count), n = na + nb;
    const Eigen::VectorXd delta = o.mean - mean;
    mean += delta * (nb / n);
    m2 += o.m2 + delta * delta.transpose() * (na * nb / n);
    count += o.count;
}

Eigen::MatrixXd EnsembleStats::covariance() const {
    if (count < 2) throw std::invalid_argument("EnsembleStats: covariance needs two samples");
    return m2 / static_cast<double>(count - 1);
}

Eigen::VectorXd EnsembleStats::mean_se() const {
    return (covariance().diagonal() / static_cast<double>(count)).cwiseSqrt();
}

EnsembleStats ensemble_run(const ReplicaTask& task, int replicas, int workers, std::uint64_t master_seed, int block) {
    if (replicas < 2) throw std::invalid_argument("ensemble_run: replicas must be at least 2");
    if (block < 1) throw std::invalid_argument("ensemble_run: block must be positive");
    const int blocks = (replicas + block - 1) / block;
    std::vector<EnsembleStats> parts(blocks);
    std::atomic<bool> stop{false};
    parallel_for(blocks, workers, [&](int b) {
        const int lo = b * block, hi = std::min(replicas, lo + block);
        for (int i = lo; i < hi; ++i) {
            if (stop.load(std::memory_order_relaxed)) return;
            const std::uint64_t seed = split_seed(master_seed, static_cast<std::uint64_t>(i));
            try {
                parts[b].add(task(seed, i));
            } catch (const std::exception& e) {
                stop = true;
                std::ostringstream os;
                os << "ensemble_run: replica " << i << " (seed " << seed << ") failed: " << e.what();
                throw EnsembleError(os.str());
            }
        }
    });
    EnsembleStats total;
    for (const EnsembleStats& p : parts) total.merge(p);
    return total;
}

// ---- dispatch -------------------------------------------------------------------------

Report run_experiment(const ExperimentConfig& cfg) {
    Report r;
    r.kind = cfg.kind;
    r.name = cfg.name;
    r.run_id = run_id(cfg);
    r.config = cfg.echo();
    r.environment = environment_fingerprint(cfg.workers);
    try {
        if (is_stochastic(cfg)) cfg.require_seed();
        if (cfg.kind == "simulate") run_simulate(cfg, r);
        else if (cfg.kind == "lln") run_lln(cfg, r);
        else if (cfg.kind == "cov") run_cov(cfg, r);
        else if (cfg.kind == "sde") run_sde(cfg, r);
        else if (cfg.kind == "asympt") run_asympt(cfg, r);
        else if (cfg.kind == "verify") run_verify(cfg, r);
        else throw ConfigError("config: kind: unknown kind '" + cfg.kind + "'");
    } catch (const std::exception& e) {
        r.add_error(e.what());
    }
    return r;
}

}  // namespace qw
