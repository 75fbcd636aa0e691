#ifndef QW_HARNESS_HPP
#define QW_HARNESS_HPP

#include "json.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qw {

using json = nlohmann::json;

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Experiment configuration, read from a JSON object.
//
//   kind        required; simulate | lln | cov | sde | asympt | verify
//   name        default: the check name for verify, else the kind
//   check       verify only, required; one of verify_checks()
//   seed        unsigned 64-bit; required whenever the run is stochastic
//   workers     default 0 (one per hardware thread)
//   replicas    default 0 (the pipeline's own default)
//   out         default "out"
//   model       object: N, a, eps, q, gamma, tau, alpha, dynamics
//   grid        object: taus, times, points, sizes, sigma, gaps
//   params      object, free-form per pipeline or check
//   tolerances  object of numbers overriding named thresholds
struct ExperimentConfig {
    std::string kind;
    std::string name;
    std::string check;
    std::optional<std::uint64_t> seed;
    int workers = 0;
    int replicas = 0;
    std::string out = "out";
    json model = json::object();
    json grid = json::object();
    json params = json::object();
    std::map<std::string, double> tolerances;

    // Everything that determines the artifacts; workers and out are excluded.
    json echo() const;
    double tol(const std::string& key, double fallback) const;
    std::uint64_t require_seed() const;
};

ExperimentConfig parse_config(const json& j);
ExperimentConfig load_config(const std::string& path);
const std::vector<std::string>& experiment_kinds();
bool is_stochastic(const ExperimentConfig& cfg);

// typed access with a default; a present value of the wrong type is a ConfigError
int get_int(const json& obj, const std::string& key, int fallback);
double get_double(const json& obj, const std::string& key, double fallback);
std::vector<double> get_doubles(const json& obj, const std::string& key, std::vector<double> fallback);
std::vector<int> get_ints(const json& obj, const std::string& key, std::vector<int> fallback);
std::string get_string(const json& obj, const std::string& key, const std::string& fallback);

// ---- reports ------------------------------------------------------------------

// mode decides pass:
//   z     |estimate - formula| <= threshold * se
//   abs   |estimate - formula| <= threshold
//   rel   |estimate - formula| <= threshold * |formula|
//   max   estimate <= threshold
//   min   estimate >= threshold
//   flag  estimate != 0
//   info  always passes; diagnostics only
//   error the pipeline threw; never passes
struct CheckRow {
    std::string quantity;
    std::string mode;
    double formula = 0, estimate = 0, se = 0, z = 0, error = 0, threshold = 0;
    bool pass = false;

    bool operator==(const CheckRow&) const = default;
};

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    bool operator==(const Table&) const = default;
};

inline constexpr const char* kReportSchema = "qwhit.report/1";
inline constexpr const char* kChecksHeader = "quantity,mode,formula,estimate,se,z,error,threshold,pass";

struct Report {
    std::string schema = kReportSchema;
    std::string kind, name, run_id;
    json config = json::object();
    json environment = json::object();
    std::vector<CheckRow> rows;
    std::deque<Table> tables;  // references from add_table stay valid
    // raw files (file name -> bytes) written next to the CSV tables; not part of the JSON
    std::map<std::string, std::string> attachments;

    bool passed() const;

    CheckRow& add_z(const std::string& quantity, double formula, double estimate, double se, double threshold);
    CheckRow& add_abs(const std::string& quantity, double formula, double estimate, double threshold);
    CheckRow& add_rel(const std::string& quantity, double formula, double estimate, double threshold);
    CheckRow& add_max(const std::string& quantity, double estimate, double threshold);
    CheckRow& add_min(const std::string& quantity, double estimate, double threshold);
    CheckRow& add_flag(const std::string& quantity, bool ok);
    CheckRow& add_info(const std::string& quantity, double estimate, double formula = 0);
    CheckRow& add_error(const std::string& message);
    Table& add_table(const std::string& name, std::vector<std::string> columns);

    bool operator==(const Report&) const = default;
};

json report_to_json(const Report& r);
Report report_from_json(const json& j);

// Compiler, library versions and hardware threads.
json environment_fingerprint(int workers);

// Stable id from the config echo: <name>-<16 hex digits>.
std::string run_id(const ExperimentConfig& cfg);

enum class ExportFormat { csv, json };

// Writes into <out_dir>/<run_id>/: checks.csv, <table>.csv per table and the
// attachments, or report.json.  Numbers carry 17 significant digits.  Returns the paths.
std::vector<std::string> export_report(const Report& r, ExportFormat format, const std::string& out_dir);
void write_checks_csv(const Report& r, std::ostream& os);
void write_table_csv(const Table& t, std::ostream& os);

// ---- ensembles ------------------------------------------------------------------

// Running mean and centred second moment (Welford), mergeable.
struct EnsembleStats {
    long count = 0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd m2;

    void add(const Eigen::VectorXd& x);
    void merge(const EnsembleStats& other);
    Eigen::MatrixXd covariance() const;  // divisor count - 1
    Eigen::VectorXd mean_se() const;
};

struct EnsembleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One replica: the seed is split_seed(master_seed, index).
using ReplicaTask = std::function<Eigen::VectorXd(std::uint64_t seed, int index)>;

// Replicas are cut into fixed blocks of `block` consecutive indices; each block
// is accumulated in index order and blocks are merged in order, so the result
// does not depend on the number of workers.  A throwing replica aborts the run
// with an EnsembleError naming its index and seed.
EnsembleStats ensemble_run(const ReplicaTask& task, int replicas, int workers, std::uint64_t master_seed,
                           int block = 64);

// ---- pipelines --------------------------------------------------------------------

// Runs the pipeline named by cfg.kind.  An exception inside the pipeline is
// recorded as an error row after the rows produced so far.
Report run_experiment(const ExperimentConfig& cfg);

const std::vector<std::string>& verify_checks();
void run_verify(const ExperimentConfig& cfg, Report& r);

void run_simulate(const ExperimentConfig& cfg, Report& r);
void run_lln(const ExperimentConfig& cfg, Report& r);
void run_cov(const ExperimentConfig& cfg, Report& r);
void run_sde(const ExperimentConfig& cfg, Report& r);
void run_asympt(const ExperimentConfig& cfg, Report& r);

}  // namespace qw

#endif
