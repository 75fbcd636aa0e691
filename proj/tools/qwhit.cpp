#include "qw/harness.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

struct Options {
    std::string config;
    std::string all_dir;
    std::string seed;
    int workers = -1;
    std::string out;
    std::string format = "both";
    bool quiet = false;
};

qw::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw qw::ConfigError("config: cannot open " + path);
    try {
        return qw::json::parse(in, nullptr, true, true);
    } catch (const qw::json::parse_error& e) {
        throw qw::ConfigError("config: " + path + ": " + e.what());
    }
}

// command-line flags take precedence over the file
qw::ExperimentConfig resolve(const std::string& kind, const std::string& path, const Options& o) {
    qw::json j = read_json(path);
    if (!j.is_object()) throw qw::ConfigError("config: " + path + ": expected an object");
    if (!j.contains("kind")) j["kind"] = kind;
    if (j["kind"] != kind)
        throw qw::ConfigError("config: " + path + ": kind '" + j["kind"].dump() + "' does not match subcommand " + kind);
    if (!o.seed.empty()) j["seed"] = o.seed;
    if (o.workers >= 0) j["workers"] = o.workers;
    if (!o.out.empty()) j["out"] = o.out;
    return qw::parse_config(j);
}

bool run_one(const qw::ExperimentConfig& cfg, const Options& o) {
    const qw::Report r = qw::run_experiment(cfg);
    std::vector<std::string> files;
    if (o.format == "csv" || o.format == "both") {
        auto f = qw::export_report(r, qw::ExportFormat::csv, cfg.out);
        files.insert(files.end(), f.begin(), f.end());
    }
    if (o.format == "json" || o.format == "both") {
        auto f = qw::export_report(r, qw::ExportFormat::json, cfg.out);
        files.insert(files.end(), f.begin(), f.end());
    }
    const long failed = std::count_if(r.rows.begin(), r.rows.end(), [](const qw::CheckRow& c) { return !c.pass; });
    std::cout << (r.passed() ? "PASS " : "FAIL ") << r.run_id << "  (" << r.rows.size() << " checks, " << failed
              << " failed)\n";
    if (!o.quiet)
        for (const auto& c : r.rows)
            if (!c.pass)
                std::cout << "    " << c.mode << "  " << c.quantity << "  estimate=" << c.estimate << " formula=" << c.formula
                          << " z=" << c.z << " error=" << c.error << " threshold=" << c.threshold << '\n';
    if (!o.quiet)
        for (const auto& f : files) std::cout << "    wrote " << f << '\n';
    return r.passed();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"q-Whittaker dynamics: simulation, formulas and checks"};
    app.require_subcommand(1);
    Options o;
    std::vector<std::pair<std::string, CLI::App*>> subs;
    const std::pair<const char*, const char*> kinds[] = {
        {"simulate", "run the particle dynamics and compare heights with the LLN profile"},
        {"lln", "LLN profiles and cross-method exponential sums"},
        {"cov", "fluctuation covariance tables (xi or zeta)"},
        {"sde", "SDE ensembles against covariance formulas"},
        {"asympt", "limit covariances and finite-N comparison tables"},
        {"verify", "named acceptance checks"},
    };
    for (const auto& [name, help] : kinds) {
        CLI::App* s = app.add_subcommand(name, help);
        auto* cfg = s->add_option("--config", o.config, "experiment config (JSON)")->check(CLI::ExistingFile);
        s->add_option("--seed", o.seed, "master seed (unsigned 64-bit), overrides the config");
        s->add_option("--workers", o.workers, "worker threads, 0 = all hardware threads")->check(CLI::NonNegativeNumber);
        s->add_option("--out", o.out, "output directory, overrides the config");
        s->add_option("--format", o.format, "csv, json or both")->check(CLI::IsMember({"csv", "json", "both"}));
        s->add_flag("--quiet", o.quiet, "only the summary line per run");
        if (std::string(name) == "verify") {
            auto* all = s->add_option("--all", o.all_dir, "run every *.json in this directory")->check(CLI::ExistingDirectory);
            cfg->excludes(all);
            all->excludes(cfg);
        } else {
            cfg->required();
        }
        subs.emplace_back(name, s);
    }
    CLI11_PARSE(app, argc, argv);

    try {
        for (const auto& [name, s] : subs) {
            if (!s->parsed()) continue;
            std::vector<std::string> paths;
            if (!o.all_dir.empty()) {
                for (const auto& e : std::filesystem::directory_iterator(o.all_dir))
                    if (e.path().extension() == ".json") paths.push_back(e.path().string());
                std::sort(paths.begin(), paths.end());
            } else if (!o.config.empty()) {
                paths.push_back(o.config);
            } else {
                std::cerr << "verify: give --config or --all\n";
                return 2;
            }
            bool ok = true;
            for (const auto& p : paths) ok = run_one(resolve(name, p, o), o) && ok;
            return ok ? 0 : 1;
        }
    } catch (const qw::ConfigError& e) {
        std::cerr << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 2;
}
