// Runs every verify config in criterion order and prints one line per criterion.
// Usage: acceptance [number ...]   (no arguments: all of them)

#include "qw/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>

namespace fs = std::filesystem;

int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    std::vector<fs::path> configs;
    for (const auto& e : fs::directory_iterator(QW_CONFIG_DIR))
        if (e.path().extension() == ".json") configs.push_back(e.path());
    std::sort(configs.begin(), configs.end());

    int failed = 0, ran = 0;
    double total = 0;
    for (const fs::path& path : configs) {
        const int number = std::atoi(path.filename().string().c_str());
        if (!only.empty() && !only.count(number)) continue;
        ++ran;
        qw::ExperimentConfig cfg;
        try {
            cfg = qw::load_config(path.string());
        } catch (const std::exception& e) {
            std::printf("[FAIL] %2d %-24s config error: %s\n", number, path.stem().c_str(), e.what());
            ++failed;
            continue;
        }
        const auto t0 = std::chrono::steady_clock::now();
        const qw::Report r = qw::run_experiment(cfg);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        total += secs;
        qw::export_report(r, qw::ExportFormat::csv, QW_OUT_DIR);
        qw::export_report(r, qw::ExportFormat::json, QW_OUT_DIR);

        const double budget = cfg.params.value("max_seconds", 0.0);
        const bool in_time = budget <= 0 || secs <= budget;
        const bool ok = r.passed() && in_time;
        long bad = 0;
        for (const auto& row : r.rows) bad += !row.pass;
        std::printf("[%s] %2d %-24s %4zu checks, %3ld failed, %7.1f s%s\n", ok ? "PASS" : "FAIL", number, cfg.check.c_str(),
                    r.rows.size(), bad, secs, in_time ? "" : "  (over the time budget)");
        if (!ok) {
            ++failed;
            int shown = 0;
            for (const auto& row : r.rows) {
                const bool summary = row.mode == "info" && row.quantity.rfind("summary: ", 0) == 0;
                if (row.pass && !summary) continue;
                if (++shown > 30) break;
                std::printf("         %-5s %s: estimate=%.10g formula=%.10g error=%.3g z=%.3g threshold=%.3g\n",
                            row.pass ? "info" : "FAIL", row.quantity.c_str(), row.estimate, row.formula, row.error, row.z,
                            row.threshold);
            }
        }
        std::fflush(stdout);
    }
    std::printf("%d of %d criteria passed (%.1f s)\n", ran - failed, ran, total);
    return failed == 0 && ran > 0 ? 0 : 1;
}
