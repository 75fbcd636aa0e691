#ifndef QW_PIPELINE_UTIL_HPP
#define QW_PIPELINE_UTIL_HPP

#include "qw/dynamics.hpp"
#include "qw/harness.hpp"
#include "qw/qcore.hpp"

#include <array>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

namespace qw::detail {

inline int model_N(const ExperimentConfig& cfg, int fallback) {
    if (cfg.model.contains("a") && !cfg.model.contains("N")) return static_cast<int>(cfg.model["a"].size());
    return get_int(cfg.model, "N", fallback);
}

inline std::vector<double> model_a(const ExperimentConfig& cfg, int N) {
    return get_doubles(cfg.model, "a", std::vector<double>(N, 1.0));
}

inline bool all_ones(const std::vector<double>& a) {
    for (double x : a)
        if (x != 1.0) return false;
    return true;
}

inline double model_eps(const ExperimentConfig& cfg, double fallback) {
    if (cfg.model.contains("q")) return -std::log(cfg.model["q"].get<double>());
    return get_double(cfg.model, "eps", fallback);
}

inline double model_q(const ExperimentConfig& cfg, double fallback) {
    if (cfg.model.contains("eps")) return std::exp(-cfg.model["eps"].get<double>());
    return get_double(cfg.model, "q", fallback);
}

inline ContinuousDynamics parse_dynamics(const std::string& s) {
    if (s == "pushblock") return ContinuousDynamics::pushblock;
    if (s == "rightpush") return ContinuousDynamics::rightpush;
    if (s == "rsk") return ContinuousDynamics::rsk;
    throw ConfigError("config: dynamics: unknown '" + s + "'");
}

inline const char* dynamics_name(ContinuousDynamics d) {
    switch (d) {
        case ContinuousDynamics::pushblock: return "pushblock";
        case ContinuousDynamics::rightpush: return "rightpush";
        case ContinuousDynamics::rsk: return "rsk";
    }
    return "?";
}

// default grid of admissible (d, a, c, b) points
inline std::vector<std::array<double, 4>> asympt_points(const ExperimentConfig& cfg) {
    std::vector<std::array<double, 4>> pts;
    if (cfg.grid.contains("points")) {
        for (const auto& p : cfg.grid["points"]) pts.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<double>(), p[3].get<double>()});
        return pts;
    }
    return {{1, 0.3, 0.7, 0.6}, {1, 0.5, 0.5, 0.5}, {1, 0.2, 0.8, 0.3}, {1, 0.4, 0.9, 0.4}, {1, 0.6, 0.6, 0.2},
            {1, 0.7, 0.8, 0.5}, {1, 0.5, 1.0, 0.3}, {1, 0.3, 0.5, 0.8}, {1, 0.9, 0.5, 0.1}, {1, 0.95, 0.9, 0.5}};
}

template <class... Args>
std::string label(const Args&... args) {
    std::ostringstream os;
    os.precision(6);
    (os << ... << args);
    return os.str();
}

inline void flat_to_nk(int i, int& n, int& k) {
    n = 1;
    while (n * (n + 1) / 2 <= i) ++n;
    k = i - n * (n - 1) / 2 + 1;
}

}  // namespace qw::detail

#endif
