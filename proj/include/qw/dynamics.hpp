#ifndef QW_DYNAMICS_HPP
#define QW_DYNAMICS_HPP

#include "qw/qcore.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace qw {

struct Trajectory {
    std::vector<double> times;
    std::vector<InterlacingArray> states;
    std::uint64_t seed = 0;
    std::uint64_t events = 0;
    // Largest tail mass discarded by a truncated support enumeration.
    double truncation_residual = 0.0;
};

using RateTable = std::vector<double>;

RateTable rates_pushblock(const InterlacingArray& state, const ModelParams& params);

// The push-block rate of a single coordinate; 0 outside 1 <= k <= n.
double rate_pushblock(const InterlacingArray& s, int n, int k, double q, double a_n);

// Increase lambda^{(n)}_k and every lambda^{(m)}_k, m > n, equal to it.
void push_string(InterlacingArray& s, int n, int k);

enum class ContinuousDynamics { pushblock, rightpush, rsk };

Trajectory simulate_continuous(ContinuousDynamics kind, const InterlacingArray& init, const ModelParams& params,
                               double horizon, const std::vector<double>& sample_times, Rng& rng);

Trajectory simulate_pushblock_continuous(const InterlacingArray& init, const ModelParams& params, double horizon,
                                         const std::vector<double>& sample_times, Rng& rng);
Trajectory simulate_rightpush_continuous(const InterlacingArray& init, const ModelParams& params, double horizon,
                                         const std::vector<double>& sample_times, Rng& rng);
Trajectory simulate_rsk_continuous(const InterlacingArray& init, const ModelParams& params, double horizon,
                                   const std::vector<double>& sample_times, Rng& rng);

// One discrete step with parameter alpha_t.  `residual`, when given, is raised
// to the largest discarded tail mass of the nu_1 enumeration.
InterlacingArray step_pushblock_alpha(const InterlacingArray& state, const ModelParams& params, double alpha_t,
                                      Rng& rng, double* residual = nullptr);
InterlacingArray step_rsk_alpha(const InterlacingArray& state, const ModelParams& params, double alpha_t, Rng& rng);

enum class AlphaDynamics { pushblock, rsk };

// Runs the discrete dynamics with the alpha sequence of params (one step per
// alpha_t), recording the state after every step (times 0, 1, ..., t).
Trajectory simulate_alpha(AlphaDynamics kind, const InterlacingArray& init, const ModelParams& params, Rng& rng);

// Unnormalised weight (a alpha)^{|nu|} phi_{nu/mu} psi_{nu/lam} of a candidate
// new level nu given the old level mu and the already updated level below.
double pushblock_alpha_level_weight(const Partition& nu, const Partition& lam_new_prev, const Partition& mu_old,
                                    double q, double a_alpha);

void write_trajectory_csv(const Trajectory& tr, std::ostream& os);
// Layout: "QWTRAJ\0\0" magic, uint32 version (1), uint32 N, uint64 snapshot
// count, then per snapshot a float64 time followed by N(N+1)/2 int64 entries
// in flat index order.  Everything little-endian.
void write_trajectory_binary(const Trajectory& tr, std::ostream& os);
Trajectory read_trajectory_binary(std::istream& is);

}  // namespace qw

#endif
