#include "qw/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace qw {

namespace {

// 1 - q^d for an integer gap d >= 0, with q^{+inf} = 0.
inline double one_minus_q(double logq, std::int64_t d) {
    if (d >= kPlusInf / 2) return 1.0;
    return -std::expm1(static_cast<double>(d) * logq);
}

class LogQFactorial {
public:
    explicit LogQFactorial(double q) : q_(q), table_{0.0} {}
    // ln (q;q)_m
    double operator()(std::int64_t m) {
        if (m < 0) throw std::logic_error("LogQFactorial: negative index");
        while (static_cast<std::int64_t>(table_.size()) <= m) {
            std::size_t i = table_.size();
            table_.push_back(table_.back() + std::log1p(-std::pow(q_, static_cast<double>(i))));
        }
        return table_[m];
    }

private:
    double q_;
    std::vector<double> table_;
};

double log_sum_exp(const std::vector<double>& v) {
    double m = -INFINITY;
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

std::int64_t sample_log_weights(const std::vector<double>& logw, std::int64_t offset, Rng& rng) {
    double m = -INFINITY;
    for (double x : logw) m = std::max(m, x);
    double tot = 0.0;
    for (double x : logw) tot += std::exp(x - m);
    double u = uniform01(rng) * tot;
    double cum = 0.0;
    for (std::size_t i = 0; i < logw.size(); ++i) {
        cum += std::exp(logw[i] - m);
        if (u < cum) return offset + static_cast<std::int64_t>(i);
    }
    for (std::size_t i = logw.size(); i-- > 0;)
        if (std::isfinite(logw[i])) return offset + static_cast<std::int64_t>(i);
    throw std::runtime_error("sample_log_weights: no admissible value");
}

void record_until(Trajectory& tr, const InterlacingArray& s, const std::vector<double>& sample_times,
                  std::size_t& next, double t) {
    while (next < sample_times.size() && sample_times[next] <= t) {
        tr.times.push_back(sample_times[next]);
        tr.states.push_back(s);
        ++next;
    }
}

}  // namespace

double rate_pushblock(const InterlacingArray& s, int n, int k, double q, double a_n) {
    if (k < 1 || k > n) return 0.0;
    const double lq = std::log(q);
    std::int64_t up_left = s.get(n - 1, k - 1);
    std::int64_t self = s.get(n, k);
    std::int64_t right = s.get(n, k + 1);
    std::int64_t below = s.get(n - 1, k);
    double blocking = (up_left >= kPlusInf / 2) ? 1.0 : one_minus_q(lq, up_left - self);
    if (blocking == 0.0) return 0.0;
    return a_n * blocking * one_minus_q(lq, self - right + 1) / one_minus_q(lq, self - below + 1);
}

RateTable rates_pushblock(const InterlacingArray& state, const ModelParams& params) {
    const int N = state.levels();
    if (params.N() < N) throw std::invalid_argument("rates_pushblock: too few speeds");
    RateTable r(state.size(), 0.0);
    for (int n = 1; n <= N; ++n)
        for (int k = 1; k <= n; ++k)
            r[InterlacingArray::flat_index(n, k)] = rate_pushblock(state, n, k, params.q(), params.a()[n - 1]);
    return r;
}

void push_string(InterlacingArray& s, int n, int k) {
    std::int64_t v = s.at(n, k);
    s.at(n, k) = v + 1;
    for (int m = n + 1; m <= s.levels() && s.at(m, k) == v; ++m) s.at(m, k) = v + 1;
}

namespace {

int pick_index(const RateTable& r, double total, Rng& rng) {
    double u = uniform01(rng) * total;
    double cum = 0.0;
    int last = -1;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (r[i] <= 0) continue;
        cum += r[i];
        last = static_cast<int>(i);
        if (u < cum) return last;
    }
    return last;
}

void level_and_index(std::size_t flat, int& n, int& k) {
    n = 1;
    while (InterlacingArray::flat_index(n + 1, 1) <= flat) ++n;
    k = static_cast<int>(flat - InterlacingArray::flat_index(n, 1)) + 1;
}

double rightpush_rate(const InterlacingArray& s, int n, int k, double q, double a_n) {
    if (k >= 2) return rate_pushblock(s, n, k, q, a_n);
    return a_n * std::pow(q, static_cast<double>(s.get(n - 1, 1) - s.get(n, 2)));
}

// Triggered cascade of the RSK dynamics after lambda^{(n)}_k jumped from
// value `before` (the other entries of level n are unchanged).  The
// transfer probability uses the pre-jump value of the triggering particle.
void rsk_cascade(InterlacingArray& s, int n, int k, std::int64_t before, double q, Rng& rng) {
    const int N = s.levels();
    const double lq = std::log(q);
    while (n < N) {
        const int m = n + 1;
        std::int64_t upper = s.get(n, k - 1);
        std::int64_t self = s.get(m, k);
        double den = one_minus_q(lq, upper - before);
        if (!(den > 0.0)) throw std::logic_error("rsk: degenerate transfer probability (0/0)");
        double p = std::exp(static_cast<double>(self - before) * lq) * one_minus_q(lq, upper - self) / den;
        int target;
        if (uniform01(rng) < p) {
            // lambda^{(m)}_k must be free to move; otherwise the rule is undefined
            if (upper < kPlusInf / 2 && self + 1 > upper)
                throw std::logic_error("rsk: selected coordinate cannot move");
            target = k;
        } else {
            target = k + 1;
            if (target > m) throw std::logic_error("rsk: complementary jump outside the level");
        }
        before = s.at(m, target);
        s.at(m, target) = before + 1;
        n = m;
        k = target;
    }
}

}  // namespace

Trajectory simulate_continuous(ContinuousDynamics kind, const InterlacingArray& init, const ModelParams& params,
                               double horizon, const std::vector<double>& sample_times, Rng& rng) {
    if (!(horizon > 0)) throw std::invalid_argument("simulate: horizon must be positive");
    if (!params.is_plancherel()) throw std::invalid_argument("simulate: continuous dynamics need a Plancherel specialization");
    if (!validate_interlacing(init)) throw std::invalid_argument("simulate: initial state does not interlace");
    for (std::size_t i = 1; i < sample_times.size(); ++i)
        if (sample_times[i] < sample_times[i - 1]) throw std::invalid_argument("simulate: sample times must increase");
    const int N = init.levels();
    if (params.N() < N) throw std::invalid_argument("simulate: too few speeds");
    const double q = params.q();
    const auto& a = params.a();

    Trajectory tr;
    InterlacingArray s = init;
    RateTable r(s.size(), 0.0);

    auto full_rates = [&]() {
        for (int n = 1; n <= N; ++n)
            for (int k = 1; k <= n; ++k) {
                double v = 0.0;
                switch (kind) {
                    case ContinuousDynamics::pushblock: v = rate_pushblock(s, n, k, q, a[n - 1]); break;
                    case ContinuousDynamics::rightpush: v = rightpush_rate(s, n, k, q, a[n - 1]); break;
                    case ContinuousDynamics::rsk: v = (k == 1) ? a[n - 1] : 0.0; break;
                }
                r[InterlacingArray::flat_index(n, k)] = v;
            }
    };
    auto refresh = [&](int n, int k) {
        if (n < 1 || n > N || k < 1 || k > n) return;
        r[InterlacingArray::flat_index(n, k)] = rate_pushblock(s, n, k, q, a[n - 1]);
    };
    full_rates();

    std::size_t next = 0;
    double t = 0.0;
    record_until(tr, s, sample_times, next, t);
    while (true) {
        double total = 0.0;
        for (double x : r) total += x;
        if (!(total > 0)) break;
        double t_new = t + exponential(rng, total);
        record_until(tr, s, sample_times, next, std::min(t_new, horizon));
        if (t_new > horizon) break;
        t = t_new;
        int idx = pick_index(r, total, rng);
        int n, k;
        level_and_index(static_cast<std::size_t>(idx), n, k);
        ++tr.events;
        switch (kind) {
            case ContinuousDynamics::pushblock: {
                int top = n;
                std::int64_t v = s.at(n, k);
                while (top + 1 <= N && s.at(top + 1, k) == v) ++top;
                push_string(s, n, k);
                for (int j = n; j <= top; ++j) {
                    refresh(j, k);
                    refresh(j, k - 1);
                    refresh(j + 1, k);
                    refresh(j + 1, k + 1);
                }
                break;
            }
            case ContinuousDynamics::rightpush:
                if (k == 1) {
                    for (int m = n; m <= N; ++m) s.at(m, 1) += 1;
                } else {
                    push_string(s, n, k);
                }
                full_rates();
                break;
            case ContinuousDynamics::rsk: {
                std::int64_t before = s.at(n, 1);
                s.at(n, 1) = before + 1;
                rsk_cascade(s, n, 1, before, q, rng);
                break;
            }
        }
    }
    record_until(tr, s, sample_times, next, horizon);
    return tr;
}

Trajectory simulate_pushblock_continuous(const InterlacingArray& init, const ModelParams& params, double horizon,
                                         const std::vector<double>& sample_times, Rng& rng) {
    return simulate_continuous(ContinuousDynamics::pushblock, init, params, horizon, sample_times, rng);
}

Trajectory simulate_rightpush_continuous(const InterlacingArray& init, const ModelParams& params, double horizon,
                                         const std::vector<double>& sample_times, Rng& rng) {
    return simulate_continuous(ContinuousDynamics::rightpush, init, params, horizon, sample_times, rng);
}

Trajectory simulate_rsk_continuous(const InterlacingArray& init, const ModelParams& params, double horizon,
                                   const std::vector<double>& sample_times, Rng& rng) {
    return simulate_continuous(ContinuousDynamics::rsk, init, params, horizon, sample_times, rng);
}

double pushblock_alpha_level_weight(const Partition& nu, const Partition& lam, const Partition& mu, double q,
                                    double a_alpha) {
    if (!interlaces(nu, lam) || !interlaces(nu, mu) || nu.length() != mu.length())
        return 0.0;
    // nu/mu must be a horizontal strip: mu_i <= nu_i <= mu_{i-1}
    for (int i = 2; i <= nu.length(); ++i)
        if (nu[i] > mu[i - 1]) return 0.0;
    double phi = 1.0;
    for (int i = 1; i <= nu.length(); ++i)
        phi *= q_pochhammer(q, q, mu[i] - mu[i + 1]) /
               (q_pochhammer(q, q, nu[i] - mu[i]) * q_pochhammer(q, q, mu[i] - nu[i + 1]));
    double psi = phi_psi_weights(nu, lam, q).psi;
    return std::pow(a_alpha, static_cast<double>(nu.weight())) * phi * psi;
}

InterlacingArray step_pushblock_alpha(const InterlacingArray& state, const ModelParams& params, double alpha_t,
                                      Rng& rng, double* residual) {
    const int N = state.levels();
    const double q = params.q();
    const double lq = std::log(q);
    LogQFactorial lqf(q);
    InterlacingArray out(N);
    for (int n = 1; n <= N; ++n) {
        const double aa = params.a()[n - 1] * alpha_t;
        if (!(aa > 0 && aa < 1)) throw std::domain_error("step_pushblock_alpha: inadmissible alpha");
        const double laa = std::log(aa);
        // mu = old level n, lam = new level n-1; both with the array conventions
        auto mu = [&](int i) { return state.get(n, i); };
        auto lam = [&](int i) { return out.get(n - 1, i); };
        std::vector<std::int64_t> lo(n + 1), hi(n + 1);
        for (int i = 1; i <= n; ++i) {
            lo[i] = std::max(lam(i), mu(i));
            hi[i] = std::min(lam(i - 1), mu(i - 1));
        }
        // single-site log weight; the (q)_inf factors of the i = 1 upper
        // bounds are constant and dropped
        auto site = [&](int i, std::int64_t v) {
            double w = static_cast<double>(v) * laa - lqf(v - mu(i)) - lqf(v - lam(i));
            if (i >= 2) w -= lqf(mu(i - 1) - v) + lqf(lam(i - 1) - v);
            if (i == n) w += lqf(v);  // (q)_{nu_n - nu_{n+1}} with nu_{n+1} = 0
            return w;
        };
        // backward messages B_i(v) for v in [lo_i, hi_i], i = n .. 2
        std::vector<std::vector<double>> B(n + 1);
        std::vector<std::vector<double>> S(n + 1);
        for (int i = n; i >= 2; --i) {
            std::int64_t len = hi[i] - lo[i] + 1;
            if (len <= 0) throw std::logic_error("step_pushblock_alpha: empty support");
            S[i].resize(len);
            for (std::int64_t v = 0; v < len; ++v) {
                S[i][v] = site(i, lo[i] + v) + (i < n ? B[i][v] : 0.0);
            }
            // message to i-1 over its finite range (i-1 >= 2) or computed lazily for i-1 = 1
            if (i - 1 >= 2) {
                std::int64_t len_prev = hi[i - 1] - lo[i - 1] + 1;
                B[i - 1].resize(len_prev);
                std::vector<double> terms(len);
                for (std::int64_t u = 0; u < len_prev; ++u) {
                    std::int64_t vu = lo[i - 1] + u;
                    for (std::int64_t v = 0; v < len; ++v) {
                        std::int64_t d = vu - (lo[i] + v);
                        terms[v] = lqf(d) + S[i][v];
                    }
                    B[i - 1][u] = log_sum_exp(terms);
                }
            }
        }
        auto message_to_first = [&](std::int64_t v1) {
            if (n == 1) return 0.0;
            std::int64_t len = hi[2] - lo[2] + 1;
            std::vector<double> terms(len);
            for (std::int64_t v = 0; v < len; ++v) terms[v] = lqf(v1 - (lo[2] + v)) + S[2][v];
            return log_sum_exp(terms);
        };
        // nu_1 over [lo_1, inf) with geometric tail truncation
        std::vector<double> w1;
        double total = 0.0, ref = 0.0, tail = 0.0;
        for (std::int64_t v = lo[1];; ++v) {
            double lw = site(1, v) + message_to_first(v);
            if (w1.empty()) ref = lw;
            w1.push_back(lw);
            double term = std::exp(lw - ref);
            total += term;
            // ratio of successive terms is bounded by aa / (1 - q^{v+1-lo_1})^2
            double g = one_minus_q(lq, v + 1 - lo[1]);
            double rb = aa / (g * g);
            if (rb < 1.0) {
                tail = term * rb / (1.0 - rb);
                if (tail < 1e-12 * total) break;
            }
            if (v - lo[1] > 1000000) throw std::runtime_error("step_pushblock_alpha: tail truncation failed");
        }
        if (residual) *residual = std::max(*residual, tail / total);
        std::int64_t v1 = sample_log_weights(w1, lo[1], rng);
        out.at(n, 1) = v1;
        std::int64_t prev = v1;
        for (int i = 2; i <= n; ++i) {
            std::int64_t len = hi[i] - lo[i] + 1;
            std::vector<double> cond(len);
            for (std::int64_t v = 0; v < len; ++v) {
                std::int64_t d = prev - (lo[i] + v);
                cond[v] = (d < 0) ? -INFINITY : lqf(d) + S[i][v];
            }
            prev = sample_log_weights(cond, lo[i], rng);
            out.at(n, i) = prev;
        }
    }
    return out;
}

InterlacingArray step_rsk_alpha(const InterlacingArray& state, const ModelParams& params, double alpha_t, Rng& rng) {
    const int N = state.levels();
    const double q = params.q();
    InterlacingArray out(N);
    std::vector<long> v(N + 1);
    for (int k = 1; k <= N; ++k) {
        double aa = params.a()[k - 1] * alpha_t;
        if (!(aa > 0 && aa < 1)) throw std::domain_error("step_rsk_alpha: inadmissible alpha");
        v[k] = sample_q_geometric(q, aa, rng);
    }
    for (int n = 1; n <= N; ++n) {
        std::vector<long> w(n + 1, 0), c(n + 1, 0);
        for (int k = 1; k <= n - 1; ++k) {
            c[k] = static_cast<long>(out.at(n - 1, k) - state.at(n - 1, k));
            long A = static_cast<long>(state.at(n, k) - state.at(n - 1, k));
            long B = (k == 1) ? kInfinite : static_cast<long>(state.at(n - 1, k - 1) - state.at(n - 1, k));
            w[k] = sample_q_hahn_inverse(q, A, B, c[k], rng);
        }
        out.at(n, 1) = state.at(n, 1) + w[1] + v[n];
        for (int k = 2; k <= n; ++k) out.at(n, k) = state.at(n, k) + w[k] + c[k - 1] - w[k - 1];
    }
    return out;
}

Trajectory simulate_alpha(AlphaDynamics kind, const InterlacingArray& init, const ModelParams& params, Rng& rng) {
    if (params.is_plancherel()) throw std::invalid_argument("simulate_alpha: needs an alpha specialization");
    Trajectory tr;
    InterlacingArray s = init;
    tr.times.push_back(0);
    tr.states.push_back(s);
    int t = 0;
    for (double al : params.alpha()) {
        s = (kind == AlphaDynamics::pushblock) ? step_pushblock_alpha(s, params, al, rng, &tr.truncation_residual)
                                               : step_rsk_alpha(s, params, al, rng);
        tr.times.push_back(++t);
        tr.states.push_back(s);
        ++tr.events;
    }
    return tr;
}

void write_trajectory_csv(const Trajectory& tr, std::ostream& os) {
    os << "time,n,k,value\n";
    os.precision(17);
    for (std::size_t i = 0; i < tr.states.size(); ++i) {
        const auto& s = tr.states[i];
        for (int n = 1; n <= s.levels(); ++n)
            for (int k = 1; k <= n; ++k) os << tr.times[i] << ',' << n << ',' << k << ',' << s.at(n, k) << '\n';
    }
}

namespace {
template <class T>
void put_le(std::ostream& os, T v) {
    unsigned char b[sizeof(T)];
    std::uint64_t u = 0;
    std::memcpy(&u, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), sizeof(T));
}
template <class T>
T get_le(std::istream& is) {
    unsigned char b[sizeof(T)];
    is.read(reinterpret_cast<char*>(b), sizeof(T));
    if (!is) throw std::runtime_error("trajectory: truncated binary input");
    std::uint64_t u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    T v;
    std::memcpy(&v, &u, sizeof(T));
    return v;
}
const char kMagic[8] = {'Q', 'W', 'T', 'R', 'A', 'J', 0, 0};
}  // namespace

void write_trajectory_binary(const Trajectory& tr, std::ostream& os) {
    os.write(kMagic, 8);
    put_le<std::uint32_t>(os, 1);
    put_le<std::uint32_t>(os, tr.states.empty() ? 0u : static_cast<std::uint32_t>(tr.states[0].levels()));
    put_le<std::uint64_t>(os, tr.states.size());
    for (std::size_t i = 0; i < tr.states.size(); ++i) {
        put_le<double>(os, tr.times[i]);
        for (auto x : tr.states[i].data()) put_le<std::int64_t>(os, x);
    }
}

Trajectory read_trajectory_binary(std::istream& is) {
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0) throw std::runtime_error("trajectory: bad magic");
    if (get_le<std::uint32_t>(is) != 1) throw std::runtime_error("trajectory: unsupported version");
    int N = static_cast<int>(get_le<std::uint32_t>(is));
    std::uint64_t count = get_le<std::uint64_t>(is);
    Trajectory tr;
    for (std::uint64_t i = 0; i < count; ++i) {
        tr.times.push_back(get_le<double>(is));
        InterlacingArray s(N);
        for (int n = 1; n <= N; ++n)
            for (int k = 1; k <= n; ++k) s.at(n, k) = get_le<std::int64_t>(is);
        tr.states.push_back(s);
    }
    return tr;
}

}  // namespace qw
