#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "orderflow/error.hpp"
#include "orderflow/event_log.hpp"
#include "orderflow/parallel.hpp"

namespace orderflow {

// S(tau) is reported as undefined (NaN) when |C(tau)| falls below this
// floor; ratios of numbers this small are noise.
inline constexpr double kRatioFloor = 1e-6;

// Default cap on pairwise per-lag storage.
inline constexpr std::size_t kDefaultPairCapBytes = 512ull * 1024 * 1024;

inline double undefined_value() { return std::numeric_limits<double>::quiet_NaN(); }

namespace detail {

struct AgentMoments {
    std::vector<std::int64_t> counts;       // N_i
    std::vector<double> mu;                 // mean sign per agent (0 if absent)
    std::vector<double> freq;               // N_i / N
    double mean_sign = 0.0;                 // grand mean of signs over all N
    double freq_mu_sq = 0.0;                // sum_i (freq_i * mu_i)^2
};

inline AgentMoments agent_moments(const std::int8_t* signs, const std::int32_t* agents,
                                  std::size_t n, std::size_t m) {
    AgentMoments out;
    out.counts.assign(m, 0);
    std::vector<std::int64_t> sums(m, 0);
    std::int64_t total = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const auto a = static_cast<std::size_t>(agents[t]);
        ++out.counts[a];
        sums[a] += signs[t];
        total += signs[t];
    }
    out.mu.assign(m, 0.0);
    out.freq.assign(m, 0.0);
    const double nd = static_cast<double>(n);
    for (std::size_t i = 0; i < m; ++i) {
        if (out.counts[i] > 0)
            out.mu[i] = static_cast<double>(sums[i]) / static_cast<double>(out.counts[i]);
        out.freq[i] = static_cast<double>(out.counts[i]) / nd;
        const double fm = out.freq[i] * out.mu[i];
        out.freq_mu_sq += fm * fm;
    }
    out.mean_sign = static_cast<double>(total) / nd;
    return out;
}

// Per-lag pair tallies over t in [0, n-tau). Sign products are recovered
// from equality counts so the hot loop is integer-only.
struct LagCounts {
    std::int64_t pairs = 0;       // n - tau
    std::int64_t same_sign = 0;   // # pairs with equal signs
    std::int64_t same_agent = 0;  // # pairs from one agent
    std::int64_t same_both = 0;   // # same-agent pairs with equal signs

    std::int64_t prod_total() const { return 2 * same_sign - pairs; }
    std::int64_t prod_diag() const { return 2 * same_both - same_agent; }
};

inline LagCounts lag_counts(const std::int8_t* signs, const std::int32_t* agents,
                            std::size_t n, std::size_t tau) {
    LagCounts out;
    const std::size_t p = n - tau;
    out.pairs = static_cast<std::int64_t>(p);
    std::int64_t ss = 0, sa = 0, sb = 0;
    for (std::size_t t = 0; t < p; ++t) {
        const int es = signs[t] == signs[t + tau];
        const int ea = agents[t] == agents[t + tau];
        ss += es;
        sa += ea;
        sb += es & ea;
    }
    out.same_sign = ss;
    out.same_agent = sa;
    out.same_both = sb;
    return out;
}

// Adds the per-lag cross sums of agent mean signs:
//   mu_all  = sum_t mu[a(t)] * mu[a(t+tau)]
//   mu_diag = restriction to same-agent pairs
struct LagMuSums {
    double mu_all = 0.0;
    double mu_diag = 0.0;
};

inline LagMuSums lag_mu_sums(const std::int32_t* agents, const double* mu,
                             std::size_t n, std::size_t tau) {
    LagMuSums out;
    const std::size_t p = n - tau;
    double all = 0.0, diag = 0.0;
    for (std::size_t t = 0; t < p; ++t) {
        const double v = mu[agents[t]] * mu[agents[t + tau]];
        all += v;
        if (agents[t] == agents[t + tau]) diag += v;
    }
    out.mu_all = all;
    out.mu_diag = diag;
    return out;
}

// Herding component only, for permutation-test inner loops:
//   C_herd(tau) = offdiag_prod/N - mean^2 + sum_i (freq_i mu_i)^2.
// The activity-deviation cross terms cancel in the off-diagonal total,
// so no per-pair float accumulation is needed.
inline void herding_curve(const std::int8_t* signs, const std::int32_t* agents,
                          std::size_t n, std::size_t m, std::size_t tau_max,
                          double* out) {
    const AgentMoments mom = agent_moments(signs, agents, n, m);
    const double nd = static_cast<double>(n);
    const double base = mom.freq_mu_sq - mom.mean_sign * mom.mean_sign;
    for (std::size_t tau = 1; tau <= tau_max; ++tau) {
        const LagCounts c = lag_counts(signs, agents, n, tau);
        out[tau - 1] = static_cast<double>(c.prod_total() - c.prod_diag()) / nd + base;
    }
}

}  // namespace detail

// Per-lag results; index k holds lag tau = k+1. The headline curves obey
// C = C_split + C_herd and each component is the sum of its two terms:
// term1 weights sign correlations by pair activity, term2 weights
// activity deviations by mean signs.
struct DecompositionResult {
    std::size_t tau_max = 0;
    std::vector<double> C;
    std::vector<double> C_split;
    std::vector<double> C_herd;
    std::vector<double> S;  // C_split / C, NaN below the ratio floor
    std::vector<double> term1_split, term2_split;
    std::vector<double> term1_herd, term2_herd;
};

inline void validate_tau_max(std::size_t tau_max, std::size_t n) {
    if (tau_max < 1) throw RangeError("tau_max must be >= 1");
    if (tau_max >= n) throw RangeError("tau_max must be smaller than the event count");
}

// Sample autocorrelation of the sign series:
//   C(tau) = (1/N) sum_{t<N-tau} e_t e_{t+tau} - ((1/N) sum_t e_t)^2.
// The lagged sum keeps the 1/N normalization, so a constant-sign log
// shows the -tau/N finite-sample bias.
inline std::vector<double> autocorrelation(const EventLog& log, std::size_t tau_max) {
    const std::size_t n = log.size();
    validate_tau_max(tau_max, n);
    const std::int8_t* signs = log.signs().data();
    std::int64_t total = 0;
    for (std::size_t t = 0; t < n; ++t) total += signs[t];
    const double mean = static_cast<double>(total) / static_cast<double>(n);
    const double mean_sq = mean * mean;

    std::vector<double> out(tau_max, 0.0);
    parallel_for(1, tau_max + 1, [&](std::size_t tau) {
        const std::size_t p = n - tau;
        std::int64_t same = 0;
        for (std::size_t t = 0; t < p; ++t) same += signs[t] == signs[t + tau];
        const std::int64_t prod = 2 * same - static_cast<std::int64_t>(p);
        out[tau - 1] = static_cast<double>(prod) / static_cast<double>(n) - mean_sq;
    });
    return out;
}

inline DecompositionResult decompose(const EventLog& log, std::size_t tau_max) {
    const std::size_t n = log.size();
    validate_tau_max(tau_max, n);
    const std::int8_t* signs = log.signs().data();
    const std::int32_t* agents = log.agents().data();
    const detail::AgentMoments mom =
        detail::agent_moments(signs, agents, n, log.agent_count());
    const double nd = static_cast<double>(n);
    const double mean_sq = mom.mean_sign * mom.mean_sign;

    DecompositionResult r;
    r.tau_max = tau_max;
    r.C.assign(tau_max, 0.0);
    r.C_split.assign(tau_max, 0.0);
    r.C_herd.assign(tau_max, 0.0);
    r.S.assign(tau_max, 0.0);
    r.term1_split.assign(tau_max, 0.0);
    r.term2_split.assign(tau_max, 0.0);
    r.term1_herd.assign(tau_max, 0.0);
    r.term2_herd.assign(tau_max, 0.0);

    parallel_for(1, tau_max + 1, [&](std::size_t tau) {
        const detail::LagCounts c = detail::lag_counts(signs, agents, n, tau);
        const detail::LagMuSums mu = detail::lag_mu_sums(agents, mom.mu.data(), n, tau);
        const std::size_t k = tau - 1;

        const double diag = static_cast<double>(c.prod_diag());
        const double off = static_cast<double>(c.prod_total() - c.prod_diag());

        r.term1_split[k] = (diag - mu.mu_diag) / nd;
        r.term2_split[k] = mu.mu_diag / nd - mom.freq_mu_sq;
        r.term1_herd[k] = (off - (mu.mu_all - mu.mu_diag)) / nd;
        r.term2_herd[k] = (mu.mu_all - mu.mu_diag) / nd - (mean_sq - mom.freq_mu_sq);

        r.C[k] = static_cast<double>(c.prod_total()) / nd - mean_sq;
        r.C_split[k] = r.term1_split[k] + r.term2_split[k];
        r.C_herd[k] = r.term1_herd[k] + r.term2_herd[k];
        r.S[k] = std::abs(r.C[k]) < kRatioFloor ? undefined_value() : r.C_split[k] / r.C[k];
    });
    return r;
}

// |C - sum_ij P_ij C_ij| per lag: the size of the activity-deviation
// correction dropped by the product approximation.
inline std::vector<double> approximation_error(const DecompositionResult& r) {
    std::vector<double> out(r.tau_max, 0.0);
    for (std::size_t k = 0; k < r.tau_max; ++k)
        out[k] = std::abs(r.term2_split[k] + r.term2_herd[k]);
    return out;
}

// Mean splitting ratio over defined lags in [tau_lo, tau_hi]; NaN when no
// lag in the window is defined.
inline double mean_splitting_ratio(const DecompositionResult& r,
                                   std::size_t tau_lo, std::size_t tau_hi) {
    if (tau_lo < 1 || tau_hi > r.tau_max || tau_lo > tau_hi)
        throw RangeError("mean_splitting_ratio: bad lag window");
    double sum = 0.0;
    std::size_t defined = 0;
    for (std::size_t tau = tau_lo; tau <= tau_hi; ++tau) {
        if (std::isnan(r.S[tau - 1])) continue;
        sum += r.S[tau - 1];
        ++defined;
    }
    return defined == 0 ? undefined_value() : sum / static_cast<double>(defined);
}

// Full per-pair lagged statistics. Storage is M^2 per lag and guarded by
// a byte cap; the headline decomposition never needs this, so oversized
// registries should be filtered or analyzed via decompose().
struct PairStatistics {
    std::size_t tau_max = 0;
    std::size_t agents = 0;
    std::vector<double> P_i;   // trading frequencies
    std::vector<double> mu_i;  // per-agent mean signs
    std::vector<std::int64_t> n_ij;     // [tau-1][i][j] pair counts
    std::vector<double> p_ij;           // n_ij / N
    std::vector<double> c_ij;           // sign correlation, NaN where n_ij = 0
    std::vector<double> p_tilde_ij;     // p_ij - P_i P_j

    std::size_t index(std::size_t tau, std::size_t i, std::size_t j) const {
        return ((tau - 1) * agents + i) * agents + j;
    }
    std::int64_t n(std::size_t tau, std::size_t i, std::size_t j) const {
        return n_ij[index(tau, i, j)];
    }
    double p(std::size_t tau, std::size_t i, std::size_t j) const {
        return p_ij[index(tau, i, j)];
    }
    double c(std::size_t tau, std::size_t i, std::size_t j) const {
        return c_ij[index(tau, i, j)];
    }
    double p_tilde(std::size_t tau, std::size_t i, std::size_t j) const {
        return p_tilde_ij[index(tau, i, j)];
    }
};

inline PairStatistics pair_statistics(const EventLog& log, std::size_t tau_max,
                                      std::size_t memory_cap_bytes = kDefaultPairCapBytes) {
    const std::size_t n = log.size();
    validate_tau_max(tau_max, n);
    const std::size_t m = log.agent_count();
    const std::size_t cells = m * m * tau_max;
    // n_ij + raw product scratch + three double matrices
    const std::size_t bytes = cells * (2 * sizeof(std::int64_t) + 3 * sizeof(double));
    if (bytes > memory_cap_bytes)
        throw CapacityError("pair_statistics: " + std::to_string(bytes) +
                            " bytes exceed the cap; filter inactive agents or lower tau_max");

    const std::int8_t* signs = log.signs().data();
    const std::int32_t* agents = log.agents().data();
    const detail::AgentMoments mom = detail::agent_moments(signs, agents, n, m);

    PairStatistics ps;
    ps.tau_max = tau_max;
    ps.agents = m;
    ps.P_i = mom.freq;
    ps.mu_i = mom.mu;
    ps.n_ij.assign(cells, 0);
    ps.p_ij.assign(cells, 0.0);
    ps.c_ij.assign(cells, 0.0);
    ps.p_tilde_ij.assign(cells, 0.0);

    const double nd = static_cast<double>(n);
    parallel_for(1, tau_max + 1, [&](std::size_t tau) {
        std::vector<std::int64_t> prod(m * m, 0);
        const std::size_t base = (tau - 1) * m * m;
        const std::size_t p = n - tau;
        for (std::size_t t = 0; t < p; ++t) {
            const std::size_t cell =
                static_cast<std::size_t>(agents[t]) * m + static_cast<std::size_t>(agents[t + tau]);
            ++ps.n_ij[base + cell];
            prod[cell] += signs[t] * signs[t + tau];
        }
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                const std::size_t cell = base + i * m + j;
                const std::int64_t cnt = ps.n_ij[cell];
                ps.p_ij[cell] = static_cast<double>(cnt) / nd;
                ps.p_tilde_ij[cell] = ps.p_ij[cell] - mom.freq[i] * mom.freq[j];
                ps.c_ij[cell] = cnt == 0
                    ? undefined_value()
                    : static_cast<double>(prod[i * m + j]) / static_cast<double>(cnt) -
                          mom.mu[i] * mom.mu[j];
            }
        }
    });
    return ps;
}

// Diagonal-only per-agent curves C_ii(tau) and P~_ii(tau); O(M * tau_max)
// storage, usable where the full pair matrix would trip the cap.
struct DiagonalStatistics {
    std::size_t tau_max = 0;
    std::size_t agents = 0;
    std::vector<double> P_i;
    std::vector<double> mu_i;
    std::vector<std::int64_t> n_ii;   // [tau-1][i]
    std::vector<double> c_ii;         // NaN where n_ii = 0
    std::vector<double> p_tilde_ii;

    std::size_t index(std::size_t tau, std::size_t i) const { return (tau - 1) * agents + i; }
};

inline DiagonalStatistics diagonal_statistics(const EventLog& log, std::size_t tau_max) {
    const std::size_t n = log.size();
    validate_tau_max(tau_max, n);
    const std::size_t m = log.agent_count();
    const std::int8_t* signs = log.signs().data();
    const std::int32_t* agents = log.agents().data();
    const detail::AgentMoments mom = detail::agent_moments(signs, agents, n, m);

    DiagonalStatistics ds;
    ds.tau_max = tau_max;
    ds.agents = m;
    ds.P_i = mom.freq;
    ds.mu_i = mom.mu;
    ds.n_ii.assign(tau_max * m, 0);
    ds.c_ii.assign(tau_max * m, 0.0);
    ds.p_tilde_ii.assign(tau_max * m, 0.0);

    const double nd = static_cast<double>(n);
    parallel_for(1, tau_max + 1, [&](std::size_t tau) {
        std::vector<std::int64_t> cnt(m, 0), prod(m, 0);
        const std::size_t p = n - tau;
        for (std::size_t t = 0; t < p; ++t) {
            if (agents[t] != agents[t + tau]) continue;
            const auto i = static_cast<std::size_t>(agents[t]);
            ++cnt[i];
            prod[i] += signs[t] * signs[t + tau];
        }
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t cell = ds.index(tau, i);
            ds.n_ii[cell] = cnt[i];
            ds.p_tilde_ii[cell] =
                static_cast<double>(cnt[i]) / nd - mom.freq[i] * mom.freq[i];
            ds.c_ii[cell] = cnt[i] == 0
                ? undefined_value()
                : static_cast<double>(prod[i]) / static_cast<double>(cnt[i]) -
                      mom.mu[i] * mom.mu[i];
        }
    });
    return ds;
}

enum class PriceCondition { price_change, no_price_change };

inline const char* to_string(PriceCondition c) {
    return c == PriceCondition::price_change ? "price_change" : "no_price_change";
}

// Decomposition of E[(e_t - mu)(e_{t+tau} - mu) | condition at t], where
// mu is the global mean sign and the normalization is the per-lag count
// of conditioning events. The split/herd components restrict the sum to
// same/different-agent pairs; term1 holds the raw sign products and
// term2 the centering remainder, so each component is term1 + term2.
// Lags with no conditioning event are NaN.
inline DecompositionResult conditional_decompose(const EventLog& log, std::size_t tau_max,
                                                 PriceCondition condition) {
    if (!log.has_price_flags())
        throw MissingDataError("conditional_decompose: log carries no price-change flags");
    const std::size_t n = log.size();
    validate_tau_max(tau_max, n);
    const std::int8_t* signs = log.signs().data();
    const std::int32_t* agents = log.agents().data();
    const std::uint8_t* flags = log.flags().data();
    const std::uint8_t want = condition == PriceCondition::price_change ? 1 : 0;

    std::int64_t total = 0;
    for (std::size_t t = 0; t < n; ++t) total += signs[t];
    const double mean = static_cast<double>(total) / static_cast<double>(n);

    DecompositionResult r;
    r.tau_max = tau_max;
    r.C.assign(tau_max, 0.0);
    r.C_split.assign(tau_max, 0.0);
    r.C_herd.assign(tau_max, 0.0);
    r.S.assign(tau_max, 0.0);
    r.term1_split.assign(tau_max, 0.0);
    r.term2_split.assign(tau_max, 0.0);
    r.term1_herd.assign(tau_max, 0.0);
    r.term2_herd.assign(tau_max, 0.0);

    parallel_for(1, tau_max + 1, [&](std::size_t tau) {
        const std::size_t p = n - tau;
        std::int64_t cnt = 0, prod_all = 0, lead_all = 0, lag_all = 0;
        std::int64_t cnt_d = 0, prod_d = 0, lead_d = 0, lag_d = 0;
        for (std::size_t t = 0; t < p; ++t) {
            if (flags[t] != want) continue;
            const int st = signs[t], sq = signs[t + tau];
            ++cnt;
            prod_all += st * sq;
            lead_all += st;
            lag_all += sq;
            if (agents[t] == agents[t + tau]) {
                ++cnt_d;
                prod_d += st * sq;
                lead_d += st;
                lag_d += sq;
            }
        }
        const std::size_t k = tau - 1;
        if (cnt == 0) {
            r.C[k] = r.C_split[k] = r.C_herd[k] = r.S[k] = undefined_value();
            r.term1_split[k] = r.term2_split[k] = undefined_value();
            r.term1_herd[k] = r.term2_herd[k] = undefined_value();
            return;
        }
        const double cd = static_cast<double>(cnt);
        const auto center = [&](std::int64_t lead, std::int64_t lag, std::int64_t pairs) {
            return (-mean * static_cast<double>(lead + lag) +
                    mean * mean * static_cast<double>(pairs)) / cd;
        };
        r.term1_split[k] = static_cast<double>(prod_d) / cd;
        r.term2_split[k] = center(lead_d, lag_d, cnt_d);
        r.term1_herd[k] = static_cast<double>(prod_all - prod_d) / cd;
        r.term2_herd[k] = center(lead_all - lead_d, lag_all - lag_d, cnt - cnt_d);
        r.C_split[k] = r.term1_split[k] + r.term2_split[k];
        r.C_herd[k] = r.term1_herd[k] + r.term2_herd[k];
        r.C[k] = static_cast<double>(prod_all) / cd + center(lead_all, lag_all, cnt);
        r.S[k] = std::abs(r.C[k]) < kRatioFloor ? undefined_value() : r.C_split[k] / r.C[k];
    });
    return r;
}

}  // namespace orderflow
