#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "orderflow/decomposition.hpp"
#include "orderflow/error.hpp"
#include "orderflow/event_log.hpp"
#include "orderflow/frequencies.hpp"
#include "orderflow/parallel.hpp"
#include "orderflow/rng.hpp"
#include "orderflow/simulators.hpp"

namespace orderflow {

// ---------------------------------------------------------------------------
// Permutation test for the herding component
// ---------------------------------------------------------------------------

struct ShuffleTestOptions {
    std::size_t tau_max = 50;
    std::size_t replicates = 1000;  // null realizations R
    double alpha = 0.05;            // one-sided significance level
    std::uint64_t seed = 0;
    // Default null permutes signs and agents independently, breaking both
    // the sign autocorrelation and the sign-agent pairing. The joint
    // variant permutes (sign, agent) pairs together instead.
    bool joint_permutation = false;
};

struct ShuffleTestResult {
    ShuffleTestOptions options;
    std::vector<double> observed_herding;  // C_herd(tau) of the input log
    std::vector<double> p_values;          // (1 + #{null <= observed}) / (R + 1)
    std::vector<bool> reject;              // p < alpha (anti-herding direction)
    std::vector<double> null_mean;
    std::vector<double> null_sd;
    double rejection_fraction = 0.0;
};

inline ShuffleTestResult shuffle_test(const EventLog& log, const ShuffleTestOptions& opt) {
    const std::size_t n = log.size();
    validate_tau_max(opt.tau_max, n);
    if (opt.replicates < 100)
        throw std::invalid_argument("shuffle_test: need at least 100 replicates");
    if (!(opt.alpha > 0.0 && opt.alpha < 1.0))
        throw std::invalid_argument("shuffle_test: alpha outside (0,1)");
    if (opt.alpha < 1.0 / static_cast<double>(opt.replicates + 1))
        throw ResolutionError("shuffle_test: alpha below 1/(R+1); raise the replicate count");

    const std::size_t m = log.agent_count();
    ShuffleTestResult res;
    res.options = opt;
    res.observed_herding.assign(opt.tau_max, 0.0);
    detail::herding_curve(log.signs().data(), log.agents().data(), n, m, opt.tau_max,
                          res.observed_herding.data());

    // Row r holds the null C_herd curve of replicate r; replicate seeds
    // derive from (seed, r) so scheduling cannot change the result.
    std::vector<double> null_curves(opt.replicates * opt.tau_max, 0.0);
    parallel_for(0, opt.replicates, [&](std::size_t r) {
        std::vector<std::int8_t> signs = log.signs();
        std::vector<std::int32_t> agents = log.agents();
        if (opt.joint_permutation) {
            Rng rng(derive_seed(opt.seed, 2 * r));
            for (std::size_t i = signs.size(); i > 1; --i) {
                const std::size_t j = rng.uniform_index(i);
                std::swap(signs[i - 1], signs[j]);
                std::swap(agents[i - 1], agents[j]);
            }
        } else {
            Rng sign_rng(derive_seed(opt.seed, 2 * r));
            Rng agent_rng(derive_seed(opt.seed, 2 * r + 1));
            shuffle_in_place(signs, sign_rng);
            shuffle_in_place(agents, agent_rng);
        }
        detail::herding_curve(signs.data(), agents.data(), n, m, opt.tau_max,
                              &null_curves[r * opt.tau_max]);
    });

    res.p_values.assign(opt.tau_max, 0.0);
    res.reject.assign(opt.tau_max, false);
    res.null_mean.assign(opt.tau_max, 0.0);
    res.null_sd.assign(opt.tau_max, 0.0);
    std::size_t rejected = 0;
    for (std::size_t k = 0; k < opt.tau_max; ++k) {
        std::size_t below = 0;
        double sum = 0.0, sq = 0.0;
        for (std::size_t r = 0; r < opt.replicates; ++r) {
            const double v = null_curves[r * opt.tau_max + k];
            if (v <= res.observed_herding[k]) ++below;
            sum += v;
            sq += v * v;
        }
        const double rr = static_cast<double>(opt.replicates);
        res.p_values[k] =
            static_cast<double>(1 + below) / static_cast<double>(opt.replicates + 1);
        res.null_mean[k] = sum / rr;
        const double var = sq / rr - res.null_mean[k] * res.null_mean[k];
        res.null_sd[k] = var > 0.0 ? std::sqrt(var) : 0.0;
        res.reject[k] = res.p_values[k] < opt.alpha;
        if (res.reject[k]) ++rejected;
    }
    res.rejection_fraction = static_cast<double>(rejected) / static_cast<double>(opt.tau_max);
    return res;
}

// ---------------------------------------------------------------------------
// Same-sign probabilities conditional on price impact and broker identity
// ---------------------------------------------------------------------------

// Index k holds lag tau = k+1. Cells with no qualifying pair are NaN.
struct ConditionalProbabilities {
    std::size_t tau_max = 0;
    std::vector<double> same_given_nochange;  // P(e_t = e_{t+tau} | no price change at t)
    std::vector<double> same_given_change;    // P(e_t = e_{t+tau} | price change at t)
    std::vector<double> excess_nochange;      // above minus 1/2
    std::vector<double> excess_change;
    // Split by whether the two events come from the same broker.
    std::vector<double> same_broker_nochange, same_broker_change;
    std::vector<double> diff_broker_nochange, diff_broker_change;
    // Pair counts behind each estimate.
    std::vector<std::int64_t> n_nochange, n_change;
    std::vector<std::int64_t> n_same_broker_nochange, n_same_broker_change;
};

inline ConditionalProbabilities conditional_probabilities(const EventLog& log,
                                                          std::size_t tau_max) {
    if (!log.has_price_flags())
        throw MissingDataError("conditional_probabilities: log carries no price-change flags");
    const std::size_t n = log.size();
    validate_tau_max(tau_max, n);

    ConditionalProbabilities cp;
    cp.tau_max = tau_max;
    const auto alloc_d = [&](std::vector<double>& v) { v.assign(tau_max, 0.0); };
    const auto alloc_i = [&](std::vector<std::int64_t>& v) { v.assign(tau_max, 0); };
    alloc_d(cp.same_given_nochange);
    alloc_d(cp.same_given_change);
    alloc_d(cp.excess_nochange);
    alloc_d(cp.excess_change);
    alloc_d(cp.same_broker_nochange);
    alloc_d(cp.same_broker_change);
    alloc_d(cp.diff_broker_nochange);
    alloc_d(cp.diff_broker_change);
    alloc_i(cp.n_nochange);
    alloc_i(cp.n_change);
    alloc_i(cp.n_same_broker_nochange);
    alloc_i(cp.n_same_broker_change);

    const std::int8_t* signs = log.signs().data();
    const std::int32_t* agents = log.agents().data();
    const std::uint8_t* flags = log.flags().data();

    parallel_for(1, tau_max + 1, [&](std::size_t tau) {
        const std::size_t p = n - tau;
        // counts[flag][same_broker] = {pairs, same-sign pairs}
        std::int64_t pairs[2][2] = {{0, 0}, {0, 0}};
        std::int64_t same[2][2] = {{0, 0}, {0, 0}};
        for (std::size_t t = 0; t < p; ++t) {
            const int f = flags[t] ? 1 : 0;
            const int b = agents[t] == agents[t + tau] ? 1 : 0;
            ++pairs[f][b];
            same[f][b] += signs[t] == signs[t + tau];
        }
        const std::size_t k = tau - 1;
        const auto ratio = [](std::int64_t num, std::int64_t den) {
            return den == 0 ? undefined_value()
                            : static_cast<double>(num) / static_cast<double>(den);
        };
        cp.n_nochange[k] = pairs[0][0] + pairs[0][1];
        cp.n_change[k] = pairs[1][0] + pairs[1][1];
        cp.n_same_broker_nochange[k] = pairs[0][1];
        cp.n_same_broker_change[k] = pairs[1][1];
        cp.same_given_nochange[k] = ratio(same[0][0] + same[0][1], cp.n_nochange[k]);
        cp.same_given_change[k] = ratio(same[1][0] + same[1][1], cp.n_change[k]);
        cp.excess_nochange[k] = cp.same_given_nochange[k] - 0.5;
        cp.excess_change[k] = cp.same_given_change[k] - 0.5;
        cp.same_broker_nochange[k] = ratio(same[0][1], pairs[0][1]);
        cp.same_broker_change[k] = ratio(same[1][1], pairs[1][1]);
        cp.diff_broker_nochange[k] = ratio(same[0][0], pairs[0][0]);
        cp.diff_broker_change[k] = ratio(same[1][0], pairs[1][0]);
    });
    return cp;
}

// ---------------------------------------------------------------------------
// Power-law slope fitting
// ---------------------------------------------------------------------------

struct PowerLawFit {
    double exponent = 0.0;   // gamma in curve ~ tau^-gamma
    double std_error = 0.0;  // OLS standard error of the slope
    double r_squared = 1.0;
    std::size_t points_used = 0;  // positive points entering the fit
    std::size_t excluded = 0;     // non-positive points dropped from the range
};

// Least-squares slope of log(curve) vs log(tau) over [tau_lo, tau_hi].
// Points are averaged in logarithmically spaced lag bins first so dense
// large-tau samples do not dominate; exact power laws are unaffected
// because bin averages of collinear points stay on the line.
inline PowerLawFit fit_power_law(const std::vector<double>& curve, std::size_t tau_lo,
                                 std::size_t tau_hi) {
    if (tau_lo < 1 || tau_hi < tau_lo || tau_hi > curve.size())
        throw RangeError("fit_power_law: lag range outside the curve");

    std::vector<double> xs, ys;
    std::size_t excluded = 0;
    for (std::size_t tau = tau_lo; tau <= tau_hi; ++tau) {
        const double v = curve[tau - 1];
        if (!(v > 0.0)) {
            ++excluded;
            continue;
        }
        xs.push_back(std::log(static_cast<double>(tau)));
        ys.push_back(std::log(v));
    }
    if (xs.size() < 10)
        throw InsufficientDataError("fit_power_law: fewer than 10 positive points in range");

    const double lo = std::log(static_cast<double>(tau_lo));
    const double hi = std::log(static_cast<double>(tau_hi) + 0.5);
    const double decades = (hi - lo) / std::log(10.0);
    std::size_t bins = static_cast<std::size_t>(std::lround(12.0 * decades));
    bins = std::clamp<std::size_t>(bins, 3, xs.size());

    std::vector<double> bx(bins, 0.0), by(bins, 0.0);
    std::vector<std::size_t> bc(bins, 0);
    const double width = (hi - lo) / static_cast<double>(bins);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        auto b = static_cast<std::size_t>((xs[i] - lo) / width);
        if (b >= bins) b = bins - 1;
        bx[b] += xs[i];
        by[b] += ys[i];
        ++bc[b];
    }
    std::vector<double> px, py;
    for (std::size_t b = 0; b < bins; ++b) {
        if (bc[b] == 0) continue;
        px.push_back(bx[b] / static_cast<double>(bc[b]));
        py.push_back(by[b] / static_cast<double>(bc[b]));
    }
    if (px.size() < 3)
        throw InsufficientDataError("fit_power_law: fewer than 3 populated lag bins");

    const auto nb = static_cast<double>(px.size());
    const double mx = std::accumulate(px.begin(), px.end(), 0.0) / nb;
    const double my = std::accumulate(py.begin(), py.end(), 0.0) / nb;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < px.size(); ++i) {
        const double dx = px[i] - mx, dy = py[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx <= 0.0) throw InsufficientDataError("fit_power_law: degenerate lag spread");
    const double slope = sxy / sxx;

    double ssr = 0.0;
    for (std::size_t i = 0; i < px.size(); ++i) {
        const double r = (py[i] - my) - slope * (px[i] - mx);
        ssr += r * r;
    }
    PowerLawFit fit;
    fit.exponent = -slope;
    fit.std_error = px.size() > 2 ? std::sqrt(ssr / (nb - 2.0) / sxx) : 0.0;
    fit.r_squared = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
    fit.points_used = xs.size();
    fit.excluded = excluded;
    return fit;
}

// ---------------------------------------------------------------------------
// Closed-form decomposition under frequency-only structure
// ---------------------------------------------------------------------------

struct SplitHerdFractions {
    double split = 0.0;  // C_split / C
    double herd = 0.0;   // C_herd / C
};

// When pair activity factorizes and sign correlations are agent
// independent, the component fractions depend only on the agent count
// and the variance of the trading frequencies.
inline SplitHerdFractions eq14_prediction(std::size_t broker_count, double freq_variance) {
    if (broker_count < 1) throw std::invalid_argument("eq14_prediction: need >= 1 broker");
    const double m = static_cast<double>(broker_count);
    const double vmax = max_frequency_variance(broker_count);
    if (freq_variance < -1e-15 || freq_variance > vmax + 1e-15)
        throw RangeError("eq14_prediction: variance outside [0, (1/M)(1-1/M)]");
    SplitHerdFractions f;
    f.split = 1.0 / m + m * freq_variance;
    f.herd = 1.0 - f.split;
    return f;
}

// ---------------------------------------------------------------------------
// Spearman rank correlation
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<double> average_ranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

}  // namespace detail

// Pearson correlation of average ranks; NaN when either input is constant.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("spearman: length mismatch");
    if (x.size() < 3) throw std::invalid_argument("spearman: need at least 3 points");
    const std::vector<double> rx = detail::average_ranks(x);
    const std::vector<double> ry = detail::average_ranks(y);
    const auto n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        const double dx = rx[i] - mx, dy = ry[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return undefined_value();
    return sxy / std::sqrt(sxx * syy);
}

// ---------------------------------------------------------------------------
// Anti-herding fixture
// ---------------------------------------------------------------------------

// Synthetic log exercising the price-impact response asymmetry: a
// splitting population trades persistently and ignores everyone else,
// while a contrarian population looks back at a random lag in
// [lag_lo, lag_hi] and responds to the event found there — against its
// sign if that event changed the price (probability anti_response),
// with it otherwise (probability herd_response). 0.5 means no response.
// Every event is flagged as price-changing with probability flag_prob.
struct AntiherdingParams {
    std::size_t splitters = 20;
    std::size_t contrarians = 20;
    double contrarian_rate = 0.4;  // fraction of events from contrarians
    double anti_response = 0.8;    // P(opposite sign | trigger changed the price)
    double herd_response = 0.5;    // P(same sign | trigger did not change the price)
    double flag_prob = 0.3;
    std::size_t lag_lo = 5;
    std::size_t lag_hi = 60;
    double beta = 1.5;             // splitter metaorder size tail
    std::int64_t v_min = 10;
    std::size_t pool_size = 5;
    std::size_t events = 0;
    std::uint64_t seed = 0;
};

inline EventLog generate_antiherding(const AntiherdingParams& p) {
    if (p.splitters < 1 || p.contrarians < 1)
        throw std::invalid_argument("generate_antiherding: need both populations");
    if (p.contrarian_rate < 0.0 || p.contrarian_rate > 1.0 ||
        p.anti_response < 0.0 || p.anti_response > 1.0 ||
        p.herd_response < 0.0 || p.herd_response > 1.0 ||
        p.flag_prob < 0.0 || p.flag_prob > 1.0)
        throw std::invalid_argument("generate_antiherding: probability outside [0,1]");
    if (p.lag_lo < 1 || p.lag_hi < p.lag_lo)
        throw std::invalid_argument("generate_antiherding: bad response lag window");
    if (!(p.beta > 1.0) || p.v_min < 1 || p.pool_size < 1 || p.events < 1)
        throw std::invalid_argument("generate_antiherding: bad splitting parameters");

    Rng rng(p.seed);
    struct Slot {
        std::int32_t owner;
        std::int8_t sign;
        std::int64_t remaining;
    };
    auto fresh = [&]() {
        Slot s;
        s.owner = static_cast<std::int32_t>(rng.uniform_index(p.splitters));
        s.sign = static_cast<std::int8_t>(rng.uniform_sign());
        s.remaining = pareto_integer(rng, p.beta, p.v_min);
        return s;
    };
    std::vector<Slot> pool;
    for (std::size_t k = 0; k < p.pool_size; ++k) pool.push_back(fresh());

    std::vector<std::int8_t> signs;
    std::vector<std::int32_t> agents;
    std::vector<std::uint8_t> flags;
    signs.reserve(p.events);
    agents.reserve(p.events);
    flags.reserve(p.events);

    const auto contrarian_base = static_cast<std::int32_t>(p.splitters);
    while (signs.size() < p.events) {
        std::int8_t sign;
        std::int32_t agent;
        if (rng.bernoulli(p.contrarian_rate)) {
            agent = contrarian_base + static_cast<std::int32_t>(rng.uniform_index(p.contrarians));
            const std::size_t t = signs.size();
            const std::size_t lag = p.lag_lo + rng.uniform_index(p.lag_hi - p.lag_lo + 1);
            if (lag <= t && agents[t - lag] != agent) {
                const std::size_t trigger = t - lag;
                if (flags[trigger]) {
                    sign = rng.bernoulli(p.anti_response) ? static_cast<std::int8_t>(-signs[trigger])
                                                          : signs[trigger];
                } else {
                    sign = rng.bernoulli(p.herd_response) ? signs[trigger]
                                                          : static_cast<std::int8_t>(-signs[trigger]);
                }
            } else {
                sign = static_cast<std::int8_t>(rng.uniform_sign());
            }
        } else {
            Slot& s = pool[rng.uniform_index(pool.size())];
            sign = s.sign;
            agent = s.owner;
            if (--s.remaining == 0) s = fresh();
        }
        signs.push_back(sign);
        agents.push_back(agent);
        flags.push_back(rng.bernoulli(p.flag_prob) ? 1 : 0);
    }

    std::vector<std::string> labels;
    labels.reserve(p.splitters + p.contrarians);
    for (std::size_t i = 0; i < p.splitters; ++i) labels.push_back("s" + std::to_string(i));
    for (std::size_t i = 0; i < p.contrarians; ++i) labels.push_back("c" + std::to_string(i));
    detail::canonicalize_agents(agents, labels);

    std::vector<std::string> meta = {
        "model=antiherding-fixture",
        "splitters=" + std::to_string(p.splitters),
        "contrarians=" + std::to_string(p.contrarians),
        "contrarian_rate=" + std::to_string(p.contrarian_rate),
        "anti_response=" + std::to_string(p.anti_response),
        "herd_response=" + std::to_string(p.herd_response),
        "flag_prob=" + std::to_string(p.flag_prob),
        "lag_window=" + std::to_string(p.lag_lo) + ".." + std::to_string(p.lag_hi),
        "events=" + std::to_string(p.events),
        "seed=" + std::to_string(p.seed),
    };
    return EventLog(std::move(signs), std::move(agents), std::move(labels), std::move(flags),
                    true, std::move(meta));
}

}  // namespace orderflow
