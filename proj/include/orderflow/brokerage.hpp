#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "orderflow/error.hpp"
#include "orderflow/event_log.hpp"
#include "orderflow/frequencies.hpp"
#include "orderflow/rng.hpp"
#include "orderflow/simulators.hpp"

namespace orderflow {

// Broker trading frequencies; entry i is broker i's share of all events.
struct BrokerProfile {
    std::vector<double> frequencies;

    std::size_t size() const { return frequencies.size(); }

    void validate() const {
        if (frequencies.empty()) throw std::invalid_argument("BrokerProfile: empty");
        double sum = 0.0;
        for (double f : frequencies) {
            if (f <= 0.0) throw std::invalid_argument("BrokerProfile: frequencies must be > 0");
            sum += f;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw std::invalid_argument("BrokerProfile: frequencies must sum to 1");
    }
};

inline double frequency_variance(const BrokerProfile& p) {
    return frequency_variance(p.frequencies);
}

inline BrokerProfile uniform_profile(std::size_t m) {
    if (m < 1) throw std::invalid_argument("uniform_profile: need >= 1 broker");
    return BrokerProfile{std::vector<double>(m, 1.0 / static_cast<double>(m))};
}

// Rank-frequency profile p_k proportional to (k+1)^-exponent, normalized.
inline BrokerProfile zipf_profile(std::size_t m, double exponent) {
    if (m < 1) throw std::invalid_argument("zipf_profile: need >= 1 broker");
    if (exponent < 0.0) throw std::invalid_argument("zipf_profile: exponent must be >= 0");
    std::vector<double> f(m);
    double sum = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        f[k] = std::pow(static_cast<double>(k + 1), -exponent);
        sum += f[k];
    }
    for (double& v : f) v /= sum;
    return BrokerProfile{std::move(f)};
}

// Zipf profile whose frequency variance matches `target_var`, found by
// bisection on the exponent (variance is monotone in it).
inline BrokerProfile profile_with_variance(std::size_t m, double target_var) {
    const double vmax = max_frequency_variance(m);
    if (target_var < 0.0 || target_var > vmax)
        throw RangeError("profile_with_variance: variance outside [0, (1/M)(1-1/M)]");
    if (target_var == 0.0) return uniform_profile(m);
    double lo = 0.0, hi = 1.0;
    while (frequency_variance(zipf_profile(m, hi)) < target_var && hi < 512.0) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (frequency_variance(zipf_profile(m, mid)) < target_var) lo = mid;
        else hi = mid;
    }
    return zipf_profile(m, 0.5 * (lo + hi));
}

// Reference 50-broker profile with LSE-like concentration: the top five
// brokers carry just under half of all trading and the splitting
// fraction 1/M + M Var is about 0.06.
inline BrokerProfile azn_like_profile() { return zipf_profile(50, 0.9); }

enum class BrokerageKind { fixed_random, dynamic_random, correlated };

inline const char* to_string(BrokerageKind k) {
    switch (k) {
        case BrokerageKind::fixed_random: return "fixed_random";
        case BrokerageKind::dynamic_random: return "dynamic_random";
        case BrokerageKind::correlated: return "correlated";
    }
    return "unknown";
}

// Rule translating investor-level events to broker-level events. Fixed
// kinds carry one broker per investor; the dynamic kind redraws a broker
// from the profile independently on every event.
struct BrokerageMap {
    BrokerageKind kind = BrokerageKind::fixed_random;
    std::vector<std::int32_t> assignment;  // per-investor broker id (fixed kinds)
    BrokerProfile profile;                 // target/draw profile
    double phi = 0.0;                      // correlated kind only
    std::uint64_t seed = 0;

    std::size_t broker_count() const { return profile.size(); }
};

// Aggregated broker frequencies implied by a fixed assignment.
inline std::vector<double> aggregated_broker_frequencies(
    const std::vector<double>& investor_freqs, const std::vector<std::int32_t>& assignment,
    std::size_t broker_count) {
    std::vector<double> out(broker_count, 0.0);
    for (std::size_t i = 0; i < investor_freqs.size(); ++i)
        out[static_cast<std::size_t>(assignment[i])] += investor_freqs[i];
    return out;
}

// Each investor picks one broker for good. Initial picks are independent
// draws from the profile, then investors are moved between over- and
// under-full brokers until every broker's aggregated investor frequency
// is within 0.1*min(P') of its target. Each move shrinks the total
// deviation, so the loop either converges or hits the pass cap.
inline BrokerageMap fixed_random_map(const std::vector<double>& investor_freqs,
                                     const BrokerProfile& profile, std::uint64_t seed) {
    profile.validate();
    if (investor_freqs.empty())
        throw std::invalid_argument("fixed_random_map: empty investor frequencies");
    double fsum = 0.0;
    for (double f : investor_freqs) {
        if (f <= 0.0) throw std::invalid_argument("fixed_random_map: frequencies must be > 0");
        fsum += f;
    }
    if (std::abs(fsum - 1.0) > 1e-9)
        throw std::invalid_argument("fixed_random_map: investor frequencies must sum to 1");

    const std::size_t brokers = profile.size();
    const double tol =
        0.1 * *std::min_element(profile.frequencies.begin(), profile.frequencies.end());
    const double max_target =
        *std::max_element(profile.frequencies.begin(), profile.frequencies.end());
    const double max_investor =
        *std::max_element(investor_freqs.begin(), investor_freqs.end());
    if (max_investor > max_target + tol)
        throw FeasibilityError("fixed_random_map: an investor trades more than the largest broker target");

    Rng rng(seed);
    DiscreteSampler pick(profile.frequencies);
    std::vector<std::int32_t> assignment(investor_freqs.size());
    for (auto& b : assignment) b = static_cast<std::int32_t>(pick(rng));

    std::vector<std::vector<std::int32_t>> members(brokers);
    for (std::size_t i = 0; i < assignment.size(); ++i)
        members[static_cast<std::size_t>(assignment[i])].push_back(static_cast<std::int32_t>(i));
    std::vector<double> dev = aggregated_broker_frequencies(investor_freqs, assignment, brokers);
    for (std::size_t b = 0; b < brokers; ++b) dev[b] -= profile.frequencies[b];

    const std::size_t max_passes = 100;
    const std::size_t moves_per_pass = std::max<std::size_t>(investor_freqs.size(), brokers);
    for (std::size_t pass = 0; pass < max_passes; ++pass) {
        bool balanced = true;
        for (double d : dev)
            if (std::abs(d) > tol) { balanced = false; break; }
        if (balanced) {
            BrokerageMap map;
            map.kind = BrokerageKind::fixed_random;
            map.assignment = std::move(assignment);
            map.profile = profile;
            map.seed = seed;
            return map;
        }
        for (std::size_t move = 0; move < moves_per_pass; ++move) {
            std::size_t hi = 0, lo = 0;
            for (std::size_t b = 1; b < brokers; ++b) {
                if (dev[b] > dev[hi]) hi = b;
                if (dev[b] < dev[lo]) lo = b;
            }
            if (dev[hi] <= tol && -dev[lo] <= tol) break;
            // Largest movable investor: any f < dev[hi] - dev[lo] shrinks
            // the total deviation; prefer f <= min(excess, deficit).
            const double want = std::min(dev[hi], -dev[lo]);
            const double limit = dev[hi] - dev[lo];
            std::size_t best = members[hi].size();
            double best_f = -1.0;
            std::size_t fallback = members[hi].size();
            double fallback_f = std::numeric_limits<double>::max();
            for (std::size_t k = 0; k < members[hi].size(); ++k) {
                const double f = investor_freqs[static_cast<std::size_t>(members[hi][k])];
                if (f <= want + tol && f > best_f) { best_f = f; best = k; }
                if (f < limit && f < fallback_f) { fallback_f = f; fallback = k; }
            }
            if (best == members[hi].size()) best = fallback;
            if (best == members[hi].size()) break;  // no improving move
            const std::int32_t inv = members[hi][best];
            members[hi][best] = members[hi].back();
            members[hi].pop_back();
            members[lo].push_back(inv);
            const double f = investor_freqs[static_cast<std::size_t>(inv)];
            dev[hi] -= f;
            dev[lo] += f;
            assignment[static_cast<std::size_t>(inv)] = static_cast<std::int32_t>(lo);
        }
    }
    throw FeasibilityError("fixed_random_map: could not balance broker frequencies within tolerance");
}

inline BrokerageMap dynamic_random_map(const BrokerProfile& profile, std::uint64_t seed) {
    profile.validate();
    BrokerageMap map;
    map.kind = BrokerageKind::dynamic_random;
    map.profile = profile;
    map.seed = seed;
    return map;
}

// Broker choice correlated with the social network: walking the recorded
// attachment order, each node copies its parent's broker with
// probability phi, otherwise draws from the profile. No rebalancing, so
// the realized broker frequencies concentrate as phi grows.
inline BrokerageMap correlated_broker_assignment(const SocialNetwork& net,
                                                 const BrokerProfile& profile, double phi,
                                                 std::uint64_t seed) {
    profile.validate();
    if (phi < 0.0 || phi > 1.0)
        throw std::invalid_argument("correlated_broker_assignment: phi outside [0,1]");
    if (net.nodes < 1 || net.parent.size() != net.nodes)
        throw Error("correlated_broker_assignment: network lacks a recorded attachment order");
    for (std::size_t k = 1; k < net.nodes; ++k)
        if (net.parent[k] < 0 || static_cast<std::size_t>(net.parent[k]) >= k)
            throw Error("correlated_broker_assignment: attachment order is incomplete");

    Rng rng(seed);
    DiscreteSampler pick(profile.frequencies);
    std::vector<std::int32_t> assignment(net.nodes);
    assignment[0] = static_cast<std::int32_t>(pick(rng));
    for (std::size_t k = 1; k < net.nodes; ++k) {
        assignment[k] = rng.bernoulli(phi)
            ? assignment[static_cast<std::size_t>(net.parent[k])]
            : static_cast<std::int32_t>(pick(rng));
    }

    BrokerageMap map;
    map.kind = BrokerageKind::correlated;
    map.assignment = std::move(assignment);
    map.profile = profile;
    map.phi = phi;
    map.seed = seed;
    return map;
}

// Re-indexes a node-indexed fixed assignment (from
// correlated_broker_assignment) to the registry order of `log`, matching
// nodes to agents through the numeric labels the simulators write.
inline BrokerageMap align_assignment_to_log(const BrokerageMap& map, const EventLog& log) {
    if (map.kind == BrokerageKind::dynamic_random) return map;
    BrokerageMap out = map;
    out.assignment.assign(log.agent_count(), -1);
    for (std::size_t i = 0; i < log.agent_count(); ++i) {
        const std::string& label = log.agent_label(i);
        std::size_t node = 0;
        try {
            node = std::stoul(label);
        } catch (const std::exception&) {
            throw MappingError("align_assignment_to_log: agent label '" + label +
                               "' is not a network node id");
        }
        if (node >= map.assignment.size())
            throw MappingError("align_assignment_to_log: agent label '" + label +
                               "' is outside the network");
        out.assignment[i] = map.assignment[node];
    }
    return out;
}

// Relabels every event with its broker. Signs, order, and price flags
// are untouched, so the total autocorrelation is invariant; only the
// split between components can change. The registry keeps only brokers
// that actually appear, labeled "b<k>". Dynamic draws are counter-based
// in the event index, so chunked evaluation equals sequential.
inline EventLog apply_map(const EventLog& log, const BrokerageMap& map) {
    const std::size_t n = log.size();
    std::vector<std::int32_t> broker_of_event(n);

    if (map.kind == BrokerageKind::dynamic_random) {
        DiscreteSampler pick(map.profile.frequencies);
        const std::uint64_t stream = derive_seed(map.seed, 0x64726177ull);
        for (std::size_t t = 0; t < n; ++t)
            broker_of_event[t] =
                static_cast<std::int32_t>(pick.sample_from(counter_uniform(stream, t)));
    } else {
        const std::size_t covered = map.assignment.size();
        for (std::size_t t = 0; t < n; ++t) {
            const auto inv = static_cast<std::size_t>(log.agent(t));
            if (inv >= covered)
                throw MappingError("apply_map: investor " + log.agent_label(inv) +
                                   " is not covered by the brokerage map");
            broker_of_event[t] = map.assignment[inv];
        }
    }

    std::vector<std::int32_t> remap(map.broker_count(), -1);
    std::vector<std::string> labels;
    std::vector<std::int32_t> agents(n);
    for (std::size_t t = 0; t < n; ++t) {
        const auto b = static_cast<std::size_t>(broker_of_event[t]);
        if (remap[b] < 0) {
            remap[b] = static_cast<std::int32_t>(labels.size());
            labels.push_back("b" + std::to_string(b));
        }
        agents[t] = remap[b];
    }

    std::vector<std::string> meta = log.metadata();
    meta.push_back("brokerage=" + std::string(to_string(map.kind)));
    meta.push_back("brokers=" + std::to_string(map.broker_count()));
    if (map.kind == BrokerageKind::correlated)
        meta.push_back("phi=" + std::to_string(map.phi));
    meta.push_back("map_seed=" + std::to_string(map.seed));

    return EventLog(std::vector<std::int8_t>(log.signs()), std::move(agents), std::move(labels),
                    std::vector<std::uint8_t>(log.flags()), log.has_price_flags(),
                    std::move(meta));
}

// Realized broker frequencies of a mapped log over the full broker set
// (brokers without events keep frequency zero); this is the horizontal
// axis of distortion sweeps.
inline std::vector<double> realized_broker_frequencies(const EventLog& investor_log,
                                                       const BrokerageMap& map) {
    std::vector<double> out(map.broker_count(), 0.0);
    if (map.kind == BrokerageKind::dynamic_random) {
        DiscreteSampler pick(map.profile.frequencies);
        const std::uint64_t stream = derive_seed(map.seed, 0x64726177ull);
        for (std::size_t t = 0; t < investor_log.size(); ++t)
            out[pick.sample_from(counter_uniform(stream, t))] += 1.0;
    } else {
        for (std::size_t t = 0; t < investor_log.size(); ++t)
            out[static_cast<std::size_t>(
                map.assignment[static_cast<std::size_t>(investor_log.agent(t))])] += 1.0;
    }
    const double n = static_cast<double>(investor_log.size());
    for (double& f : out) f /= n;
    return out;
}

}  // namespace orderflow
