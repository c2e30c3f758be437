#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "orderflow/event_log.hpp"
#include "orderflow/rng.hpp"

namespace orderflow {

namespace detail {

inline std::vector<std::string> numbered_labels(std::size_t m) {
    std::vector<std::string> labels;
    labels.reserve(m);
    for (std::size_t i = 0; i < m; ++i) labels.push_back(std::to_string(i));
    return labels;
}

// Remaps agent ids to first-appearance order and drops agents that never
// traded. This is the canonical form ingest produces, so simulated logs
// round-trip bit-exactly through export + ingest.
inline void canonicalize_agents(std::vector<std::int32_t>& agents,
                                std::vector<std::string>& labels) {
    std::vector<std::int32_t> remap(labels.size(), -1);
    std::vector<std::string> ordered;
    for (auto& a : agents) {
        auto& slot = remap[static_cast<std::size_t>(a)];
        if (slot < 0) {
            slot = static_cast<std::int32_t>(ordered.size());
            ordered.push_back(std::move(labels[static_cast<std::size_t>(a)]));
        }
        a = slot;
    }
    labels = std::move(ordered);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Metaorder splitting
// ---------------------------------------------------------------------------

struct SplittingModelParams {
    std::size_t investors = 100;   // M
    double beta = 1.5;             // metaorder size tail exponent, > 1
    std::int64_t v_min = 1;        // minimum metaorder size
    std::size_t pool_size = 1;     // concurrently active metaorders
    std::size_t events = 0;        // N
    std::uint64_t seed = 0;
};

// A pool of concurrently executing metaorders. Each slot holds one
// metaorder (uniform owner, uniform sign, Pareto size); every step one
// slot is chosen uniformly, executes one unit, and is refreshed when
// depleted. Sign correlations come purely from each investor finishing
// their own metaorder.
inline EventLog simulate_splitting(const SplittingModelParams& p) {
    if (p.investors < 1) throw std::invalid_argument("simulate_splitting: investors must be >= 1");
    if (!(p.beta > 1.0)) throw std::invalid_argument("simulate_splitting: beta must be > 1");
    if (p.v_min < 1) throw std::invalid_argument("simulate_splitting: v_min must be >= 1");
    if (p.pool_size < 1) throw std::invalid_argument("simulate_splitting: pool_size must be >= 1");
    if (p.events < 1) throw std::invalid_argument("simulate_splitting: events must be >= 1");

    Rng rng(p.seed);
    struct Slot {
        std::int32_t owner;
        std::int8_t sign;
        std::int64_t remaining;
    };
    auto fresh = [&]() {
        Slot s;
        s.owner = static_cast<std::int32_t>(rng.uniform_index(p.investors));
        s.sign = static_cast<std::int8_t>(rng.uniform_sign());
        s.remaining = pareto_integer(rng, p.beta, p.v_min);
        return s;
    };
    std::vector<Slot> pool;
    pool.reserve(p.pool_size);
    for (std::size_t k = 0; k < p.pool_size; ++k) pool.push_back(fresh());

    std::vector<std::int8_t> signs;
    std::vector<std::int32_t> agents;
    signs.reserve(p.events);
    agents.reserve(p.events);
    while (signs.size() < p.events) {
        Slot& s = pool[rng.uniform_index(pool.size())];
        signs.push_back(s.sign);
        agents.push_back(s.owner);
        if (--s.remaining == 0) s = fresh();
    }

    std::vector<std::string> meta = {
        "model=splitting",
        "investors=" + std::to_string(p.investors),
        "beta=" + std::to_string(p.beta),
        "v_min=" + std::to_string(p.v_min),
        "pool_size=" + std::to_string(p.pool_size),
        "events=" + std::to_string(p.events),
        "seed=" + std::to_string(p.seed),
    };
    std::vector<std::string> labels = detail::numbered_labels(p.investors);
    detail::canonicalize_agents(agents, labels);
    return EventLog(std::move(signs), std::move(agents), std::move(labels), {}, false,
                    std::move(meta));
}

// ---------------------------------------------------------------------------
// Public-information herding
// ---------------------------------------------------------------------------

struct PublicInfoParams {
    std::vector<double> frequencies;  // investor trading frequencies, sum 1
    double run_tail = 1.5;            // Pareto exponent of run lengths, > 1
    std::int64_t n_min = 1;           // minimum run length
    std::size_t events = 0;
    std::uint64_t seed = 0;
};

// Sign runs as a stand-in for a common information stream: each run has a
// uniform sign and a heavy-tailed length, and every order inside it is
// assigned to an investor drawn from the frequency vector with
// replacement. Heavy-tailed run lengths carry all the persistence; the
// trailing run is truncated so the log has exactly `events` entries.
inline EventLog simulate_public_info(const PublicInfoParams& p) {
    if (p.frequencies.empty())
        throw std::invalid_argument("simulate_public_info: empty frequency vector");
    double sum = 0.0;
    for (double f : p.frequencies) {
        if (f <= 0.0) throw std::invalid_argument("simulate_public_info: frequencies must be > 0");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("simulate_public_info: frequencies must sum to 1");
    if (!(p.run_tail > 1.0)) throw std::invalid_argument("simulate_public_info: run_tail must be > 1");
    if (p.n_min < 1) throw std::invalid_argument("simulate_public_info: n_min must be >= 1");
    if (p.events < 1) throw std::invalid_argument("simulate_public_info: events must be >= 1");

    Rng rng(p.seed);
    DiscreteSampler pick(p.frequencies);
    std::vector<std::int8_t> signs;
    std::vector<std::int32_t> agents;
    signs.reserve(p.events);
    agents.reserve(p.events);
    while (signs.size() < p.events) {
        const auto sign = static_cast<std::int8_t>(rng.uniform_sign());
        std::int64_t run = pareto_integer(rng, p.run_tail, p.n_min);
        for (; run > 0 && signs.size() < p.events; --run) {
            signs.push_back(sign);
            agents.push_back(static_cast<std::int32_t>(pick(rng)));
        }
    }

    std::vector<std::string> meta = {
        "model=public-info",
        "investors=" + std::to_string(p.frequencies.size()),
        "persistence-route=heavy-tailed-run-lengths",
        "run_tail=" + std::to_string(p.run_tail),
        "n_min=" + std::to_string(p.n_min),
        "events=" + std::to_string(p.events),
        "seed=" + std::to_string(p.seed),
    };
    std::vector<std::string> labels = detail::numbered_labels(p.frequencies.size());
    detail::canonicalize_agents(agents, labels);
    return EventLog(std::move(signs), std::move(agents), std::move(labels), {}, false,
                    std::move(meta));
}

// ---------------------------------------------------------------------------
// Imitation on a social network
// ---------------------------------------------------------------------------

// Undirected tree grown by degree-proportional attachment. `parent`
// records the attachment order (parent[0] = -1) so broker assignment can
// replay it; adjacency lists keep insertion order, which fixes the
// neighbor iteration order of the imitation dynamics.
struct SocialNetwork {
    std::size_t nodes = 0;
    std::vector<std::vector<std::int32_t>> adjacency;
    std::vector<std::int32_t> parent;

    std::size_t degree(std::size_t i) const { return adjacency[i].size(); }
};

inline SocialNetwork build_preferential_attachment(std::size_t nodes, std::uint64_t seed) {
    if (nodes < 2) throw std::invalid_argument("build_preferential_attachment: need >= 2 nodes");
    SocialNetwork net;
    net.nodes = nodes;
    net.adjacency.resize(nodes);
    net.parent.assign(nodes, -1);

    Rng rng(seed);
    // Endpoint list: each node appears once per incident edge, so a
    // uniform draw lands on a node with probability proportional to degree.
    std::vector<std::int32_t> endpoints;
    endpoints.reserve(2 * (nodes - 1));

    auto link = [&](std::size_t child, std::size_t parent_node) {
        net.parent[child] = static_cast<std::int32_t>(parent_node);
        net.adjacency[parent_node].push_back(static_cast<std::int32_t>(child));
        net.adjacency[child].push_back(static_cast<std::int32_t>(parent_node));
        endpoints.push_back(static_cast<std::int32_t>(child));
        endpoints.push_back(static_cast<std::int32_t>(parent_node));
    };

    link(1, 0);
    for (std::size_t k = 2; k < nodes; ++k) {
        const std::size_t target =
            static_cast<std::size_t>(endpoints[rng.uniform_index(endpoints.size())]);
        link(k, target);
    }
    return net;
}

struct ImitationParams {
    std::size_t investors = 0;  // must match the network node count
    double imitation = 0.0;     // copy probability p in [0,1]
    std::size_t events = 0;
    std::uint64_t seed = 0;
};

// Binary-state imitation dynamics: pick a node uniformly, it submits an
// order with its state's sign; each neighbor in fixed adjacency order
// then either copies that sign (probability p, submitting it and
// adopting it) or submits its own state's sign. Every submission is one
// event. If the states ever reach consensus a warning line is added to
// the metadata; the run still completes.
inline EventLog simulate_imitation(const SocialNetwork& net, const ImitationParams& p) {
    if (net.nodes != p.investors || p.investors < 2)
        throw std::invalid_argument("simulate_imitation: network/investor count mismatch");
    if (p.imitation < 0.0 || p.imitation > 1.0)
        throw std::invalid_argument("simulate_imitation: imitation probability outside [0,1]");
    if (p.events < 1) throw std::invalid_argument("simulate_imitation: events must be >= 1");

    Rng rng(p.seed);
    std::vector<std::int8_t> state(p.investors);
    std::int64_t balance = 0;
    for (auto& s : state) {
        s = static_cast<std::int8_t>(rng.uniform_sign());
        balance += s;
    }

    std::vector<std::int8_t> signs;
    std::vector<std::int32_t> agents;
    signs.reserve(p.events);
    agents.reserve(p.events);
    bool absorbed = false;
    std::size_t absorbed_at = 0;

    const auto m = static_cast<std::int64_t>(p.investors);
    while (signs.size() < p.events) {
        const std::size_t i = rng.uniform_index(p.investors);
        signs.push_back(state[i]);
        agents.push_back(static_cast<std::int32_t>(i));
        for (const std::int32_t j : net.adjacency[i]) {
            if (signs.size() >= p.events) break;
            if (rng.bernoulli(p.imitation)) {
                signs.push_back(state[i]);
                agents.push_back(j);
                if (state[j] != state[i]) {
                    balance += 2 * state[i];
                    state[j] = state[i];
                }
            } else {
                signs.push_back(state[j]);
                agents.push_back(j);
            }
        }
        if (!absorbed && (balance == m || balance == -m)) {
            absorbed = true;
            absorbed_at = signs.size();
        }
    }

    std::vector<std::string> meta = {
        "model=imitation",
        "investors=" + std::to_string(p.investors),
        "imitation_p=" + std::to_string(p.imitation),
        "events=" + std::to_string(p.events),
        "seed=" + std::to_string(p.seed),
        "noise-injection=none",
    };
    if (absorbed)
        meta.push_back("warning=absorbing-state-reached event=" + std::to_string(absorbed_at));
    std::vector<std::string> labels = detail::numbered_labels(p.investors);
    detail::canonicalize_agents(agents, labels);
    return EventLog(std::move(signs), std::move(agents), std::move(labels), {}, false,
                    std::move(meta));
}

inline bool has_absorbing_warning(const EventLog& log) {
    for (const auto& line : log.metadata())
        if (line.rfind("warning=absorbing-state-reached", 0) == 0) return true;
    return false;
}

}  // namespace orderflow
