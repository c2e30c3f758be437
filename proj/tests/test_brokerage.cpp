#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "orderflow/brokerage.hpp"
#include "orderflow/decomposition.hpp"
#include "orderflow/simulators.hpp"
#include "orderflow/stats.hpp"
#include "test_support.hpp"

using namespace orderflow;
using Catch::Matchers::WithinAbs;

namespace {

double max_deviation(const std::vector<double>& freqs, const BrokerageMap& map) {
    const auto realized =
        aggregated_broker_frequencies(freqs, map.assignment, map.broker_count());
    double dev = 0.0;
    for (std::size_t b = 0; b < realized.size(); ++b)
        dev = std::max(dev, std::abs(realized[b] - map.profile.frequencies[b]));
    return dev;
}

// Greedy reference assignment: walk investors by decreasing frequency,
// always giving the next one to the broker with the largest remaining
// deficit.
std::vector<std::int32_t> greedy_assignment(const std::vector<double>& freqs,
                                            const BrokerProfile& profile) {
    std::vector<std::size_t> order(freqs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return freqs[a] > freqs[b]; });
    std::vector<double> deficit = profile.frequencies;
    std::vector<std::int32_t> assignment(freqs.size(), 0);
    for (std::size_t i : order) {
        std::size_t best = 0;
        for (std::size_t b = 1; b < deficit.size(); ++b)
            if (deficit[b] > deficit[best]) best = b;
        assignment[i] = static_cast<std::int32_t>(best);
        deficit[best] -= freqs[i];
    }
    return assignment;
}

}  // namespace

TEST_CASE("profile constructors and variance helpers") {
    const BrokerProfile u = uniform_profile(8);
    CHECK_THAT(frequency_variance(u), WithinAbs(0.0, 1e-15));
    double sum = 0.0;
    for (double f : u.frequencies) sum += f;
    CHECK_THAT(sum, WithinAbs(1.0, 1e-12));

    const BrokerProfile z = zipf_profile(50, 0.9);
    sum = 0.0;
    for (double f : z.frequencies) sum += f;
    CHECK_THAT(sum, WithinAbs(1.0, 1e-12));
    CHECK(z.frequencies[0] > z.frequencies[49]);

    const double target = 0.5 * max_frequency_variance(20);
    const BrokerProfile v = profile_with_variance(20, target);
    CHECK_THAT(frequency_variance(v), WithinAbs(target, 1e-9));
    CHECK_THROWS_AS(profile_with_variance(20, max_frequency_variance(20) * 1.01), RangeError);
}

TEST_CASE("the reference profile has LSE-like top-broker concentration") {
    const BrokerProfile azn = azn_like_profile();
    REQUIRE(azn.size() == 50);
    double top5 = 0.0, sq = 0.0;
    for (std::size_t b = 0; b < azn.size(); ++b) {
        if (b < 5) top5 += azn.frequencies[b];
        sq += azn.frequencies[b] * azn.frequencies[b];
    }
    CHECK(top5 > 0.40);
    CHECK(top5 < 0.50);
    // splitting fraction 1/M + M Var = sum of squares, about 0.06
    CHECK(sq > 0.05);
    CHECK(sq < 0.075);
}

TEST_CASE("uniform investors onto equally many uniform brokers is a bijection") {
    const std::size_t m = 40;
    const std::vector<double> freqs(m, 1.0 / static_cast<double>(m));
    const BrokerageMap map = fixed_random_map(freqs, uniform_profile(m), 7);
    std::vector<int> hits(m, 0);
    for (auto b : map.assignment) ++hits[static_cast<std::size_t>(b)];
    for (int h : hits) CHECK(h == 1);
}

TEST_CASE("fixed map balances many uniform investors onto the reference profile") {
    const std::size_t investors = 10000;
    const std::vector<double> freqs(investors, 1.0 / static_cast<double>(investors));
    const BrokerProfile profile = azn_like_profile();
    const BrokerageMap map = fixed_random_map(freqs, profile, 11);
    const double tol =
        0.1 * *std::min_element(profile.frequencies.begin(), profile.frequencies.end());
    CHECK(max_deviation(freqs, map) <= tol);
}

TEST_CASE("fixed map balances Zipf investors onto uniform brokers like the greedy oracle") {
    const BrokerProfile investor_profile = zipf_profile(100, 1.0);
    const BrokerProfile broker_profile = uniform_profile(10);
    const double tol = 0.1 * 0.1;  // 0.1 * min(P') with uniform 10 brokers

    const BrokerageMap map = fixed_random_map(investor_profile.frequencies, broker_profile, 3);
    CHECK(max_deviation(investor_profile.frequencies, map) <= tol);

    const auto greedy = greedy_assignment(investor_profile.frequencies, broker_profile);
    const auto realized =
        aggregated_broker_frequencies(investor_profile.frequencies, greedy, 10);
    double greedy_dev = 0.0;
    for (std::size_t b = 0; b < 10; ++b)
        greedy_dev = std::max(greedy_dev, std::abs(realized[b] - 0.1));
    CHECK(greedy_dev <= tol);  // the bound is achievable, und we achieve it too
}

TEST_CASE("fixed map reports infeasible targets") {
    // one investor holds 60% of the flow; no broker target is that large
    std::vector<double> freqs = {0.6, 0.1, 0.1, 0.1, 0.1};
    CHECK_THROWS_AS(fixed_random_map(freqs, uniform_profile(4), 1), FeasibilityError);
}

TEST_CASE("fixed maps are deterministic in the seed") {
    const std::vector<double> freqs(500, 1.0 / 500.0);
    const BrokerProfile profile = zipf_profile(20, 0.8);
    const BrokerageMap a = fixed_random_map(freqs, profile, 42);
    const BrokerageMap b = fixed_random_map(freqs, profile, 42);
    CHECK(a.assignment == b.assignment);
}

TEST_CASE("apply_map preserves everything except agent labels") {
    const EventLog log = testsup::random_log(5000, 100, 19, true, 0.3);
    std::vector<double> freqs;
    for (const auto& s : agent_summaries(log)) freqs.push_back(s.frequency);
    const BrokerageMap map = fixed_random_map(freqs, uniform_profile(10), 5);
    const EventLog mapped = apply_map(log, map);
    REQUIRE(mapped.size() == log.size());
    CHECK(mapped.signs() == log.signs());
    CHECK(mapped.flags() == log.flags());
    CHECK(mapped.has_price_flags() == log.has_price_flags());
    CHECK(mapped.agent_count() <= 10);

    // total autocorrelation is invariant under any relabeling
    const auto c_before = autocorrelation(log, 20);
    const auto c_after = autocorrelation(mapped, 20);
    for (std::size_t k = 0; k < 20; ++k) CHECK(c_before[k] == c_after[k]);
}

TEST_CASE("a bijective map leaves the decomposition bit-identical") {
    const EventLog log = testsup::random_log(3000, 12, 23);
    std::vector<double> freqs;
    for (const auto& s : agent_summaries(log)) freqs.push_back(s.frequency);
    const BrokerageMap map = fixed_random_map(freqs, uniform_profile(12), 9);
    // bijection: 12 uniform investors onto 12 uniform brokers
    std::vector<int> hits(12, 0);
    for (auto b : map.assignment) ++hits[static_cast<std::size_t>(b)];
    for (int h : hits) REQUIRE(h == 1);

    const EventLog mapped = apply_map(log, map);
    const DecompositionResult a = decompose(log, 25);
    const DecompositionResult b = decompose(mapped, 25);
    for (std::size_t k = 0; k < 25; ++k) {
        CHECK(a.C[k] == b.C[k]);
        CHECK(a.C_split[k] == b.C_split[k]);
        CHECK(a.C_herd[k] == b.C_herd[k]);
    }
}

TEST_CASE("splitting investors stay splitting under any fixed random map") {
    SplittingModelParams p;
    p.investors = 500;
    p.beta = 1.5;
    p.v_min = 5;
    p.pool_size = 5;
    p.events = 200000;
    p.seed = 33;
    const EventLog investors = simulate_splitting(p);
    std::vector<double> freqs;
    for (const auto& s : agent_summaries(investors)) freqs.push_back(s.frequency);
    const BrokerageMap map = fixed_random_map(freqs, azn_like_profile(), 44);
    const EventLog brokers = apply_map(investors, map);

    const DecompositionResult r = decompose(brokers, 50);
    double herd_abs_max = 0.0;
    for (double h : r.C_herd) herd_abs_max = std::max(herd_abs_max, std::abs(h));
    CHECK(herd_abs_max < 0.06 * r.C[0]);
    CHECK(mean_splitting_ratio(r, 1, 50) > 0.9);
}

TEST_CASE("dynamic maps reproduce exactly and factorize pair activity") {
    const EventLog log = testsup::random_log(30000, 5, 29);
    const BrokerProfile profile = zipf_profile(8, 0.7);
    const BrokerageMap map = dynamic_random_map(profile, 77);
    const EventLog a = apply_map(log, map);
    const EventLog b = apply_map(log, map);
    CHECK(a.agents() == b.agents());

    // P'_ij ~ P'_i P'_j under per-event redraws
    const PairStatistics ps = pair_statistics(a, 2);
    for (std::size_t i = 0; i < a.agent_count(); ++i)
        for (std::size_t j = 0; j < a.agent_count(); ++j) {
            const double expect = ps.P_i[i] * ps.P_i[j];
            CHECK_THAT(ps.p(1, i, j), WithinAbs(expect, 5e-3));
        }
}

TEST_CASE("dynamic brokerage imposes the closed-form decomposition on splitting flow") {
    SplittingModelParams p;
    p.investors = 300;
    p.beta = 1.5;
    p.v_min = 5;
    p.pool_size = 5;
    p.events = 100000;
    const BrokerProfile profile = azn_like_profile();
    const double pred = eq14_prediction(profile.size(), frequency_variance(profile)).split;

    std::vector<double> sbars;
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        p.seed = 3000 + seed;
        const EventLog investors = simulate_splitting(p);
        const EventLog brokers =
            apply_map(investors, dynamic_random_map(profile, 4000 + seed));
        sbars.push_back(mean_splitting_ratio(decompose(brokers, 50), 1, 50));
    }
    double mean = 0.0;
    for (double s : sbars) mean += s;
    mean /= static_cast<double>(sbars.size());
    double var = 0.0;
    for (double s : sbars) var += (s - mean) * (s - mean);
    var /= static_cast<double>(sbars.size() - 1);
    const double se = std::sqrt(var / static_cast<double>(sbars.size()));
    CHECK(std::abs(mean - pred) <= 3.0 * se + 0.005);
}

TEST_CASE("correlated assignment copies the parent broker with probability phi") {
    const SocialNetwork net = build_preferential_attachment(20000, 8);
    const BrokerProfile profile = uniform_profile(10);

    // phi = 1: everyone inherits the root broker
    const BrokerageMap all_root = correlated_broker_assignment(net, profile, 1.0, 3);
    for (auto b : all_root.assignment) CHECK(b == all_root.assignment[0]);

    // phi = 0: independent draws from the profile
    const BrokerageMap indep = correlated_broker_assignment(net, profile, 0.0, 3);
    std::vector<double> counts(10, 0.0);
    for (auto b : indep.assignment) counts[static_cast<std::size_t>(b)] += 1.0;
    for (double c : counts)
        CHECK_THAT(c / 20000.0, WithinAbs(0.1, 4.0 * std::sqrt(0.1 * 0.9 / 20000.0)));

    // intermediate phi: parent-child broker agreement happens at rate
    // phi + (1 - phi) * sum P'^2
    const double phi = 0.5;
    const BrokerageMap mid = correlated_broker_assignment(net, profile, phi, 3);
    std::size_t same = 0;
    for (std::size_t k = 1; k < net.nodes; ++k)
        if (mid.assignment[k] == mid.assignment[static_cast<std::size_t>(net.parent[k])]) ++same;
    const double rate = static_cast<double>(same) / static_cast<double>(net.nodes - 1);
    const double expect = phi + (1.0 - phi) * 0.1;
    CHECK_THAT(rate, WithinAbs(expect, 4.0 * std::sqrt(expect * (1 - expect) / 20000.0)));
}

TEST_CASE("realized broker concentration grows with phi") {
    const SocialNetwork net = build_preferential_attachment(5000, 21);
    const BrokerProfile profile = azn_like_profile();
    double previous = -1.0;
    for (double phi : {0.0, 0.5, 0.9, 1.0}) {
        double mean_var = 0.0;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const BrokerageMap map =
                correlated_broker_assignment(net, profile, phi, 100 + seed);
            std::vector<double> counts(profile.size(), 0.0);
            for (auto b : map.assignment) counts[static_cast<std::size_t>(b)] += 1.0;
            for (double& c : counts) c /= static_cast<double>(net.nodes);
            mean_var += frequency_variance(counts);
        }
        mean_var /= 10.0;
        CHECK(mean_var > previous);
        previous = mean_var;
    }
    // phi = 1 concentrates everything in one broker
    CHECK_THAT(previous, WithinAbs(max_frequency_variance(profile.size()), 1e-12));
}

TEST_CASE("align_assignment_to_log matches node assignments through labels") {
    const SocialNetwork net = build_preferential_attachment(50, 5);
    ImitationParams p;
    p.investors = 50;
    p.imitation = 0.6;
    p.events = 5000;
    p.seed = 6;
    const EventLog log = simulate_imitation(net, p);
    const BrokerageMap map =
        correlated_broker_assignment(net, uniform_profile(5), 0.4, 9);
    const BrokerageMap aligned = align_assignment_to_log(map, log);
    for (std::size_t i = 0; i < log.agent_count(); ++i) {
        const std::size_t node = std::stoul(log.agent_label(i));
        CHECK(aligned.assignment[i] == map.assignment[node]);
    }
    const EventLog mapped = apply_map(log, aligned);
    CHECK(mapped.size() == log.size());
}

TEST_CASE("apply_map rejects uncovered investors") {
    const EventLog log = testsup::random_log(100, 10, 3);
    BrokerageMap map;
    map.kind = BrokerageKind::fixed_random;
    map.assignment = {0, 0, 0};  // covers only 3 investors
    map.profile = uniform_profile(2);
    CHECK_THROWS_AS(apply_map(log, map), MappingError);
}

TEST_CASE("realized frequencies sum to one and respect zero-event brokers") {
    const EventLog log = testsup::random_log(2000, 30, 14);
    std::vector<double> freqs;
    for (const auto& s : agent_summaries(log)) freqs.push_back(s.frequency);
    const BrokerageMap map = fixed_random_map(freqs, zipf_profile(6, 1.2), 2);
    const auto realized = realized_broker_frequencies(log, map);
    REQUIRE(realized.size() == 6);
    double sum = 0.0;
    for (double f : realized) sum += f;
    CHECK_THAT(sum, WithinAbs(1.0, 1e-12));
}
