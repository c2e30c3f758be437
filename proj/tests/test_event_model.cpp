#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "orderflow/event_log.hpp"
#include "orderflow/io.hpp"
#include "orderflow/rng.hpp"
#include "orderflow/simulators.hpp"
#include "oracle.hpp"
#include "test_support.hpp"

using namespace orderflow;

TEST_CASE("ingest reads a three-row file") {
    testsup::TempDir dir;
    const std::string path = dir.file("log.csv");
    testsup::write_file(path, "sign,agent,price_changed\nB,a,0\nS,b,1\nB,a,0\n");
    const EventLog log = ingest_csv(path);
    REQUIRE(log.size() == 3);
    REQUIRE(log.agent_count() == 2);
    CHECK(log.agent_label(0) == "a");
    CHECK(log.agent_label(1) == "b");
    CHECK(log.sign(0) == 1);
    CHECK(log.sign(1) == -1);
    CHECK(log.sign(2) == 1);
    CHECK(log.agent(0) == 0);
    CHECK(log.agent(1) == 1);
    CHECK(log.agent(2) == 0);
    CHECK(log.has_price_flags());
    CHECK(log.price_changed(1));
    CHECK_FALSE(log.price_changed(0));
    CHECK(log.event(2).t == 2);
}

TEST_CASE("ingest accepts every documented sign token") {
    testsup::TempDir dir;
    const std::string path = dir.file("log.csv");
    testsup::write_file(path, "sign,agent\nB,x\nS,x\n+1,x\n-1,x\n1,x\n");
    const EventLog log = ingest_csv(path);
    REQUIRE(log.size() == 5);
    CHECK(log.sign(0) == 1);
    CHECK(log.sign(1) == -1);
    CHECK(log.sign(2) == 1);
    CHECK(log.sign(3) == -1);
    CHECK(log.sign(4) == 1);
    CHECK_FALSE(log.has_price_flags());
}

TEST_CASE("ingest rejects a bad sign token with its line number") {
    testsup::TempDir dir;
    const std::string path = dir.file("log.csv");
    testsup::write_file(path, "sign,agent\nX,a\n");
    CHECK_THROWS_MATCHES(ingest_csv(path), ParseError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("line 2")));
}

TEST_CASE("ingest rejects missing fields, bad flags, and empty agents") {
    testsup::TempDir dir;
    const std::string path = dir.file("log.csv");
    testsup::write_file(path, "sign,agent,price_changed\nB,a\n");
    CHECK_THROWS_AS(ingest_csv(path), ParseError);
    testsup::write_file(path, "sign,agent,price_changed\nB,a,2\n");
    CHECK_THROWS_AS(ingest_csv(path), ParseError);
    testsup::write_file(path, "sign,agent\nB,\n");
    CHECK_THROWS_AS(ingest_csv(path), ParseError);
    testsup::write_file(path, "bad,header\nB,a\n");
    CHECK_THROWS_AS(ingest_csv(path), ParseError);
}

TEST_CASE("ingest reports empty logs") {
    testsup::TempDir dir;
    const std::string path = dir.file("log.csv");
    testsup::write_file(path, "sign,agent,price_changed\n");
    CHECK_THROWS_AS(ingest_csv(path), EmptyLogError);
    testsup::write_file(path, "");
    CHECK_THROWS_AS(ingest_csv(path), EmptyLogError);
}

TEST_CASE("ingest handles CRLF and comment lines") {
    testsup::TempDir dir;
    const std::string path = dir.file("log.csv");
    testsup::write_file(path, "# generator=manual\r\nsign,agent\r\nB,a\r\nS,b\r\n");
    const EventLog log = ingest_csv(path);
    REQUIRE(log.size() == 2);
    REQUIRE(log.metadata().size() == 1);
    CHECK(log.metadata()[0] == "generator=manual");
}

TEST_CASE("export then ingest is the identity on a large simulated log") {
    SplittingModelParams p;
    p.investors = 200;
    p.beta = 1.5;
    p.v_min = 2;
    p.pool_size = 4;
    p.events = 1000000;
    p.seed = 99;
    const EventLog original = simulate_splitting(p);

    testsup::TempDir dir;
    const std::string path = dir.file("roundtrip.csv");
    export_csv(original, path);
    const EventLog back = ingest_csv(path);

    REQUIRE(back.size() == original.size());
    REQUIRE(back.agent_count() == original.agent_count());
    CHECK(back.signs() == original.signs());
    CHECK(back.agents() == original.agents());
    CHECK(back.flags() == original.flags());
    CHECK(back.agent_labels() == original.agent_labels());
    CHECK(back.has_price_flags() == original.has_price_flags());
}

TEST_CASE("flag-less logs stay flag-less across a round trip") {
    const EventLog log = testsup::random_log(50, 3, 7);
    REQUIRE_FALSE(log.has_price_flags());
    testsup::TempDir dir;
    const std::string path = dir.file("log.csv");
    export_csv(log, path);
    const EventLog back = ingest_csv(path);
    CHECK_FALSE(back.has_price_flags());
    export_csv(back, dir.file("log2.csv"));
    CHECK(testsup::read_file(path) == testsup::read_file(dir.file("log2.csv")));
}

TEST_CASE("filter_inactive drops agents below the threshold and re-indexes") {
    std::vector<std::tuple<int, int, bool>> rows;
    for (int k = 0; k < 150; ++k) rows.emplace_back(k % 2 ? 1 : -1, 0, false);
    for (int k = 0; k < 50; ++k) rows.emplace_back(1, 1, false);
    const EventLog log = testsup::scripted_log(rows, 2);

    const EventLog kept = filter_inactive(log, 100);
    REQUIRE(kept.size() == 150);
    REQUIRE(kept.agent_count() == 1);
    CHECK(kept.agent_label(0) == "a0");
    for (std::size_t t = 0; t < kept.size(); ++t) CHECK(kept.agent(t) == 0);
}

TEST_CASE("filter_inactive with threshold 1 is the identity") {
    const EventLog log = testsup::random_log(500, 7, 3);
    const EventLog same = filter_inactive(log, 1);
    CHECK(same.signs() == log.signs());
    CHECK(same.agents() == log.agents());
    CHECK(same.agent_labels() == log.agent_labels());
}

TEST_CASE("filter_inactive is idempotent") {
    const EventLog log = testsup::random_log(2000, 40, 11);
    const EventLog once = filter_inactive(log, 30);
    const EventLog twice = filter_inactive(once, 30);
    CHECK(twice.signs() == once.signs());
    CHECK(twice.agents() == once.agents());
    CHECK(twice.agent_labels() == once.agent_labels());
}

TEST_CASE("filter_inactive throws when nothing survives") {
    const EventLog log = testsup::random_log(50, 10, 5);
    CHECK_THROWS_AS(filter_inactive(log, 1000), EmptyLogError);
}

TEST_CASE("filter_inactive survivor count matches the histogram on Zipf activity") {
    // 100 agents, activity drawn from a Zipf profile over ~20k events.
    Rng rng(17);
    DiscreteSampler pick(zipf_profile(100, 1.1).frequencies);
    std::vector<std::int8_t> signs;
    std::vector<std::int32_t> agents;
    for (std::size_t t = 0; t < 20000; ++t) {
        signs.push_back(static_cast<std::int8_t>(rng.uniform_sign()));
        agents.push_back(static_cast<std::int32_t>(pick(rng)));
    }
    std::vector<std::string> labels;
    for (int i = 0; i < 100; ++i) labels.push_back(std::to_string(i));
    // Registry requires every agent to appear; restrict to those drawn.
    std::vector<std::int32_t> remap(100, -1);
    std::vector<std::string> used_labels;
    for (auto& a : agents) {
        if (remap[a] < 0) {
            remap[a] = static_cast<std::int32_t>(used_labels.size());
            used_labels.push_back(labels[a]);
        }
        a = remap[a];
    }
    const EventLog log(std::move(signs), std::move(agents), std::move(used_labels));

    std::vector<std::int64_t> histogram = agent_event_counts(log);
    std::int64_t expected_events = 0;
    std::size_t expected_agents = 0;
    for (std::int64_t c : histogram) {
        if (c >= 100) {
            expected_events += c;
            ++expected_agents;
        }
    }
    const EventLog kept = filter_inactive(log, 100);
    CHECK(kept.size() == static_cast<std::size_t>(expected_events));
    CHECK(kept.agent_count() == expected_agents);
}

TEST_CASE("agent summaries compute exact frequencies and mean signs") {
    const EventLog log = testsup::scripted_log(
        {{1, 0, false}, {1, 0, false}, {-1, 0, false}, {1, 0, false}}, 1);
    const auto s = agent_summaries(log);
    REQUIRE(s.size() == 1);
    CHECK(s[0].frequency == 1.0);
    CHECK(s[0].mean_sign == 0.5);
    CHECK(s[0].count == 4);
}

TEST_CASE("two strictly alternating agents have equal frequencies") {
    std::vector<std::tuple<int, int, bool>> rows;
    for (int k = 0; k < 100; ++k) rows.emplace_back(k % 2 ? 1 : -1, k % 2, false);
    const auto s = agent_summaries(testsup::scripted_log(rows, 2));
    REQUIRE(s.size() == 2);
    CHECK(s[0].frequency == 0.5);
    CHECK(s[1].frequency == 0.5);
}

TEST_CASE("frequencies always sum to one and counts to N") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        const EventLog log = testsup::random_log(5000, 23, seed);
        const auto s = agent_summaries(log);
        double fsum = 0.0;
        std::int64_t csum = 0;
        for (const auto& a : s) {
            fsum += a.frequency;
            csum += a.count;
            CHECK(std::abs(a.mean_sign) <= 1.0);
            CHECK(a.count >= 1);
        }
        CHECK(csum == static_cast<std::int64_t>(log.size()));
        CHECK_THAT(fsum, Catch::Matchers::WithinAbs(1.0, 1e-12));

        const EventLog kept = filter_inactive(log, 100);
        double fsum2 = 0.0;
        std::int64_t csum2 = 0;
        for (const auto& a : agent_summaries(kept)) {
            fsum2 += a.frequency;
            csum2 += a.count;
        }
        CHECK(csum2 == static_cast<std::int64_t>(kept.size()));
        CHECK_THAT(fsum2, Catch::Matchers::WithinAbs(1.0, 1e-12));
    }
}

TEST_CASE("realistic member-scale logs have small per-agent mean signs") {
    PublicInfoParams p;
    p.frequencies = zipf_profile(80, 1.0).frequencies;
    p.run_tail = 1.5;
    p.n_min = 1;
    p.events = 100000;
    p.seed = 5;
    const EventLog log = simulate_public_info(p);
    double mu_abs = 0.0;
    for (const auto& s : agent_summaries(log)) mu_abs += std::abs(s.mean_sign);
    mu_abs /= 80.0;
    // order-of-magnitude check: |mu^i| is a few percent, not ~1
    CHECK(mu_abs > 0.001);
    CHECK(mu_abs < 0.2);
}

TEST_CASE("gini matches hand values and the double-sum oracle") {
    std::vector<std::tuple<int, int, bool>> rows;
    for (int a = 0; a < 4; ++a)
        for (int k = 0; k < (a == 3 ? 97 : 1); ++k) rows.emplace_back(1, a, false);
    const EventLog log = testsup::scripted_log(rows, 4);
    CHECK_THAT(gini(log), Catch::Matchers::WithinAbs(0.72, 1e-12));
    CHECK_THAT(gini(log), Catch::Matchers::WithinAbs(oracle::gini({1, 1, 1, 97}), 1e-12));

    // equal counts -> 0
    std::vector<std::tuple<int, int, bool>> eq;
    for (int a = 0; a < 5; ++a)
        for (int k = 0; k < 10; ++k) eq.emplace_back(1, a, false);
    CHECK_THAT(gini(testsup::scripted_log(eq, 5)), Catch::Matchers::WithinAbs(0.0, 1e-12));

    // one agent -> 0
    CHECK(gini(testsup::scripted_log({{1, 0, false}, {-1, 0, false}}, 1)) == 0.0);
}

TEST_CASE("gini agrees with the oracle on random logs and ignores labels") {
    for (std::uint64_t seed : {4ull, 9ull}) {
        const EventLog log = testsup::random_log(3000, 17, seed);
        CHECK_THAT(gini(log), Catch::Matchers::WithinAbs(
                                  oracle::gini(agent_event_counts(log)), 1e-12));

        // permuting agent ids leaves the activity distribution unchanged
        std::vector<std::int32_t> perm(17);
        for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<std::int32_t>(i);
        Rng rng(seed + 100);
        shuffle_in_place(perm, rng);
        std::vector<std::int32_t> relabeled(log.agents());
        for (auto& a : relabeled) a = perm[a];
        std::vector<std::string> labels(17);
        for (std::size_t i = 0; i < 17; ++i) labels[perm[i]] = log.agent_label(i);
        const EventLog permuted(std::vector<std::int8_t>(log.signs()), std::move(relabeled),
                                std::move(labels));
        CHECK_THAT(gini(permuted), Catch::Matchers::WithinAbs(gini(log), 1e-12));
    }
}

TEST_CASE("member activity tuned to LSE-like concentration") {
    // 100 members: a slow Zipf head over the 15 most active, a Zipf
    // middle band, and 60 members trading a handful of times. Gini lands
    // near 0.87 while the five most active carry 40-50% of the events.
    std::vector<double> weights;
    double head_sum = 0.0, mid_sum = 0.0;
    for (int k = 1; k <= 15; ++k) head_sum += std::pow(k, -0.45);
    for (int k = 1; k <= 25; ++k) mid_sum += 1.0 / k;
    for (int k = 1; k <= 15; ++k) weights.push_back(0.935 * std::pow(k, -0.45) / head_sum);
    for (int k = 1; k <= 25; ++k) weights.push_back(0.06 / (mid_sum * k));
    for (int k = 1; k <= 60; ++k) weights.push_back(0.005 / 60.0);

    std::vector<std::int8_t> signs;
    std::vector<std::int32_t> agents;
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const auto count = std::max<std::int64_t>(1, std::llround(weights[i] * 100000.0));
        for (std::int64_t k = 0; k < count; ++k) {
            signs.push_back(k % 2 ? 1 : -1);
            agents.push_back(static_cast<std::int32_t>(i));
        }
        labels.push_back(std::to_string(i));
    }
    const EventLog log(std::move(signs), std::move(agents), std::move(labels));

    const double g = gini(log);
    CHECK(g > 0.84);
    CHECK(g < 0.90);

    std::vector<double> freqs;
    for (const auto& a : agent_summaries(log)) freqs.push_back(a.frequency);
    std::sort(freqs.rbegin(), freqs.rend());
    double top5 = 0.0, top15 = 0.0;
    for (int i = 0; i < 15; ++i) {
        if (i < 5) top5 += freqs[i];
        top15 += freqs[i];
    }
    CHECK(top5 > 0.40);
    CHECK(top5 < 0.50);
    CHECK(top15 > 0.85);
}

TEST_CASE("event log construction validates its columns") {
    CHECK_THROWS_AS(EventLog({}, {}, {}), EmptyLogError);
    CHECK_THROWS_AS(EventLog({2}, {0}, {"a"}), std::invalid_argument);
    CHECK_THROWS_AS(EventLog({1}, {1}, {"a"}), std::invalid_argument);
    CHECK_THROWS_AS(EventLog({1, 1}, {0}, {"a"}), std::invalid_argument);
}
