// Command-line front end: ingestion checks, simulators, brokerage maps,
// decomposition, permutation tests, conditional probabilities, and the
// null-hypothesis scenario sweeps. Every run echoes its effective
// configuration into the output files and is bit-reproducible for a
// fixed seed, independent of --threads.

#include "orderflow/orderflow.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace orderflow;

namespace {

std::string fmt(double v) { return detail::format_double(v); }

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open output file: " + path.string());
    return out;
}

void write_header(std::ofstream& out, const std::string& command,
                  const std::vector<std::string>& echo) {
    out << "# orderflow " << command << '\n';
    for (const auto& e : echo) out << "# " << e << '\n';
}

// Profile spec: "azn", "uniform:M", "zipf:M:S", "var:M:V", or a CSV path.
BrokerProfile parse_profile(const std::string& spec) {
    if (spec == "azn") return azn_like_profile();
    auto split = [](const std::string& s) {
        std::vector<std::string> parts;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ':')) parts.push_back(item);
        return parts;
    };
    const auto parts = split(spec);
    try {
        if (parts.size() == 2 && parts[0] == "uniform")
            return uniform_profile(std::stoul(parts[1]));
        if (parts.size() == 3 && parts[0] == "zipf")
            return zipf_profile(std::stoul(parts[1]), std::stod(parts[2]));
        if (parts.size() == 3 && parts[0] == "var")
            return profile_with_variance(std::stoul(parts[1]), std::stod(parts[2]));
    } catch (const RangeError&) {
        throw;
    } catch (const std::exception&) {
        throw Error("bad profile spec: " + spec);
    }
    return read_broker_profile(spec);
}

std::vector<double> parse_sweep(const std::string& spec) {
    std::vector<double> values;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            values.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw Error("bad sweep value: " + item);
        }
    }
    if (values.empty()) throw Error("empty sweep specification");
    return values;
}

// ---------------------------------------------------------------------------
// ingest-check
// ---------------------------------------------------------------------------

struct IngestCheckArgs {
    std::string input;
};

int run_ingest_check(const IngestCheckArgs& a) {
    const EventLog log = ingest_csv(a.input);
    const auto summaries = agent_summaries(log);
    std::vector<double> freqs;
    double mu_abs = 0.0;
    for (const auto& s : summaries) {
        freqs.push_back(s.frequency);
        mu_abs += std::abs(s.mean_sign);
    }
    std::sort(freqs.rbegin(), freqs.rend());
    auto top_share = [&](std::size_t k) {
        double sum = 0.0;
        for (std::size_t i = 0; i < std::min(k, freqs.size()); ++i) sum += freqs[i];
        return sum;
    };
    std::cout << "events: " << log.size() << '\n'
              << "agents: " << log.agent_count() << '\n'
              << "price_flags: " << (log.has_price_flags() ? "present" : "absent") << '\n'
              << "gini: " << fmt(gini(log)) << '\n'
              << "top5_share: " << fmt(top_share(5)) << '\n'
              << "top15_share: " << fmt(top_share(15)) << '\n'
              << "mean_abs_mu: " << fmt(mu_abs / static_cast<double>(summaries.size())) << '\n';
    for (const auto& m : log.metadata()) std::cout << "metadata: " << m << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string model;
    std::size_t agents = 100;
    std::size_t n = 100000;
    std::uint64_t seed = 0;
    std::string out;
    // splitting
    double beta = 1.5;
    std::int64_t v_min = 1;
    std::size_t pool_size = 5;
    // public-info
    std::string freq = "uniform";
    double zipf_s = 0.9;
    std::string freq_profile;
    double run_tail = 1.5;
    std::int64_t n_min = 1;
    // imitation
    double imitation_p = 0.9;
    std::string network_out;
};

int run_simulate(const SimulateArgs& a) {
    EventLog log;
    if (a.model == "splitting") {
        SplittingModelParams p;
        p.investors = a.agents;
        p.beta = a.beta;
        p.v_min = a.v_min;
        p.pool_size = a.pool_size;
        p.events = a.n;
        p.seed = a.seed;
        log = simulate_splitting(p);
    } else if (a.model == "public-info") {
        PublicInfoParams p;
        if (!a.freq_profile.empty()) p.frequencies = read_broker_profile(a.freq_profile).frequencies;
        else if (a.freq == "uniform") p.frequencies = uniform_profile(a.agents).frequencies;
        else if (a.freq == "zipf") p.frequencies = zipf_profile(a.agents, a.zipf_s).frequencies;
        else throw Error("bad --freq value: " + a.freq);
        p.run_tail = a.run_tail;
        p.n_min = a.n_min;
        p.events = a.n;
        p.seed = a.seed;
        log = simulate_public_info(p);
    } else {
        SocialNetwork net = build_preferential_attachment(a.agents, derive_seed(a.seed, 0x6e6574ull));
        if (!a.network_out.empty()) write_network(net, a.network_out);
        ImitationParams p;
        p.investors = a.agents;
        p.imitation = a.imitation_p;
        p.events = a.n;
        p.seed = a.seed;
        log = simulate_imitation(net, p);
    }
    export_csv(log, a.out);
    std::cout << "wrote " << log.size() << " events to " << a.out << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// map
// ---------------------------------------------------------------------------

struct MapArgs {
    std::string kind;
    std::string profile_spec;
    std::string input;
    std::string out;
    std::string network;
    std::string export_map;
    double phi = 0.0;
    std::uint64_t seed = 0;
};

int run_map(const MapArgs& a) {
    const EventLog investors = ingest_csv(a.input);
    const BrokerProfile profile = parse_profile(a.profile_spec);

    BrokerageMap map;
    if (a.kind == "fixed") {
        std::vector<double> freqs;
        for (const auto& s : agent_summaries(investors)) freqs.push_back(s.frequency);
        map = fixed_random_map(freqs, profile, a.seed);
    } else if (a.kind == "dynamic") {
        map = dynamic_random_map(profile, a.seed);
    } else {
        if (a.network.empty()) throw Error("--kind correlated requires --network");
        const SocialNetwork net = read_network(a.network);
        map = align_assignment_to_log(
            correlated_broker_assignment(net, profile, a.phi, a.seed), investors);
    }

    const EventLog brokers = apply_map(investors, map);
    export_csv(brokers, a.out);
    if (!a.export_map.empty()) write_brokerage_map(map, investors.agent_labels(), a.export_map);
    std::cout << "mapped " << investors.agent_count() << " investors onto "
              << brokers.agent_count() << " active brokers\n";
    return 0;
}

// ---------------------------------------------------------------------------
// decompose
// ---------------------------------------------------------------------------

struct DecomposeArgs {
    std::string input;
    std::size_t tau_max = 100;
    std::string out;
    std::size_t top_k = 15;
    std::size_t scatter_tau = 1;
    std::size_t memory_cap_mb = 512;
    std::vector<std::string> conditions;
};

int run_decompose(const DecomposeArgs& a) {
    const EventLog log = ingest_csv(a.input);
    fs::create_directories(a.out);
    const std::vector<std::string> echo = {
        "input=" + a.input,
        "tau_max=" + std::to_string(a.tau_max),
        "top_k=" + std::to_string(a.top_k),
        "scatter_tau=" + std::to_string(a.scatter_tau),
        "events=" + std::to_string(log.size()),
        "agents=" + std::to_string(log.agent_count()),
    };

    const DecompositionResult r = decompose(log, a.tau_max);
    {
        std::ofstream out = open_out(fs::path(a.out) / "decomposition.csv");
        write_header(out, "decompose", echo);
        out << "tau,C,C_split,C_herd,S,term2_total\n";
        for (std::size_t k = 0; k < r.tau_max; ++k)
            out << (k + 1) << ',' << fmt(r.C[k]) << ',' << fmt(r.C_split[k]) << ','
                << fmt(r.C_herd[k]) << ',' << fmt(r.S[k]) << ','
                << fmt(r.term2_split[k] + r.term2_herd[k]) << '\n';
    }
    {
        std::ofstream out = open_out(fs::path(a.out) / "splitting_ratio.csv");
        write_header(out, "decompose", echo);
        out << "tau,S\n";
        for (std::size_t k = 0; k < r.tau_max; ++k) out << (k + 1) << ',' << fmt(r.S[k]) << '\n';
    }

    // Per-agent diagonal curves for the top-k most active agents.
    const DiagonalStatistics ds = diagonal_statistics(log, a.tau_max);
    std::vector<std::size_t> order(log.agent_count());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        if (ds.P_i[x] != ds.P_i[y]) return ds.P_i[x] > ds.P_i[y];
        return x < y;
    });
    const std::size_t top = std::min(a.top_k, order.size());
    {
        std::ofstream out = open_out(fs::path(a.out) / "agent_diagonals.csv");
        write_header(out, "decompose", echo);
        out << "agent,label,tau,C_ii,P_tilde_ii\n";
        for (std::size_t rank = 0; rank < top; ++rank) {
            const std::size_t i = order[rank];
            for (std::size_t tau = 1; tau <= a.tau_max; ++tau)
                out << i << ',' << log.agent_label(i) << ',' << tau << ','
                    << fmt(ds.c_ii[ds.index(tau, i)]) << ','
                    << fmt(ds.p_tilde_ii[ds.index(tau, i)]) << '\n';
        }
    }

    // Joint-activity scatter at one lag.
    {
        const PairStatistics ps =
            pair_statistics(log, a.scatter_tau, a.memory_cap_mb * 1024 * 1024);
        std::ofstream out = open_out(fs::path(a.out) / "pij_scatter.csv");
        write_header(out, "decompose", echo);
        out << "i,j,P_ij,PiPj,diagonal\n";
        const std::size_t m = log.agent_count();
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                out << i << ',' << j << ',' << fmt(ps.p(a.scatter_tau, i, j)) << ','
                    << fmt(ps.P_i[i] * ps.P_i[j]) << ',' << (i == j ? 1 : 0) << '\n';
    }

    for (const auto& cond_name : a.conditions) {
        const PriceCondition cond = cond_name == "price-change" ? PriceCondition::price_change
                                                                : PriceCondition::no_price_change;
        const DecompositionResult cr = conditional_decompose(log, a.tau_max, cond);
        const std::string fname = std::string("conditional_") +
                                  (cond == PriceCondition::price_change ? "price_change"
                                                                        : "no_price_change") +
                                  ".csv";
        std::ofstream out = open_out(fs::path(a.out) / fname);
        write_header(out, "decompose", echo);
        out << "tau,C,C_split,C_herd,S,term2_total,condition\n";
        for (std::size_t k = 0; k < cr.tau_max; ++k)
            out << (k + 1) << ',' << fmt(cr.C[k]) << ',' << fmt(cr.C_split[k]) << ','
                << fmt(cr.C_herd[k]) << ',' << fmt(cr.S[k]) << ','
                << fmt(cr.term2_split[k] + cr.term2_herd[k]) << ',' << to_string(cond) << '\n';
    }

    std::cout << "wrote decomposition tables to " << a.out << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// nulltest
// ---------------------------------------------------------------------------

struct NulltestArgs {
    std::string input;
    std::size_t tau_max = 50;
    std::size_t replicates = 1000;
    double alpha = 0.05;
    std::uint64_t seed = 0;
    bool joint = false;
    std::string out;
};

int run_nulltest(const NulltestArgs& a) {
    const EventLog log = ingest_csv(a.input);
    if (a.replicates > 100000)
        std::cerr << "note: " << a.replicates << " replicates; expect a long run\n";
    ShuffleTestOptions opt;
    opt.tau_max = a.tau_max;
    opt.replicates = a.replicates;
    opt.alpha = a.alpha;
    opt.seed = a.seed;
    opt.joint_permutation = a.joint;
    const ShuffleTestResult res = shuffle_test(log, opt);

    fs::create_directories(a.out);
    const std::vector<std::string> echo = {
        "input=" + a.input,
        "tau_max=" + std::to_string(a.tau_max),
        "replicates=" + std::to_string(a.replicates),
        "alpha=" + fmt(a.alpha),
        "seed=" + std::to_string(a.seed),
        std::string("scheme=") + (a.joint ? "joint-permutation" : "independent-permutations"),
    };
    {
        std::ofstream out = open_out(fs::path(a.out) / "nulltest.csv");
        write_header(out, "nulltest", echo);
        out << "tau,p_value,reject\n";
        for (std::size_t k = 0; k < res.p_values.size(); ++k)
            out << (k + 1) << ',' << fmt(res.p_values[k]) << ',' << (res.reject[k] ? 1 : 0)
                << '\n';
    }
    {
        json j;
        j["replicates"] = res.options.replicates;
        j["alpha"] = res.options.alpha;
        j["seed"] = res.options.seed;
        j["scheme"] = a.joint ? "joint-permutation" : "independent-permutations";
        j["tau_max"] = res.options.tau_max;
        j["rejection_fraction"] = res.rejection_fraction;
        std::ofstream out = open_out(fs::path(a.out) / "nulltest_summary.json");
        out << j.dump(2) << '\n';
    }
    std::cout << "rejection fraction " << fmt(res.rejection_fraction) << "; tables in " << a.out
              << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// condprob
// ---------------------------------------------------------------------------

struct CondprobArgs {
    std::string input;
    std::size_t tau_max = 100;
    std::string out;
};

int run_condprob(const CondprobArgs& a) {
    const EventLog log = ingest_csv(a.input);
    const ConditionalProbabilities cp = conditional_probabilities(log, a.tau_max);
    fs::create_directories(a.out);
    const std::vector<std::string> echo = {
        "input=" + a.input,
        "tau_max=" + std::to_string(a.tau_max),
    };
    std::ofstream out = open_out(fs::path(a.out) / "condprob.csv");
    write_header(out, "condprob", echo);
    out << "tau,p_same_nochange,p_same_change,excess_nochange,excess_change,"
           "p_same_samebroker_nochange,p_same_samebroker_change,"
           "p_same_diffbroker_nochange,p_same_diffbroker_change\n";
    for (std::size_t k = 0; k < cp.tau_max; ++k)
        out << (k + 1) << ',' << fmt(cp.same_given_nochange[k]) << ','
            << fmt(cp.same_given_change[k]) << ',' << fmt(cp.excess_nochange[k]) << ','
            << fmt(cp.excess_change[k]) << ',' << fmt(cp.same_broker_nochange[k]) << ','
            << fmt(cp.same_broker_change[k]) << ',' << fmt(cp.diff_broker_nochange[k]) << ','
            << fmt(cp.diff_broker_change[k]) << '\n';
    std::cout << "wrote conditional probabilities to " << a.out << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// scenario
// ---------------------------------------------------------------------------

struct ScenarioArgs {
    std::string name;
    std::string sweep;
    std::size_t seeds = 20;
    std::string out;
    std::size_t investors = 2000;
    std::size_t brokers = 50;
    std::size_t n = 100000;
    std::size_t tau_lo = 1;
    std::size_t tau_hi = 50;
    std::uint64_t seed = 0;
    double beta = 1.5;
    std::int64_t v_min = 1;
    std::size_t pool_size = 5;
    double run_tail = 1.5;
    std::int64_t n_min = 1;
    double imitation_p = 0.9;
    std::string profile_spec = "azn";
};

struct ScenarioRow {
    std::size_t point = 0;
    double sweep_value = 0.0;
    double var_target = 0.0;
    double var_realized = 0.0;
    double phi = 0.0;
    std::uint64_t seed = 0;
    double s_bar = 0.0;
    double eq14_split = 0.0;
};

int run_scenario(const ScenarioArgs& a) {
    const std::vector<double> sweep = parse_sweep(a.sweep);
    if (a.seeds < 1) throw Error("--seeds must be >= 1");

    std::vector<ScenarioRow> rows;
    for (std::size_t point = 0; point < sweep.size(); ++point) {
        for (std::size_t rep = 0; rep < a.seeds; ++rep) {
            const std::uint64_t run_seed = derive_seed(a.seed, point * 100003ull + rep);
            ScenarioRow row;
            row.point = point;
            row.sweep_value = sweep[point];
            row.seed = run_seed;

            if (a.name == "imitation-frb") {
                row.phi = sweep[point];
                const BrokerProfile profile = parse_profile(a.profile_spec);
                const SocialNetwork net =
                    build_preferential_attachment(a.investors, derive_seed(run_seed, 1));
                ImitationParams p;
                p.investors = a.investors;
                p.imitation = a.imitation_p;
                p.events = a.n;
                p.seed = derive_seed(run_seed, 3);
                const EventLog investors = simulate_imitation(net, p);
                const BrokerageMap map = align_assignment_to_log(
                    correlated_broker_assignment(net, profile, row.phi, derive_seed(run_seed, 2)),
                    investors);
                const std::vector<double> realized = realized_broker_frequencies(investors, map);
                row.var_target = frequency_variance(profile);
                row.var_realized = frequency_variance(realized);
                const EventLog brokers = apply_map(investors, map);
                row.s_bar = mean_splitting_ratio(decompose(brokers, a.tau_hi), a.tau_lo, a.tau_hi);
                row.eq14_split = eq14_prediction(a.brokers, row.var_realized).split;
            } else {
                const BrokerProfile profile = profile_with_variance(a.brokers, sweep[point]);
                row.var_target = frequency_variance(profile);
                EventLog investors;
                if (a.name == "pi-frb") {
                    PublicInfoParams p;
                    p.frequencies = uniform_profile(a.investors).frequencies;
                    p.run_tail = a.run_tail;
                    p.n_min = a.n_min;
                    p.events = a.n;
                    p.seed = derive_seed(run_seed, 3);
                    investors = simulate_public_info(p);
                } else {  // drb, splitting-frb
                    SplittingModelParams p;
                    p.investors = a.investors;
                    p.beta = a.beta;
                    p.v_min = a.v_min;
                    p.pool_size = a.pool_size;
                    p.events = a.n;
                    p.seed = derive_seed(run_seed, 3);
                    investors = simulate_splitting(p);
                }
                BrokerageMap map;
                if (a.name == "drb") {
                    map = dynamic_random_map(profile, derive_seed(run_seed, 2));
                } else {
                    std::vector<double> freqs;
                    for (const auto& s : agent_summaries(investors)) freqs.push_back(s.frequency);
                    map = fixed_random_map(freqs, profile, derive_seed(run_seed, 2));
                }
                const std::vector<double> realized = realized_broker_frequencies(investors, map);
                row.var_realized = frequency_variance(realized);
                const EventLog brokers = apply_map(investors, map);
                row.s_bar = mean_splitting_ratio(decompose(brokers, a.tau_hi), a.tau_lo, a.tau_hi);
                row.eq14_split = eq14_prediction(a.brokers, row.var_target).split;
            }
            rows.push_back(row);
        }
    }

    fs::create_directories(a.out);
    const std::vector<std::string> echo = {
        "name=" + a.name,
        "sweep=" + a.sweep,
        "seeds=" + std::to_string(a.seeds),
        "investors=" + std::to_string(a.investors),
        "brokers=" + std::to_string(a.brokers),
        "n=" + std::to_string(a.n),
        "tau_window=" + std::to_string(a.tau_lo) + ".." + std::to_string(a.tau_hi),
        "seed=" + std::to_string(a.seed),
    };
    {
        std::ofstream out = open_out(fs::path(a.out) / "scenario.csv");
        write_header(out, "scenario", echo);
        out << "scenario,point,sweep_value,var_target,var_realized,phi,seed,S_bar,eq14_split\n";
        for (const auto& r : rows)
            out << a.name << ',' << r.point << ',' << fmt(r.sweep_value) << ','
                << fmt(r.var_target) << ',' << fmt(r.var_realized) << ',' << fmt(r.phi) << ','
                << r.seed << ',' << fmt(r.s_bar) << ',' << fmt(r.eq14_split) << '\n';
    }
    {
        std::ofstream out = open_out(fs::path(a.out) / "scenario_summary.csv");
        write_header(out, "scenario", echo);
        out << "scenario,point,sweep_value,var_realized_mean,S_bar_mean,S_bar_se,eq14_split\n";
        for (std::size_t point = 0; point < sweep.size(); ++point) {
            double sum = 0.0, sq = 0.0, var_sum = 0.0, pred = 0.0;
            std::size_t count = 0;
            for (const auto& r : rows) {
                if (r.point != point) continue;
                sum += r.s_bar;
                sq += r.s_bar * r.s_bar;
                var_sum += r.var_realized;
                pred = r.eq14_split;
                ++count;
            }
            const double c = static_cast<double>(count);
            const double mean = sum / c;
            const double var = std::max(0.0, sq / c - mean * mean);
            const double se = count > 1 ? std::sqrt(var / (c - 1.0)) : 0.0;
            out << a.name << ',' << point << ',' << fmt(sweep[point]) << ',' << fmt(var_sum / c)
                << ',' << fmt(mean) << ',' << fmt(se) << ',' << fmt(pred) << '\n';
        }
    }
    std::cout << "wrote scenario tables to " << a.out << '\n';
    return 0;
}

int dispatch_error(const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    if (dynamic_cast<const ParseError*>(&e)) return 2;
    if (dynamic_cast<const EmptyLogError*>(&e)) return 3;
    if (dynamic_cast<const MissingDataError*>(&e)) return 4;
    if (dynamic_cast<const CapacityError*>(&e)) return 5;
    if (dynamic_cast<const FeasibilityError*>(&e)) return 6;
    if (dynamic_cast<const ResolutionError*>(&e)) return 7;
    if (dynamic_cast<const InsufficientDataError*>(&e)) return 8;
    if (dynamic_cast<const RangeError*>(&e)) return 9;
    if (dynamic_cast<const MappingError*>(&e)) return 10;
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"order-flow persistence toolkit"};
    app.require_subcommand(1);
    std::size_t threads = 0;
    app.add_option("--threads", threads, "worker thread count (0 = hardware)");

    IngestCheckArgs ic;
    auto* sub_ic = app.add_subcommand("ingest-check", "validate a log and print a summary");
    sub_ic->add_option("--input", ic.input, "event-log CSV")->required();
    sub_ic->set_config("--config");

    SimulateArgs sim;
    auto* sub_sim = app.add_subcommand("simulate", "generate a synthetic investor-level log");
    sub_sim->add_option("--model", sim.model, "splitting | public-info | imitation")
        ->required()
        ->check(CLI::IsMember({"splitting", "public-info", "imitation"}));
    sub_sim->add_option("--agents", sim.agents, "investor count");
    sub_sim->add_option("--n", sim.n, "events to generate")->required();
    sub_sim->add_option("--seed", sim.seed, "RNG seed");
    sub_sim->add_option("--out", sim.out, "output log CSV")->required();
    sub_sim->add_option("--beta", sim.beta, "metaorder size tail exponent (splitting)");
    sub_sim->add_option("--v-min", sim.v_min, "minimum metaorder size (splitting)");
    sub_sim->add_option("--pool-size", sim.pool_size, "concurrent metaorders (splitting)");
    sub_sim->add_option("--freq", sim.freq, "uniform | zipf (public-info)");
    sub_sim->add_option("--zipf-s", sim.zipf_s, "zipf exponent for --freq zipf");
    sub_sim->add_option("--freq-profile", sim.freq_profile,
                        "investor frequencies from a broker,frequency CSV (public-info)");
    sub_sim->add_option("--run-tail", sim.run_tail, "run-length tail exponent (public-info)");
    sub_sim->add_option("--n-min", sim.n_min, "minimum run length (public-info)");
    sub_sim->add_option("--imitation-p", sim.imitation_p, "imitation probability");
    sub_sim->add_option("--network-out", sim.network_out, "write the social network (imitation)");
    sub_sim->set_config("--config");

    MapArgs mp;
    auto* sub_map = app.add_subcommand("map", "translate an investor log to broker level");
    sub_map->add_option("--kind", mp.kind, "fixed | dynamic | correlated")
        ->required()
        ->check(CLI::IsMember({"fixed", "dynamic", "correlated"}));
    sub_map->add_option("--profile", mp.profile_spec,
                        "broker profile: azn | uniform:M | zipf:M:S | var:M:V | CSV path")
        ->required();
    sub_map->add_option("--in", mp.input, "investor-level log CSV")->required();
    sub_map->add_option("--out", mp.out, "broker-level log CSV")->required();
    sub_map->add_option("--phi", mp.phi, "neighbor-correlation (correlated kind)");
    sub_map->add_option("--network", mp.network, "social network CSV (correlated kind)");
    sub_map->add_option("--seed", mp.seed, "RNG seed");
    sub_map->add_option("--export-map", mp.export_map, "write investor,broker audit CSV");
    sub_map->set_config("--config");

    DecomposeArgs dec;
    auto* sub_dec = app.add_subcommand("decompose", "split/herd decomposition tables");
    sub_dec->add_option("--input", dec.input, "event-log CSV")->required();
    sub_dec->add_option("--tau-max", dec.tau_max, "maximum lag");
    sub_dec->add_option("--out", dec.out, "output directory")->required();
    sub_dec->add_option("--top-k", dec.top_k, "agents in the diagonal table");
    sub_dec->add_option("--scatter-tau", dec.scatter_tau, "lag for the joint-activity scatter");
    sub_dec->add_option("--memory-cap-mb", dec.memory_cap_mb, "pairwise storage cap");
    sub_dec->add_option("--condition", dec.conditions,
                        "also write a conditional decomposition (price-change | no-price-change)")
        ->check(CLI::IsMember({"price-change", "no-price-change"}));
    sub_dec->set_config("--config");

    NulltestArgs nt;
    auto* sub_nt = app.add_subcommand("nulltest", "shuffle significance test for anti-herding");
    sub_nt->add_option("--input", nt.input, "event-log CSV")->required();
    sub_nt->add_option("--tau-max", nt.tau_max, "maximum lag");
    sub_nt->add_option("--replicates", nt.replicates, "null realizations");
    sub_nt->add_option("--alpha", nt.alpha, "significance level");
    sub_nt->add_option("--seed", nt.seed, "RNG seed");
    sub_nt->add_flag("--joint", nt.joint, "permute (sign,agent) pairs jointly");
    sub_nt->add_option("--out", nt.out, "output directory")->required();
    sub_nt->set_config("--config");

    CondprobArgs cpr;
    auto* sub_cp = app.add_subcommand("condprob", "same-sign probabilities by price impact");
    sub_cp->add_option("--input", cpr.input, "event-log CSV")->required();
    sub_cp->add_option("--tau-max", cpr.tau_max, "maximum lag");
    sub_cp->add_option("--out", cpr.out, "output directory")->required();
    sub_cp->set_config("--config");

    ScenarioArgs sc;
    auto* sub_sc = app.add_subcommand("scenario", "null-hypothesis sweeps");
    sub_sc->add_option("--name", sc.name, "pi-frb | imitation-frb | drb | splitting-frb")
        ->required()
        ->check(CLI::IsMember({"pi-frb", "imitation-frb", "drb", "splitting-frb"}));
    sub_sc->add_option("--sweep", sc.sweep, "comma list of Var[P'] (or phi) values")->required();
    sub_sc->add_option("--seeds", sc.seeds, "replicates per sweep point");
    sub_sc->add_option("--out", sc.out, "output directory")->required();
    sub_sc->add_option("--investors", sc.investors, "investor count");
    sub_sc->add_option("--brokers", sc.brokers, "broker count");
    sub_sc->add_option("--n", sc.n, "events per run");
    sub_sc->add_option("--tau-lo", sc.tau_lo, "ratio window lower lag");
    sub_sc->add_option("--tau-hi", sc.tau_hi, "ratio window upper lag");
    sub_sc->add_option("--seed", sc.seed, "base seed");
    sub_sc->add_option("--beta", sc.beta, "splitting tail exponent");
    sub_sc->add_option("--v-min", sc.v_min, "splitting minimum metaorder size");
    sub_sc->add_option("--pool-size", sc.pool_size, "splitting pool size");
    sub_sc->add_option("--run-tail", sc.run_tail, "public-info run tail");
    sub_sc->add_option("--n-min", sc.n_min, "public-info minimum run length");
    sub_sc->add_option("--imitation-p", sc.imitation_p, "imitation probability");
    sub_sc->add_option("--profile", sc.profile_spec, "broker profile (imitation-frb)");
    sub_sc->set_config("--config");

    CLI11_PARSE(app, argc, argv);

    if (threads > 0) set_thread_count(threads);

    try {
        if (*sub_ic) return run_ingest_check(ic);
        if (*sub_sim) return run_simulate(sim);
        if (*sub_map) return run_map(mp);
        if (*sub_dec) return run_decompose(dec);
        if (*sub_nt) return run_nulltest(nt);
        if (*sub_cp) return run_condprob(cpr);
        if (*sub_sc) return run_scenario(sc);
    } catch (const std::exception& e) {
        return dispatch_error(e);
    }
    return 0;
}
