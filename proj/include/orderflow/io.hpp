#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "orderflow/brokerage.hpp"
#include "orderflow/decomposition.hpp"
#include "orderflow/error.hpp"
#include "orderflow/event_log.hpp"
#include "orderflow/simulators.hpp"

namespace orderflow {

// Metadata marker written when a log never carried price-change flags;
// export always emits the column, so this keeps the absent state across
// a round trip.
inline constexpr const char* kNoPriceFlagsMarker = "price_changed=absent";

namespace detail {

// %.17g round-trips doubles exactly and is locale-independent.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open output file: " + path);
    return out;
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open input file: " + path);
    return in;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Event logs
// ---------------------------------------------------------------------------

// Reads the event-log CSV: optional leading `#` metadata lines, a
// required `sign,agent[,price_changed]` header, then one event per line.
// Sign tokens B, +1 and 1 mean buy; S and -1 mean sell. Agent ids are
// densified in first-appearance order.
inline EventLog ingest_csv(const std::string& path) {
    std::ifstream in = detail::open_input(path);
    std::string line;
    std::size_t line_no = 0;

    std::vector<std::string> metadata;
    bool saw_header = false;
    bool has_flag_column = false;

    std::vector<std::int8_t> signs;
    std::vector<std::int32_t> agents;
    std::vector<std::uint8_t> flags;
    std::vector<std::string> labels;
    std::unordered_map<std::string, std::int32_t> ids;

    while (std::getline(in, line)) {
        ++line_no;
        line = detail::strip_cr(line);
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::size_t start = 1;
            if (start < line.size() && line[start] == ' ') ++start;
            metadata.push_back(line.substr(start));
            continue;
        }
        if (!saw_header) {
            if (line == "sign,agent,price_changed") has_flag_column = true;
            else if (line == "sign,agent") has_flag_column = false;
            else
                throw ParseError("line " + std::to_string(line_no) +
                                 ": expected header 'sign,agent[,price_changed]'");
            saw_header = true;
            continue;
        }

        const std::vector<std::string> f = detail::split_csv_line(line);
        const std::size_t expected = has_flag_column ? 3 : 2;
        if (f.size() != expected)
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(expected) + " fields, got " +
                             std::to_string(f.size()));

        std::int8_t sign;
        if (f[0] == "B" || f[0] == "+1" || f[0] == "1") sign = 1;
        else if (f[0] == "S" || f[0] == "-1") sign = -1;
        else throw ParseError("line " + std::to_string(line_no) + ": bad sign token '" + f[0] + "'");

        if (f[1].empty())
            throw ParseError("line " + std::to_string(line_no) + ": empty agent field");
        auto [it, inserted] = ids.try_emplace(f[1], static_cast<std::int32_t>(labels.size()));
        if (inserted) labels.push_back(f[1]);

        std::uint8_t flag = 0;
        if (has_flag_column) {
            if (f[2] == "1") flag = 1;
            else if (f[2] == "0") flag = 0;
            else
                throw ParseError("line " + std::to_string(line_no) +
                                 ": bad price_changed token '" + f[2] + "'");
        }
        signs.push_back(sign);
        agents.push_back(it->second);
        flags.push_back(flag);
    }

    if (!saw_header || signs.empty()) throw EmptyLogError("no events in " + path);

    bool has_flags = has_flag_column;
    for (const auto& entry : metadata)
        if (entry == kNoPriceFlagsMarker) has_flags = false;

    return EventLog(std::move(signs), std::move(agents), std::move(labels), std::move(flags),
                    has_flags, std::move(metadata));
}

// Writes metadata comments, the full three-column header, and signs as
// +1/-1. Logs without price flags get the absent-flags marker so ingest
// restores the same state.
inline void export_csv(const EventLog& log, const std::string& path) {
    std::ofstream out = detail::open_output(path);
    bool marker_present = false;
    for (const auto& entry : log.metadata()) {
        out << "# " << entry << '\n';
        if (entry == kNoPriceFlagsMarker) marker_present = true;
    }
    if (!log.has_price_flags() && !marker_present) out << "# " << kNoPriceFlagsMarker << '\n';
    out << "sign,agent,price_changed\n";
    for (std::size_t t = 0; t < log.size(); ++t) {
        out << (log.sign(t) > 0 ? "+1" : "-1") << ',' << log.agent_label(log.agent(t)) << ','
            << (log.price_changed(t) ? '1' : '0') << '\n';
    }
    if (!out) throw Error("failed writing " + path);
}

// ---------------------------------------------------------------------------
// Broker profiles, maps, networks
// ---------------------------------------------------------------------------

// `broker,frequency` with a required header.
inline BrokerProfile read_broker_profile(const std::string& path) {
    std::ifstream in = detail::open_input(path);
    std::string line;
    std::size_t line_no = 0;
    bool saw_header = false;
    std::vector<double> freqs;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::strip_cr(line);
        if (line.empty() || line[0] == '#') continue;
        if (!saw_header) {
            if (line != "broker,frequency")
                throw ParseError("line " + std::to_string(line_no) +
                                 ": expected header 'broker,frequency'");
            saw_header = true;
            continue;
        }
        const auto f = detail::split_csv_line(line);
        if (f.size() != 2)
            throw ParseError("line " + std::to_string(line_no) + ": expected 2 fields");
        try {
            freqs.push_back(std::stod(f[1]));
        } catch (const std::exception&) {
            throw ParseError("line " + std::to_string(line_no) + ": bad frequency '" + f[1] + "'");
        }
    }
    if (freqs.empty()) throw ParseError("no broker rows in " + path);
    // Tolerate rounded exports: renormalize small deviations from 1.
    double sum = 0.0;
    for (double f : freqs) sum += f;
    if (std::abs(sum - 1.0) > 1e-6)
        throw ParseError("broker frequencies in " + path + " sum to " +
                         detail::format_double(sum) + ", expected 1");
    for (double& f : freqs) f /= sum;
    BrokerProfile profile{std::move(freqs)};
    profile.validate();
    return profile;
}

inline void write_broker_profile(const BrokerProfile& profile, const std::string& path) {
    std::ofstream out = detail::open_output(path);
    out << "broker,frequency\n";
    for (std::size_t b = 0; b < profile.size(); ++b)
        out << 'b' << b << ',' << detail::format_double(profile.frequencies[b]) << '\n';
    if (!out) throw Error("failed writing " + path);
}

// Audit export of a fixed assignment: `investor,broker`.
inline void write_brokerage_map(const BrokerageMap& map, const std::vector<std::string>& investor_labels,
                                const std::string& path) {
    if (map.kind == BrokerageKind::dynamic_random)
        throw Error("write_brokerage_map: dynamic maps have no fixed assignment");
    std::ofstream out = detail::open_output(path);
    out << "investor,broker\n";
    for (std::size_t i = 0; i < map.assignment.size(); ++i) {
        const std::string label =
            i < investor_labels.size() ? investor_labels[i] : std::to_string(i);
        out << label << ",b" << map.assignment[i] << '\n';
    }
    if (!out) throw Error("failed writing " + path);
}

// `node,parent` rows in attachment order (root has parent -1); reading
// rebuilds identical adjacency lists.
inline void write_network(const SocialNetwork& net, const std::string& path) {
    std::ofstream out = detail::open_output(path);
    out << "node,parent\n";
    for (std::size_t k = 0; k < net.nodes; ++k) out << k << ',' << net.parent[k] << '\n';
    if (!out) throw Error("failed writing " + path);
}

inline SocialNetwork read_network(const std::string& path) {
    std::ifstream in = detail::open_input(path);
    std::string line;
    std::size_t line_no = 0;
    bool saw_header = false;
    std::vector<std::int32_t> parent;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::strip_cr(line);
        if (line.empty() || line[0] == '#') continue;
        if (!saw_header) {
            if (line != "node,parent")
                throw ParseError("line " + std::to_string(line_no) + ": expected header 'node,parent'");
            saw_header = true;
            continue;
        }
        const auto f = detail::split_csv_line(line);
        if (f.size() != 2)
            throw ParseError("line " + std::to_string(line_no) + ": expected 2 fields");
        try {
            const long node = std::stol(f[0]);
            const long par = std::stol(f[1]);
            if (node != static_cast<long>(parent.size()))
                throw ParseError("line " + std::to_string(line_no) + ": nodes must be consecutive");
            parent.push_back(static_cast<std::int32_t>(par));
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception&) {
            throw ParseError("line " + std::to_string(line_no) + ": bad node/parent field");
        }
    }
    if (parent.size() < 2) throw ParseError("network in " + path + " has fewer than 2 nodes");
    if (parent[0] != -1) throw ParseError("network root must have parent -1");

    SocialNetwork net;
    net.nodes = parent.size();
    net.parent = parent;
    net.adjacency.resize(net.nodes);
    for (std::size_t k = 1; k < net.nodes; ++k) {
        if (parent[k] < 0 || static_cast<std::size_t>(parent[k]) >= k)
            throw ParseError("node " + std::to_string(k) + " attaches to a later node");
        net.adjacency[static_cast<std::size_t>(parent[k])].push_back(static_cast<std::int32_t>(k));
        net.adjacency[k].push_back(parent[k]);
    }
    return net;
}

// ---------------------------------------------------------------------------
// Result tables
// ---------------------------------------------------------------------------

// Tidy per-lag decomposition: tau,C,C_split,C_herd,S,term2_total, plus a
// condition column for conditional variants. `header_lines` are written
// as leading comments so every file describes its own run.
inline void write_decomposition_csv(const DecompositionResult& r, const std::string& path,
                                    const std::vector<std::string>& header_lines = {},
                                    const char* condition = nullptr) {
    std::ofstream out = detail::open_output(path);
    for (const auto& h : header_lines) out << "# " << h << '\n';
    out << "tau,C,C_split,C_herd,S,term2_total";
    if (condition) out << ",condition";
    out << '\n';
    for (std::size_t k = 0; k < r.tau_max; ++k) {
        out << (k + 1) << ',' << detail::format_double(r.C[k]) << ','
            << detail::format_double(r.C_split[k]) << ',' << detail::format_double(r.C_herd[k])
            << ',' << detail::format_double(r.S[k]) << ','
            << detail::format_double(r.term2_split[k] + r.term2_herd[k]);
        if (condition) out << ',' << condition;
        out << '\n';
    }
    if (!out) throw Error("failed writing " + path);
}

}  // namespace orderflow
