#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "orderflow/error.hpp"

namespace orderflow {

// One market order in event time: time advances by one per order, so `t`
// is the position in the sequence.
struct OrderEvent {
    std::int64_t t = 0;
    int sign = 0;  // +1 buy, -1 sell
    int agent = 0;
    bool price_changed = false;
};

// Immutable, column-oriented sequence of signed order events plus the
// agent registry. Safe for concurrent reads.
class EventLog {
public:
    EventLog() = default;

    // Columns must already use dense agent ids in [0, labels.size()).
    // `flags` may be empty; pass has_flags=false when the source carried
    // no price-change column (flags then read as all false).
    EventLog(std::vector<std::int8_t> signs,
             std::vector<std::int32_t> agents,
             std::vector<std::string> labels,
             std::vector<std::uint8_t> flags = {},
             bool has_flags = false,
             std::vector<std::string> metadata = {})
        : signs_(std::move(signs)),
          agents_(std::move(agents)),
          labels_(std::move(labels)),
          flags_(std::move(flags)),
          has_flags_(has_flags),
          metadata_(std::move(metadata)) {
        if (signs_.empty()) throw EmptyLogError("event log has no events");
        if (agents_.size() != signs_.size())
            throw std::invalid_argument("EventLog: sign/agent column length mismatch");
        if (!flags_.empty() && flags_.size() != signs_.size())
            throw std::invalid_argument("EventLog: flag column length mismatch");
        if (flags_.empty()) flags_.assign(signs_.size(), 0);
        const auto agent_count = static_cast<std::int32_t>(labels_.size());
        for (std::size_t t = 0; t < signs_.size(); ++t) {
            if (signs_[t] != 1 && signs_[t] != -1)
                throw std::invalid_argument("EventLog: sign must be +1 or -1");
            if (agents_[t] < 0 || agents_[t] >= agent_count)
                throw std::invalid_argument("EventLog: agent id outside registry");
        }
    }

    std::size_t size() const { return signs_.size(); }
    std::size_t agent_count() const { return labels_.size(); }

    int sign(std::size_t t) const { return signs_[t]; }
    int agent(std::size_t t) const { return agents_[t]; }
    bool price_changed(std::size_t t) const { return flags_[t] != 0; }
    bool has_price_flags() const { return has_flags_; }

    OrderEvent event(std::size_t t) const {
        return OrderEvent{static_cast<std::int64_t>(t), signs_[t], agents_[t], flags_[t] != 0};
    }

    const std::vector<std::int8_t>& signs() const { return signs_; }
    const std::vector<std::int32_t>& agents() const { return agents_; }
    const std::vector<std::uint8_t>& flags() const { return flags_; }
    const std::vector<std::string>& agent_labels() const { return labels_; }
    const std::string& agent_label(std::size_t id) const { return labels_.at(id); }

    const std::vector<std::string>& metadata() const { return metadata_; }
    void add_metadata(std::string line) { metadata_.push_back(std::move(line)); }

private:
    std::vector<std::int8_t> signs_;
    std::vector<std::int32_t> agents_;
    std::vector<std::string> labels_;
    std::vector<std::uint8_t> flags_;
    bool has_flags_ = false;
    std::vector<std::string> metadata_;
};

struct AgentSummary {
    int agent = 0;
    std::string label;
    std::int64_t count = 0;   // N_i
    double frequency = 0.0;   // N_i / N
    double mean_sign = 0.0;   // average sign of this agent's events
};

inline std::vector<std::int64_t> agent_event_counts(const EventLog& log) {
    std::vector<std::int64_t> counts(log.agent_count(), 0);
    for (std::size_t t = 0; t < log.size(); ++t) ++counts[static_cast<std::size_t>(log.agent(t))];
    return counts;
}

inline std::vector<AgentSummary> agent_summaries(const EventLog& log) {
    const std::size_t m = log.agent_count();
    std::vector<std::int64_t> counts(m, 0), sums(m, 0);
    for (std::size_t t = 0; t < log.size(); ++t) {
        const auto a = static_cast<std::size_t>(log.agent(t));
        ++counts[a];
        sums[a] += log.sign(t);
    }
    const double n = static_cast<double>(log.size());
    std::vector<AgentSummary> out;
    out.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        AgentSummary s;
        s.agent = static_cast<int>(i);
        s.label = log.agent_label(i);
        s.count = counts[i];
        s.frequency = static_cast<double>(counts[i]) / n;
        s.mean_sign = counts[i] > 0 ? static_cast<double>(sums[i]) / static_cast<double>(counts[i]) : 0.0;
        out.push_back(std::move(s));
    }
    return out;
}

// Drops every event whose agent has fewer than min_events events, then
// re-indexes time 0..N'-1 and re-densifies agent ids in first-appearance
// order. Idempotent for a fixed threshold.
inline EventLog filter_inactive(const EventLog& log, std::int64_t min_events) {
    if (min_events < 1) throw std::invalid_argument("filter_inactive: min_events must be >= 1");
    const auto counts = agent_event_counts(log);

    std::vector<std::int8_t> signs;
    std::vector<std::int32_t> agents;
    std::vector<std::uint8_t> flags;
    std::vector<std::string> labels;
    std::vector<std::int32_t> remap(log.agent_count(), -1);

    for (std::size_t t = 0; t < log.size(); ++t) {
        const auto a = static_cast<std::size_t>(log.agent(t));
        if (counts[a] < min_events) continue;
        if (remap[a] < 0) {
            remap[a] = static_cast<std::int32_t>(labels.size());
            labels.push_back(log.agent_label(a));
        }
        signs.push_back(static_cast<std::int8_t>(log.sign(t)));
        agents.push_back(remap[a]);
        flags.push_back(log.price_changed(t) ? 1 : 0);
    }
    if (signs.empty())
        throw EmptyLogError("filter_inactive: no agent reaches the activity threshold");
    return EventLog(std::move(signs), std::move(agents), std::move(labels),
                    std::move(flags), log.has_price_flags(), log.metadata());
}

// Gini coefficient of the agent activity distribution,
// G = sum_ij |N_i - N_j| / (2 M sum_i N_i), via the sorted-rank identity.
inline double gini(const EventLog& log) {
    std::vector<std::int64_t> counts = agent_event_counts(log);
    std::sort(counts.begin(), counts.end());
    const std::size_t m = counts.size();
    long double weighted = 0.0L, total = 0.0L;
    for (std::size_t k = 0; k < m; ++k) {
        weighted += static_cast<long double>(k + 1) * static_cast<long double>(counts[k]);
        total += static_cast<long double>(counts[k]);
    }
    if (total <= 0.0L) return 0.0;
    const long double md = static_cast<long double>(m);
    return static_cast<double>(2.0L * weighted / (md * total) - (md + 1.0L) / md);
}

}  // namespace orderflow
