#pragma once

#include <cstddef>
#include <vector>

namespace orderflow {

// Population variance of a frequency vector whose entries sum to 1, so
// the mean is 1/M.
inline double frequency_variance(const std::vector<double>& freqs) {
    const double m = static_cast<double>(freqs.size());
    double sq = 0.0;
    for (double f : freqs) sq += f * f;
    return sq / m - 1.0 / (m * m);
}

// Largest possible variance: all trading concentrated in one agent.
inline double max_frequency_variance(std::size_t m) {
    const double md = static_cast<double>(m);
    return (1.0 / md) * (1.0 - 1.0 / md);
}

}  // namespace orderflow
