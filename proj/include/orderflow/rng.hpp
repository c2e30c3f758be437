#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace orderflow {

// splitmix64 step; also used as a stateless counter-based stream
// (output at counter k is splitmix64 of state0 + k*GOLDEN).
inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += kGolden);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Derive an independent substream seed from (seed, stream index).
// Replicates and events seeded this way are independent of scheduling.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed ^ (kGolden * (stream + 1));
    return splitmix64(s);
}

// Counter-based uniform in [0,1): value k of the stream anchored at `seed`.
// Random access makes chunked application equal sequential application.
inline double counter_uniform(std::uint64_t seed, std::uint64_t counter) {
    std::uint64_t s = seed + counter * kGolden;
    return static_cast<double>(splitmix64(s) >> 11) * 0x1.0p-53;
}

// mt19937_64 engine with hand-rolled draws. std:: distributions are
// implementation-defined, so every draw here is spelled out to keep
// streams identical across compilers and platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // (0, 1]
    double uniform_open0() { return 1.0 - uniform(); }

    // [0, n) by multiply-shift; bias < 2^-64
    std::size_t uniform_index(std::size_t n) {
        return static_cast<std::size_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    int uniform_sign() { return (next_u64() & 1ull) ? 1 : -1; }

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 engine_;
};

// Integer Pareto tail by inverse CDF: P(V >= v) = (v_min/v)^beta for
// integer v >= v_min.
inline std::int64_t pareto_integer(Rng& rng, double beta, std::int64_t v_min) {
    const double u = rng.uniform_open0();
    double x = static_cast<double>(v_min) * std::pow(u, -1.0 / beta);
    x = std::min(x, 4.0e18);
    return static_cast<std::int64_t>(x);
}

// Inverse-CDF sampler over a fixed frequency vector.
class DiscreteSampler {
public:
    explicit DiscreteSampler(const std::vector<double>& weights) {
        if (weights.empty()) throw std::invalid_argument("DiscreteSampler: empty weights");
        cdf_.resize(weights.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (weights[i] < 0.0) throw std::invalid_argument("DiscreteSampler: negative weight");
            acc += weights[i];
            cdf_[i] = acc;
        }
        if (acc <= 0.0) throw std::invalid_argument("DiscreteSampler: zero total weight");
        for (double& c : cdf_) c /= acc;
        cdf_.back() = 1.0;
    }

    std::size_t sample_from(double u) const {
        auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        if (it == cdf_.end()) --it;
        return static_cast<std::size_t>(it - cdf_.begin());
    }

    std::size_t operator()(Rng& rng) const { return sample_from(rng.uniform()); }

    std::size_t size() const { return cdf_.size(); }

private:
    std::vector<double> cdf_;
};

// Fisher-Yates with the library's own index draws (std::shuffle is
// implementation-defined).
template <typename T>
void shuffle_in_place(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::swap(v[i - 1], v[rng.uniform_index(i)]);
    }
}

}  // namespace orderflow
