#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace erank {

using Rng = std::mt19937_64;

// Deterministic stream splitting: every consumer of randomness (chain, replicate,
// lottery, jitter) gets its own seed derived from the master seed and a stream id.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t stream_id);

inline double runif(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double runif(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int runif_int(Rng& rng, int lo, int hi) {  // inclusive bounds
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline double rnorm(Rng& rng) {
    return std::normal_distribution<double>(0.0, 1.0)(rng);
}

inline double rnorm(Rng& rng, double mean, double sd) {
    return mean + sd * rnorm(rng);
}

inline double rexp(Rng& rng) {
    return std::exponential_distribution<double>(1.0)(rng);
}

// Gaussian truncated to (lo, hi]; lo may be -inf, hi may be +inf.
double rtruncnorm(Rng& rng, double mean, double sd, double lo, double hi);

// k distinct indices from 0..n-1, uniform over subsets (first k of a uniform shuffle).
std::vector<int> sample_index_subset(Rng& rng, int n, int k);

// Slice sampler for a log-density with bounded support (lo, hi). The initial
// interval is the whole support, shrinking toward x0 on rejection (Neal 2003,
// shrinkage procedure); no step-size tuning required.
template <typename LogDensity>
double slice_sample_bounded(Rng& rng, double x0, LogDensity&& logf, double lo, double hi) {
    const double level = logf(x0) - rexp(rng);
    double left = lo;
    double right = hi;
    for (int i = 0; i < 1000; ++i) {
        const double x1 = runif(rng, left, right);
        if (logf(x1) >= level) return x1;
        if (x1 > x0) {
            right = x1;
        } else {
            left = x1;
        }
    }
    return x0;  // interval shrank to numerical width; keep current value
}

}  // namespace erank
