#include "erank/rng.hpp"

#include "erank/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace erank {

namespace {

// splitmix64 finalizer; decorrelates nearby stream ids.
std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t stream_id) {
    return mix64(master_seed + 0x9E3779B97F4A7C15ULL * (stream_id + 1));
}

double rtruncnorm(Rng& rng, double mean, double sd, double lo, double hi) {
    double a = (lo - mean) / sd;
    double b = (hi - mean) / sd;
    if (!(a < b)) return mean + sd * std::min(a, b);  // degenerate interval

    // Work in the lower tail where the erfc-based CDF keeps full precision;
    // mirror when the interval sits in the upper tail.
    bool flipped = false;
    if (a > 0.0) {
        std::swap(a, b);
        a = -a;
        b = -b;
        flipped = true;
    }
    const double pa = norm_cdf(a);
    const double pb = norm_cdf(b);
    const double u = runif(rng);
    double z;
    if (pb - pa <= 0.0) {
        z = 0.5 * (std::max(a, -40.0) + std::min(b, 40.0));  // interval below double resolution
    } else {
        z = norm_quantile(pa + u * (pb - pa));
    }
    z = std::clamp(z, a, b);
    if (flipped) z = -z;
    return mean + sd * z;
}

std::vector<int> sample_index_subset(Rng& rng, int n, int k) {
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    // Partial Fisher-Yates: first k entries form a uniform k-subset.
    for (int i = 0; i < k; ++i) {
        const int j = runif_int(rng, i, n - 1);
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    idx.resize(static_cast<std::size_t>(k));
    return idx;
}

}  // namespace erank
