#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "evdet/rng.hpp"

namespace evdet::kernels::detail {

// Tap table for one axis of a bilinear resample. Destination pixel centers
// map to source coordinate s = origin + (j + 0.5) * step; the two taps are
// floor(s - 0.5) and the next pixel, weighted by the fractional part.
// Both backends sample through the same tables so their arithmetic agrees
// bit for bit.
struct TapTable {
    std::vector<std::int32_t> idx;  // first tap, may be out of bounds
    std::vector<float> weight;      // weight of the second tap
};

inline void build_taps(double origin, double step, int n, TapTable& t) {
    t.idx.resize(n);
    t.weight.resize(n);
    for (int j = 0; j < n; ++j) {
        const double s = origin + (j + 0.5) * step - 0.5;
        const double f = std::floor(s);
        t.idx[j] = static_cast<std::int32_t>(f);
        t.weight[j] = static_cast<float>(s - f);
    }
}

inline float noise_value(std::uint32_t seed, std::uint32_t index, float base, float amp) {
    const std::uint32_t h = fmix32(seed ^ index);
    return base + amp * u01_from_hash(h);
}

}  // namespace evdet::kernels::detail
