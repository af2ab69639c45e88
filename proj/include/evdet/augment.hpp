#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "evdet/simulate.hpp"
#include "evdet/types.hpp"

namespace evdet {

// Per-field independent normals over the six box states (x, y, z, length,
// width, height), fitted on positive train tracks.
struct StateDistribution {
    std::array<double, 6> mean{};
    std::array<double, 6> stddev{};
};

// Sample mean / sample standard deviation (n-1 denominator) per field.
// Throws insufficient_data for fewer than 2 states.
StateDistribution fit_state_distribution(std::span<const BoxState> states);

// Independent normal draw per field; dimension fields are re-drawn (up to
// 100 attempts) while non-positive. The yaw is not part of the distribution
// and is passed through from the source box.
BoxState sample_augmented_box(const StateDistribution& dist, std::uint64_t seed, double yaw);

struct AugmentConfig {
    int positive_ratio = 2;      // each positive appears this many times
    int negative_downsample = 5; // keep 1/N of negatives
    std::uint64_t seed = 5;

    void validate() const;
};

struct AugmentResult {
    std::vector<FrameRecord> records;
    StateDistribution distribution;  // fitted on the positives (zeros if < 2)
    bool distribution_fitted = false;
};

// Rebalances a train record set: positives are duplicated `positive_ratio`x
// (original plus augmented-box variants whose crop is recomputed through the
// camera), negatives are uniformly subsampled to 1/negative_downsample.
// Labels are copied verbatim onto augmented records.
AugmentResult build_train_set(const std::vector<FrameRecord>& records, const AugmentConfig& cfg,
                              const CameraConfig& cam);

}  // namespace evdet
