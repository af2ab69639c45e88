#include "evdet/augment.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "evdet/geometry.hpp"
#include "evdet/rng.hpp"

namespace evdet {

void AugmentConfig::validate() const {
    if (positive_ratio < 1) throw DataError("augment: positive_ratio must be >= 1");
    if (negative_downsample < 1) throw DataError("augment: negative_downsample must be >= 1");
}

StateDistribution fit_state_distribution(std::span<const BoxState> states) {
    if (states.size() < 2) throw DataError("fit_state_distribution: insufficient_data (< 2)");
    const double n = static_cast<double>(states.size());

    auto field = [](const BoxState& b, int k) -> double {
        switch (k) {
            case 0: return b.x;
            case 1: return b.y;
            case 2: return b.z;
            case 3: return b.length;
            case 4: return b.width;
            default: return b.height;
        }
    };

    StateDistribution d;
    for (int k = 0; k < 6; ++k) {
        double sum = 0.0;
        for (const BoxState& b : states) sum += field(b, k);
        d.mean[k] = sum / n;
        double sq = 0.0;
        for (const BoxState& b : states) {
            const double diff = field(b, k) - d.mean[k];
            sq += diff * diff;
        }
        d.stddev[k] = std::sqrt(sq / (n - 1.0));
    }
    return d;
}

BoxState sample_augmented_box(const StateDistribution& dist, std::uint64_t seed, double yaw) {
    std::mt19937_64 rng(seed);
    auto draw = [&rng](double mean, double std) {
        if (std <= 0.0) return mean;
        std::normal_distribution<double> n(mean, std);
        return n(rng);
    };

    BoxState b;
    b.x = draw(dist.mean[0], dist.stddev[0]);
    b.y = draw(dist.mean[1], dist.stddev[1]);
    b.z = draw(dist.mean[2], dist.stddev[2]);
    b.yaw = yaw;

    double* dims[3] = {&b.length, &b.width, &b.height};
    for (int k = 0; k < 3; ++k) {
        double v = draw(dist.mean[3 + k], dist.stddev[3 + k]);
        int attempts = 0;
        while (v <= 0.0) {
            if (++attempts > 100) {
                throw DataError("sample_augmented_box: sampling_failure (degenerate dimensions)");
            }
            v = draw(dist.mean[3 + k], dist.stddev[3 + k]);
        }
        *dims[k] = v;
    }
    return b;
}

AugmentResult build_train_set(const std::vector<FrameRecord>& records, const AugmentConfig& cfg,
                              const CameraConfig& cam) {
    cfg.validate();
    cam.validate();

    std::vector<std::size_t> positives, negatives;
    for (std::size_t i = 0; i < records.size(); ++i) {
        (positive_label(records[i]) ? positives : negatives).push_back(i);
    }

    AugmentResult out;
    std::vector<BoxState> pos_states;
    pos_states.reserve(positives.size());
    for (std::size_t i : positives) pos_states.push_back(records[i].box);
    if (pos_states.size() >= 2) {
        out.distribution = fit_state_distribution(pos_states);
        out.distribution_fitted = true;
    }

    for (std::size_t i : positives) {
        const FrameRecord& src = records[i];
        out.records.push_back(src);
        for (int copy = 1; copy < cfg.positive_ratio; ++copy) {
            FrameRecord aug = src;
            aug.augmented = true;
            aug.score.reset();
            if (out.distribution_fitted) {
                // redraw until the sampled box projects to a usable crop
                for (int attempt = 0; attempt < 100; ++attempt) {
                    const std::uint64_t s =
                        mix64(mix64(cfg.seed, fnv1a(src.scene_id.c_str())),
                              mix64(static_cast<std::uint64_t>(src.track_id),
                                    mix64(static_cast<std::uint64_t>(src.frame_index),
                                          static_cast<std::uint64_t>(copy * 101 + attempt))));
                    const BoxState box = sample_augmented_box(out.distribution, s, src.box.yaw);
                    const TrackState t{src.track_id, src.timestamp, box};
                    const CropRegion crop = crop_region(cam.model, t, cam.min_projected_width);
                    if (crop.valid) {
                        aug.box = box;
                        aug.crop = crop;
                        break;
                    }
                }
            }
            out.records.push_back(std::move(aug));
        }
    }

    // exact 1/N keep count, uniform via seeded shuffle, original order restored
    std::vector<std::size_t> order = negatives;
    std::mt19937_64 rng(mix64(cfg.seed, 0x4e65u));
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t keep = negatives.size() / static_cast<std::size_t>(cfg.negative_downsample);
    order.resize(keep);
    std::sort(order.begin(), order.end());
    for (std::size_t i : order) out.records.push_back(records[i]);

    return out;
}

}  // namespace evdet
