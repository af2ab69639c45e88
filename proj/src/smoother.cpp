#include "evdet/smoother.hpp"

namespace evdet {

void SmootherConfig::validate() const {
    if (buffer_capacity <= 0) throw DataError("smoother: buffer_capacity must be > 0");
    if (min_frames <= 0 || min_frames > buffer_capacity) {
        throw DataError("smoother: require 0 < min_frames <= buffer_capacity");
    }
    if (threshold_t < 0.0 || threshold_t > 1.0) throw DataError("smoother: threshold_t in [0,1]");
    if (frame_decision_threshold < 0.0 || frame_decision_threshold > 1.0) {
        throw DataError("smoother: frame_decision_threshold in [0,1]");
    }
}

void SmootherState::push(double score, bool crop_valid, const SmootherConfig& cfg) {
    if (!crop_valid) {
        if (cfg.reset_on_invalid) {
            ring_.clear();
            head_ = count_ = positives_ = 0;
        }
        return;
    }
    if (ring_.size() != static_cast<std::size_t>(cfg.buffer_capacity)) {
        // first use (or capacity change): start fresh at the configured size
        ring_.assign(cfg.buffer_capacity, 0);
        head_ = count_ = positives_ = 0;
    }
    // ties go positive: score exactly at the threshold counts
    const std::uint8_t positive = score >= cfg.frame_decision_threshold ? 1 : 0;
    if (count_ == cfg.buffer_capacity) {
        positives_ -= ring_[head_];
    } else {
        ++count_;
    }
    ring_[head_] = positive;
    positives_ += positive;
    head_ = (head_ + 1) % cfg.buffer_capacity;
}

bool SmootherState::decide(const SmootherConfig& cfg) const {
    if (count_ < cfg.min_frames) return false;
    // "more than T": strict inequality
    return static_cast<double>(positives_) / static_cast<double>(count_) > cfg.threshold_t;
}

}  // namespace evdet
