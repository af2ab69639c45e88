#pragma once

#include <cstdint>
#include <vector>

#include "evdet/types.hpp"

namespace evdet {

struct SmootherConfig {
    int buffer_capacity = 25;
    int min_frames = 6;
    double threshold_t = 0.5;              // strict: fraction must exceed this
    double frame_decision_threshold = 0.5; // score >= threshold counts as positive
    bool reset_on_invalid = false;         // reserved; default keeps history across FOV gaps

    void validate() const;
};

// Per-track cyclic buffer over per-frame boolean decisions. Only frames with
// a valid crop enter the buffer; invalid frames leave the state untouched
// (or clear it when reset_on_invalid is set).
class SmootherState {
  public:
    SmootherState() = default;

    void push(double score, bool crop_valid, const SmootherConfig& cfg);
    bool decide(const SmootherConfig& cfg) const;

    int valid_count() const { return count_; }
    int positive_count() const { return positives_; }

  private:
    std::vector<std::uint8_t> ring_;
    int head_ = 0;       // next write position
    int count_ = 0;
    int positives_ = 0;
};

}  // namespace evdet
