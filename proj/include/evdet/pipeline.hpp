#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

#include "evdet/classifier.hpp"
#include "evdet/config.hpp"
#include "evdet/evaluate.hpp"
#include "evdet/geometry.hpp"
#include "evdet/smoother.hpp"

namespace evdet {

// One pipeline output per input track per frame. latency_us is in-memory
// accounting only; it is deliberately not serialized so rerunning a log
// yields byte-identical decision files.
struct FrameDecision {
    std::int64_t track_id = 0;
    int frame_index = 0;
    bool crop_valid = false;
    InvalidReason reason = InvalidReason::none;
    std::optional<double> score;
    bool active = false;
    double latency_us = 0.0;
};

std::string decision_to_jsonl(const FrameDecision& d);

// Where the pipeline gets pixels for a valid crop: rendered from simulator
// ground truth, or extracted out of a full camera frame.
class PatchSource {
  public:
    virtual ~PatchSource() = default;
    virtual void fill(const TrackState& track, const FrameRecord* rec, const CropRegion& crop,
                      int patch_size, ImagePatch& out) = 0;
};

class RenderPatchSource : public PatchSource {
  public:
    RenderPatchSource(const RenderParams& params, std::uint64_t seed_base)
        : params_(params), seed_base_(seed_base) {}
    void fill(const TrackState& track, const FrameRecord* rec, const CropRegion& crop,
              int patch_size, ImagePatch& out) override;

  private:
    RenderParams params_;
    std::uint64_t seed_base_;
};

class CameraFramePatchSource : public PatchSource {
  public:
    explicit CameraFramePatchSource(const FrameImage* frame) : frame_(frame) {}
    void set_frame(const FrameImage* frame) { frame_ = frame; }
    void fill(const TrackState& track, const FrameRecord* rec, const CropRegion& crop,
              int patch_size, ImagePatch& out) override;

  private:
    const FrameImage* frame_;
};

struct FrameInput {
    TrackState track;
    const FrameRecord* record = nullptr;  // ground-truth context when replaying a scene
};

// crop -> patch -> classify -> smooth, one frame at a time. Crop/patch/
// classify fan out across worker threads when configured; smoother updates
// stay serialized per track. Per-track failures are isolated.
class Pipeline {
  public:
    Pipeline(const PipelineConfig& cfg, std::shared_ptr<const Classifier> classifier,
             std::unique_ptr<PatchSource> patches);

    // Inputs must be deduplicated by track_id within one frame; outputs are
    // in input order.
    std::vector<FrameDecision> process_frame(const std::vector<FrameInput>& inputs,
                                             int frame_index);

    void reset();
    const Classifier& classifier() const { return *classifier_; }
    const SmootherState* track_state(std::int64_t track_id) const;

  private:
    PipelineConfig cfg_;
    std::shared_ptr<const Classifier> classifier_;
    std::unique_ptr<PatchSource> patches_;
    std::unordered_map<std::int64_t, SmootherState> states_;
    std::vector<ImagePatch> scratch_;  // one per worker
};

struct LatencyStats {
    double mean_ms = 0.0;
    double p50_ms = 0.0;
    double p99_ms = 0.0;
    double max_ms = 0.0;
    int frames = 0;
    double mean_valid_tracks = 0.0;
    double mean_tracks = 0.0;
};

LatencyStats latency_stats(std::vector<double> frame_ms, double mean_tracks,
                           double mean_valid_tracks);

struct RunResult {
    LatencyStats latency;
    EvalReport report;
    bool has_report = false;
    std::int64_t decision_count = 0;
};

// Replays a scene's records frame-major through the pipeline, writes one
// decision per record to `decisions_os` (when non-null), fills in
// records[i].score, and evaluates the scored records.
RunResult run_log(std::vector<FrameRecord>& records, const PipelineConfig& cfg,
                  std::shared_ptr<const Classifier> classifier, std::ostream* decisions_os);

// Scores records in place (render + classify, or the synthetic noise model).
// Used by training, mining and evaluation, so every consumer sees the same
// pixels for the same record.
void score_records(std::vector<FrameRecord>& records, const PipelineConfig& cfg,
                   const Classifier& classifier);

std::shared_ptr<const Classifier> make_classifier(const PipelineConfig& cfg);

struct BenchResult {
    LatencyStats latency;
    double budget_ms = 0.0;
    bool within_budget = false;
};

// Latency benchmark: tracker-style tracks all around the ego vehicle, a
// synthetic camera frame, and the full per-frame pipeline (projection/crop,
// patch extraction, feature classification, smoothing) in the timed region.
// Trains a small feature model up front when `model` is null.
BenchResult run_bench(const PipelineConfig& cfg, const FeatureClassifier* model = nullptr,
                      std::ostream* log = nullptr);

}  // namespace evdet
