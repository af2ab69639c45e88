#include "evdet/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include <json.hpp>

#include "evdet/simulate.hpp"

namespace evdet {

using Clock = std::chrono::steady_clock;

std::string decision_to_jsonl(const FrameDecision& d) {
    nlohmann::json j;
    j["track"] = d.track_id;
    j["frame"] = d.frame_index;
    j["valid"] = d.crop_valid;
    if (!d.crop_valid) j["reason"] = to_string(d.reason);
    if (d.score.has_value()) j["score"] = *d.score;
    j["active"] = d.active;
    return j.dump();
}

void RenderPatchSource::fill(const TrackState&, const FrameRecord* rec, const CropRegion& crop,
                             int patch_size, ImagePatch& out) {
    if (rec == nullptr) {
        throw DataError("render patch source needs the frame record (scene replay only)");
    }
    FrameRecord local = *rec;
    local.crop = crop;
    render_patch_into(local, params_, patch_size, record_render_seed(seed_base_, local), out);
}

void CameraFramePatchSource::fill(const TrackState&, const FrameRecord*, const CropRegion& crop,
                                  int patch_size, ImagePatch& out) {
    if (frame_ == nullptr) throw DataError("camera frame patch source has no frame");
    extract_patch_into(*frame_, crop, patch_size, out);
}

Pipeline::Pipeline(const PipelineConfig& cfg, std::shared_ptr<const Classifier> classifier,
                   std::unique_ptr<PatchSource> patches)
    : cfg_(cfg), classifier_(std::move(classifier)), patches_(std::move(patches)) {
    cfg_.validate();
    scratch_.resize(std::max(1, cfg_.threads));
}

void Pipeline::reset() { states_.clear(); }

const SmootherState* Pipeline::track_state(std::int64_t track_id) const {
    auto it = states_.find(track_id);
    return it == states_.end() ? nullptr : &it->second;
}

std::vector<FrameDecision> Pipeline::process_frame(const std::vector<FrameInput>& inputs,
                                                   int frame_index) {
    const std::size_t n = inputs.size();
    std::vector<FrameDecision> decisions(n);

    auto classify_range = [&](std::size_t lo, std::size_t hi, int worker) {
        ImagePatch& scratch = scratch_[worker];
        for (std::size_t i = lo; i < hi; ++i) {
            const auto t0 = Clock::now();
            const FrameInput& in = inputs[i];
            FrameDecision& d = decisions[i];
            d.track_id = in.track.track_id;
            d.frame_index = frame_index;
            try {
                const CropRegion crop =
                    crop_region(cfg_.camera.model, in.track, cfg_.camera.min_projected_width);
                d.crop_valid = crop.valid;
                d.reason = crop.reason;
                if (crop.valid) {
                    FrameContext ctx{in.record};
                    if (classifier_->needs_patch()) {
                        patches_->fill(in.track, in.record, crop, cfg_.camera.patch_size, scratch);
                        d.score = classifier_->classify(scratch, ctx).probability;
                    } else {
                        d.score = classifier_->classify(scratch, ctx).probability;
                    }
                }
            } catch (const std::exception&) {
                // one bad track never aborts the frame
                d.crop_valid = false;
                d.reason = InvalidReason::none;
                d.score.reset();
            }
            d.latency_us =
                std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
        }
    };

    const int workers = std::max(1, cfg_.threads);
    if (workers == 1 || n < 2) {
        classify_range(0, n, 0);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (n + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const std::size_t lo = std::min(n, w * chunk);
            const std::size_t hi = std::min(n, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back(classify_range, lo, hi, w);
        }
        for (std::thread& t : pool) t.join();
    }

    // smoother updates are serialized, in input order
    for (std::size_t i = 0; i < n; ++i) {
        const auto t0 = Clock::now();
        FrameDecision& d = decisions[i];
        SmootherState& state = states_[d.track_id];
        const bool scored = d.crop_valid && d.score.has_value();
        state.push(scored ? *d.score : 0.0, scored, cfg_.smoother);
        d.active = state.decide(cfg_.smoother);
        d.latency_us += std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
    }
    return decisions;
}

LatencyStats latency_stats(std::vector<double> frame_ms, double mean_tracks,
                           double mean_valid_tracks) {
    LatencyStats s;
    s.frames = static_cast<int>(frame_ms.size());
    s.mean_tracks = mean_tracks;
    s.mean_valid_tracks = mean_valid_tracks;
    if (frame_ms.empty()) return s;
    double sum = 0.0;
    for (double v : frame_ms) sum += v;
    s.mean_ms = sum / frame_ms.size();
    std::sort(frame_ms.begin(), frame_ms.end());
    s.p50_ms = frame_ms[frame_ms.size() / 2];
    s.p99_ms = frame_ms[static_cast<std::size_t>(0.99 * (frame_ms.size() - 1))];
    s.max_ms = frame_ms.back();
    return s;
}

std::shared_ptr<const Classifier> make_classifier(const PipelineConfig& cfg) {
    if (cfg.classifier_kind == "synthetic") {
        return std::make_shared<SyntheticClassifier>(cfg.synthetic);
    }
    if (cfg.model_path.empty()) {
        throw DataError("feature classifier requested but no model path configured");
    }
    return std::make_shared<FeatureClassifier>(FeatureClassifier::load(cfg.model_path));
}

RunResult run_log(std::vector<FrameRecord>& records, const PipelineConfig& cfg,
                  std::shared_ptr<const Classifier> classifier, std::ostream* decisions_os) {
    // frame-major order, stable within a frame by track id
    std::vector<std::size_t> order(records.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (records[a].frame_index != records[b].frame_index) {
            return records[a].frame_index < records[b].frame_index;
        }
        return records[a].track_id < records[b].track_id;
    });

    Pipeline pipeline(cfg, classifier,
                      std::make_unique<RenderPatchSource>(cfg.scene.render, cfg.render_seed));

    RunResult result;
    std::vector<double> frame_ms;
    double total_tracks = 0.0, total_valid = 0.0;

    std::size_t i = 0;
    std::vector<FrameInput> inputs;
    std::vector<std::size_t> input_idx;
    while (i < order.size()) {
        const int frame = records[order[i]].frame_index;
        inputs.clear();
        input_idx.clear();
        while (i < order.size() && records[order[i]].frame_index == frame) {
            const FrameRecord& r = records[order[i]];
            inputs.push_back({TrackState{r.track_id, r.timestamp, r.box}, &r});
            input_idx.push_back(order[i]);
            ++i;
        }

        const auto t0 = Clock::now();
        const auto decisions = pipeline.process_frame(inputs, frame);
        frame_ms.push_back(
            std::chrono::duration<double, std::milli>(Clock::now() - t0).count());

        total_tracks += static_cast<double>(inputs.size());
        for (std::size_t k = 0; k < decisions.size(); ++k) {
            const FrameDecision& d = decisions[k];
            if (decisions_os) *decisions_os << decision_to_jsonl(d) << "\n";
            records[input_idx[k]].score = d.score;
            if (d.crop_valid) total_valid += 1.0;
            ++result.decision_count;
        }
    }

    const double frames = frame_ms.empty() ? 1.0 : static_cast<double>(frame_ms.size());
    result.latency = latency_stats(std::move(frame_ms), total_tracks / frames,
                                   total_valid / frames);

    try {
        result.report = evaluate_records(records, cfg.smoother);
        result.has_report = true;
    } catch (const DataError&) {
        result.has_report = false;  // e.g. single-class scene
    }
    return result;
}

void score_records(std::vector<FrameRecord>& records, const PipelineConfig& cfg,
                   const Classifier& classifier) {
    ImagePatch scratch;
    FrameContext ctx;
    for (FrameRecord& r : records) {
        if (!r.crop.valid) {
            r.score.reset();
            continue;
        }
        ctx.record = &r;
        if (classifier.needs_patch()) {
            render_patch_into(r, cfg.scene.render, cfg.camera.patch_size,
                              record_render_seed(cfg.render_seed, r), scratch);
        }
        r.score = classifier.classify(scratch, ctx).probability;
    }
}

}  // namespace evdet
