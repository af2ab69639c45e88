#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evdet/augment.hpp"
#include "evdet/classifier.hpp"
#include "evdet/config.hpp"
#include "evdet/evaluate.hpp"

namespace evdet {

// ---- training helpers -------------------------------------------------------

// Renders features for every valid-crop record. Order follows the input.
std::vector<TrainExample> make_examples(const std::vector<FrameRecord>& records,
                                        const PipelineConfig& cfg);

struct TrainSummary {
    FitResult fit;
    int examples = 0;
    int positives = 0;
    StateDistribution distribution;
    bool distribution_fitted = false;
};

// Train-split records -> augmented/rebalanced train set -> features -> fit.
FeatureClassifier train_model(const std::vector<FrameRecord>& dataset, const PipelineConfig& cfg,
                              TrainSummary* summary = nullptr);

// ---- mine / label / retrain --------------------------------------------------

// One harvested detection event: a track the smoothed output flagged active
// on at least one frame, true or false positive alike.
struct MinedEvent {
    std::string scene_id;
    std::int64_t track_id = 0;
    int first_frame = 0;
    int last_frame = 0;
    std::vector<double> scores;        // per processed frame of the track
    std::vector<std::uint8_t> decisions;  // smoothed trace, same order
    std::string model_version;
};

std::string mined_event_to_jsonl(const MinedEvent& e);
std::vector<MinedEvent> read_mined_events_file(const std::string& path);
void write_mined_events_file(const std::string& path, const std::vector<MinedEvent>& events);

// Scores the log and returns every track whose smoothed output fires at
// least once, one event per (scene, track).
std::vector<MinedEvent> mine(std::vector<FrameRecord> log_records, const PipelineConfig& cfg,
                             const Classifier& classifier, const std::string& model_version);

// Attaches ground-truth labels to mined events by pulling the tracks'
// records out of the source logs; records are marked with the mining model's
// version. Throws missing_ground_truth when a mined track has no records.
std::vector<FrameRecord> label_events(const std::vector<MinedEvent>& events,
                                      const std::vector<FrameRecord>& log_records);

struct CycleResult {
    FeatureClassifier model;
    TrainSummary train_summary;
    EvalReport before;  // previous model on the fixed test split
    EvalReport after;   // new model on the same records, %-changes attached
    int new_actors = 0;
    int added_records = 0;
    int dataset_size = 0;
};

// Merges labeled events into the dataset (dedup by (scene, track), per-actor
// 3:1 split on new actors), retrains, and reports metric deltas on the fixed
// original test split.
CycleResult retrain_cycle(std::vector<FrameRecord>& dataset,
                          const std::vector<FrameRecord>& labeled_events,
                          const FeatureClassifier& previous_model, const PipelineConfig& cfg);

// ---- model registry ----------------------------------------------------------

// Directory of versioned model files plus a manifest mapping model version
// to training-data provenance.
class ModelRegistry {
  public:
    explicit ModelRegistry(std::string dir);

    struct Entry {
        std::string version;
        std::string file;
        std::string parent;  // empty for roots
        std::vector<std::string> trained_on;
    };

    std::string add(const FeatureClassifier& model, const std::vector<std::string>& trained_on,
                    const std::string& parent);
    FeatureClassifier load(const std::string& version) const;
    std::vector<Entry> entries() const;

  private:
    std::string dir_;
    std::string manifest_path() const;
};

}  // namespace evdet
