#include "evdet/engine.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "evdet/pipeline.hpp"
#include "evdet/simulate.hpp"

namespace evdet {

using nlohmann::json;

std::vector<TrainExample> make_examples(const std::vector<FrameRecord>& records,
                                        const PipelineConfig& cfg) {
    std::vector<TrainExample> out;
    out.reserve(records.size());
    ImagePatch scratch;
    for (const FrameRecord& r : records) {
        if (!r.crop.valid) continue;
        render_patch_into(r, cfg.scene.render, cfg.camera.patch_size,
                          record_render_seed(cfg.render_seed, r), scratch);
        out.push_back({compute_features(scratch), positive_label(r)});
    }
    return out;
}

FeatureClassifier train_model(const std::vector<FrameRecord>& dataset, const PipelineConfig& cfg,
                              TrainSummary* summary) {
    std::vector<FrameRecord> train_records;
    for (const FrameRecord& r : dataset) {
        if (r.split == Split::train) train_records.push_back(r);
    }
    if (train_records.empty()) throw DataError("train: no train-split records");

    const AugmentResult balanced = build_train_set(train_records, cfg.augment, cfg.camera);
    const std::vector<TrainExample> examples = make_examples(balanced.records, cfg);

    FeatureClassifier model;
    const FitResult fit = model.fit(examples, cfg.train);

    if (summary) {
        summary->fit = fit;
        summary->examples = static_cast<int>(examples.size());
        summary->positives = 0;
        for (const TrainExample& ex : examples) summary->positives += ex.positive ? 1 : 0;
        summary->distribution = balanced.distribution;
        summary->distribution_fitted = balanced.distribution_fitted;
    }
    return model;
}

std::string mined_event_to_jsonl(const MinedEvent& e) {
    json j;
    j["scene"] = e.scene_id;
    j["track"] = e.track_id;
    j["first_frame"] = e.first_frame;
    j["last_frame"] = e.last_frame;
    j["scores"] = e.scores;
    json dec = json::array();
    for (std::uint8_t d : e.decisions) dec.push_back(d != 0);
    j["decisions"] = dec;
    j["model_version"] = e.model_version;
    return j.dump();
}

void write_mined_events_file(const std::string& path, const std::vector<MinedEvent>& events) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write events file: " + path);
    for (const MinedEvent& e : events) os << mined_event_to_jsonl(e) << "\n";
}

std::vector<MinedEvent> read_mined_events_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open events file: " + path);
    std::vector<MinedEvent> out;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const json j = json::parse(line);
            MinedEvent e;
            e.scene_id = j.at("scene").get<std::string>();
            e.track_id = j.at("track").get<std::int64_t>();
            e.first_frame = j.at("first_frame").get<int>();
            e.last_frame = j.at("last_frame").get<int>();
            e.scores = j.at("scores").get<std::vector<double>>();
            for (const json& d : j.at("decisions")) e.decisions.push_back(d.get<bool>() ? 1 : 0);
            e.model_version = j.at("model_version").get<std::string>();
            out.push_back(std::move(e));
        } catch (const json::exception& ex) {
            throw DataError(path + " line " + std::to_string(line_no) + ": " + ex.what());
        }
    }
    return out;
}

std::vector<MinedEvent> mine(std::vector<FrameRecord> log_records, const PipelineConfig& cfg,
                             const Classifier& classifier, const std::string& model_version) {
    score_records(log_records, cfg, classifier);

    std::map<std::pair<std::string, std::int64_t>, std::vector<std::size_t>> tracks;
    for (std::size_t i = 0; i < log_records.size(); ++i) {
        tracks[{log_records[i].scene_id, log_records[i].track_id}].push_back(i);
    }

    std::vector<MinedEvent> events;
    for (auto& [key, idx] : tracks) {
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return log_records[a].frame_index < log_records[b].frame_index;
        });
        SmootherState state;
        MinedEvent e;
        e.scene_id = key.first;
        e.track_id = key.second;
        e.model_version = model_version;
        bool fired = false;
        for (std::size_t i : idx) {
            const FrameRecord& r = log_records[i];
            const bool scored = r.crop.valid && r.score.has_value();
            state.push(scored ? *r.score : 0.0, scored, cfg.smoother);
            const bool active = state.decide(cfg.smoother);
            e.scores.push_back(r.score.value_or(0.0));
            e.decisions.push_back(active ? 1 : 0);
            fired = fired || active;
        }
        if (!fired) continue;
        e.first_frame = log_records[idx.front()].frame_index;
        e.last_frame = log_records[idx.back()].frame_index;
        events.push_back(std::move(e));
    }
    return events;
}

std::vector<FrameRecord> label_events(const std::vector<MinedEvent>& events,
                                      const std::vector<FrameRecord>& log_records) {
    std::map<std::pair<std::string, std::int64_t>, std::vector<std::size_t>> by_track;
    for (std::size_t i = 0; i < log_records.size(); ++i) {
        by_track[{log_records[i].scene_id, log_records[i].track_id}].push_back(i);
    }

    std::vector<FrameRecord> labeled;
    for (const MinedEvent& e : events) {
        auto it = by_track.find({e.scene_id, e.track_id});
        if (it == by_track.end()) {
            throw DataError("label_events: missing_ground_truth for scene " + e.scene_id +
                            " track " + std::to_string(e.track_id));
        }
        for (std::size_t i : it->second) {
            FrameRecord r = log_records[i];
            r.score.reset();
            r.mined_from = e.model_version;
            labeled.push_back(std::move(r));
        }
    }
    return labeled;
}

namespace {

using TrackKey = std::pair<std::string, std::int64_t>;

void check_split_hygiene(const std::vector<FrameRecord>& dataset) {
    std::map<TrackKey, Split> seen;
    for (const FrameRecord& r : dataset) {
        const TrackKey key{r.scene_id, r.track_id};
        auto [it, inserted] = seen.emplace(key, r.split);
        if (!inserted && it->second != r.split) {
            throw DataError("split hygiene violation: actor " + r.scene_id + "/" +
                            std::to_string(r.track_id) + " spans both splits");
        }
    }
}

}  // namespace

CycleResult retrain_cycle(std::vector<FrameRecord>& dataset,
                          const std::vector<FrameRecord>& labeled_events,
                          const FeatureClassifier& previous_model, const PipelineConfig& cfg) {
    CycleResult result;

    // the comparison set is pinned before anything is merged
    std::vector<FrameRecord> fixed_test;
    for (const FrameRecord& r : dataset) {
        if (r.split == Split::test) fixed_test.push_back(r);
    }
    if (fixed_test.empty()) throw DataError("retrain_cycle: dataset has no test split");

    std::set<TrackKey> existing;
    for (const FrameRecord& r : dataset) existing.insert({r.scene_id, r.track_id});

    // dedup by (scene, track): re-mined actors never enter twice
    std::vector<FrameRecord> fresh;
    std::set<TrackKey> fresh_actors;
    for (const FrameRecord& r : labeled_events) {
        const TrackKey key{r.scene_id, r.track_id};
        if (existing.count(key)) continue;
        fresh.push_back(r);
        fresh_actors.insert(key);
    }

    // mined actors get the same per-actor split treatment as everyone else
    split_dataset(fresh, cfg.split_train_parts, cfg.split_test_parts, cfg.split_seed);

    result.new_actors = static_cast<int>(fresh_actors.size());
    result.added_records = static_cast<int>(fresh.size());
    dataset.insert(dataset.end(), fresh.begin(), fresh.end());
    check_split_hygiene(dataset);
    result.dataset_size = static_cast<int>(dataset.size());

    result.model = train_model(dataset, cfg, &result.train_summary);

    // both models are measured on the identical fixed test records
    std::vector<FrameRecord> before_records = fixed_test;
    score_records(before_records, cfg, previous_model);
    result.before = evaluate_records(before_records, cfg.smoother);

    std::vector<FrameRecord> after_records = fixed_test;
    score_records(after_records, cfg, result.model);
    result.after = evaluate_records(after_records, cfg.smoother);
    attach_baseline(result.after, result.before, previous_model.version());

    return result;
}

// ---- model registry ----------------------------------------------------------

ModelRegistry::ModelRegistry(std::string dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

std::string ModelRegistry::manifest_path() const { return dir_ + "/manifest.json"; }

std::vector<ModelRegistry::Entry> ModelRegistry::entries() const {
    std::vector<Entry> out;
    std::ifstream is(manifest_path());
    if (!is) return out;
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw DataError("registry manifest: " + std::string(e.what()));
    }
    for (const json& m : j.value("models", json::array())) {
        Entry e;
        e.version = m.at("version").get<std::string>();
        e.file = m.at("file").get<std::string>();
        e.parent = m.value("parent", "");
        e.trained_on = m.value("trained_on", std::vector<std::string>{});
        out.push_back(std::move(e));
    }
    return out;
}

std::string ModelRegistry::add(const FeatureClassifier& model,
                               const std::vector<std::string>& trained_on,
                               const std::string& parent) {
    auto all = entries();
    if (!parent.empty()) {
        const bool known = std::any_of(all.begin(), all.end(),
                                       [&](const Entry& e) { return e.version == parent; });
        if (!known) throw DataError("registry: unknown parent model " + parent);
    }
    for (const Entry& e : all) {
        if (e.version == model.version()) return e.version;  // identical model already registered
    }

    Entry e;
    e.version = model.version();
    e.file = e.version + ".model";
    e.parent = parent;
    e.trained_on = trained_on;
    model.save(dir_ + "/" + e.file);
    all.push_back(e);

    json j;
    json models = json::array();
    for (const Entry& m : all) {
        json jm;
        jm["version"] = m.version;
        jm["file"] = m.file;
        if (!m.parent.empty()) jm["parent"] = m.parent;
        jm["trained_on"] = m.trained_on;
        models.push_back(jm);
    }
    j["models"] = models;
    std::ofstream os(manifest_path());
    if (!os) throw DataError("cannot write registry manifest");
    os << j.dump(2) << "\n";
    return e.version;
}

FeatureClassifier ModelRegistry::load(const std::string& version) const {
    for (const Entry& e : entries()) {
        if (e.version == version) return FeatureClassifier::load(dir_ + "/" + e.file);
    }
    throw DataError("registry: unknown model version " + version);
}

}  // namespace evdet
