// evdet: active emergency-vehicle detection pipeline over synthetic scenes.
// Subcommands: simulate, train, run, evaluate, sweep, augment, mine, retrain,
// bench. Exit codes: 0 ok, 1 usage, 2 data error, 3 threshold failure (bench).

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "evdet/engine.hpp"
#include "evdet/jsonl.hpp"
#include "evdet/kernels.hpp"
#include "evdet/pipeline.hpp"

namespace fs = std::filesystem;
using namespace evdet;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitThreshold = 3;

struct Common {
    std::string config_path;

    PipelineConfig load() const {
        PipelineConfig cfg =
            config_path.empty() ? default_config() : load_config(config_path);
        apply_kernel_choice(cfg);
        return cfg;
    }
};

std::vector<FrameRecord> read_logs_dir(const std::string& dir) {
    std::vector<fs::path> files;
    if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir);
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() == ".jsonl") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no .jsonl logs in " + dir);
    std::vector<FrameRecord> records;
    for (const fs::path& f : files) {
        auto part = read_records_file(f.string());
        records.insert(records.end(), part.begin(), part.end());
    }
    return records;
}

FeatureClassifier load_model_arg(const std::string& model_path, const PipelineConfig& cfg) {
    if (!model_path.empty()) return FeatureClassifier::load(model_path);
    if (!cfg.model_path.empty()) return FeatureClassifier::load(cfg.model_path);
    throw DataError("no model: pass --model or set [classifier] model in the config");
}

std::shared_ptr<const Classifier> classifier_for(const PipelineConfig& cfg,
                                                 const std::string& model_path) {
    if (cfg.classifier_kind == "synthetic" && model_path.empty()) {
        return std::make_shared<SyntheticClassifier>(cfg.synthetic);
    }
    return std::make_shared<FeatureClassifier>(load_model_arg(model_path, cfg));
}

nlohmann::json dist_json(const StateDistribution& d) {
    nlohmann::json j;
    const char* names[6] = {"x", "y", "z", "length", "width", "height"};
    for (int k = 0; k < 6; ++k) {
        j[names[k]] = {{"mean", d.mean[k]}, {"std", d.stddev[k]}};
    }
    return j;
}

int cmd_simulate(const Common& common, std::uint64_t seed_override, bool has_seed,
                 const std::string& scene_id, int actor_override, const std::string& out,
                 const std::string& actors_out) {
    PipelineConfig cfg = common.load();
    if (has_seed) cfg.scene.seed = seed_override;
    if (!scene_id.empty()) cfg.scene.scene_id = scene_id;
    if (actor_override > 0) cfg.scene.actor_count = actor_override;

    Scene scene = generate_scene(cfg.scene, cfg.camera);
    split_dataset(scene.records, cfg.split_train_parts, cfg.split_test_parts, cfg.split_seed);
    write_records_file(out, scene.records);
    if (!actors_out.empty()) write_actors_file(actors_out, scene.actors);

    long valid = 0;
    for (const FrameRecord& r : scene.records) valid += r.crop.valid ? 1 : 0;
    std::cout << "simulate: " << scene.actors.size() << " actors, " << scene.records.size()
              << " records (" << valid << " valid crops) -> " << out << "\n";
    return kExitOk;
}

int cmd_train(const Common& common, const std::string& data, const std::string& out,
              const std::string& dist_out) {
    const PipelineConfig cfg = common.load();
    auto records = read_records_file(data);

    TrainSummary summary;
    const FeatureClassifier model = train_model(records, cfg, &summary);
    model.save(out);
    if (!dist_out.empty()) {
        std::ofstream os(dist_out);
        if (!os) throw DataError("cannot write " + dist_out);
        os << dist_json(summary.distribution).dump(2) << "\n";
    }
    std::cout << "train: " << summary.examples << " examples (" << summary.positives
              << " positive), " << summary.fit.iterations << " iterations, final loss "
              << summary.fit.final_loss << ", model " << model.version() << " -> " << out << "\n";
    return kExitOk;
}

int cmd_run(const Common& common, const std::string& data, const std::string& model_path,
            const std::string& out, const std::string& report_out) {
    const PipelineConfig cfg = common.load();
    auto records = read_records_file(data);

    std::ofstream decisions(out);
    if (!decisions) throw DataError("cannot write " + out);
    const RunResult result = run_log(records, cfg, classifier_for(cfg, model_path), &decisions);

    std::cout << "run: " << result.decision_count << " decisions -> " << out << "\n";
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "run: latency mean %.3f ms, p50 %.3f ms, p99 %.3f ms over %d frames "
                  "(%.1f tracks/frame, %.1f valid)\n",
                  result.latency.mean_ms, result.latency.p50_ms, result.latency.p99_ms,
                  result.latency.frames, result.latency.mean_tracks,
                  result.latency.mean_valid_tracks);
    std::cout << buf;
    if (result.has_report) {
        if (!report_out.empty()) write_report_file(report_out, result.report);
        std::cout << report_table(result.report);
    } else {
        std::cout << "run: scene has a single class; no PR report\n";
    }
    return kExitOk;
}

int cmd_evaluate(const Common& common, const std::string& data, const std::string& model_path,
                 const std::string& split, const std::string& baseline,
                 const std::string& out) {
    const PipelineConfig cfg = common.load();
    auto records = read_records_file(data);
    if (split != "all") {
        const Split want = split_from_string(split);
        std::erase_if(records, [&](const FrameRecord& r) { return r.split != want; });
    }
    if (records.empty()) throw DataError("no records left after split filter");

    score_records(records, cfg, *classifier_for(cfg, model_path));
    EvalReport report = evaluate_records(records, cfg.smoother);
    if (!baseline.empty()) {
        const EvalReport base = read_report_file(baseline);
        attach_baseline(report, base, baseline);
    }
    if (!out.empty()) write_report_file(out, report);
    std::cout << report_table(report);
    return kExitOk;
}

int cmd_sweep(const Common& common, const std::string& data, const std::string& model_path,
              std::vector<double> thresholds, const std::string& out) {
    const PipelineConfig cfg = common.load();
    auto records = read_records_file(data);
    score_records(records, cfg, *classifier_for(cfg, model_path));
    if (thresholds.empty()) thresholds = {0.0, 0.3, 0.5, 0.7};
    const EvalReport report = evaluate_records(records, cfg.smoother, thresholds);
    if (!out.empty()) write_report_file(out, report);
    std::cout << report_table(report);
    return kExitOk;
}

int cmd_augment(const Common& common, const std::string& data, int pos_ratio, int neg_down,
                std::uint64_t seed, bool has_seed, const std::string& out,
                const std::string& dist_out) {
    PipelineConfig cfg = common.load();
    if (pos_ratio > 0) cfg.augment.positive_ratio = pos_ratio;
    if (neg_down > 0) cfg.augment.negative_downsample = neg_down;
    if (has_seed) cfg.augment.seed = seed;

    auto records = read_records_file(data);
    const AugmentResult result = build_train_set(records, cfg.augment, cfg.camera);
    write_records_file(out, result.records);
    if (!dist_out.empty() && result.distribution_fitted) {
        std::ofstream os(dist_out);
        if (!os) throw DataError("cannot write " + dist_out);
        os << dist_json(result.distribution).dump(2) << "\n";
    }
    int pos = 0;
    for (const FrameRecord& r : result.records) pos += positive_label(r) ? 1 : 0;
    std::cout << "augment: " << records.size() << " -> " << result.records.size() << " records ("
              << pos << " positive) -> " << out << "\n";
    return kExitOk;
}

// mine emits events with their labeled ground-truth records embedded, so the
// retrain step needs only the events file.
int cmd_mine(const Common& common, const std::string& model_path, const std::string& logs_dir,
             const std::string& out) {
    const PipelineConfig cfg = common.load();
    auto logs = read_logs_dir(logs_dir);

    const auto classifier = classifier_for(cfg, model_path);
    std::string version = "synthetic";
    if (const auto* fc = dynamic_cast<const FeatureClassifier*>(classifier.get())) {
        version = fc->version();
    }
    const auto events = mine(logs, cfg, *classifier, version);
    const auto labeled = label_events(events, logs);

    std::ofstream os(out);
    if (!os) throw DataError("cannot write " + out);
    for (const MinedEvent& e : events) os << mined_event_to_jsonl(e) << "\n";
    // labeled records ride along under a distinct prefix
    for (const FrameRecord& r : labeled) os << "#record " << record_to_jsonl(r) << "\n";

    std::cout << "mine: " << events.size() << " events, " << labeled.size()
              << " labeled records -> " << out << "\n";
    return kExitOk;
}

std::pair<std::vector<MinedEvent>, std::vector<FrameRecord>> read_events_file(
    const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open events file: " + path);
    std::vector<MinedEvent> events;
    std::vector<FrameRecord> records;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line.rfind("#record ", 0) == 0) {
            records.push_back(record_from_jsonl(line.substr(8), line_no));
            continue;
        }
        try {
            const nlohmann::json j = nlohmann::json::parse(line);
            MinedEvent e;
            e.scene_id = j.at("scene").get<std::string>();
            e.track_id = j.at("track").get<std::int64_t>();
            e.first_frame = j.at("first_frame").get<int>();
            e.last_frame = j.at("last_frame").get<int>();
            e.scores = j.at("scores").get<std::vector<double>>();
            for (const auto& d : j.at("decisions")) e.decisions.push_back(d.get<bool>() ? 1 : 0);
            e.model_version = j.at("model_version").get<std::string>();
            events.push_back(std::move(e));
        } catch (const nlohmann::json::exception& ex) {
            throw DataError(path + " line " + std::to_string(line_no) + ": " + ex.what());
        }
    }
    return {std::move(events), std::move(records)};
}

int cmd_retrain(const Common& common, const std::string& data, const std::string& events_path,
                const std::string& model_path, const std::string& out,
                const std::string& report_out, const std::string& registry_dir) {
    const PipelineConfig cfg = common.load();
    auto dataset = read_records_file(data);
    auto [events, labeled] = read_events_file(events_path);
    const FeatureClassifier previous = load_model_arg(model_path, cfg);

    const CycleResult result = retrain_cycle(dataset, labeled, previous, cfg);
    result.model.save(out);
    if (!report_out.empty()) write_report_file(report_out, result.after);
    if (!registry_dir.empty()) {
        ModelRegistry registry(registry_dir);
        registry.add(previous, {data}, "");
        registry.add(result.model, {data, events_path}, previous.version());
    }

    std::cout << "retrain: +" << result.new_actors << " actors (+" << result.added_records
              << " records), dataset " << result.dataset_size << ", model "
              << result.model.version() << " -> " << out << "\n";
    auto pct = [](const std::optional<double>& v) {
        return v.has_value() ? std::to_string(*v) : std::string("n/a");
    };
    std::cout << "retrain: max-F1 " << result.before.max_f1 << " -> " << result.after.max_f1
              << " (" << pct(result.after.pct_max_f1) << "%), precision@0.8recall "
              << result.before.precision_at_recall_08 << " -> "
              << result.after.precision_at_recall_08 << " ("
              << pct(result.after.pct_precision_at_recall_08) << "%)\n";
    return kExitOk;
}

int cmd_bench(const Common& common, int tracks, int frames, const std::string& model_path) {
    PipelineConfig cfg = common.load();
    if (tracks > 0) cfg.bench.tracks_per_frame = tracks;
    if (frames > 0) cfg.bench.frames = frames;

    FeatureClassifier model;
    const FeatureClassifier* model_ptr = nullptr;
    if (!model_path.empty() || !cfg.model_path.empty()) {
        model = load_model_arg(model_path, cfg);
        model_ptr = &model;
    }
    const BenchResult result = run_bench(cfg, model_ptr, &std::cout);
    return result.within_budget ? kExitOk : kExitThreshold;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"active emergency-vehicle detection pipeline"};
    app.require_subcommand(1);
    Common common;
    app.add_option("--config", common.config_path, "pipeline config file");

    auto* sim = app.add_subcommand("simulate", "generate a synthetic scene as JSONL records");
    std::uint64_t sim_seed = 0;
    std::string sim_scene, sim_out = "scene.jsonl", sim_actors_out;
    int sim_actors = 0;
    auto* sim_seed_opt = sim->add_option("--seed", sim_seed, "override the scene seed");
    sim->add_option("--scene-id", sim_scene, "scene identifier");
    sim->add_option("--actors", sim_actors, "override actor count");
    sim->add_option("--out", sim_out, "records output (JSON Lines)")->required();
    sim->add_option("--actors-out", sim_actors_out, "actor profiles sidecar output");

    auto* train = app.add_subcommand("train", "fit the feature classifier on a record set");
    std::string train_data, train_out = "model.txt", train_dist;
    train->add_option("--data", train_data, "records JSONL")->required();
    train->add_option("--out", train_out, "model file")->required();
    train->add_option("--dist-out", train_dist, "fitted box distribution (JSON, for audit)");

    auto* run = app.add_subcommand("run", "replay a scene through the full pipeline");
    std::string run_data, run_model, run_out = "decisions.jsonl", run_report;
    run->add_option("--data", run_data, "scene records JSONL")->required();
    run->add_option("--model", run_model, "model file (feature classifier)");
    run->add_option("--out", run_out, "decisions output (JSON Lines)")->required();
    run->add_option("--report", run_report, "evaluation report output (JSON)");

    auto* eval = app.add_subcommand("evaluate", "per-frame PR and per-actor metrics");
    std::string eval_data, eval_model, eval_split = "test", eval_baseline, eval_out;
    eval->add_option("--data", eval_data, "records JSONL")->required();
    eval->add_option("--model", eval_model, "model file");
    eval->add_option("--split", eval_split, "train|test|all (default test)");
    eval->add_option("--baseline", eval_baseline, "baseline report JSON for %-change columns");
    eval->add_option("--out", eval_out, "report output (JSON)");

    auto* sweep = app.add_subcommand("sweep", "per-actor metrics across smoother thresholds");
    std::string sweep_data, sweep_model, sweep_out;
    std::vector<double> sweep_ts;
    sweep->add_option("--data", sweep_data, "records JSONL")->required();
    sweep->add_option("--model", sweep_model, "model file");
    sweep->add_option("--thresholds", sweep_ts, "T values (default 0 0.3 0.5 0.7)");
    sweep->add_option("--out", sweep_out, "report output (JSON)");

    auto* aug = app.add_subcommand("augment", "rebalance a train set (2x positives, 1/5 negatives)");
    std::string aug_data, aug_out, aug_dist;
    int aug_pos = 0, aug_neg = 0;
    std::uint64_t aug_seed = 0;
    aug->add_option("--data", aug_data, "records JSONL")->required();
    aug->add_option("--pos-ratio", aug_pos, "positive sampling ratio (default 2)");
    aug->add_option("--neg-downsample", aug_neg, "negative downsample factor (default 5)");
    auto* aug_seed_opt = aug->add_option("--seed", aug_seed, "augmentation seed");
    aug->add_option("--out", aug_out, "rebalanced records output")->required();
    aug->add_option("--dist-out", aug_dist, "fitted box distribution (JSON)");

    auto* mine_cmd = app.add_subcommand("mine", "harvest smoothed detections from logs");
    std::string mine_model, mine_logs, mine_out;
    mine_cmd->add_option("--model", mine_model, "mining model file");
    mine_cmd->add_option("--logs", mine_logs, "directory of scene JSONL logs")->required();
    mine_cmd->add_option("--out", mine_out, "mined events output")->required();

    auto* retrain = app.add_subcommand("retrain", "merge mined events and retrain");
    std::string rt_data, rt_events, rt_model, rt_out, rt_report, rt_registry;
    retrain->add_option("--data", rt_data, "dataset records JSONL")->required();
    retrain->add_option("--events", rt_events, "mined events file")->required();
    retrain->add_option("--model", rt_model, "previous model file");
    retrain->add_option("--out", rt_out, "new model file")->required();
    retrain->add_option("--report", rt_report, "delta report output (JSON)");
    retrain->add_option("--registry", rt_registry, "model registry directory");

    auto* bench = app.add_subcommand("bench", "frame latency benchmark (exit 3 over budget)");
    int bench_tracks = 0, bench_frames = 0;
    std::string bench_model;
    bench->add_option("--tracks", bench_tracks, "tracks per frame (default 200)");
    bench->add_option("--frames", bench_frames, "timed frames (default 1000)");
    bench->add_option("--model", bench_model, "model file (trains a small one if omitted)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            return cmd_simulate(common, sim_seed, !sim_seed_opt->empty(), sim_scene, sim_actors,
                                sim_out, sim_actors_out);
        }
        if (train->parsed()) return cmd_train(common, train_data, train_out, train_dist);
        if (run->parsed()) return cmd_run(common, run_data, run_model, run_out, run_report);
        if (eval->parsed()) {
            return cmd_evaluate(common, eval_data, eval_model, eval_split, eval_baseline,
                                eval_out);
        }
        if (sweep->parsed()) return cmd_sweep(common, sweep_data, sweep_model, sweep_ts, sweep_out);
        if (aug->parsed()) {
            return cmd_augment(common, aug_data, aug_pos, aug_neg, aug_seed,
                               !aug_seed_opt->empty(), aug_out, aug_dist);
        }
        if (mine_cmd->parsed()) return cmd_mine(common, mine_model, mine_logs, mine_out);
        if (retrain->parsed()) {
            return cmd_retrain(common, rt_data, rt_events, rt_model, rt_out, rt_report,
                               rt_registry);
        }
        if (bench->parsed()) return cmd_bench(common, bench_tracks, bench_frames, bench_model);
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
