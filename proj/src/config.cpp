#include "evdet/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "evdet/kernels.hpp"

namespace evdet {

void PipelineConfig::validate() const {
    camera.validate();
    scene.validate();
    smoother.validate();
    train.validate();
    augment.validate();
    if (classifier_kind != "feature" && classifier_kind != "synthetic") {
        throw DataError("pipeline: classifier_kind must be 'feature' or 'synthetic'");
    }
    if (kernels != "auto" && kernels != "scalar" && kernels != "avx2") {
        throw DataError("pipeline: kernels must be auto|scalar|avx2");
    }
    if (threads < 1) throw DataError("pipeline: threads must be >= 1");
    if (bench.tracks_per_frame < 1 || bench.frames < 1 || bench.warmup_frames < 0) {
        throw DataError("bench: bad workload sizes");
    }
    if (!(bench.budget_ms > 0.0)) throw DataError("bench: budget_ms must be > 0");
    if (split_train_parts < 0 || split_test_parts < 0 ||
        split_train_parts + split_test_parts <= 0) {
        throw DataError("pipeline: bad split ratio");
    }
    if (!model_path.empty() && !std::filesystem::exists(model_path)) {
        throw DataError("config: model file does not exist: " + model_path);
    }
}

PipelineConfig default_config() { return PipelineConfig{}; }

namespace {

struct Entry {
    std::string section, key, value;
    int line_no;
};

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

class Applier {
  public:
    Applier(const Entry& e) : e_(e) {}

    double num() const {
        char* end = nullptr;
        const std::string v = e_.value;
        const double d = std::strtod(v.c_str(), &end);
        if (end == v.c_str() || *end != '\0') {
            throw DataError("config line " + std::to_string(e_.line_no) + ": '" + e_.key +
                            "' expects a number, got '" + v + "'");
        }
        return d;
    }
    int integer() const {
        const double d = num();
        const int i = static_cast<int>(d);
        if (static_cast<double>(i) != d) {
            throw DataError("config line " + std::to_string(e_.line_no) + ": '" + e_.key +
                            "' expects an integer");
        }
        return i;
    }
    std::uint64_t u64() const {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(e_.value.c_str(), &end, 10);
        if (end == e_.value.c_str() || *end != '\0') {
            throw DataError("config line " + std::to_string(e_.line_no) + ": '" + e_.key +
                            "' expects an unsigned integer");
        }
        return v;
    }
    bool boolean() const {
        if (e_.value == "true") return true;
        if (e_.value == "false") return false;
        throw DataError("config line " + std::to_string(e_.line_no) + ": '" + e_.key +
                        "' expects true|false");
    }
    std::string str() const {
        std::string v = e_.value;
        if (v.size() >= 2 && v.front() == '"' && v.back() == '"') {
            v = v.substr(1, v.size() - 2);
        }
        return v;
    }

  private:
    const Entry& e_;
};

void apply_entry(PipelineConfig& c, const Entry& e) {
    const Applier v(e);
    const std::string& s = e.section;
    const std::string& k = e.key;

    auto unknown = [&]() -> void {
        throw DataError("config line " + std::to_string(e.line_no) + ": unknown key '" + k +
                        "' in section [" + s + "]");
    };

    if (s == "camera") {
        if (k == "focal_u") c.camera.model.focal_u = v.num();
        else if (k == "focal_v") c.camera.model.focal_v = v.num();
        else if (k == "principal_u") c.camera.model.principal_u = v.num();
        else if (k == "principal_v") c.camera.model.principal_v = v.num();
        else if (k == "image_width") c.camera.model.image_width = v.integer();
        else if (k == "image_height") c.camera.model.image_height = v.integer();
        else if (k == "min_projected_width") c.camera.min_projected_width = v.num();
        else if (k == "patch_size") c.camera.patch_size = v.integer();
        else unknown();
    } else if (s == "scene") {
        if (k == "scene_id") c.scene.scene_id = v.str();
        else if (k == "actor_count") c.scene.actor_count = v.integer();
        else if (k == "frame_rate") c.scene.frame_rate = v.num();
        else if (k == "duration_s") c.scene.duration_s = v.num();
        else if (k == "seed") c.scene.seed = v.u64();
        else if (k == "ev_fraction") c.scene.ev_fraction = v.num();
        else if (k == "police_fraction") c.scene.police_fraction = v.num();
        else if (k == "fire_fraction") c.scene.fire_fraction = v.num();
        else if (k == "ambulance_fraction") c.scene.ambulance_fraction = v.num();
        else if (k == "active_fraction") c.scene.active_fraction = v.num();
        else if (k == "all_off_fraction") c.scene.all_off_fraction = v.num();
        else if (k == "flash_mode") {
            const std::string m = v.str();
            if (m == "periodic") c.scene.flash_mode = FlashMode::periodic;
            else if (m == "bernoulli") c.scene.flash_mode = FlashMode::bernoulli;
            else throw DataError("config line " + std::to_string(e.line_no) +
                                 ": flash_mode must be periodic|bernoulli");
        } else if (k == "flash_period") c.scene.flash_period = v.integer();
        else if (k == "confounder_fraction") c.scene.confounder_fraction = v.num();
        else if (k == "spawn_x_min") c.scene.spawn_x_min = v.num();
        else if (k == "spawn_x_max") c.scene.spawn_x_max = v.num();
        else if (k == "spawn_z_min") c.scene.spawn_z_min = v.num();
        else if (k == "spawn_z_max") c.scene.spawn_z_max = v.num();
        else if (k == "speed_min") c.scene.speed_min = v.num();
        else if (k == "speed_max") c.scene.speed_max = v.num();
        else if (k == "min_duration_s") c.scene.min_duration_s = v.num();
        else if (k == "camera_height") c.scene.camera_height = v.num();
        else if (k == "bg_ceiling") c.scene.render.bg_ceiling = v.num();
        else if (k == "bulb_peak") c.scene.render.bulb_peak = v.num();
        else if (k == "bulb_ref_z") c.scene.render.bulb_ref_z = v.num();
        else if (k == "bulb_radius_frac") c.scene.render.bulb_radius_frac = v.num();
        else if (k == "confounder_peak") c.scene.render.confounder_peak = v.num();
        else if (k == "confounder_radius_frac") c.scene.render.confounder_radius_frac = v.num();
        else if (k == "intensity_scale") c.scene.render.intensity_scale = v.num();
        else unknown();
    } else if (s == "smoother") {
        if (k == "buffer_capacity") c.smoother.buffer_capacity = v.integer();
        else if (k == "min_frames") c.smoother.min_frames = v.integer();
        else if (k == "threshold_t") c.smoother.threshold_t = v.num();
        else if (k == "frame_decision_threshold") c.smoother.frame_decision_threshold = v.num();
        else if (k == "reset_on_invalid") c.smoother.reset_on_invalid = v.boolean();
        else unknown();
    } else if (s == "classifier") {
        if (k == "kind") c.classifier_kind = v.str();
        else if (k == "model") c.model_path = v.str();
        else if (k == "tpr") c.synthetic.tpr = v.num();
        else if (k == "fpr") c.synthetic.fpr = v.num();
        else if (k == "score_hi") c.synthetic.score_hi = v.num();
        else if (k == "score_lo") c.synthetic.score_lo = v.num();
        else if (k == "jitter") c.synthetic.jitter = v.num();
        else if (k == "seed") c.synthetic.seed = v.u64();
        else unknown();
    } else if (s == "train") {
        if (k == "alpha") c.train.alpha = v.num();
        else if (k == "gamma") c.train.gamma = v.num();
        else if (k == "initial_lr") c.train.initial_lr = v.num();
        else if (k == "weight_decay") c.train.weight_decay = v.num();
        else if (k == "plateau_patience") c.train.plateau_patience = v.integer();
        else if (k == "lr_decay_factor") c.train.lr_decay_factor = v.num();
        else if (k == "stop_lr") c.train.stop_lr = v.num();
        else if (k == "min_improvement") c.train.min_improvement = v.num();
        else if (k == "max_iterations") c.train.max_iterations = v.integer();
        else if (k == "batch_size") c.train.batch_size = v.integer();
        else if (k == "seed") c.train.seed = v.u64();
        else unknown();
    } else if (s == "augment") {
        if (k == "positive_ratio") c.augment.positive_ratio = v.integer();
        else if (k == "negative_downsample") c.augment.negative_downsample = v.integer();
        else if (k == "seed") c.augment.seed = v.u64();
        else unknown();
    } else if (s == "pipeline") {
        if (k == "kernels") c.kernels = v.str();
        else if (k == "threads") c.threads = v.integer();
        else if (k == "render_seed") c.render_seed = v.u64();
        else if (k == "split_seed") c.split_seed = v.u64();
        else if (k == "split_train_parts") c.split_train_parts = v.integer();
        else if (k == "split_test_parts") c.split_test_parts = v.integer();
        else unknown();
    } else if (s == "bench") {
        if (k == "tracks_per_frame") c.bench.tracks_per_frame = v.integer();
        else if (k == "frames") c.bench.frames = v.integer();
        else if (k == "warmup_frames") c.bench.warmup_frames = v.integer();
        else if (k == "budget_ms") c.bench.budget_ms = v.num();
        else if (k == "seed") c.bench.seed = v.u64();
        else unknown();
    } else {
        throw DataError("config line " + std::to_string(e.line_no) + ": unknown section [" + s +
                        "]");
    }
}

}  // namespace

PipelineConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open config file: " + path);

    PipelineConfig cfg = default_config();
    std::string line, section;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const std::size_t comment = line.find('#');
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw DataError("config line " + std::to_string(line_no) +
                                ": malformed section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw DataError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        Entry e{section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no};
        if (e.section.empty()) {
            throw DataError("config line " + std::to_string(line_no) +
                            ": key outside of any [section]");
        }
        if (e.key.empty()) {
            throw DataError("config line " + std::to_string(line_no) + ": empty key");
        }
        apply_entry(cfg, e);
    }
    cfg.validate();
    return cfg;
}

void apply_kernel_choice(const PipelineConfig& cfg) {
    if (!kernels::set_backend(cfg.kernels)) {
        throw DataError("kernels backend '" + cfg.kernels + "' not available on this machine");
    }
}

}  // namespace evdet
