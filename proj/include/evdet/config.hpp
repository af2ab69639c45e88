#pragma once

#include <cstdint>
#include <string>

#include "evdet/augment.hpp"
#include "evdet/classifier.hpp"
#include "evdet/simulate.hpp"
#include "evdet/smoother.hpp"

namespace evdet {

struct BenchConfig {
    int tracks_per_frame = 200;
    int frames = 1000;
    int warmup_frames = 50;
    double budget_ms = 10.0;  // mean frame latency budget
    std::uint64_t seed = 11;
};

// Everything the CLI commands need, loaded from one sectioned key=value
// config file (see README for the grammar). Defaults are usable without a
// file.
struct PipelineConfig {
    CameraConfig camera;
    SceneConfig scene;
    SmootherConfig smoother;
    TrainConfig train;
    AugmentConfig augment;
    BenchConfig bench;

    std::string classifier_kind = "feature";  // "feature" | "synthetic"
    std::string model_path;
    SyntheticClassifierConfig synthetic;

    std::string kernels = "auto";  // "auto" | "scalar" | "avx2"
    int threads = 1;
    std::uint64_t render_seed = 7;
    std::uint64_t split_seed = 3;
    int split_train_parts = 3;
    int split_test_parts = 1;

    void validate() const;
};

PipelineConfig default_config();

// Parses the file over the defaults. Unknown sections/keys and malformed
// values are DataErrors naming the offending line.
PipelineConfig load_config(const std::string& path);

// Applies the [pipeline] kernels selection to the process-wide dispatcher.
void apply_kernel_choice(const PipelineConfig& cfg);

}  // namespace evdet
