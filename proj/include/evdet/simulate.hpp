#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "evdet/geometry.hpp"
#include "evdet/types.hpp"

namespace evdet {

// Camera block of the pipeline config: intrinsics plus the projected-width
// filter and the classifier patch size.
struct CameraConfig {
    CameraModel model{1000.0, 1000.0, 960.0, 600.0, 1920, 1200};
    double min_projected_width = 18.0;  // pixels
    int patch_size = 224;

    void validate() const;
};

enum class FlashMode { periodic, bernoulli };

// Beacon duty model for one actor. Periodic mode lays the bulbs' on-windows
// out over a fixed period so the all-bulbs-off fraction matches the target;
// bernoulli mode draws per-frame iid with P(on) = 1 - target.
struct FlashPattern {
    struct Bulb {
        int phase_offset = 0;      // frames
        double on_fraction = 0.0;  // of the period
    };

    FlashMode mode = FlashMode::periodic;
    int period = 12;  // frames
    std::vector<Bulb> bulbs;
    double target_all_off_fraction = 0.082;
    int phase = 0;  // per-actor shift, frames

    bool bulb_on_at(int frame, std::uint64_t actor_seed) const;
};

// Solves the two-bulb layout for (period, target all-off fraction). Throws
// DataError when the fraction is not representable within 0.01 at this
// period.
FlashPattern make_periodic_pattern(int period, double target_all_off_fraction);

struct ActorProfile {
    std::string scene_id;
    std::int64_t track_id = 0;
    VehicleType type = VehicleType::non_ev;
    bool is_active = false;
    bool confounder = false;
    FlashPattern pattern;
    BoxState spawn;       // box state at start_frame
    double vx = 0.0;      // m/s, constant velocity in the camera frame
    double vz = 0.0;
    int start_frame = 0;
    int frame_count = 0;  // <= 25 s worth of frames
    std::uint64_t actor_seed = 0;

    BoxState box_at(int frame, double frame_rate) const;
};

// Knobs of the synthetic patch renderer. The renderer stands in for real
// camera imagery: clutter noise background, a bright beacon blob on bulb-on
// frames whose peak decays with range, and optional brake-light-like red
// blobs on flagged non-EVs.
struct RenderParams {
    double bg_ceiling = 0.6;        // background noise is uniform in [0, ceiling)
    double bulb_peak = 0.95;        // blob peak at or inside the reference range
    double bulb_ref_z = 40.0;       // meters; peak decays ~ref/z beyond this
    double bulb_radius_frac = 0.07; // of the patch side
    double confounder_peak = 0.85;
    double confounder_radius_frac = 0.055;
    double intensity_scale = 1.0;   // day/night scalar
};

struct SceneConfig {
    std::string scene_id = "scene";
    int actor_count = 500;
    double frame_rate = 10.0;  // Hz
    double duration_s = 25.0;
    std::uint64_t seed = 1;

    // class priors (defaults match the observed fleet distributions)
    double ev_fraction = 0.034;
    double police_fraction = 0.800;
    double fire_fraction = 0.134;
    double ambulance_fraction = 0.066;
    double active_fraction = 0.900;
    double all_off_fraction = 0.082;

    FlashMode flash_mode = FlashMode::periodic;
    int flash_period = 12;  // frames

    double confounder_fraction = 0.05;  // of non-EV actors

    // spawn envelope, camera frame
    double spawn_x_min = -40.0, spawn_x_max = 40.0;
    double spawn_z_min = 8.0, spawn_z_max = 110.0;
    double speed_min = 0.0, speed_max = 15.0;
    double min_duration_s = 5.0;
    double camera_height = 1.6;  // meters above the road plane

    RenderParams render;

    void validate() const;
};

using ActorSink = std::function<void(const ActorProfile&)>;
using RecordSink = std::function<void(const FrameRecord&)>;

// Streaming generator: actors and their frame records are produced
// actor-major, deterministically for a fixed seed. Sinks may be null.
// Records are emitted for every live frame of an actor, including frames
// whose crop is invalid; validity filtering is downstream's job.
void generate_scene_stream(const SceneConfig& cfg, const CameraConfig& cam,
                           const ActorSink& actor_sink, const RecordSink& record_sink);

struct Scene {
    std::vector<ActorProfile> actors;
    std::vector<FrameRecord> records;  // sorted by (frame_index, track_id)
};

Scene generate_scene(const SceneConfig& cfg, const CameraConfig& cam);

// Per-actor random split at the given train:test ratio. All frames of one
// actor land in the same split; deterministic per seed and independent of
// record order.
void split_dataset(std::vector<FrameRecord>& records, int train_parts, int test_parts,
                   std::uint64_t seed);

// Canonical per-record render seed so every consumer (training, pipeline,
// mining) sees identical pixels for the same record.
std::uint64_t record_render_seed(std::uint64_t base, const FrameRecord& rec);

// Renders the record's patch: noise background, beacon blob when bulb_on,
// confounder blobs on flagged actors. Bit-identical for identical
// (record, params, seed) regardless of the kernel backend.
void render_patch_into(const FrameRecord& rec, const RenderParams& params, int patch_size,
                       std::uint64_t seed, ImagePatch& out);
ImagePatch render_patch(const FrameRecord& rec, const RenderParams& params, int patch_size,
                        std::uint64_t seed);

// Synthetic full camera frame for the extraction path and the benchmark.
void render_camera_frame(const CameraConfig& cam, std::uint64_t seed, FrameImage& out);

}  // namespace evdet
