#include "evdet/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "evdet/kernels.hpp"
#include "evdet/rng.hpp"

namespace evdet {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kMaxTrackSeconds = 25.0;

inline double u01_64(std::uint64_t h) {
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace

void CameraConfig::validate() const {
    model.validate();
    if (!(min_projected_width > 0.0)) throw DataError("camera: min_projected_width must be > 0");
    if (patch_size <= 0) throw DataError("camera: patch_size must be > 0");
}

bool FlashPattern::bulb_on_at(int frame, std::uint64_t actor_seed) const {
    if (mode == FlashMode::bernoulli) {
        const double p_on = 1.0 - target_all_off_fraction;
        return u01_64(mix64(actor_seed, 0xB01Bu, static_cast<std::uint64_t>(frame))) < p_on;
    }
    const int k = (frame + phase) % period;
    for (const Bulb& b : bulbs) {
        const int rel = ((k - b.phase_offset) % period + period) % period;
        const int on_frames = static_cast<int>(std::lround(b.on_fraction * period));
        if (rel < on_frames) return true;
    }
    return false;
}

FlashPattern make_periodic_pattern(int period, double target_all_off_fraction) {
    if (period < 2) throw DataError("flash pattern: period must be >= 2 frames");
    const int off = static_cast<int>(std::lround(period * target_all_off_fraction));
    const double achieved = static_cast<double>(off) / period;
    if (std::abs(achieved - target_all_off_fraction) > 0.01) {
        throw DataError("flash pattern: all-off fraction " +
                        std::to_string(target_all_off_fraction) +
                        " not representable within 0.01 at period " + std::to_string(period));
    }
    const int on_total = period - off;
    if (on_total <= 0) throw DataError("flash pattern: bulbs never on");

    FlashPattern p;
    p.mode = FlashMode::periodic;
    p.period = period;
    p.target_all_off_fraction = target_all_off_fraction;
    const int k1 = (on_total + 1) / 2;
    const int k2 = on_total - k1;
    p.bulbs.push_back({0, static_cast<double>(k1) / period});
    if (k2 > 0) p.bulbs.push_back({k1, static_cast<double>(k2) / period});
    return p;
}

BoxState ActorProfile::box_at(int frame, double frame_rate) const {
    BoxState b = spawn;
    const double dt = (frame - start_frame) / frame_rate;
    b.x += vx * dt;
    b.z += vz * dt;
    return b;
}

void SceneConfig::validate() const {
    auto frac = [](double v, const char* name) {
        if (!(v >= 0.0 && v <= 1.0)) throw DataError(std::string("scene: ") + name + " in [0,1]");
    };
    if (actor_count <= 0) throw DataError("scene: actor_count must be > 0");
    if (!(frame_rate > 0.0)) throw DataError("scene: frame_rate must be > 0");
    if (!(duration_s > 0.0)) throw DataError("scene: duration_s must be > 0");
    frac(ev_fraction, "ev_fraction");
    frac(police_fraction, "police_fraction");
    frac(fire_fraction, "fire_fraction");
    frac(ambulance_fraction, "ambulance_fraction");
    frac(active_fraction, "active_fraction");
    frac(all_off_fraction, "all_off_fraction");
    frac(confounder_fraction, "confounder_fraction");
    const double type_sum = police_fraction + fire_fraction + ambulance_fraction;
    if (std::abs(type_sum - 1.0) > 1e-6) throw DataError("scene: EV type fractions must sum to 1");
    if (spawn_x_max < spawn_x_min || spawn_z_max < spawn_z_min || speed_max < speed_min) {
        throw DataError("scene: invalid spawn/speed ranges");
    }
    if (flash_mode == FlashMode::periodic) {
        make_periodic_pattern(flash_period, all_off_fraction);  // throws if unreachable
    }
}

namespace {

struct DimSpec {
    double l, w, h;
};

DimSpec base_dims(VehicleType type, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> pick(0.0, 1.0);
    switch (type) {
        case VehicleType::police: return {4.9, 1.9, 1.5};
        case VehicleType::fire: return {9.5, 2.5, 3.4};
        case VehicleType::ambulance: return {6.2, 2.3, 2.7};
        case VehicleType::non_ev: {
            const double u = pick(rng);
            if (u < 0.6) return {4.5, 1.8, 1.5};
            if (u < 0.9) return {5.0, 2.0, 1.8};
            return {8.5, 2.5, 3.2};
        }
    }
    return {4.5, 1.8, 1.5};
}

}  // namespace

void generate_scene_stream(const SceneConfig& cfg, const CameraConfig& cam,
                           const ActorSink& actor_sink, const RecordSink& record_sink) {
    cfg.validate();
    cam.validate();

    const int total_frames = std::max(1, static_cast<int>(std::lround(cfg.duration_s * cfg.frame_rate)));
    const int max_track_frames =
        std::max(1, static_cast<int>(std::lround(kMaxTrackSeconds * cfg.frame_rate)));

    FlashPattern base_pattern;
    if (cfg.flash_mode == FlashMode::periodic) {
        base_pattern = make_periodic_pattern(cfg.flash_period, cfg.all_off_fraction);
    } else {
        base_pattern.mode = FlashMode::bernoulli;
        base_pattern.period = cfg.flash_period;
        base_pattern.target_all_off_fraction = cfg.all_off_fraction;
    }

    const std::uint64_t scene_hash = fnv1a(cfg.scene_id.c_str());

    for (int i = 0; i < cfg.actor_count; ++i) {
        const std::uint64_t actor_seed = mix64(cfg.seed, scene_hash, static_cast<std::uint64_t>(i));
        std::mt19937_64 rng(actor_seed);
        std::uniform_real_distribution<double> u01(0.0, 1.0);

        ActorProfile a;
        a.scene_id = cfg.scene_id;
        a.track_id = i;
        a.actor_seed = actor_seed;

        if (u01(rng) < cfg.ev_fraction) {
            const double u = u01(rng);
            if (u < cfg.police_fraction) {
                a.type = VehicleType::police;
            } else if (u < cfg.police_fraction + cfg.fire_fraction) {
                a.type = VehicleType::fire;
            } else {
                a.type = VehicleType::ambulance;
            }
            a.is_active = u01(rng) < cfg.active_fraction;
        } else {
            a.type = VehicleType::non_ev;
            a.confounder = u01(rng) < cfg.confounder_fraction;
        }

        const DimSpec d = base_dims(a.type, rng);
        std::uniform_real_distribution<double> jitter(0.9, 1.1);
        a.spawn.length = d.l * jitter(rng);
        a.spawn.width = d.w * jitter(rng);
        a.spawn.height = d.h * jitter(rng);

        a.pattern = base_pattern;
        if (base_pattern.mode == FlashMode::periodic) {
            a.pattern.phase = static_cast<int>(rng() % static_cast<std::uint64_t>(base_pattern.period));
        }

        a.spawn.x = cfg.spawn_x_min + u01(rng) * (cfg.spawn_x_max - cfg.spawn_x_min);
        a.spawn.z = cfg.spawn_z_min + u01(rng) * (cfg.spawn_z_max - cfg.spawn_z_min);
        a.spawn.y = cfg.camera_height - 0.5 * a.spawn.height;

        const double speed = cfg.speed_min + u01(rng) * (cfg.speed_max - cfg.speed_min);
        const double heading = -kPi + u01(rng) * 2.0 * kPi;
        a.vx = speed * std::cos(heading);
        a.vz = speed * std::sin(heading);
        a.spawn.yaw = heading;

        // starts leave room for min_duration_s whenever the scene is long enough
        const int min_len_target =
            std::max(1, static_cast<int>(std::lround(cfg.min_duration_s * cfg.frame_rate)));
        const int start_max = std::max(1, total_frames - min_len_target + 1);
        a.start_frame = static_cast<int>(rng() % static_cast<std::uint64_t>(start_max));
        const int max_len = std::min(total_frames - a.start_frame, max_track_frames);
        const int min_len = std::min(max_len, min_len_target);
        a.frame_count =
            min_len + static_cast<int>(rng() % static_cast<std::uint64_t>(max_len - min_len + 1));

        if (actor_sink) actor_sink(a);
        if (!record_sink) continue;

        for (int f = a.start_frame; f < a.start_frame + a.frame_count; ++f) {
            FrameRecord rec;
            rec.scene_id = cfg.scene_id;
            rec.track_id = a.track_id;
            rec.frame_index = f;
            rec.timestamp = f / cfg.frame_rate;
            rec.type = a.type;
            rec.is_active = a.is_active;
            rec.confounder = a.confounder;
            rec.box = a.box_at(f, cfg.frame_rate);
            rec.bulb_on = a.is_active && a.pattern.bulb_on_at(f, actor_seed);

            const TrackState t{rec.track_id, rec.timestamp, rec.box};
            rec.crop = crop_region(cam.model, t, cam.min_projected_width);
            record_sink(rec);
        }
    }
}

Scene generate_scene(const SceneConfig& cfg, const CameraConfig& cam) {
    Scene scene;
    generate_scene_stream(
        cfg, cam, [&](const ActorProfile& a) { scene.actors.push_back(a); },
        [&](const FrameRecord& r) { scene.records.push_back(r); });
    std::stable_sort(scene.records.begin(), scene.records.end(),
                     [](const FrameRecord& a, const FrameRecord& b) {
                         if (a.frame_index != b.frame_index) return a.frame_index < b.frame_index;
                         return a.track_id < b.track_id;
                     });
    return scene;
}

void split_dataset(std::vector<FrameRecord>& records, int train_parts, int test_parts,
                   std::uint64_t seed) {
    if (train_parts < 0 || test_parts < 0 || train_parts + test_parts <= 0) {
        throw DataError("split: ratio parts must be non-negative and sum > 0");
    }
    const double p_train = static_cast<double>(train_parts) / (train_parts + test_parts);
    for (FrameRecord& r : records) {
        const std::uint64_t h =
            mix64(seed, fnv1a(r.scene_id.c_str()), static_cast<std::uint64_t>(r.track_id));
        r.split = u01_64(h) < p_train ? Split::train : Split::test;
    }
}

std::uint64_t record_render_seed(std::uint64_t base, const FrameRecord& rec) {
    return mix64(mix64(base, fnv1a(rec.scene_id.c_str())),
                 mix64(static_cast<std::uint64_t>(rec.track_id),
                       static_cast<std::uint64_t>(rec.frame_index)));
}

namespace {

// Paints v = peak * (1 - d^2/R^2) into a disk, keeping the brighter of blob
// and background per pixel.
void stamp_blob(ImagePatch& patch, double cx, double cy, double radius, const double color[3]) {
    if (radius <= 0.0) return;
    const int size = patch.size;
    const int x_lo = std::max(0, static_cast<int>(std::floor(cx - radius)));
    const int x_hi = std::min(size - 1, static_cast<int>(std::ceil(cx + radius)));
    const int y_lo = std::max(0, static_cast<int>(std::floor(cy - radius)));
    const int y_hi = std::min(size - 1, static_cast<int>(std::ceil(cy + radius)));
    const double r2 = radius * radius;
    for (int y = y_lo; y <= y_hi; ++y) {
        for (int x = x_lo; x <= x_hi; ++x) {
            const double dx = x - cx;
            const double dy = y - cy;
            const double f = 1.0 - (dx * dx + dy * dy) / r2;
            if (f <= 0.0) continue;
            for (int c = 0; c < 3; ++c) {
                const float v = static_cast<float>(color[c] * f);
                float& px = patch.plane(c)[static_cast<std::size_t>(y) * size + x];
                if (v > px) px = v;
            }
        }
    }
}

inline double range_peak(double base_peak, double ref_z, double z, double scale) {
    const double atten = std::min(1.0, ref_z / std::max(z, 1.0));
    return std::min(1.0, base_peak * atten * scale);
}

}  // namespace

void render_patch_into(const FrameRecord& rec, const RenderParams& params, int patch_size,
                       std::uint64_t seed, ImagePatch& out) {
    if (!rec.crop.valid) throw DataError("render_patch: invalid_region");
    if (out.size != patch_size) out.reset(patch_size);
    out.source_region = rec.crop;

    const std::size_t n = static_cast<std::size_t>(patch_size) * patch_size;
    const float amp = static_cast<float>(std::min(params.bg_ceiling * params.intensity_scale, 1.0));
    for (int c = 0; c < 3; ++c) {
        const std::uint32_t plane_seed =
            static_cast<std::uint32_t>(mix64(seed, 0xC0 + static_cast<std::uint64_t>(c)) >> 32);
        kernels::fill_noise(out.plane(c), n, plane_seed, 0, 0.0f, amp);
    }

    if (rec.bulb_on) {
        const double peak =
            range_peak(params.bulb_peak, params.bulb_ref_z, rec.box.z, params.intensity_scale);
        const double jx = u01_64(mix64(seed, 0xB1));
        const double jy = u01_64(mix64(seed, 0xB2));
        const double cx = patch_size * (0.42 + 0.16 * jx);
        const double cy = patch_size * (0.20 + 0.12 * jy);
        const double radius = params.bulb_radius_frac * patch_size;
        const double color[3] = {0.55 * peak, 0.65 * peak, 1.0 * peak};
        stamp_blob(out, cx, cy, radius, color);
    }

    if (rec.confounder && rec.type == VehicleType::non_ev) {
        const double peak = range_peak(params.confounder_peak, params.bulb_ref_z, rec.box.z,
                                       params.intensity_scale);
        const double jx = (u01_64(mix64(seed, 0xB3)) - 0.5) * 0.06;
        const double cy = patch_size * (0.70 + 0.04 * u01_64(mix64(seed, 0xB4)));
        const double radius = params.confounder_radius_frac * patch_size;
        const double color[3] = {1.0 * peak, 0.15 * peak, 0.10 * peak};
        stamp_blob(out, patch_size * (0.33 + jx), cy, radius, color);
        stamp_blob(out, patch_size * (0.67 + jx), cy, radius, color);
    }
}

ImagePatch render_patch(const FrameRecord& rec, const RenderParams& params, int patch_size,
                        std::uint64_t seed) {
    ImagePatch out;
    render_patch_into(rec, params, patch_size, seed, out);
    return out;
}

void render_camera_frame(const CameraConfig& cam, std::uint64_t seed, FrameImage& out) {
    out.reset(cam.model.image_width, cam.model.image_height);
    const std::size_t n = static_cast<std::size_t>(out.width) * out.height;
    for (int c = 0; c < 3; ++c) {
        const std::uint32_t plane_seed =
            static_cast<std::uint32_t>(mix64(seed, 0xF0 + static_cast<std::uint64_t>(c)) >> 32);
        kernels::fill_noise(out.plane(c), n, plane_seed, 0, 0.0f, 0.5f);
    }
}

}  // namespace evdet
