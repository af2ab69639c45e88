#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace evdet {

// Error class for malformed inputs (bad files, bad configs, degenerate
// datasets). The CLI maps these to exit code 2.
class DataError : public std::runtime_error {
  public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

enum class VehicleType { police, fire, ambulance, non_ev };

enum class Split { train, test };

const char* to_string(VehicleType t);
const char* to_string(Split s);
VehicleType vehicle_type_from_string(const std::string& s);
Split split_from_string(const std::string& s);

inline bool is_ev(VehicleType t) { return t != VehicleType::non_ev; }

// Oriented 3D bounding box in the camera frame (x right, y down, z forward).
// These are exactly the states the box augmentation perturbs, plus yaw,
// which is needed to place corners but is never resampled.
struct BoxState {
    double x = 0.0;       // center, meters
    double y = 0.0;
    double z = 0.0;
    double length = 0.0;  // extent along heading
    double width = 0.0;
    double height = 0.0;
    double yaw = 0.0;     // rotation in the x-z ground plane, radians, [-pi, pi)
};

// One tracker observation of one vehicle.
struct TrackState {
    std::int64_t track_id = 0;
    double timestamp = 0.0;  // seconds
    BoxState box;
};

enum class InvalidReason { none, behind_camera, centroid_out_of_fov, below_min_width };

const char* to_string(InvalidReason r);
InvalidReason invalid_reason_from_string(const std::string& s);

// Square image-space crop around a projected track. Invalidity is encoded in
// the result rather than thrown so downstream counts of valid outputs stay
// well defined.
struct CropRegion {
    double center_u = 0.0;  // pixels
    double center_v = 0.0;
    double side = 0.0;      // pixels, side of the square
    bool valid = false;
    InvalidReason reason = InvalidReason::none;
};

// Fixed-size RGB patch fed to the classifier. Planar float storage
// (plane-major: R plane, G plane, B plane), intensities in [0,1].
struct ImagePatch {
    int size = 0;
    std::vector<float> data;  // 3 * size * size
    CropRegion source_region;

    void reset(int patch_size) {
        size = patch_size;
        data.assign(static_cast<std::size_t>(3) * patch_size * patch_size, 0.0f);
    }
    float* plane(int c) { return data.data() + static_cast<std::size_t>(c) * size * size; }
    const float* plane(int c) const {
        return data.data() + static_cast<std::size_t>(c) * size * size;
    }
    float at(int c, int row, int col) const {
        return plane(c)[static_cast<std::size_t>(row) * size + col];
    }
};

// Full-resolution camera image, planar float RGB. Used by the patch
// extraction path (crop + resize) and the latency benchmark.
struct FrameImage {
    int width = 0;
    int height = 0;
    std::vector<float> data;  // 3 * width * height

    void reset(int w, int h) {
        width = w;
        height = h;
        data.assign(static_cast<std::size_t>(3) * w * h, 0.0f);
    }
    float* plane(int c) { return data.data() + static_cast<std::size_t>(c) * width * height; }
    const float* plane(int c) const {
        return data.data() + static_cast<std::size_t>(c) * width * height;
    }
};

// The dataset atom: one (track, frame) pair with ground-truth labels, the
// box state that produced it, the projected crop, and (once a classifier has
// run) a score. Serialized as one JSON line; see README for the schema.
struct FrameRecord {
    std::string scene_id;
    std::int64_t track_id = 0;
    int frame_index = 0;
    double timestamp = 0.0;

    VehicleType type = VehicleType::non_ev;
    bool is_active = false;
    bool bulb_on = false;
    bool confounder = false;  // non-EV rendered with a brake-light-like blob

    BoxState box;
    CropRegion crop;

    std::optional<double> score;
    Split split = Split::train;

    bool augmented = false;     // produced by box augmentation
    std::string mined_from;     // model version that mined it, empty if organic
};

// The training label rule: positive iff the vehicle is an EV with a lit bulb
// at capture time.
inline bool positive_label(const FrameRecord& r) { return r.is_active && r.bulb_on; }

}  // namespace evdet
