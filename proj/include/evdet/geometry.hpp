#pragma once

#include <array>
#include <optional>

#include "evdet/types.hpp"

namespace evdet {

// Pinhole camera, zero distortion. Tracks arrive already expressed in the
// camera frame (x right, y down, z forward), so there is no extrinsic here.
struct CameraModel {
    double focal_u = 0.0;      // pixels
    double focal_v = 0.0;
    double principal_u = 0.0;  // pixels
    double principal_v = 0.0;
    int image_width = 0;
    int image_height = 0;

    void validate() const;  // throws DataError on a bad model
};

struct PixelPoint {
    double u = 0.0;
    double v = 0.0;
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

// Corners closer to the image plane than this are treated as behind the
// camera; keeps the projection away from the 1/z blow-up.
inline constexpr double kEpsilonZ = 0.1;

// nullopt when the point is behind the camera (z <= kEpsilonZ).
std::optional<PixelPoint> project_point(const CameraModel& cam, const Vec3& p);

// The 8 corners of the oriented box: center +/- rotated half extents in the
// x-z ground plane, +/- half height vertically.
std::array<Vec3, 8> box_corners(const TrackState& t);

// Smallest axis-aligned square enclosing the projected box corners, plus the
// validity filters: behind-camera, centroid-in-FOV, minimum projected width.
// The centroid test uses the mean of the 8 projected corners.
CropRegion crop_region(const CameraModel& cam, const TrackState& t, double min_width);

// Crop the frame at the region's square and resize to patch_size via
// bilinear interpolation. Out-of-bounds source pixels read as black.
// Throws DataError when the region is invalid.
ImagePatch extract_patch(const FrameImage& frame, const CropRegion& region, int patch_size);
void extract_patch_into(const FrameImage& frame, const CropRegion& region, int patch_size,
                        ImagePatch& out);

}  // namespace evdet
