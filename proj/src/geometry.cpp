#include "evdet/geometry.hpp"

#include <cmath>

#include "evdet/kernels.hpp"

namespace evdet {

void CameraModel::validate() const {
    if (!(focal_u > 0.0) || !(focal_v > 0.0)) throw DataError("camera: focal lengths must be > 0");
    if (image_width <= 0 || image_height <= 0) throw DataError("camera: image dims must be > 0");
    if (principal_u < 0.0 || principal_u >= image_width || principal_v < 0.0 ||
        principal_v >= image_height) {
        throw DataError("camera: principal point outside image bounds");
    }
}

std::optional<PixelPoint> project_point(const CameraModel& cam, const Vec3& p) {
    if (p.z <= kEpsilonZ) return std::nullopt;
    return PixelPoint{cam.focal_u * p.x / p.z + cam.principal_u,
                      cam.focal_v * p.y / p.z + cam.principal_v};
}

std::array<Vec3, 8> box_corners(const TrackState& t) {
    const BoxState& b = t.box;
    const double c = std::cos(b.yaw);
    const double s = std::sin(b.yaw);
    const double hl = 0.5 * b.length;
    const double hw = 0.5 * b.width;
    const double hh = 0.5 * b.height;

    std::array<Vec3, 8> out;
    int k = 0;
    for (int il = -1; il <= 1; il += 2) {
        for (int iw = -1; iw <= 1; iw += 2) {
            for (int ih = -1; ih <= 1; ih += 2) {
                const double lx = il * hl;
                const double lz = iw * hw;
                out[k++] = Vec3{b.x + (c * lx - s * lz), b.y + ih * hh, b.z + (s * lx + c * lz)};
            }
        }
    }
    return out;
}

CropRegion crop_region(const CameraModel& cam, const TrackState& t, double min_width) {
    CropRegion r;
    const auto corners = box_corners(t);

    for (const Vec3& p : corners) {
        if (p.z <= kEpsilonZ) {
            r.valid = false;
            r.reason = InvalidReason::behind_camera;
            return r;
        }
    }

    double min_u = 0.0, max_u = 0.0, min_v = 0.0, max_v = 0.0;
    double sum_u = 0.0, sum_v = 0.0;
    for (int i = 0; i < 8; ++i) {
        const PixelPoint p = *project_point(cam, corners[i]);
        if (i == 0) {
            min_u = max_u = p.u;
            min_v = max_v = p.v;
        } else {
            min_u = std::min(min_u, p.u);
            max_u = std::max(max_u, p.u);
            min_v = std::min(min_v, p.v);
            max_v = std::max(max_v, p.v);
        }
        sum_u += p.u;
        sum_v += p.v;
    }

    r.center_u = (min_u + max_u) * 0.5;
    r.center_v = (min_v + max_v) * 0.5;
    r.side = std::max(max_u - min_u, max_v - min_v);

    const double centroid_u = sum_u / 8.0;
    const double centroid_v = sum_v / 8.0;
    if (centroid_u < 0.0 || centroid_u >= cam.image_width || centroid_v < 0.0 ||
        centroid_v >= cam.image_height) {
        r.valid = false;
        r.reason = InvalidReason::centroid_out_of_fov;
        return r;
    }

    if ((max_u - min_u) < min_width) {
        r.valid = false;
        r.reason = InvalidReason::below_min_width;
        return r;
    }

    r.valid = true;
    r.reason = InvalidReason::none;
    return r;
}

void extract_patch_into(const FrameImage& frame, const CropRegion& region, int patch_size,
                        ImagePatch& out) {
    if (!region.valid) throw DataError("extract_patch: invalid_region");
    if (patch_size <= 0) throw DataError("extract_patch: patch_size must be > 0");

    if (out.size != patch_size) out.reset(patch_size);
    out.source_region = region;

    const double u0 = region.center_u - 0.5 * region.side;
    const double v0 = region.center_v - 0.5 * region.side;
    const double step = region.side / patch_size;
    for (int c = 0; c < 3; ++c) {
        kernels::bilinear_sample_plane(frame.plane(c), frame.width, frame.height, u0, v0, step,
                                       out.plane(c), patch_size);
    }
}

ImagePatch extract_patch(const FrameImage& frame, const CropRegion& region, int patch_size) {
    ImagePatch out;
    extract_patch_into(frame, region, patch_size, out);
    return out;
}

}  // namespace evdet
