#include "evdet/kernels.hpp"

#include "kernels_common.hpp"

namespace evdet::kernels::scalar {

void fill_noise(float* dst, std::size_t n, std::uint32_t seed, std::uint32_t start_index,
                float base, float amp) {
    for (std::size_t i = 0; i < n; ++i) {
        dst[i] = detail::noise_value(seed, start_index + static_cast<std::uint32_t>(i), base, amp);
    }
}

namespace {

inline float tap(const float* row, std::int32_t x, std::int32_t w) {
    return (row != nullptr && x >= 0 && x < w) ? row[x] : 0.0f;
}

}  // namespace

void bilinear_sample_plane(const float* src, int src_w, int src_h, double u0, double v0,
                           double step, float* dst, int dst_size) {
    detail::TapTable tx, ty;
    detail::build_taps(u0, step, dst_size, tx);
    detail::build_taps(v0, step, dst_size, ty);

    for (int i = 0; i < dst_size; ++i) {
        const std::int32_t y0 = ty.idx[i];
        const float wy = ty.weight[i];
        const float* r0 = (y0 >= 0 && y0 < src_h) ? src + static_cast<std::size_t>(y0) * src_w
                                                  : nullptr;
        const float* r1 = (y0 + 1 >= 0 && y0 + 1 < src_h)
                              ? src + static_cast<std::size_t>(y0 + 1) * src_w
                              : nullptr;
        float* out = dst + static_cast<std::size_t>(i) * dst_size;
        for (int j = 0; j < dst_size; ++j) {
            const std::int32_t x0 = tx.idx[j];
            const float wx = tx.weight[j];
            const float h0 = (1.0f - wx) * tap(r0, x0, src_w) + wx * tap(r0, x0 + 1, src_w);
            const float h1 = (1.0f - wx) * tap(r1, x0, src_w) + wx * tap(r1, x0 + 1, src_w);
            out[j] = (1.0f - wy) * h0 + wy * h1;
        }
    }
}

void patch_stats(const float* planes, int size, float bright_threshold, const float* w1,
                 const float* w2, PatchStats& out) {
    const std::size_t n = static_cast<std::size_t>(size) * size;
    out = PatchStats{};
    for (int c = 0; c < 3; ++c) {
        const float* p = planes + c * n;
        double sum = 0.0;
        std::uint32_t bright = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const float v = p[i];
            if (v > out.max_all) out.max_all = v;
            if (v > bright_threshold) ++bright;
            sum += static_cast<double>(v);
            out.radial1 += static_cast<double>(v) * static_cast<double>(w1[i]);
            out.radial2 += static_cast<double>(v) * static_cast<double>(w2[i]);
        }
        out.sum[c] = sum;
        out.bright[c] = bright;
    }
}

}  // namespace evdet::kernels::scalar
