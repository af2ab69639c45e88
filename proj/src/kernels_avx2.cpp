#include "evdet/kernels.hpp"

#ifdef EVDET_HAVE_AVX2_KERNELS

#include <immintrin.h>

#include <cstring>

#include "kernels_common.hpp"

namespace evdet::kernels::avx2 {

namespace {

const __m256i kLaneOffsets = _mm256_setr_epi32(0, 1, 2, 3, 4, 5, 6, 7);

inline __m256i fmix32_vec(__m256i h) {
    h = _mm256_xor_si256(h, _mm256_srli_epi32(h, 16));
    h = _mm256_mullo_epi32(h, _mm256_set1_epi32(static_cast<int>(0x85ebca6bu)));
    h = _mm256_xor_si256(h, _mm256_srli_epi32(h, 13));
    h = _mm256_mullo_epi32(h, _mm256_set1_epi32(static_cast<int>(0xc2b2ae35u)));
    h = _mm256_xor_si256(h, _mm256_srli_epi32(h, 16));
    return h;
}

}  // namespace

void fill_noise(float* dst, std::size_t n, std::uint32_t seed, std::uint32_t start_index,
                float base, float amp) {
    const __m256i vseed = _mm256_set1_epi32(static_cast<int>(seed));
    const __m256 vbase = _mm256_set1_ps(base);
    const __m256 vamp = _mm256_set1_ps(amp);
    const __m256 vscale = _mm256_set1_ps(1.0f / 16777216.0f);

    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256i idx = _mm256_add_epi32(
            _mm256_set1_epi32(static_cast<int>(start_index + static_cast<std::uint32_t>(i))),
            kLaneOffsets);
        __m256i h = fmix32_vec(_mm256_xor_si256(idx, vseed));
        // top 24 bits -> exact float in [0, 2^24)
        __m256 u = _mm256_mul_ps(_mm256_cvtepi32_ps(_mm256_srli_epi32(h, 8)), vscale);
        _mm256_storeu_ps(dst + i, _mm256_add_ps(vbase, _mm256_mul_ps(vamp, u)));
    }
    for (; i < n; ++i) {
        dst[i] = detail::noise_value(seed, start_index + static_cast<std::uint32_t>(i), base, amp);
    }
}

namespace {

// Horizontal pass state: gather indices clamped into range plus an
// all-or-nothing lane mask for the out-of-bounds taps (zero fill).
struct HorizontalTaps {
    std::vector<std::int32_t> idx0, idx1;
    std::vector<float> mask0, mask1;  // 0xFFFFFFFF or 0 as float bits
    std::vector<float> wx;
};

void build_horizontal(const detail::TapTable& tx, int src_w, HorizontalTaps& h) {
    const int n = static_cast<int>(tx.idx.size());
    h.idx0.resize(n);
    h.idx1.resize(n);
    h.mask0.resize(n);
    h.mask1.resize(n);
    h.wx = tx.weight;
    const std::uint32_t all = 0xFFFFFFFFu;
    for (int j = 0; j < n; ++j) {
        const std::int32_t x0 = tx.idx[j];
        const std::int32_t x1 = x0 + 1;
        const bool in0 = x0 >= 0 && x0 < src_w;
        const bool in1 = x1 >= 0 && x1 < src_w;
        h.idx0[j] = in0 ? x0 : 0;
        h.idx1[j] = in1 ? x1 : 0;
        const std::uint32_t m0 = in0 ? all : 0u;
        const std::uint32_t m1 = in1 ? all : 0u;
        std::memcpy(&h.mask0[j], &m0, 4);
        std::memcpy(&h.mask1[j], &m1, 4);
    }
}

// One source row resampled horizontally into dst_size samples.
void resample_row(const float* row, const HorizontalTaps& h, float* out, int n) {
    const __m256 one = _mm256_set1_ps(1.0f);
    int j = 0;
    for (; j + 8 <= n; j += 8) {
        __m256i i0 = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(h.idx0.data() + j));
        __m256i i1 = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(h.idx1.data() + j));
        __m256 m0 = _mm256_loadu_ps(h.mask0.data() + j);
        __m256 m1 = _mm256_loadu_ps(h.mask1.data() + j);
        __m256 wx = _mm256_loadu_ps(h.wx.data() + j);
        __m256 a = _mm256_and_ps(_mm256_i32gather_ps(row, i0, 4), m0);
        __m256 b = _mm256_and_ps(_mm256_i32gather_ps(row, i1, 4), m1);
        __m256 v = _mm256_add_ps(_mm256_mul_ps(_mm256_sub_ps(one, wx), a), _mm256_mul_ps(wx, b));
        _mm256_storeu_ps(out + j, v);
    }
    for (; j < n; ++j) {
        std::uint32_t m0, m1;
        std::memcpy(&m0, &h.mask0[j], 4);
        std::memcpy(&m1, &h.mask1[j], 4);
        const float a = m0 ? row[h.idx0[j]] : 0.0f;
        const float b = m1 ? row[h.idx1[j]] : 0.0f;
        const float wx = h.wx[j];
        out[j] = (1.0f - wx) * a + wx * b;
    }
}

}  // namespace

void bilinear_sample_plane(const float* src, int src_w, int src_h, double u0, double v0,
                           double step, float* dst, int dst_size) {
    detail::TapTable tx, ty;
    detail::build_taps(u0, step, dst_size, tx);
    detail::build_taps(v0, step, dst_size, ty);

    HorizontalTaps htaps;
    build_horizontal(tx, src_w, htaps);

    // Two-slot cache of horizontally resampled source rows. Source row
    // indices are non-decreasing over the output rows, so adjacent output
    // rows mostly reuse each other's rows.
    constexpr std::int64_t kNoRow = INT64_MIN;
    std::vector<float> buf[2] = {std::vector<float>(dst_size), std::vector<float>(dst_size)};
    std::int64_t key[2] = {kNoRow, kNoRow};

    auto hrow = [&](std::int64_t y) -> const float* {
        if (key[0] == y) return buf[0].data();
        if (key[1] == y) return buf[1].data();
        const int slot = (key[0] == kNoRow || key[0] <= key[1]) ? 0 : 1;  // evict oldest
        key[slot] = y;
        if (y < 0 || y >= src_h) {
            std::memset(buf[slot].data(), 0, sizeof(float) * dst_size);
        } else {
            resample_row(src + static_cast<std::size_t>(y) * src_w, htaps, buf[slot].data(),
                         dst_size);
        }
        return buf[slot].data();
    };

    const __m256 one = _mm256_set1_ps(1.0f);
    for (int i = 0; i < dst_size; ++i) {
        const std::int64_t y0 = ty.idx[i];
        const float wy = ty.weight[i];
        const float* h0 = hrow(y0);
        const float* h1 = hrow(y0 + 1);
        float* out = dst + static_cast<std::size_t>(i) * dst_size;
        const __m256 vwy = _mm256_set1_ps(wy);
        const __m256 vwy1 = _mm256_sub_ps(one, vwy);
        int j = 0;
        for (; j + 8 <= dst_size; j += 8) {
            __m256 a = _mm256_loadu_ps(h0 + j);
            __m256 b = _mm256_loadu_ps(h1 + j);
            _mm256_storeu_ps(out + j,
                             _mm256_add_ps(_mm256_mul_ps(vwy1, a), _mm256_mul_ps(vwy, b)));
        }
        for (; j < dst_size; ++j) {
            out[j] = (1.0f - wy) * h0[j] + wy * h1[j];
        }
    }
}

namespace {

inline double hsum_pd(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(lo) + _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo));
}

inline float hmax_ps(__m256 v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_max_ps(lo, hi);
    lo = _mm_max_ps(lo, _mm_movehl_ps(lo, lo));
    lo = _mm_max_ss(lo, _mm_shuffle_ps(lo, lo, 1));
    return _mm_cvtss_f32(lo);
}

inline int hsum_epi32(__m256i v) {
    __m128i lo = _mm256_castsi256_si128(v);
    __m128i hi = _mm256_extracti128_si256(v, 1);
    lo = _mm_add_epi32(lo, hi);
    lo = _mm_add_epi32(lo, _mm_srli_si128(lo, 8));
    lo = _mm_add_epi32(lo, _mm_srli_si128(lo, 4));
    return _mm_cvtsi128_si32(lo);
}

}  // namespace

void patch_stats(const float* planes, int size, float bright_threshold, const float* w1,
                 const float* w2, PatchStats& out) {
    const std::size_t n = static_cast<std::size_t>(size) * size;
    out = PatchStats{};
    const __m256 vthr = _mm256_set1_ps(bright_threshold);
    __m256 vmax = _mm256_setzero_ps();

    for (int c = 0; c < 3; ++c) {
        const float* p = planes + c * n;
        __m256d sum_lo = _mm256_setzero_pd(), sum_hi = _mm256_setzero_pd();
        __m256d r1_lo = _mm256_setzero_pd(), r1_hi = _mm256_setzero_pd();
        __m256d r2_lo = _mm256_setzero_pd(), r2_hi = _mm256_setzero_pd();
        __m256i bright = _mm256_setzero_si256();

        std::size_t i = 0;
        for (; i + 8 <= n; i += 8) {
            const __m256 v = _mm256_loadu_ps(p + i);
            vmax = _mm256_max_ps(vmax, v);
            const __m256 gt = _mm256_cmp_ps(v, vthr, _CMP_GT_OQ);
            bright = _mm256_sub_epi32(bright, _mm256_castps_si256(gt));  // mask is -1

            const __m256d vlo = _mm256_cvtps_pd(_mm256_castps256_ps128(v));
            const __m256d vhi = _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1));
            sum_lo = _mm256_add_pd(sum_lo, vlo);
            sum_hi = _mm256_add_pd(sum_hi, vhi);

            const __m256 w1v = _mm256_loadu_ps(w1 + i);
            const __m256d w1lo = _mm256_cvtps_pd(_mm256_castps256_ps128(w1v));
            const __m256d w1hi = _mm256_cvtps_pd(_mm256_extractf128_ps(w1v, 1));
            r1_lo = _mm256_add_pd(r1_lo, _mm256_mul_pd(vlo, w1lo));
            r1_hi = _mm256_add_pd(r1_hi, _mm256_mul_pd(vhi, w1hi));

            const __m256 w2v = _mm256_loadu_ps(w2 + i);
            const __m256d w2lo = _mm256_cvtps_pd(_mm256_castps256_ps128(w2v));
            const __m256d w2hi = _mm256_cvtps_pd(_mm256_extractf128_ps(w2v, 1));
            r2_lo = _mm256_add_pd(r2_lo, _mm256_mul_pd(vlo, w2lo));
            r2_hi = _mm256_add_pd(r2_hi, _mm256_mul_pd(vhi, w2hi));
        }

        double sum = hsum_pd(_mm256_add_pd(sum_lo, sum_hi));
        double rad1 = hsum_pd(_mm256_add_pd(r1_lo, r1_hi));
        double rad2 = hsum_pd(_mm256_add_pd(r2_lo, r2_hi));
        std::uint32_t nb = static_cast<std::uint32_t>(hsum_epi32(bright));
        float mx = hmax_ps(vmax);

        for (; i < n; ++i) {
            const float v = p[i];
            if (v > mx) mx = v;
            if (v > bright_threshold) ++nb;
            sum += static_cast<double>(v);
            rad1 += static_cast<double>(v) * static_cast<double>(w1[i]);
            rad2 += static_cast<double>(v) * static_cast<double>(w2[i]);
        }

        vmax = _mm256_max_ps(vmax, _mm256_set1_ps(mx));
        out.sum[c] = sum;
        out.bright[c] = nb;
        out.radial1 += rad1;
        out.radial2 += rad2;
        if (mx > out.max_all) out.max_all = mx;
    }
}

}  // namespace evdet::kernels::avx2

#endif  // EVDET_HAVE_AVX2_KERNELS
