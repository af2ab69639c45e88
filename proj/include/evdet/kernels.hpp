#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace evdet::kernels {

// The data-parallel inner loops of the pipeline live here: deterministic
// noise fill (renderer / synthetic camera frames), separable bilinear patch
// extraction, and patch feature accumulation. Each has a scalar reference
// implementation and an AVX2 variant selected at runtime; the tests assert
// equivalence between the two.

enum class Backend { scalar, avx2 };

// Selected backend for the process. "auto" picks AVX2 when the CPU supports
// it. set_backend returns false (and changes nothing) if the request cannot
// be honored, e.g. "avx2" on a machine without it.
Backend active_backend();
bool set_backend(const std::string& name);  // "auto" | "scalar" | "avx2"
const char* backend_name(Backend b);
bool cpu_has_avx2();

// dst[i] = base + amp * u01(fmix32(seed ^ (start_index + i))) for i in [0,n).
// Pure function of (seed, index); identical bits from every backend.
void fill_noise(float* dst, std::size_t n, std::uint32_t seed, std::uint32_t start_index,
                float base, float amp);

// Bilinear sampling of an axis-aligned square region of one image plane into
// a dst_size x dst_size grid. (u0,v0) is the top-left of the region in pixel
// coordinates, step the source pixels per destination pixel. Out-of-bounds
// taps read as zero. Backends are bit-identical.
void bilinear_sample_plane(const float* src, int src_w, int src_h, double u0, double v0,
                           double step, float* dst, int dst_size);

// Raw accumulations over a 3-plane patch from which the classifier features
// are assembled. max / bright counts are exact across backends; the double
// sums may differ by reassociation only.
struct PatchStats {
    float max_all = 0.0f;          // max over all planes
    double sum[3] = {0, 0, 0};     // per-plane sum of intensities
    std::uint32_t bright[3] = {0, 0, 0};  // per-plane count of values > bright_threshold
    double radial1 = 0.0;          // sum of v * w1 over all planes
    double radial2 = 0.0;          // sum of v * w2
};

// w1/w2 are per-pixel weight tables of length size*size (shared by the three
// planes); see classifier.cpp for the radial tables.
void patch_stats(const float* planes, int size, float bright_threshold, const float* w1,
                 const float* w2, PatchStats& out);

// Direct entry points for the equivalence tests.
namespace scalar {
void fill_noise(float* dst, std::size_t n, std::uint32_t seed, std::uint32_t start_index,
                float base, float amp);
void bilinear_sample_plane(const float* src, int src_w, int src_h, double u0, double v0,
                           double step, float* dst, int dst_size);
void patch_stats(const float* planes, int size, float bright_threshold, const float* w1,
                 const float* w2, PatchStats& out);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define EVDET_HAVE_AVX2_KERNELS 1
namespace avx2 {
void fill_noise(float* dst, std::size_t n, std::uint32_t seed, std::uint32_t start_index,
                float base, float amp);
void bilinear_sample_plane(const float* src, int src_w, int src_h, double u0, double v0,
                           double step, float* dst, int dst_size);
void patch_stats(const float* planes, int size, float bright_threshold, const float* w1,
                 const float* w2, PatchStats& out);
}  // namespace avx2
#endif

}  // namespace evdet::kernels
