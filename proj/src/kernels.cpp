#include "evdet/kernels.hpp"

#include <atomic>

namespace evdet::kernels {

bool cpu_has_avx2() {
#if defined(EVDET_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

namespace {

Backend pick_default() { return cpu_has_avx2() ? Backend::avx2 : Backend::scalar; }

std::atomic<Backend> g_backend{pick_default()};

}  // namespace

Backend active_backend() { return g_backend.load(std::memory_order_relaxed); }

const char* backend_name(Backend b) { return b == Backend::avx2 ? "avx2" : "scalar"; }

bool set_backend(const std::string& name) {
    if (name == "auto") {
        g_backend.store(pick_default(), std::memory_order_relaxed);
        return true;
    }
    if (name == "scalar") {
        g_backend.store(Backend::scalar, std::memory_order_relaxed);
        return true;
    }
    if (name == "avx2") {
        if (!cpu_has_avx2()) return false;
        g_backend.store(Backend::avx2, std::memory_order_relaxed);
        return true;
    }
    return false;
}

void fill_noise(float* dst, std::size_t n, std::uint32_t seed, std::uint32_t start_index,
                float base, float amp) {
#ifdef EVDET_HAVE_AVX2_KERNELS
    if (active_backend() == Backend::avx2) {
        avx2::fill_noise(dst, n, seed, start_index, base, amp);
        return;
    }
#endif
    scalar::fill_noise(dst, n, seed, start_index, base, amp);
}

void bilinear_sample_plane(const float* src, int src_w, int src_h, double u0, double v0,
                           double step, float* dst, int dst_size) {
#ifdef EVDET_HAVE_AVX2_KERNELS
    if (active_backend() == Backend::avx2) {
        avx2::bilinear_sample_plane(src, src_w, src_h, u0, v0, step, dst, dst_size);
        return;
    }
#endif
    scalar::bilinear_sample_plane(src, src_w, src_h, u0, v0, step, dst, dst_size);
}

void patch_stats(const float* planes, int size, float bright_threshold, const float* w1,
                 const float* w2, PatchStats& out) {
#ifdef EVDET_HAVE_AVX2_KERNELS
    if (active_backend() == Backend::avx2) {
        avx2::patch_stats(planes, size, bright_threshold, w1, w2, out);
        return;
    }
#endif
    scalar::patch_stats(planes, size, bright_threshold, w1, w2, out);
}

}  // namespace evdet::kernels
