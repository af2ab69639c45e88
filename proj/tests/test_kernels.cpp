#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "evdet/kernels.hpp"

using namespace evdet;

namespace {

bool have_avx2() {
#ifdef EVDET_HAVE_AVX2_KERNELS
    return kernels::cpu_has_avx2();
#else
    return false;
#endif
}

std::vector<float> random_plane(std::mt19937& rng, std::size_t n) {
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    std::vector<float> v(n);
    for (float& x : v) x = u(rng);
    return v;
}

}  // namespace

TEST_CASE("fill_noise: values live in [base, base+amp)") {
    std::vector<float> buf(1000);
    kernels::scalar::fill_noise(buf.data(), buf.size(), 42u, 0u, 0.1f, 0.5f);
    for (float v : buf) {
        CHECK(v >= 0.1f);
        CHECK(v < 0.6f);
    }
}

TEST_CASE("fill_noise: pure function of (seed, index)") {
    std::vector<float> a(257), b(257);
    kernels::scalar::fill_noise(a.data(), a.size(), 7u, 100u, 0.0f, 1.0f);
    // the same indices reached with a different start split
    kernels::scalar::fill_noise(b.data(), 128, 7u, 100u, 0.0f, 1.0f);
    kernels::scalar::fill_noise(b.data() + 128, 129, 7u, 228u, 0.0f, 1.0f);
    CHECK(a == b);
}

TEST_CASE("fill_noise: avx2 bitwise-equal to scalar") {
    if (!have_avx2()) return;
#ifdef EVDET_HAVE_AVX2_KERNELS
    std::mt19937 rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + rng() % 3000;
        const std::uint32_t seed = static_cast<std::uint32_t>(rng());
        const std::uint32_t start = rng() % 100000;
        std::vector<float> a(n), b(n);
        kernels::scalar::fill_noise(a.data(), n, seed, start, 0.05f, 0.9f);
        kernels::avx2::fill_noise(b.data(), n, seed, start, 0.05f, 0.9f);
        REQUIRE(a == b);
    }
#endif
}

TEST_CASE("bilinear: identity copy when the region is pixel-aligned at scale 1") {
    const int w = 16, h = 12, out_n = 8;
    std::mt19937 rng(3);
    auto src = random_plane(rng, static_cast<std::size_t>(w) * h);
    std::vector<float> dst(out_n * out_n, -1.0f);
    // region top-left at (4,2), side == out_n -> step 1, zero fractional taps
    kernels::scalar::bilinear_sample_plane(src.data(), w, h, 4.0, 2.0, 1.0, dst.data(), out_n);
    for (int i = 0; i < out_n; ++i) {
        for (int j = 0; j < out_n; ++j) {
            CHECK(dst[i * out_n + j] == src[(i + 2) * w + (j + 4)]);
        }
    }
}

TEST_CASE("bilinear: out-of-bounds taps read as zero") {
    const int w = 4, h = 4;
    std::vector<float> src(16, 1.0f);
    std::vector<float> dst(16);
    // region entirely left of the image
    kernels::scalar::bilinear_sample_plane(src.data(), w, h, -100.0, 0.0, 1.0, dst.data(), 4);
    for (float v : dst) CHECK(v == 0.0f);
    // half-in region: edge pixels blend against zero, interior untouched
    kernels::scalar::bilinear_sample_plane(src.data(), w, h, -2.0, 0.0, 1.0, dst.data(), 4);
    CHECK(dst[0] == 0.0f);
    CHECK(dst[3] == 1.0f);
}

TEST_CASE("bilinear: avx2 bitwise-equal to scalar across scales and bounds") {
    if (!have_avx2()) return;
#ifdef EVDET_HAVE_AVX2_KERNELS
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> off(-30.0, 90.0);
    std::uniform_real_distribution<double> step_d(0.05, 6.0);
    for (int trial = 0; trial < 60; ++trial) {
        const int w = 8 + rng() % 120;
        const int h = 8 + rng() % 120;
        const int out_n = 1 + rng() % 70;
        auto src = random_plane(rng, static_cast<std::size_t>(w) * h);
        std::vector<float> a(static_cast<std::size_t>(out_n) * out_n);
        std::vector<float> b(a.size());
        const double u0 = off(rng), v0 = off(rng), step = step_d(rng);
        kernels::scalar::bilinear_sample_plane(src.data(), w, h, u0, v0, step, a.data(), out_n);
        kernels::avx2::bilinear_sample_plane(src.data(), w, h, u0, v0, step, b.data(), out_n);
        REQUIRE(a == b);
    }
#endif
}

TEST_CASE("patch_stats: scalar matches a direct recount") {
    std::mt19937 rng(5);
    const int size = 19;
    const std::size_t n = static_cast<std::size_t>(size) * size;
    auto patch = random_plane(rng, 3 * n);
    auto w1 = random_plane(rng, n);
    auto w2 = random_plane(rng, n);

    kernels::PatchStats st;
    kernels::scalar::patch_stats(patch.data(), size, 0.7f, w1.data(), w2.data(), st);

    float mx = 0.0f;
    double sums[3] = {0, 0, 0};
    std::uint32_t bright[3] = {0, 0, 0};
    double r1 = 0.0, r2 = 0.0;
    for (int c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            const float v = patch[c * n + i];
            mx = std::max(mx, v);
            sums[c] += v;
            bright[c] += v > 0.7f ? 1 : 0;
            r1 += double(v) * double(w1[i]);
            r2 += double(v) * double(w2[i]);
        }
    }
    CHECK(st.max_all == mx);
    for (int c = 0; c < 3; ++c) {
        CHECK(st.bright[c] == bright[c]);
        CHECK(st.sum[c] == doctest::Approx(sums[c]).epsilon(1e-12));
    }
    CHECK(st.radial1 == doctest::Approx(r1).epsilon(1e-12));
    CHECK(st.radial2 == doctest::Approx(r2).epsilon(1e-12));
}

TEST_CASE("patch_stats: avx2 equivalent to scalar") {
    if (!have_avx2()) return;
#ifdef EVDET_HAVE_AVX2_KERNELS
    std::mt19937 rng(9);
    for (int size : {1, 7, 8, 17, 64, 224}) {
        const std::size_t n = static_cast<std::size_t>(size) * size;
        auto patch = random_plane(rng, 3 * n);
        auto w1 = random_plane(rng, n);
        auto w2 = random_plane(rng, n);
        kernels::PatchStats a, b;
        kernels::scalar::patch_stats(patch.data(), size, 0.7f, w1.data(), w2.data(), a);
        kernels::avx2::patch_stats(patch.data(), size, 0.7f, w1.data(), w2.data(), b);
        // exact: max and counts; reassociation-tolerant: double sums
        CHECK(a.max_all == b.max_all);
        for (int c = 0; c < 3; ++c) {
            CHECK(a.bright[c] == b.bright[c]);
            CHECK(a.sum[c] == doctest::Approx(b.sum[c]).epsilon(1e-9));
        }
        CHECK(a.radial1 == doctest::Approx(b.radial1).epsilon(1e-9));
        CHECK(a.radial2 == doctest::Approx(b.radial2).epsilon(1e-9));
    }
#endif
}

TEST_CASE("backend dispatch") {
    const auto original = kernels::active_backend();
    CHECK(kernels::set_backend("scalar"));
    CHECK(kernels::active_backend() == kernels::Backend::scalar);
    CHECK_FALSE(kernels::set_backend("sse9"));
    if (kernels::cpu_has_avx2()) {
        CHECK(kernels::set_backend("avx2"));
        CHECK(kernels::active_backend() == kernels::Backend::avx2);
    } else {
        CHECK_FALSE(kernels::set_backend("avx2"));
    }
    CHECK(kernels::set_backend("auto"));
    CHECK(kernels::active_backend() == original);
}
