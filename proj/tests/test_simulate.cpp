#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "evdet/jsonl.hpp"
#include "evdet/simulate.hpp"

using namespace evdet;

namespace {

SceneConfig small_scene(std::uint64_t seed, int actors) {
    SceneConfig cfg;
    cfg.scene_id = "t" + std::to_string(seed);
    cfg.seed = seed;
    cfg.actor_count = actors;
    cfg.duration_s = 12.0;
    return cfg;
}

}  // namespace

TEST_CASE("periodic pattern hits the target all-off fraction") {
    const FlashPattern p = make_periodic_pattern(12, 0.082);
    int off = 0;
    for (int k = 0; k < p.period; ++k) off += p.bulb_on_at(k, 1) ? 0 : 1;
    const double achieved = static_cast<double>(off) / p.period;
    CHECK(std::abs(achieved - 0.082) <= 0.01);

    // unreachable fraction at this period
    CHECK_THROWS_AS(make_periodic_pattern(10, 0.25), DataError);
    CHECK_NOTHROW(make_periodic_pattern(25, 0.082));
}

TEST_CASE("periodic pattern: phase permutes frames within the period") {
    FlashPattern p = make_periodic_pattern(12, 0.082);
    int on_base = 0, on_shift = 0;
    p.phase = 0;
    for (int k = 0; k < 12; ++k) on_base += p.bulb_on_at(k, 1) ? 1 : 0;
    p.phase = 5;
    for (int k = 0; k < 12; ++k) on_shift += p.bulb_on_at(k, 1) ? 1 : 0;
    CHECK(on_base == on_shift);
}

TEST_CASE("bernoulli pattern converges to its on-probability") {
    FlashPattern p;
    p.mode = FlashMode::bernoulli;
    p.target_all_off_fraction = 0.082;
    int on = 0;
    const int n = 200000;
    for (int k = 0; k < n; ++k) on += p.bulb_on_at(k, 42) ? 1 : 0;
    CHECK(static_cast<double>(on) / n == doctest::Approx(0.918).epsilon(0.01));
}

TEST_CASE("degenerate prior: ev_fraction 0 means no EVs anywhere") {
    SceneConfig cfg = small_scene(5, 100);
    cfg.ev_fraction = 0.0;
    const Scene s = generate_scene(cfg, CameraConfig{});
    CHECK(!s.actors.empty());
    for (const ActorProfile& a : s.actors) {
        CHECK(a.type == VehicleType::non_ev);
        CHECK_FALSE(a.is_active);
    }
    for (const FrameRecord& r : s.records) {
        CHECK_FALSE(r.is_active);
        CHECK_FALSE(r.bulb_on);
    }
}

TEST_CASE("generation is deterministic per seed") {
    const SceneConfig cfg = small_scene(77, 60);
    const Scene a = generate_scene(cfg, CameraConfig{});
    const Scene b = generate_scene(cfg, CameraConfig{});
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(record_to_jsonl(a.records[i]) == record_to_jsonl(b.records[i]));
    }
    const Scene c = generate_scene(small_scene(78, 60), CameraConfig{});
    CHECK(record_to_jsonl(a.records[0]) != record_to_jsonl(c.records[0]));
}

TEST_CASE("label consistency: bulb_on implies active, over a million frames") {
    SceneConfig cfg = small_scene(9, 15000);
    cfg.ev_fraction = 0.2;  // denser EV population to exercise the bulb path
    cfg.duration_s = 20.0;
    long frames = 0;
    generate_scene_stream(cfg, CameraConfig{}, nullptr, [&](const FrameRecord& r) {
        ++frames;
        if (r.bulb_on) REQUIRE(r.is_active);
        if (!r.is_active) REQUIRE_FALSE(r.bulb_on);
    });
    CHECK(frames > 1000000);
}

TEST_CASE("class priors converge at 3-sigma binomial bounds") {
    SceneConfig cfg = small_scene(1234, 20000);
    int ev = 0, active = 0, confounder = 0, non_ev = 0;
    std::map<VehicleType, int> types;
    generate_scene_stream(
        cfg, CameraConfig{},
        [&](const ActorProfile& a) {
            types[a.type]++;
            if (is_ev(a.type)) {
                ++ev;
                active += a.is_active ? 1 : 0;
            } else {
                ++non_ev;
                confounder += a.confounder ? 1 : 0;
            }
        },
        nullptr);
    const double n = 20000.0;
    auto band = [&](double p, double m) { return 3.0 * std::sqrt(p * (1 - p) / m); };
    CHECK(std::abs(ev / n - 0.034) <= band(0.034, n));
    CHECK(std::abs(active / double(ev) - 0.90) <= band(0.90, ev));
    CHECK(std::abs(confounder / double(non_ev) - 0.05) <= band(0.05, non_ev));
    CHECK(std::abs(types[VehicleType::police] / double(ev) - 0.80) <= band(0.80, ev));
}

TEST_CASE("track durations never exceed 25 seconds") {
    SceneConfig cfg = small_scene(3, 500);
    cfg.duration_s = 60.0;
    const Scene s = generate_scene(cfg, CameraConfig{});
    for (const ActorProfile& a : s.actors) {
        CHECK(a.frame_count / cfg.frame_rate <= 25.0 + 1e-9);
        CHECK(a.frame_count >= 1);
    }
}

TEST_CASE("all-off fraction of active frames matches the configured target") {
    SceneConfig cfg = small_scene(21, 3000);
    cfg.ev_fraction = 0.3;
    long active_frames = 0, off_frames = 0;
    generate_scene_stream(cfg, CameraConfig{}, nullptr, [&](const FrameRecord& r) {
        if (!r.is_active) return;
        ++active_frames;
        off_frames += r.bulb_on ? 0 : 1;
    });
    REQUIRE(active_frames > 10000);
    CHECK(std::abs(off_frames / double(active_frames) - 0.082) <= 0.01);
}

TEST_CASE("split: per-actor atomicity, ratio, determinism, degenerate cases") {
    SceneConfig cfg = small_scene(31, 2000);
    Scene s = generate_scene(cfg, CameraConfig{});

    split_dataset(s.records, 3, 1, 99);
    std::map<std::int64_t, Split> actor_split;
    int train_actors = 0, total_actors = 0;
    for (const FrameRecord& r : s.records) {
        auto [it, inserted] = actor_split.emplace(r.track_id, r.split);
        if (inserted) {
            ++total_actors;
            train_actors += r.split == Split::train ? 1 : 0;
        } else {
            REQUIRE(it->second == r.split);  // no actor straddles the splits
        }
    }
    const double frac = train_actors / double(total_actors);
    CHECK(std::abs(frac - 0.75) <= 3.0 * std::sqrt(0.75 * 0.25 / total_actors));

    auto copy = s.records;
    split_dataset(copy, 3, 1, 99);
    for (std::size_t i = 0; i < copy.size(); ++i) CHECK(copy[i].split == s.records[i].split);

    split_dataset(copy, 1, 0, 5);
    for (const FrameRecord& r : copy) CHECK(r.split == Split::train);
    split_dataset(copy, 0, 1, 5);
    for (const FrameRecord& r : copy) CHECK(r.split == Split::test);
    CHECK_THROWS_AS(split_dataset(copy, 0, 0, 5), DataError);
}

TEST_CASE("render: determinism, bulb brightness, background ceiling") {
    FrameRecord rec;
    rec.scene_id = "r";
    rec.track_id = 4;
    rec.frame_index = 10;
    rec.box = BoxState{0, 0.8, 20.0, 4.5, 1.8, 1.5, 0};
    rec.crop = CropRegion{960, 600, 120, true, InvalidReason::none};
    const RenderParams params;

    SUBCASE("same record and seed give bit-identical pixels") {
        rec.is_active = true;
        rec.bulb_on = true;
        const ImagePatch a = render_patch(rec, params, 64, 555);
        const ImagePatch b = render_patch(rec, params, 64, 555);
        CHECK(a.data == b.data);
        const ImagePatch c = render_patch(rec, params, 64, 556);
        CHECK(a.data != c.data);
    }
    SUBCASE("bulb on at near range is bright") {
        rec.is_active = true;
        rec.bulb_on = true;
        const ImagePatch p = render_patch(rec, params, 224, 1);
        float mx = 0;
        for (float v : p.data) mx = std::max(mx, v);
        CHECK(mx >= 0.9f);
    }
    SUBCASE("no bulb, no confounder: bounded by the background ceiling") {
        rec.is_active = false;
        rec.bulb_on = false;
        const ImagePatch p = render_patch(rec, params, 224, 2);
        for (float v : p.data) CHECK(v <= 0.6f);
    }
    SUBCASE("bulb peak falls off with range") {
        rec.is_active = true;
        rec.bulb_on = true;
        auto peak_at = [&](double z) {
            rec.box.z = z;
            const ImagePatch p = render_patch(rec, params, 96, 3);
            float mx = 0;
            for (float v : p.data) mx = std::max(mx, v);
            return mx;
        };
        // past ~85 m the blob peak (0.95 * 40/z) sinks below the noise
        // ceiling and the patch max is background, by design
        CHECK(peak_at(10.0) > peak_at(55.0));
        CHECK(peak_at(55.0) > peak_at(90.0));
        CHECK(peak_at(90.0) <= 0.6001f);
    }
    SUBCASE("confounders put their energy in the red plane") {
        rec.type = VehicleType::non_ev;
        rec.confounder = true;
        const ImagePatch p = render_patch(rec, params, 96, 4);
        float mx[3] = {0, 0, 0};
        for (int c = 0; c < 3; ++c) {
            for (int i = 0; i < 96 * 96; ++i) mx[c] = std::max(mx[c], p.plane(c)[i]);
        }
        CHECK(mx[0] > 0.7f);   // red blob clears the bright threshold up close
        CHECK(mx[1] < 0.65f);  // green/blue stay near the noise ceiling
        CHECK(mx[2] < 0.65f);
    }
    SUBCASE("invalid crop refuses to render") {
        rec.crop.valid = false;
        CHECK_THROWS_AS(render_patch(rec, params, 64, 1), DataError);
    }
}

TEST_CASE("scene config validation") {
    SceneConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.ev_fraction = 1.4;
    CHECK_THROWS_AS(cfg.validate(), DataError);
    cfg = SceneConfig{};
    cfg.police_fraction = 0.5;  // subtype fractions no longer sum to 1
    CHECK_THROWS_AS(cfg.validate(), DataError);
}

TEST_CASE("records round-trip through JSONL") {
    SceneConfig cfg = small_scene(62, 30);
    cfg.ev_fraction = 0.4;
    Scene s = generate_scene(cfg, CameraConfig{});
    split_dataset(s.records, 3, 1, 7);
    s.records[0].score = 0.73;
    s.records[1].mined_from = "m123";
    s.records[2].augmented = true;
    for (const FrameRecord& r : s.records) {
        const FrameRecord back = record_from_jsonl(record_to_jsonl(r), 1);
        CHECK(record_to_jsonl(back) == record_to_jsonl(r));
    }
    CHECK_THROWS_AS(record_from_jsonl("{not json", 3), DataError);
    CHECK_THROWS_AS(record_from_jsonl("{\"scene\":\"x\"}", 4), DataError);
}
