#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "evdet/classifier.hpp"
#include "evdet/simulate.hpp"

using namespace evdet;

namespace {

std::vector<TrainExample> separable_toy(int n, std::uint64_t seed) {
    // two clusters split on feature 0, noise on the rest
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<TrainExample> out;
    for (int i = 0; i < n; ++i) {
        TrainExample ex;
        ex.positive = (i % 2) == 0;
        ex.features[0] = ex.positive ? 0.8 + 0.1 * u(rng) : 0.2 + 0.1 * u(rng);
        for (int k = 1; k < kFeatureCount; ++k) ex.features[k] = u(rng);
        out.push_back(ex);
    }
    return out;
}

FrameRecord base_record(bool active, bool bulb) {
    FrameRecord rec;
    rec.scene_id = "c";
    rec.track_id = 1;
    rec.frame_index = 0;
    rec.type = active ? VehicleType::police : VehicleType::non_ev;
    rec.is_active = active;
    rec.bulb_on = bulb;
    rec.box = BoxState{0, 0.8, 25.0, 4.5, 1.8, 1.5, 0};
    rec.crop = CropRegion{960, 600, 150, true, InvalidReason::none};
    return rec;
}

}  // namespace

TEST_CASE("focal loss: pinned values") {
    CHECK(focal_loss(0.5, true, 1.0, 0.0) == doctest::Approx(0.693147).epsilon(1e-6));
    CHECK(focal_loss(0.5, true, 1.0, 2.0) == doctest::Approx(0.173287).epsilon(1e-5));
    CHECK(focal_loss(0.1, false, 0.25, 2.0) == doctest::Approx(7.902e-4).epsilon(1e-3));
    // clamping removes the log singularities
    CHECK(std::isfinite(focal_loss(0.0, true, 0.25, 2.0)));
    CHECK(std::isfinite(focal_loss(1.0, false, 0.25, 2.0)));
    CHECK(focal_loss(0.73, true, 0.25, 2.0) >= 0.0);
}

TEST_CASE("focal loss at gamma 0 equals weighted cross-entropy on a grid") {
    for (int i = 1; i < 1000; ++i) {
        const double p = i / 1000.0;
        for (bool y : {false, true}) {
            const double a_t = y ? 0.25 : 0.75;
            const double q = y ? p : 1.0 - p;
            const double ce = -a_t * std::log(q);
            CHECK(focal_loss(p, y, 0.25, 0.0) == doctest::Approx(ce).epsilon(1e-15));
        }
    }
}

TEST_CASE("focal loss is monotone in p: decreasing for y=1, increasing for y=0") {
    double prev1 = std::numeric_limits<double>::infinity(), prev0 = 0.0;
    for (int i = 1; i < 1000; ++i) {
        const double p = i / 1000.0;
        const double l1 = focal_loss(p, true, 0.25, 2.0);
        const double l0 = focal_loss(p, false, 0.25, 2.0);
        CHECK(l1 < prev1);
        CHECK(l0 > prev0);
        prev1 = l1;
        prev0 = l0;
    }
}

TEST_CASE("objective gradient matches central finite differences") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto examples = separable_toy(40, 7);
    const FocalObjective obj(examples, 0.25, 2.0, 0.0);
    const int dim = obj.dim();

    for (int trial = 0; trial < 25; ++trial) {
        std::vector<double> w(dim);
        for (double& x : w) x = 2.0 * u(rng);
        std::vector<double> grad(dim);
        obj.gradient(w.data(), grad.data());

        const double h = 1e-5;
        for (int k = 0; k < dim; ++k) {
            std::vector<double> wp = w, wm = w;
            wp[k] += h;
            wm[k] -= h;
            const double fd = (obj.value(wp.data()) - obj.value(wm.data())) / (2.0 * h);
            const double denom = std::max(std::abs(fd), 1e-8);
            CHECK(std::abs(grad[k] - fd) / denom <= 1e-5);
        }
    }
}

TEST_CASE("scheduler: strictly improving loss never decays") {
    TrainConfig cfg;
    cfg.plateau_patience = 3;
    PlateauScheduler sched(cfg);
    double loss = 10.0;
    for (int i = 0; i < 100; ++i) {
        const auto r = sched.step(loss);
        CHECK(r.lr == cfg.initial_lr);
        CHECK_FALSE(r.stop);
        loss -= 0.01;
    }
    CHECK(sched.decays() == 0);
}

TEST_CASE("scheduler: constant loss decays at steps 4, 8, 12 and stops after 7 decays") {
    TrainConfig cfg;
    cfg.initial_lr = 1e-4;
    cfg.plateau_patience = 3;
    cfg.lr_decay_factor = 0.5;
    cfg.stop_lr = 1e-6;
    PlateauScheduler sched(cfg);

    std::vector<int> decay_steps;
    double last_lr = cfg.initial_lr;
    int stop_step = -1;
    for (int step = 1; step <= 40; ++step) {
        const auto r = sched.step(1.0);
        CHECK(r.lr <= last_lr);  // never increases
        if (r.lr < last_lr) decay_steps.push_back(step);
        last_lr = r.lr;
        if (r.stop && stop_step < 0) stop_step = step;
        if (r.stop) break;
    }
    REQUIRE(decay_steps.size() == 7);
    CHECK(decay_steps == std::vector<int>{4, 8, 12, 16, 20, 24, 28});
    CHECK(stop_step == 28);
    CHECK(sched.lr() == doctest::Approx(1e-4 * std::pow(0.5, 7)));

    // the stop flag is monotone
    for (int i = 0; i < 5; ++i) CHECK(sched.step(0.0001).stop);
}

TEST_CASE("synthetic classifier: oracle setting and FPR concentration") {
    ImagePatch dummy;
    SUBCASE("tpr=1 fpr=0 is an oracle") {
        SyntheticClassifierConfig cfg;
        cfg.tpr = 1.0;
        cfg.fpr = 0.0;
        const SyntheticClassifier clf(cfg);
        FrameRecord pos = base_record(true, true);
        FrameRecord neg = base_record(false, false);
        for (int f = 0; f < 100; ++f) {
            pos.frame_index = neg.frame_index = f;
            CHECK(clf.classify(dummy, {&pos}).probability == 1.0);
            CHECK(clf.classify(dummy, {&neg}).probability == 0.0);
        }
        // bulb-off frames of active EVs are per-frame negatives
        FrameRecord off = base_record(true, false);
        CHECK(clf.classify(dummy, {&off}).probability == 0.0);
    }
    SUBCASE("fpr=0.05 fires on ~5% of negative frames") {
        SyntheticClassifierConfig cfg;
        cfg.fpr = 0.05;
        const SyntheticClassifier clf(cfg);
        FrameRecord neg = base_record(false, false);
        int fired = 0;
        const int n = 100000;
        for (int f = 0; f < n; ++f) {
            neg.frame_index = f;
            fired += clf.classify(dummy, {&neg}).probability >= 0.5 ? 1 : 0;
        }
        CHECK(std::abs(fired / double(n) - 0.05) <= 0.005);
    }
    SUBCASE("requires the record context") {
        const SyntheticClassifier clf(SyntheticClassifierConfig{});
        CHECK_THROWS_AS(clf.classify(dummy, {nullptr}), DataError);
    }
}

TEST_CASE("fit: separable toy set converges to near-zero loss, deterministically") {
    const auto examples = separable_toy(200, 3);
    TrainConfig cfg;
    cfg.initial_lr = 0.05;
    cfg.plateau_patience = 50;
    cfg.max_iterations = 5000;

    FeatureClassifier a, b;
    const FitResult ra = a.fit(examples, cfg);
    const FitResult rb = b.fit(examples, cfg);
    CHECK(ra.final_loss < 0.05);
    CHECK(ra.iterations == rb.iterations);
    for (int k = 0; k < kFeatureCount; ++k) CHECK(a.weights()[k] == b.weights()[k]);
    CHECK(a.bias() == b.bias());
    CHECK(a.version() == b.version());

    // scores separate the classes
    int correct = 0;
    for (const TrainExample& ex : examples) {
        const double s = a.score_features(ex.features);
        correct += (s >= 0.5) == ex.positive ? 1 : 0;
    }
    CHECK(correct == static_cast<int>(examples.size()));
}

TEST_CASE("fit: degenerate datasets are rejected") {
    TrainConfig cfg;
    FeatureClassifier clf;
    std::vector<TrainExample> one_class(10);
    for (auto& ex : one_class) ex.positive = true;
    CHECK_THROWS_AS(clf.fit(one_class, cfg), DataError);
    CHECK_THROWS_AS(clf.fit({}, cfg), DataError);
}

TEST_CASE("untrained classifier refuses to score") {
    FeatureClassifier clf;
    FeatureVector f{};
    CHECK_THROWS_AS(clf.score_features(f), DataError);
    ImagePatch p;
    p.reset(8);
    CHECK_THROWS_AS(clf.classify(p, {}), DataError);
}

TEST_CASE("trained feature classifier separates rendered bulb-on patches") {
    SceneConfig scene;
    scene.scene_id = "sep";
    scene.seed = 17;
    scene.actor_count = 250;
    scene.ev_fraction = 0.25;
    scene.duration_s = 8.0;
    scene.spawn_z_max = 40.0;  // near range keeps the blobs above the noise ceiling
    scene.speed_max = 2.0;     // no drifting out to ranges where bulbs go dim
    const CameraConfig cam{CameraModel{1000, 1000, 960, 600, 1920, 1200}, 18.0, 96};
    Scene s = generate_scene(scene, cam);
    split_dataset(s.records, 3, 1, 5);

    std::vector<TrainExample> train, test;
    ImagePatch scratch;
    for (const FrameRecord& r : s.records) {
        if (!r.crop.valid) continue;
        render_patch_into(r, scene.render, cam.patch_size, record_render_seed(1, r), scratch);
        TrainExample ex{compute_features(scratch), positive_label(r)};
        (r.split == Split::train ? train : test).push_back(ex);
    }
    REQUIRE(train.size() > 100);
    REQUIRE(test.size() > 30);

    TrainConfig cfg;
    cfg.initial_lr = 0.05;
    cfg.plateau_patience = 60;
    cfg.max_iterations = 4000;
    FeatureClassifier clf;
    clf.fit(train, cfg);

    int correct = 0;
    for (const TrainExample& ex : test) {
        correct += (clf.score_features(ex.features) >= 0.5) == ex.positive ? 1 : 0;
    }
    CHECK(correct / double(test.size()) >= 0.95);
}

TEST_CASE("feature vector is stable under a mirror permutation of the patch") {
    // horizontal mirroring preserves every feature (radial weights are
    // symmetric), so the classifier output must match to float noise
    FrameRecord rec = base_record(true, true);
    const ImagePatch p = render_patch(rec, RenderParams{}, 64, 9);
    ImagePatch mirrored = p;
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < 64; ++y) {
            for (int x = 0; x < 64; ++x) {
                mirrored.plane(c)[y * 64 + x] = p.plane(c)[y * 64 + (63 - x)];
            }
        }
    }
    const FeatureVector fa = compute_features(p);
    const FeatureVector fb = compute_features(mirrored);
    for (int k = 0; k < kFeatureCount; ++k) {
        CHECK(fa[k] == doctest::Approx(fb[k]).epsilon(1e-12));
    }
}

TEST_CASE("model file: exact round trip and schema guard") {
    const auto examples = separable_toy(60, 21);
    TrainConfig cfg;
    cfg.initial_lr = 0.05;
    cfg.plateau_patience = 40;
    cfg.max_iterations = 1500;
    FeatureClassifier a;
    a.fit(examples, cfg);

    const std::string path = (std::filesystem::temp_directory_path() / "evdet_model_test.txt").string();
    a.save(path);
    const FeatureClassifier b = FeatureClassifier::load(path);
    for (int k = 0; k < kFeatureCount; ++k) CHECK(a.weights()[k] == b.weights()[k]);
    CHECK(a.bias() == b.bias());
    CHECK(a.version() == b.version());
    for (const TrainExample& ex : examples) {
        CHECK(a.score_features(ex.features) == b.score_features(ex.features));
    }

    // mismatched feature schema must be refused
    {
        std::ofstream os(path);
        os << "evdet-model 1\nschema 99\n";
    }
    CHECK_THROWS_AS(FeatureClassifier::load(path), DataError);
    {
        std::ofstream os(path);
        os << "something else\n";
    }
    CHECK_THROWS_AS(FeatureClassifier::load(path), DataError);
    std::filesystem::remove(path);
}

TEST_CASE("train config validation") {
    TrainConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.stop_lr = cfg.initial_lr;
    CHECK_THROWS_AS(cfg.validate(), DataError);
    cfg = TrainConfig{};
    cfg.lr_decay_factor = 1.0;
    CHECK_THROWS_AS(cfg.validate(), DataError);
}
