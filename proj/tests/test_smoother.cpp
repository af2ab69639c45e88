#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <vector>

#include "evdet/smoother.hpp"

using namespace evdet;

namespace {

struct Push {
    double score;
    bool valid;
};

// Recount oracle: the decision recomputed from the raw push sequence.
bool oracle_decide(const std::vector<Push>& pushes, const SmootherConfig& cfg) {
    std::vector<bool> window;
    for (const Push& p : pushes) {
        if (!p.valid) continue;
        window.push_back(p.score >= cfg.frame_decision_threshold);
    }
    const int count = std::min<int>(window.size(), cfg.buffer_capacity);
    if (count < cfg.min_frames) return false;
    int positives = 0;
    for (int i = 0; i < count; ++i) positives += window[window.size() - 1 - i] ? 1 : 0;
    return static_cast<double>(positives) / count > cfg.threshold_t;
}

}  // namespace

TEST_CASE("push: 30 valid pushes fill 25 slots, oldest evicted") {
    SmootherConfig cfg;
    SmootherState s;
    // 5 negatives first, then 25 positives: the negatives must all be evicted
    for (int i = 0; i < 5; ++i) s.push(0.0, true, cfg);
    for (int i = 0; i < 25; ++i) s.push(1.0, true, cfg);
    CHECK(s.valid_count() == 25);
    CHECK(s.positive_count() == 25);
}

TEST_CASE("push: invalid frames leave the state untouched") {
    SmootherConfig cfg;
    SmootherState s;
    for (int i = 0; i < 7; ++i) s.push(1.0, true, cfg);
    const int count = s.valid_count();
    const int pos = s.positive_count();
    const bool dec = s.decide(cfg);
    s.push(1.0, false, cfg);
    s.push(0.0, false, cfg);
    CHECK(s.valid_count() == count);
    CHECK(s.positive_count() == pos);
    CHECK(s.decide(cfg) == dec);
}

TEST_CASE("push: score exactly at the frame threshold counts positive") {
    SmootherConfig cfg;
    SmootherState s;
    for (int i = 0; i < 6; ++i) s.push(0.5, true, cfg);
    CHECK(s.positive_count() == 6);
    CHECK(s.decide(cfg));
}

TEST_CASE("decide: the spec's boundary cases") {
    SmootherConfig cfg;

    SUBCASE("5 positives of 5 entries: below the 6-frame minimum") {
        SmootherState s;
        for (int i = 0; i < 5; ++i) s.push(1.0, true, cfg);
        CHECK_FALSE(s.decide(cfg));
    }
    SUBCASE("13 of 25 at T=0.5 fires (0.52 > 0.5)") {
        SmootherState s;
        for (int i = 0; i < 12; ++i) s.push(0.0, true, cfg);
        for (int i = 0; i < 13; ++i) s.push(1.0, true, cfg);
        CHECK(s.valid_count() == 25);
        CHECK(s.decide(cfg));
    }
    SUBCASE("5 of 10 at T=0.5 does not fire (strict inequality)") {
        SmootherState s;
        for (int i = 0; i < 5; ++i) s.push(0.0, true, cfg);
        for (int i = 0; i < 5; ++i) s.push(1.0, true, cfg);
        CHECK(s.valid_count() == 10);
        CHECK_FALSE(s.decide(cfg));
    }
}

TEST_CASE("brute-force equivalence over random push sequences") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> score(0.0, 1.0);
    std::uniform_real_distribution<double> t_dist(0.0, 1.0);

    for (int trial = 0; trial < 100000; ++trial) {
        SmootherConfig cfg;
        cfg.buffer_capacity = 1 + static_cast<int>(rng() % 40);
        cfg.min_frames = 1 + static_cast<int>(rng() % cfg.buffer_capacity);
        cfg.threshold_t = t_dist(rng);

        const int len = static_cast<int>(rng() % 60);
        std::vector<Push> pushes;
        SmootherState s;
        for (int i = 0; i < len; ++i) {
            const Push p{score(rng), (rng() & 3) != 0};
            pushes.push_back(p);
            s.push(p.score, p.valid, cfg);
        }
        REQUIRE(s.decide(cfg) == oracle_decide(pushes, cfg));
    }
}

TEST_CASE("decide is monotone non-increasing in T") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> score(0.0, 1.0);
    for (int trial = 0; trial < 2000; ++trial) {
        SmootherConfig cfg;
        SmootherState s;
        const int len = static_cast<int>(rng() % 40);
        for (int i = 0; i < len; ++i) s.push(score(rng), true, cfg);

        bool prev = true;
        for (double t : {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}) {
            cfg.threshold_t = t;
            const bool d = s.decide(cfg);
            if (!prev) CHECK_FALSE(d);  // once off, stays off as T grows
            prev = d;
        }
    }
}

TEST_CASE("one isolated positive among >= 6 valid frames never fires for T >= 1/6") {
    std::mt19937_64 rng(99);
    SmootherConfig cfg;
    cfg.threshold_t = 1.0 / 6.0;
    for (int trial = 0; trial < 2000; ++trial) {
        SmootherState s;
        const int len = 6 + static_cast<int>(rng() % 20);
        const int pos_at = static_cast<int>(rng() % len);
        for (int i = 0; i < len; ++i) s.push(i == pos_at ? 1.0 : 0.0, true, cfg);
        CHECK_FALSE(s.decide(cfg));
    }
}

TEST_CASE("eviction is strictly FIFO over valid frames") {
    SmootherConfig cfg;
    cfg.buffer_capacity = 4;
    cfg.min_frames = 1;
    SmootherState s;
    // window [1 0 0 0] -> push three zeros so only the first positive remains
    s.push(1.0, true, cfg);
    for (int i = 0; i < 3; ++i) s.push(0.0, true, cfg);
    CHECK(s.positive_count() == 1);
    s.push(0.0, true, cfg);  // evicts the positive
    CHECK(s.positive_count() == 0);
    s.push(1.0, true, cfg);
    s.push(1.0, true, cfg);
    CHECK(s.positive_count() == 2);
}

TEST_CASE("reset_on_invalid clears history when enabled") {
    SmootherConfig cfg;
    cfg.reset_on_invalid = true;
    SmootherState s;
    for (int i = 0; i < 10; ++i) s.push(1.0, true, cfg);
    CHECK(s.valid_count() == 10);
    s.push(0.0, false, cfg);
    CHECK(s.valid_count() == 0);
    CHECK_FALSE(s.decide(cfg));
}

TEST_CASE("config validation") {
    SmootherConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.min_frames = 26;
    CHECK_THROWS_AS(cfg.validate(), DataError);
    cfg = SmootherConfig{};
    cfg.threshold_t = 1.5;
    CHECK_THROWS_AS(cfg.validate(), DataError);
}
