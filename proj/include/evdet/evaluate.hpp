#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "evdet/smoother.hpp"
#include "evdet/types.hpp"

namespace evdet {

struct PRPoint {
    double threshold = 0.0;  // decision rule: score >= threshold
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

struct ScoredLabel {
    double score = 0.0;
    bool positive = false;
};

// One operating point per distinct score, descending threshold. Throws
// degenerate_labels unless both classes are present.
std::vector<PRPoint> pr_curve(const std::vector<ScoredLabel>& samples);

// Convenience: per-frame samples from scored records (label = active EV with
// bulb on). Records without a score are skipped.
std::vector<ScoredLabel> frame_samples(const std::vector<FrameRecord>& records);

const PRPoint& max_f1_point(const std::vector<PRPoint>& curve);

// Max precision among operating points with recall >= target. Throws
// unreachable_recall if no point qualifies.
double precision_at_recall(const std::vector<PRPoint>& curve, double target);

// Actor-level outcome after smoothing: predicted active iff the smoother
// fired on at least one frame.
struct ActorOutcome {
    std::int64_t track_id = 0;
    bool gt_active = false;
    bool predicted = false;
};

// Replays scored records through a fresh smoother per track, in frame order.
std::vector<ActorOutcome> replay_smoother(const std::vector<FrameRecord>& records,
                                          const SmootherConfig& cfg);

struct PerActorRow {
    double threshold_t = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::int64_t tp = 0, fp = 0, fn = 0;
    std::int64_t actors = 0;
    // relative % change vs the T=0 row; unset when the baseline metric is 0
    std::optional<double> pct_precision, pct_recall, pct_f1;
};

PerActorRow per_actor_metrics(const std::vector<FrameRecord>& records, const SmootherConfig& cfg);

struct EvalReport {
    std::int64_t frames = 0;
    std::int64_t frame_positives = 0;
    double max_f1 = 0.0;
    double max_f1_threshold = 0.0;
    double precision_at_recall_08 = 0.0;
    std::vector<PRPoint> curve;
    std::vector<PerActorRow> per_actor;  // one row per smoother threshold

    std::string baseline_name;  // set when %-changes vs another report are attached
    std::optional<double> pct_max_f1, pct_precision_at_recall_08;
};

// Relative percent change (new-old)/old*100; nullopt when old == 0 and the
// values differ, 0 when both are 0.
std::optional<double> rel_change_pct(double old_value, double new_value);

// Per-frame PR analysis plus a per-actor sweep over the smoother thresholds.
// The first threshold is the self-baseline for the per-actor %-change
// columns.
EvalReport evaluate_records(const std::vector<FrameRecord>& records, const SmootherConfig& smoother,
                            const std::vector<double>& sweep_thresholds = {0.0, 0.3, 0.5, 0.7});

// Attaches per-frame %-change columns vs a baseline report.
void attach_baseline(EvalReport& report, const EvalReport& baseline, const std::string& name);

std::string report_table(const EvalReport& report);  // human-readable Tables 2/3 style layout

}  // namespace evdet
