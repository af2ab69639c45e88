#include "evdet/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace evdet {

std::vector<ScoredLabel> frame_samples(const std::vector<FrameRecord>& records) {
    std::vector<ScoredLabel> out;
    out.reserve(records.size());
    for (const FrameRecord& r : records) {
        if (!r.score.has_value()) continue;
        out.push_back({*r.score, positive_label(r)});
    }
    return out;
}

std::vector<PRPoint> pr_curve(const std::vector<ScoredLabel>& samples) {
    std::int64_t total_pos = 0, total_neg = 0;
    for (const ScoredLabel& s : samples) (s.positive ? total_pos : total_neg)++;
    if (total_pos == 0 || total_neg == 0) {
        throw DataError("pr_curve: degenerate_labels (need both classes)");
    }

    std::vector<ScoredLabel> sorted = samples;
    std::sort(sorted.begin(), sorted.end(), [](const ScoredLabel& a, const ScoredLabel& b) {
        return a.score > b.score;
    });

    std::vector<PRPoint> curve;
    std::int64_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        const double thr = sorted[i].score;
        // consume the whole tie group; the threshold includes all of them
        while (i < sorted.size() && sorted[i].score == thr) {
            (sorted[i].positive ? tp : fp)++;
            ++i;
        }
        PRPoint p;
        p.threshold = thr;
        p.tp = tp;
        p.fp = fp;
        p.fn = total_pos - tp;
        p.tn = total_neg - fp;
        p.precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
        p.recall = static_cast<double>(tp) / total_pos;
        p.f1 = p.precision + p.recall > 0.0
                   ? 2.0 * p.precision * p.recall / (p.precision + p.recall)
                   : 0.0;
        curve.push_back(p);
    }
    return curve;
}

const PRPoint& max_f1_point(const std::vector<PRPoint>& curve) {
    if (curve.empty()) throw DataError("max_f1_point: empty curve");
    const PRPoint* best = &curve.front();
    for (const PRPoint& p : curve) {
        if (p.f1 > best->f1) best = &p;
    }
    return *best;
}

double precision_at_recall(const std::vector<PRPoint>& curve, double target) {
    if (curve.empty()) throw DataError("precision_at_recall: empty curve");
    double best = -1.0;
    for (const PRPoint& p : curve) {
        if (p.recall >= target) best = std::max(best, p.precision);
    }
    if (best < 0.0) {
        throw DataError("precision_at_recall: unreachable_recall " + std::to_string(target));
    }
    return best;
}

std::vector<ActorOutcome> replay_smoother(const std::vector<FrameRecord>& records,
                                          const SmootherConfig& cfg) {
    cfg.validate();
    // group record indices per track, then walk each track in frame order
    std::map<std::pair<std::string, std::int64_t>, std::vector<std::size_t>> tracks;
    for (std::size_t i = 0; i < records.size(); ++i) {
        tracks[{records[i].scene_id, records[i].track_id}].push_back(i);
    }

    std::vector<ActorOutcome> out;
    out.reserve(tracks.size());
    for (auto& [key, idx] : tracks) {
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return records[a].frame_index < records[b].frame_index;
        });
        SmootherState state;
        ActorOutcome o;
        o.track_id = key.second;
        for (std::size_t i : idx) {
            const FrameRecord& r = records[i];
            o.gt_active = o.gt_active || r.is_active;
            const double score = r.score.value_or(0.0);
            state.push(score, r.crop.valid && r.score.has_value(), cfg);
            if (state.decide(cfg)) o.predicted = true;
        }
        out.push_back(o);
    }
    return out;
}

namespace {

PerActorRow row_from_outcomes(const std::vector<ActorOutcome>& outcomes, double threshold_t) {
    PerActorRow row;
    row.threshold_t = threshold_t;
    row.actors = static_cast<std::int64_t>(outcomes.size());
    for (const ActorOutcome& o : outcomes) {
        if (o.predicted && o.gt_active) ++row.tp;
        if (o.predicted && !o.gt_active) ++row.fp;
        if (!o.predicted && o.gt_active) ++row.fn;
    }
    row.precision = row.tp + row.fp > 0 ? static_cast<double>(row.tp) / (row.tp + row.fp) : 0.0;
    row.recall = row.tp + row.fn > 0 ? static_cast<double>(row.tp) / (row.tp + row.fn) : 0.0;
    row.f1 = row.precision + row.recall > 0.0
                 ? 2.0 * row.precision * row.recall / (row.precision + row.recall)
                 : 0.0;
    return row;
}

}  // namespace

PerActorRow per_actor_metrics(const std::vector<FrameRecord>& records, const SmootherConfig& cfg) {
    return row_from_outcomes(replay_smoother(records, cfg), cfg.threshold_t);
}

std::optional<double> rel_change_pct(double old_value, double new_value) {
    if (old_value == 0.0) {
        if (new_value == 0.0) return 0.0;
        return std::nullopt;
    }
    return (new_value - old_value) / old_value * 100.0;
}

EvalReport evaluate_records(const std::vector<FrameRecord>& records, const SmootherConfig& smoother,
                            const std::vector<double>& sweep_thresholds) {
    EvalReport report;
    const auto samples = frame_samples(records);
    report.frames = static_cast<std::int64_t>(samples.size());
    for (const ScoredLabel& s : samples) report.frame_positives += s.positive ? 1 : 0;

    report.curve = pr_curve(samples);
    const PRPoint& best = max_f1_point(report.curve);
    report.max_f1 = best.f1;
    report.max_f1_threshold = best.threshold;
    report.precision_at_recall_08 = precision_at_recall(report.curve, 0.8);

    for (double t : sweep_thresholds) {
        SmootherConfig cfg = smoother;
        cfg.threshold_t = t;
        report.per_actor.push_back(per_actor_metrics(records, cfg));
    }
    if (!report.per_actor.empty()) {
        const PerActorRow base = report.per_actor.front();
        for (PerActorRow& row : report.per_actor) {
            row.pct_precision = rel_change_pct(base.precision, row.precision);
            row.pct_recall = rel_change_pct(base.recall, row.recall);
            row.pct_f1 = rel_change_pct(base.f1, row.f1);
        }
    }
    return report;
}

void attach_baseline(EvalReport& report, const EvalReport& baseline, const std::string& name) {
    report.baseline_name = name;
    report.pct_max_f1 = rel_change_pct(baseline.max_f1, report.max_f1);
    report.pct_precision_at_recall_08 =
        rel_change_pct(baseline.precision_at_recall_08, report.precision_at_recall_08);
}

namespace {

std::string fmt_pct(const std::optional<double>& v) {
    if (!v.has_value()) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%+.2f", *v);
    return buf;
}

}  // namespace

std::string report_table(const EvalReport& report) {
    std::ostringstream os;
    char buf[160];
    os << "per-frame (" << report.frames << " scored frames, " << report.frame_positives
       << " positive)\n";
    std::snprintf(buf, sizeof(buf), "  max-F1 %.4f at threshold %.4f\n", report.max_f1,
                  report.max_f1_threshold);
    os << buf;
    std::snprintf(buf, sizeof(buf), "  precision at 0.8 recall %.4f\n",
                  report.precision_at_recall_08);
    os << buf;
    if (!report.baseline_name.empty()) {
        os << "  vs baseline " << report.baseline_name << " (relative %): max-F1 "
           << fmt_pct(report.pct_max_f1) << ", precision@0.8recall "
           << fmt_pct(report.pct_precision_at_recall_08) << "\n";
    }
    if (!report.per_actor.empty()) {
        os << "per-actor smoother sweep (% change vs first row, relative)\n";
        os << "  T      precision  recall     F1         %dP       %dR       %dF1\n";
        for (const PerActorRow& r : report.per_actor) {
            std::snprintf(buf, sizeof(buf), "  %-5.0f%%  %-9.4f  %-9.4f  %-9.4f  %-8s  %-8s  %-8s\n",
                          r.threshold_t * 100.0, r.precision, r.recall, r.f1,
                          fmt_pct(r.pct_precision).c_str(), fmt_pct(r.pct_recall).c_str(),
                          fmt_pct(r.pct_f1).c_str());
            os << buf;
        }
    }
    return os.str();
}

}  // namespace evdet
